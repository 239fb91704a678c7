#include "rcrte/dataset_io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "rcrte/errors.hpp"

namespace rcrte {

namespace {

using nlohmann::json;

void finalize(Dataset& data, int declared_q) {
    int max_risk = 0;
    for (const auto& u : data.units)
        for (const auto& e : u.events) max_risk = std::max(max_risk, e.risk);
    const int q = declared_q > 0 ? declared_q : std::max(max_risk, 1);
    if (declared_q > 0 && max_risk > declared_q)
        throw InputError("dataset: risk index exceeds declared Q");

    int p = -1;
    for (auto& u : data.units) {
        u.q_count = q;
        const int up = static_cast<int>(u.covariates.size());
        if (p < 0) p = up;
        if (up != p)
            throw InputError("dataset: covariate dimension differs across units (unit " +
                             u.unit_id + ")");
        u.validate();
    }
    data.q_count = q;
    data.p = std::max(p, 0);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

} // namespace

Dataset read_dataset_jsonl(std::istream& in) {
    Dataset data;
    int declared_q = 0;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw InputError("dataset line " + std::to_string(lineno) + ": " + e.what());
        }
        UnitHistory u;
        try {
            u.unit_id = rec.at("unit_id").get<std::string>();
            u.monitoring_time = rec.at("tau").get<double>();
            if (rec.contains("te_time") && !rec["te_time"].is_null())
                u.te_time = rec["te_time"].get<double>();
            if (rec.contains("covariates"))
                u.covariates = rec["covariates"].get<std::vector<double>>();
            if (rec.contains("events"))
                for (const auto& ev : rec["events"])
                    u.events.push_back({ev.at("time").get<double>(), ev.at("risk").get<int>()});
            if (rec.contains("q")) {
                const int q = rec["q"].get<int>();
                if (declared_q > 0 && q != declared_q)
                    throw InputError("dataset: inconsistent Q across records");
                declared_q = q;
            }
        } catch (const json::exception& e) {
            throw InputError("dataset line " + std::to_string(lineno) + ": " + e.what());
        }
        data.units.push_back(std::move(u));
    }
    finalize(data, declared_q);
    return data;
}

Dataset load_dataset_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open dataset file: " + path);
    return read_dataset_jsonl(in);
}

void write_dataset_jsonl(std::ostream& out, const Dataset& data) {
    for (const auto& u : data.units) {
        json rec;
        rec["unit_id"] = u.unit_id;
        rec["q"] = data.q_count;
        rec["tau"] = u.monitoring_time;
        rec["te_time"] = u.te_time ? json(*u.te_time) : json(nullptr);
        rec["covariates"] = u.covariates;
        json evs = json::array();
        for (const auto& e : u.events) evs.push_back({{"time", e.time}, {"risk", e.risk}});
        rec["events"] = evs;
        out << rec.dump() << '\n';
    }
}

void save_dataset_jsonl(const std::string& path, const Dataset& data) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write dataset file: " + path);
    write_dataset_jsonl(out, data);
}

Dataset read_dataset_table(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw InputError("tabular dataset: empty input");
    while (!line.empty() && (line[0] == '#')) {
        if (!std::getline(in, line)) throw InputError("tabular dataset: no header row");
    }
    const auto header = split_csv_line(line);
    if (header.size() < 5 || header[0] != "unit_id" || header[1] != "tau" ||
        header[2] != "te_time" || header[3] != "event_time" || header[4] != "risk")
        throw InputError(
            "tabular dataset: header must start with unit_id,tau,te_time,event_time,risk");
    const std::size_t p = header.size() - 5;

    // Preserve first-appearance order of units.
    std::vector<std::string> order;
    std::map<std::string, UnitHistory> units;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const auto f = split_csv_line(line);
        if (f.size() != header.size())
            throw InputError("tabular dataset line " + std::to_string(lineno) +
                             ": field count mismatch");
        const std::string& id = f[0];
        auto [it, inserted] = units.try_emplace(id);
        UnitHistory& u = it->second;
        try {
            const double tau = std::stod(f[1]);
            std::optional<double> te;
            if (!f[2].empty()) te = std::stod(f[2]);
            std::vector<double> x(p);
            for (std::size_t k = 0; k < p; ++k) {
                if (f[5 + k].empty())
                    throw InputError("tabular dataset line " + std::to_string(lineno) +
                                     ": missing covariate value");
                x[k] = std::stod(f[5 + k]);
            }
            if (inserted) {
                order.push_back(id);
                u.unit_id = id;
                u.monitoring_time = tau;
                u.te_time = te;
                u.covariates = std::move(x);
            } else {
                if (u.monitoring_time != tau || u.te_time != te || u.covariates != x)
                    throw InputError("tabular dataset line " + std::to_string(lineno) +
                                     ": unit fields differ across rows");
            }
            if (!f[3].empty() || !f[4].empty()) {
                if (f[3].empty() || f[4].empty())
                    throw InputError("tabular dataset line " + std::to_string(lineno) +
                                     ": event_time and risk must both be set");
                u.events.push_back({std::stod(f[3]), std::stoi(f[4])});
            }
        } catch (const std::invalid_argument&) {
            throw InputError("tabular dataset line " + std::to_string(lineno) +
                             ": malformed number");
        }
    }

    Dataset data;
    for (const auto& id : order) {
        UnitHistory u = units[id];
        std::sort(u.events.begin(), u.events.end(),
                  [](const Event& a, const Event& b) { return a.time < b.time; });
        data.units.push_back(std::move(u));
    }
    finalize(data, 0);
    return data;
}

Dataset load_dataset_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open dataset file: " + path);
    return read_dataset_table(in);
}

Dataset load_dataset_auto(const std::string& path) {
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv")
        return load_dataset_table(path);
    return load_dataset_jsonl(path);
}

} // namespace rcrte
