#include "rcrte/model_io.hpp"

#include <fstream>

#include <json.hpp>

#include "rcrte/errors.hpp"

namespace rcrte {

namespace {

using nlohmann::json;

json step_to_json(const StepFunction& f) {
    json out = json::array();
    for (std::size_t k = 0; k < f.n_jumps(); ++k)
        out.push_back({f.locations()[k], f.sizes()[k]});
    return out;
}

StepFunction step_from_json(const json& j) {
    std::vector<double> locs, sizes;
    for (const auto& row : j) {
        locs.push_back(row.at(0).get<double>());
        sizes.push_back(row.at(1).get<double>());
    }
    return StepFunction(std::move(locs), std::move(sizes));
}

} // namespace

void write_model_json(std::ostream& out, const FittedModel& model) {
    json j;
    j["format"] = "rcrte-model";
    j["repair_mode"] = to_string(model.repair_mode);
    j["params"] = {{"xi", model.params.xi},
                   {"alpha", model.params.alpha},
                   {"beta_rcr", model.params.beta_rcr},
                   {"gamma", model.params.gamma},
                   {"beta_te", model.params.beta_te}};
    json rcr = json::array();
    for (const auto& b : model.baselines_rcr) rcr.push_back(step_to_json(b));
    j["baselines_rcr"] = rcr;
    j["baseline_te"] = step_to_json(model.baseline_te);
    json frailty = json::array();
    for (const auto& r : model.frailty)
        frailty.push_back({{"unit_id", r.unit_id},
                           {"shape", r.shape},
                           {"rate", r.rate},
                           {"mean", r.mean},
                           {"log_mean", r.log_mean}});
    j["frailty"] = frailty;
    j["meta"] = {{"n", model.meta.n},
                 {"q", model.meta.q_count},
                 {"p", model.meta.p},
                 {"max_observed_time", model.meta.max_observed_time}};
    out << j.dump(2) << '\n';
}

FittedModel read_model_json(std::istream& in) {
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw InputError(std::string("model file: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "rcrte-model")
            throw InputError("model file: unrecognized format tag");
        FittedModel m;
        m.repair_mode = repair_mode_from_string(j.at("repair_mode").get<std::string>());
        const auto& p = j.at("params");
        m.params.xi = p.at("xi").get<double>();
        m.params.alpha = p.at("alpha").get<std::vector<double>>();
        m.params.beta_rcr = p.at("beta_rcr").get<std::vector<std::vector<double>>>();
        m.params.gamma = p.at("gamma").get<std::vector<double>>();
        m.params.beta_te = p.at("beta_te").get<std::vector<double>>();
        for (const auto& b : j.at("baselines_rcr")) m.baselines_rcr.push_back(step_from_json(b));
        m.baseline_te = step_from_json(j.at("baseline_te"));
        for (const auto& r : j.at("frailty")) {
            FrailtyRecord rec;
            rec.unit_id = r.at("unit_id").get<std::string>();
            rec.shape = r.at("shape").get<double>();
            rec.rate = r.at("rate").get<double>();
            rec.mean = r.at("mean").get<double>();
            rec.log_mean = r.at("log_mean").get<double>();
            m.frailty.push_back(std::move(rec));
        }
        const auto& meta = j.at("meta");
        m.meta.n = meta.at("n").get<int>();
        m.meta.q_count = meta.at("q").get<int>();
        m.meta.p = meta.at("p").get<int>();
        m.meta.max_observed_time = meta.at("max_observed_time").get<double>();
        m.params.validate(m.meta.q_count, m.meta.p);
        if (m.baselines_rcr.size() != static_cast<std::size_t>(m.meta.q_count))
            throw InputError("model file: baseline count does not match Q");
        return m;
    } catch (const json::exception& e) {
        throw InputError(std::string("model file: ") + e.what());
    }
}

void save_model_json(const std::string& path, const FittedModel& model) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write model file: " + path);
    write_model_json(out, model);
}

FittedModel load_model_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open model file: " + path);
    return read_model_json(in);
}

} // namespace rcrte
