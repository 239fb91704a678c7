#include "rcrte/synthgen.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "rcrte/errors.hpp"
#include "rcrte/rng.hpp"

namespace rcrte {

namespace {

// Generation gives up on a unit rather than looping without bound.
constexpr int kMaxObservableEvents = 100000;
constexpr int kMaxContinuationEvents = 20000;

} // namespace

double WeibullHazard::cumulative(double t) const {
    if (t <= 0.0) return 0.0;
    return std::pow(t / scale, shape);
}

double WeibullHazard::inverse_cumulative(double h) const {
    if (h <= 0.0) return 0.0;
    return scale * std::pow(h, 1.0 / shape);
}

GenConfig GenConfig::defaults() {
    GenConfig cfg;
    cfg.n = 50;
    cfg.q_count = 4;
    cfg.p = 3;
    cfg.params.xi = 2.0;
    cfg.params.alpha = {0.25, 0.2, 0.1, 0.05};
    cfg.params.beta_rcr = {{-0.2, 0.1, 0.30}, {0.3, 0.1, 0.05}, {0.3, -0.1, 0.40}, {0.0, 1.0, -0.5}};
    cfg.params.gamma = {0.1, 0.1, 0.05, 0.5};
    cfg.params.beta_te = {0.3, -0.4, 0.5};
    cfg.weibull_rcr = {{1.5, 0.80}, {1.5, 0.90}, {1.5, 0.35}, {1.5, 1.10}};
    cfg.weibull_te = {2.0, 1.25};
    cfg.tau_lo = 0.55;
    cfg.tau_hi = 1.65;
    cfg.repair_mode = RepairMode::Perfect;
    cfg.seed = 20201025;
    return cfg;
}

void GenConfig::validate() const {
    if (n < 1) throw InputError("generation: n must be >= 1");
    if (q_count < 1 || p < 0) throw InputError("generation: bad Q or p");
    params.validate(q_count, p);
    if (static_cast<int>(weibull_rcr.size()) != q_count)
        throw InputError("generation: weibull_rcr must have Q entries");
    for (const auto& w : weibull_rcr)
        if (!(w.shape > 0.0) || !(w.scale > 0.0))
            throw InputError("generation: weibull shape/scale must be positive");
    if (!(weibull_te.shape > 0.0) || !(weibull_te.scale > 0.0))
        throw InputError("generation: weibull shape/scale must be positive");
    if (!(tau_lo > 0.0) || tau_hi < tau_lo)
        throw InputError("generation: need 0 < tau_lo <= tau_hi");
    if (!(cov_sd >= 0.0)) throw InputError("generation: covariate sd must be >= 0");
}

UnitHistory generate_unit(const GenConfig& cfg, std::uint64_t unit_seed,
                          const std::string& unit_id, UnitTruth* truth) {
    const int Q = cfg.q_count;
    Rng rng(unit_seed);

    const double z = rng.gamma(cfg.params.xi, cfg.params.xi);
    std::vector<double> x(static_cast<std::size_t>(cfg.p));
    for (auto& v : x) v = rng.normal(cfg.cov_mean, cfg.cov_sd);
    const double tau = cfg.tau_lo == cfg.tau_hi ? cfg.tau_lo : rng.uniform(cfg.tau_lo, cfg.tau_hi);

    std::vector<double> exp_xb(static_cast<std::size_t>(Q));
    for (int q = 0; q < Q; ++q)
        exp_xb[static_cast<std::size_t>(q)] =
            std::exp(dot(x, cfg.params.beta_rcr[static_cast<std::size_t>(q)]));
    const double exp_xb0 = std::exp(dot(x, cfg.params.beta_te));

    double t = 0.0;
    std::vector<double> ages(static_cast<std::size_t>(Q), 0.0);
    EventCounts counts(static_cast<std::size_t>(Q), 0);
    std::vector<Event> all_events; // full trajectory, including beyond tau
    std::optional<double> te_time; // true terminal time (may exceed tau)
    int continuation_events = 0;

    for (;;) {
        // Next candidate per process by inversion of the conditional
        // cumulative hazard on the current segment.
        double best = std::numeric_limits<double>::infinity();
        int best_q = -1;
        for (int q = 0; q < Q; ++q) {
            const auto& w = cfg.weibull_rcr[static_cast<std::size_t>(q)];
            const double mult =
                z * rcr_count_weight(counts, q + 1, cfg.params.alpha[static_cast<std::size_t>(q)]) *
                exp_xb[static_cast<std::size_t>(q)];
            const double e = rng.exponential();
            const double target = w.cumulative(ages[static_cast<std::size_t>(q)]) + e / mult;
            const double cand = t + (w.inverse_cumulative(target) - ages[static_cast<std::size_t>(q)]);
            if (cand < best) {
                best = cand;
                best_q = q;
            }
        }
        const double mult0 = z * te_count_weight(counts, cfg.params.gamma) * exp_xb0;
        const double e0 = rng.exponential();
        const double target0 = cfg.weibull_te.cumulative(t) + e0 / mult0;
        const double te_cand = cfg.weibull_te.inverse_cumulative(target0);

        if (te_cand <= best) {
            if (te_cand <= tau || cfg.extend_truth) te_time = te_cand;
            break;
        }
        if (best > tau && !cfg.extend_truth) break;
        const double dt = best - t;
        t = best;
        if (t <= tau) {
            if (static_cast<int>(all_events.size()) >= kMaxObservableEvents)
                throw NumericalError("generation: event cap exceeded before tau (unit " +
                                     unit_id + ")");
        } else {
            if (++continuation_events > kMaxContinuationEvents) break; // give up on true TE
        }
        all_events.push_back({t, best_q + 1});
        ++counts[static_cast<std::size_t>(best_q)];
        for (int q = 0; q < Q; ++q) {
            auto& a = ages[static_cast<std::size_t>(q)];
            if (cfg.repair_mode == RepairMode::Perfect || q == best_q)
                a = 0.0;
            else
                a += dt;
        }
    }

    UnitHistory u;
    u.unit_id = unit_id;
    u.q_count = Q;
    u.monitoring_time = tau;
    u.covariates = x;
    if (te_time && *te_time <= tau) u.te_time = te_time;
    const double end = u.observed_end();
    for (const Event& e : all_events) {
        if (e.time < end) u.events.push_back(e);
    }
    u.validate();

    if (truth) {
        truth->unit_id = unit_id;
        truth->z = z;
        truth->true_te_time = te_time;
    }
    return u;
}

GeneratedData generate_dataset(const GenConfig& cfg) {
    cfg.validate();
    GeneratedData out;
    out.data.q_count = cfg.q_count;
    out.data.p = cfg.p;
    out.truth.resize(static_cast<std::size_t>(cfg.n));
    char id[32];
    for (int i = 0; i < cfg.n; ++i) {
        std::snprintf(id, sizeof(id), "u%05d", i);
        out.data.units.push_back(generate_unit(cfg, Rng::derive(cfg.seed, static_cast<std::uint64_t>(i)),
                                               id, &out.truth[static_cast<std::size_t>(i)]));
    }
    return out;
}

void save_truth_jsonl(const std::string& path, const std::vector<UnitTruth>& truth) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write truth file: " + path);
    for (const auto& t : truth) {
        nlohmann::json rec;
        rec["unit_id"] = t.unit_id;
        rec["z"] = t.z;
        rec["true_te_time"] = t.true_te_time ? nlohmann::json(*t.true_te_time) : nlohmann::json(nullptr);
        out << rec.dump() << '\n';
    }
}

std::vector<UnitTruth> load_truth_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open truth file: " + path);
    std::vector<UnitTruth> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto rec = nlohmann::json::parse(line);
        UnitTruth t;
        t.unit_id = rec.at("unit_id").get<std::string>();
        t.z = rec.at("z").get<double>();
        if (rec.contains("true_te_time") && !rec["true_te_time"].is_null())
            t.true_te_time = rec["true_te_time"].get<double>();
        out.push_back(std::move(t));
    }
    return out;
}

} // namespace rcrte
