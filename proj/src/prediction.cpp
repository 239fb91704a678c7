#include "rcrte/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "rcrte/errors.hpp"

namespace rcrte {

double predict_frailty(const UnitHistory& history, const FittedModel& fitted) {
    if (history.te_observed())
        throw InputError("predict_frailty: unit already terminated; prediction requires an "
                         "at-risk unit");
    const double tau0 = history.monitoring_time;
    double comp = 0.0;
    for (int q = 1; q <= history.q_count; ++q)
        comp += unit_compensator_rcr(history, q, fitted.params,
                                     fitted.baselines_rcr[static_cast<std::size_t>(q - 1)],
                                     fitted.repair_mode, 1.0, tau0);
    comp += unit_compensator_te(history, fitted.params, fitted.baseline_te, 1.0, tau0);
    return (fitted.params.xi + static_cast<double>(history.events.size())) /
           (fitted.params.xi + comp);
}

NewUnitState make_new_unit_state(const UnitHistory& history, const FittedModel& fitted,
                                 double z_hat, RepairMode mode) {
    if (history.te_observed())
        throw InputError("prediction requires a unit still at risk at its monitoring time");
    if (history.q_count != fitted.meta.q_count)
        throw InputError("new unit risk count does not match the fitted model");
    if (static_cast<int>(history.covariates.size()) != fitted.meta.p)
        throw InputError("new unit covariate dimension does not match the fitted model");
    NewUnitState st;
    st.history = &history;
    st.z_hat = z_hat;
    st.clock = history.monitoring_time;
    st.ages.resize(static_cast<std::size_t>(history.q_count));
    for (int q = 1; q <= history.q_count; ++q)
        st.ages[static_cast<std::size_t>(q - 1)] =
            effective_age(history, q, history.monitoring_time, mode);
    st.counts = counts_at(history, history.monitoring_time);
    return st;
}

double new_unit_at_risk_rcr(const NewUnitState& state, const FittedModel& fitted, int q,
                            double w) {
    if (q < 1 || q > state.history->q_count)
        throw InputError("new_unit_at_risk_rcr: risk index out of range");
    if (!(w > state.ages[static_cast<std::size_t>(q - 1)])) return 0.0;
    const auto& params = fitted.params;
    return state.z_hat *
           rcr_count_weight(state.counts, q, params.alpha[static_cast<std::size_t>(q - 1)]) *
           std::exp(dot(state.history->covariates,
                        params.beta_rcr[static_cast<std::size_t>(q - 1)]));
}

double rcr_increment(const NewUnitState& state, const FittedModel& fitted, int q,
                     double grid_age) {
    const auto& baseline = fitted.baselines_rcr[static_cast<std::size_t>(q - 1)];
    const auto& locs = baseline.locations();
    const auto it = std::lower_bound(locs.begin(), locs.end(), grid_age);
    if (it == locs.end() || *it != grid_age)
        throw InputError("rcr_increment: grid_age is not a baseline jump location");
    const double d = baseline.sizes()[static_cast<std::size_t>(it - locs.begin())];
    return std::min(1.0, new_unit_at_risk_rcr(state, fitted, q, grid_age) * d);
}

double te_increment(const NewUnitState& state, const FittedModel& fitted, double grid_time) {
    const auto& locs = fitted.baseline_te.locations();
    const auto it = std::lower_bound(locs.begin(), locs.end(), grid_time);
    if (it == locs.end() || *it != grid_time)
        throw InputError("te_increment: grid_time is not a baseline jump location");
    const double d = fitted.baseline_te.sizes()[static_cast<std::size_t>(it - locs.begin())];
    const double w = state.z_hat * te_count_weight(state.counts, fitted.params.gamma) *
                     std::exp(dot(state.history->covariates, fitted.params.beta_te));
    return std::min(1.0, w * d);
}

std::optional<RcrCandidate> simulate_next_rcr(const NewUnitState& state,
                                              const FittedModel& fitted, RepairMode /*mode*/,
                                              Rng& rng) {
    std::optional<RcrCandidate> best;
    for (int q = 1; q <= state.history->q_count; ++q) {
        const auto& baseline = fitted.baselines_rcr[static_cast<std::size_t>(q - 1)];
        const auto& locs = baseline.locations();
        const auto& sizes = baseline.sizes();
        const double age = state.ages[static_cast<std::size_t>(q - 1)];
        auto it = std::upper_bound(locs.begin(), locs.end(), age);
        if (it == locs.end()) continue; // no reachable ages for this risk

        const double weight = new_unit_at_risk_rcr(state, fitted, q, *it);
        double cand_age = locs.back(); // fallback: last grid point
        for (; it != locs.end(); ++it) {
            const double p =
                std::min(1.0, weight * sizes[static_cast<std::size_t>(it - locs.begin())]);
            if (rng.bernoulli(p)) {
                cand_age = *it;
                break;
            }
        }
        const double cand_time = state.clock + (cand_age - age);
        if (!best || cand_time < best->calendar_time) best = RcrCandidate{q, cand_age, cand_time};
    }
    return best;
}

std::optional<double> simulate_te_candidate(const NewUnitState& state, const FittedModel& fitted,
                                            Rng& rng) {
    const auto& locs = fitted.baseline_te.locations();
    const auto& sizes = fitted.baseline_te.sizes();
    auto it = std::upper_bound(locs.begin(), locs.end(), state.clock);
    if (it == locs.end()) return std::nullopt;

    const double weight = state.z_hat * te_count_weight(state.counts, fitted.params.gamma) *
                          std::exp(dot(state.history->covariates, fitted.params.beta_te));
    double cand = locs.back();
    for (; it != locs.end(); ++it) {
        const double p = std::min(1.0, weight * sizes[static_cast<std::size_t>(it - locs.begin())]);
        if (rng.bernoulli(p)) {
            cand = *it;
            break;
        }
    }
    return cand - state.clock;
}

namespace {

SimulatedPath simulate_path_with_z(const UnitHistory& new_unit, const FittedModel& fitted,
                                   double z_hat, std::uint64_t rng_seed) {
    const RepairMode mode = fitted.repair_mode;
    NewUnitState st = make_new_unit_state(new_unit, fitted, z_hat, mode);
    const double tau0 = st.clock;
    Rng rng(rng_seed);

    SimulatedPath path;
    path.rng_seed = rng_seed;

    // Fallback terminal time when the grid beyond the clock empties: the
    // last grid time reachable at path start (the clock can never pass it
    // while the grid stays nonempty).
    const auto& te_locs = fitted.baseline_te.locations();
    const auto first_reachable = std::upper_bound(te_locs.begin(), te_locs.end(), tau0);
    const std::optional<double> te_fallback =
        first_reachable == te_locs.end() ? std::nullopt : std::optional<double>(te_locs.back());

    for (;;) {
        const auto rcr = simulate_next_rcr(st, fitted, mode, rng);
        const auto te = simulate_te_candidate(st, fitted, rng);
        if (!te) {
            // Degenerate: no terminal grid beyond the clock.
            path.te_calendar_time = te_fallback ? *te_fallback : tau0;
            break;
        }
        const double te_time = st.clock + *te;
        if (!rcr || te_time <= rcr->calendar_time) { // ties terminate
            path.te_calendar_time = te_time;
            break;
        }
        const double dt = rcr->calendar_time - st.clock;
        st.clock = rcr->calendar_time;
        path.events.push_back({st.clock, rcr->risk});
        ++st.counts[static_cast<std::size_t>(rcr->risk - 1)];
        for (int q = 1; q <= st.history->q_count; ++q) {
            auto& a = st.ages[static_cast<std::size_t>(q - 1)];
            if (mode == RepairMode::Perfect || q == rcr->risk)
                a = 0.0;
            else
                a += dt;
        }
    }
    path.ttte_beyond_tau = path.te_calendar_time - tau0;
    return path;
}

} // namespace

SimulatedPath simulate_path(const UnitHistory& new_unit, const FittedModel& fitted,
                            std::uint64_t rng_seed) {
    return simulate_path_with_z(new_unit, fitted, predict_frailty(new_unit, fitted), rng_seed);
}

PredictiveDistribution simulate_ensemble_with_z(const UnitHistory& new_unit,
                                                const FittedModel& fitted, double z_hat,
                                                int n_paths, std::uint64_t base_seed,
                                                int threads) {
    if (n_paths < 1) throw InputError("simulate_ensemble: need at least one path");
    PredictiveDistribution dist;
    dist.tau0 = new_unit.monitoring_time;
    dist.paths.resize(static_cast<std::size_t>(n_paths));

    auto run_range = [&](int lo, int hi) {
        for (int k = lo; k < hi; ++k)
            dist.paths[static_cast<std::size_t>(k)] = simulate_path_with_z(
                new_unit, fitted, z_hat, Rng::derive(base_seed, static_cast<std::uint64_t>(k)));
    };

    const int workers = std::max(1, std::min(threads, n_paths));
    if (workers == 1) {
        run_range(0, n_paths);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (n_paths + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const int lo = w * chunk;
            const int hi = std::min(n_paths, lo + chunk);
            if (lo < hi) pool.emplace_back(run_range, lo, hi);
        }
        for (auto& t : pool) t.join();
    }

    dist.summary = summarize_paths(dist.paths, new_unit.q_count);
    return dist;
}

PredictiveDistribution simulate_ensemble(const UnitHistory& new_unit, const FittedModel& fitted,
                                         int n_paths, std::uint64_t base_seed, int threads) {
    return simulate_ensemble_with_z(new_unit, fitted, predict_frailty(new_unit, fitted), n_paths,
                                    base_seed, threads);
}

double predicted_survival(const PredictiveDistribution& dist, double horizon) {
    if (horizon < 0.0) throw InputError("predicted_survival: horizon must be >= 0");
    if (dist.paths.empty()) throw InputError("predicted_survival: empty ensemble");
    std::size_t alive = 0;
    for (const auto& p : dist.paths)
        if (p.ttte_beyond_tau > horizon) ++alive;
    return static_cast<double>(alive) / static_cast<double>(dist.paths.size());
}

double sample_quantile(std::vector<double> values, double prob) {
    if (values.empty()) throw InputError("sample_quantile: empty sample");
    std::sort(values.begin(), values.end());
    const double h = prob * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= values.size()) return values.back();
    const double frac = h - std::floor(h);
    return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

EnsembleSummary summarize_paths(const std::vector<SimulatedPath>& paths, int q_count) {
    if (paths.empty()) throw InputError("summarize_paths: empty ensemble");
    EnsembleSummary s;
    std::vector<double> ttte;
    ttte.reserve(paths.size());
    std::vector<std::vector<double>> counts(static_cast<std::size_t>(q_count));
    std::vector<double> totals;
    for (const auto& p : paths) {
        ttte.push_back(p.ttte_beyond_tau);
        std::vector<int> c(static_cast<std::size_t>(q_count), 0);
        for (const auto& e : p.events) ++c[static_cast<std::size_t>(e.risk - 1)];
        for (int q = 0; q < q_count; ++q)
            counts[static_cast<std::size_t>(q)].push_back(c[static_cast<std::size_t>(q)]);
        totals.push_back(static_cast<double>(p.events.size()));
    }
    auto mean = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m += x;
        return m / static_cast<double>(v.size());
    };
    s.mean_ttte = mean(ttte);
    s.median_ttte = sample_quantile(ttte, 0.5);
    s.pct_2_5 = sample_quantile(ttte, 0.025);
    s.pct_97_5 = sample_quantile(ttte, 0.975);
    for (int q = 0; q < q_count; ++q) {
        s.mean_count_per_risk.push_back(mean(counts[static_cast<std::size_t>(q)]));
        s.median_count_per_risk.push_back(sample_quantile(counts[static_cast<std::size_t>(q)], 0.5));
    }
    s.mean_total_events = mean(totals);
    s.median_total_events = sample_quantile(totals, 0.5);
    return s;
}

} // namespace rcrte
