#ifndef RCRTE_PREDICTION_HPP
#define RCRTE_PREDICTION_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "rcrte/estimation.hpp"
#include "rcrte/event_history.hpp"
#include "rcrte/rng.hpp"

namespace rcrte {

// Simulation state of a new at-risk unit: the forward clock, current
// effective ages and per-risk counts including simulated events.
struct NewUnitState {
    const UnitHistory* history = nullptr;
    double z_hat = 1.0;
    double clock = 0.0;        // current calendar time, starts at tau_0
    std::vector<double> ages;  // effective age per risk at `clock`
    EventCounts counts;        // observed + simulated events per risk
};

struct SimulatedPath {
    std::vector<Event> events;     // simulated occurrences beyond tau_0
    double te_calendar_time = 0.0; // simulated terminal time
    double ttte_beyond_tau = 0.0;  // te_calendar_time - tau_0
    std::uint64_t rng_seed = 0;
};

struct EnsembleSummary {
    double mean_ttte = 0.0;
    double median_ttte = 0.0;
    double pct_2_5 = 0.0;
    double pct_97_5 = 0.0;
    std::vector<double> mean_count_per_risk;   // simulated events per path
    std::vector<double> median_count_per_risk;
    double mean_total_events = 0.0;
    double median_total_events = 0.0;
};

struct PredictiveDistribution {
    double tau0 = 0.0;
    std::vector<SimulatedPath> paths;
    EnsembleSummary summary;
};

// Conditional-mean frailty of a new unit: (xi + events) over (xi + total
// frailty-free compensator under the fitted baselines), evaluated at tau_0.
double predict_frailty(const UnitHistory& history, const FittedModel& fitted);

// Builds the forward-simulation state at the unit's monitoring time.
NewUnitState make_new_unit_state(const UnitHistory& history, const FittedModel& fitted,
                                 double z_hat, RepairMode mode);

// At-risk weight of the new unit for risk q at a candidate age w:
// z_hat * rho_q(counts) * exp(X beta_q) when w exceeds the current age, 0
// otherwise.
double new_unit_at_risk_rcr(const NewUnitState& state, const FittedModel& fitted, int q, double w);

// Bernoulli success probability for one grid step, clamped to [0, 1].
double rcr_increment(const NewUnitState& state, const FittedModel& fitted, int q, double grid_age);
double te_increment(const NewUnitState& state, const FittedModel& fitted, double grid_time);

struct RcrCandidate {
    int risk = 0;               // 1..Q
    double age = 0.0;           // candidate effective age
    double calendar_time = 0.0; // clock + (age - current age of risk)
};

// Walks each risk's baseline age grid above the current age in ascending
// order, drawing Bernoulli trials; the first success (or the last grid point
// when all fail) is that risk's candidate. Returns the risk with the
// earliest candidate calendar time, or nothing when every grid is empty.
std::optional<RcrCandidate> simulate_next_rcr(const NewUnitState& state, const FittedModel& fitted,
                                              RepairMode mode, Rng& rng);

// Same walk on the terminal-event time grid beyond the clock; returns the
// candidate as a duration past the clock, or nothing when the grid is empty.
std::optional<double> simulate_te_candidate(const NewUnitState& state, const FittedModel& fitted,
                                            Rng& rng);

SimulatedPath simulate_path(const UnitHistory& new_unit, const FittedModel& fitted,
                            std::uint64_t rng_seed);

// M independent paths with per-path seeds derived from base_seed; `threads`
// > 1 fans paths out across workers with byte-identical results.
PredictiveDistribution simulate_ensemble(const UnitHistory& new_unit, const FittedModel& fitted,
                                         int n_paths, std::uint64_t base_seed, int threads = 1);

// Variant with the frailty estimate pinned (used to probe the frailty
// effect); simulate_ensemble delegates here with predict_frailty's value.
PredictiveDistribution simulate_ensemble_with_z(const UnitHistory& new_unit,
                                                const FittedModel& fitted, double z_hat,
                                                int n_paths, std::uint64_t base_seed,
                                                int threads = 1);

// Fraction of paths whose terminal time exceeds tau_0 + horizon.
double predicted_survival(const PredictiveDistribution& dist, double horizon);

EnsembleSummary summarize_paths(const std::vector<SimulatedPath>& paths, int q_count);

// Linear-interpolation quantile of a sample (R type 7); prob in [0, 1].
double sample_quantile(std::vector<double> values, double prob);

} // namespace rcrte

#endif
