#ifndef RCRTE_EVALUATION_HPP
#define RCRTE_EVALUATION_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rcrte/estimation.hpp"
#include "rcrte/event_history.hpp"
#include "rcrte/step_function.hpp"

namespace rcrte {

using KmEstimate = SurvivalCurve;

// Kaplan-Meier estimate of the monitoring-time distribution: tau is the
// event of interest and a terminal event occurring first censors it.
KmEstimate km_monitoring(const Dataset& data);

// Inverse-probability-of-censoring weight of one unit for the window
// (v, v+t]. The unit must be at risk at v. Returns:
//   F(v) / F(T-)    when its terminal event lands in the window,
//   F(v) / F(v+t)   when it is known to survive past v+t,
//   0               when it is censored inside the window,
//   nothing         when a needed survival value is 0 (weight undefined).
std::optional<double> ipcw_weight(const UnitHistory& unit, double v, double t,
                                  const KmEstimate& km);

struct BrierResult {
    double v = 0.0;
    double horizon = 0.0;
    double score = 0.0;
    int n_at_risk = 0;    // units at risk at v (the normalizer)
    int n_effective = 0;  // units contributing nonzero defined weight
    int n_dropped = 0;    // units with undefined weight
};

// Empirical Brier score over the units at risk at v. `predictions` is
// aligned with data.units; entries of units not at risk are ignored.
BrierResult empirical_brier(const Dataset& data, const std::vector<double>& predictions, double v,
                            double t, const KmEstimate& km);

struct CvConfig {
    int k = 5;
    double v = 0.8;
    std::vector<double> horizons = {0.45, 0.50, 0.55, 0.60, 0.65, 0.70, 0.75};
    int n_paths = 500;
    std::uint64_t seed = 0;
    int threads = 1;
    RepairMode repair_mode = RepairMode::Perfect;
    FitConfig fit;
};

struct CvFoldRow {
    int fold = 0;
    BrierResult brier;
};

struct CvResult {
    std::vector<CvFoldRow> per_fold;       // one row per (fold, horizon)
    std::vector<double> horizons;
    std::vector<double> mean_score;        // averaged over contributing folds
    std::vector<std::string> warnings;
};

// Seeded shuffle of unit ids into k contiguous folds; for each fold fits on
// the complement, truncates every held-out at-risk unit at v, predicts its
// survival at each horizon from a fresh ensemble, and scores with weights
// from the full-data monitoring-time Kaplan-Meier estimate. Fold assignment
// and per-unit seeds depend only on unit ids, not input order.
CvResult k_fold_cv(const Dataset& data, const CvConfig& cfg);

// Exposed for tests: fold index per unit, aligned with data.units.
std::vector<int> cv_fold_assignment(const Dataset& data, int k, std::uint64_t seed);

} // namespace rcrte

#endif
