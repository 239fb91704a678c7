#ifndef RCRTE_SYNTHGEN_HPP
#define RCRTE_SYNTHGEN_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rcrte/event_history.hpp"
#include "rcrte/params.hpp"

namespace rcrte {

// Weibull baseline hazard with cumulative hazard (t / scale)^shape.
struct WeibullHazard {
    double shape = 1.0;
    double scale = 1.0;

    double cumulative(double t) const;
    // Smallest t with cumulative(t) >= h.
    double inverse_cumulative(double h) const;
};

struct GenConfig {
    int n = 50;
    int q_count = 4;
    int p = 3;
    ModelParams params;                     // true generating values
    std::vector<WeibullHazard> weibull_rcr; // length Q
    WeibullHazard weibull_te;
    double tau_lo = 0.55, tau_hi = 1.65;    // monitoring time ~ Uniform[lo, hi]
    double cov_mean = 0.0, cov_sd = 1.0;    // covariates iid normal
    RepairMode repair_mode = RepairMode::Perfect;
    std::uint64_t seed = 0;
    // Continue each trajectory past tau until the terminal event fires so
    // the truth sidecar records it; capped, and skippable for speed.
    bool extend_truth = true;

    // Table-style defaults: Q=4 risks, p=3 covariates, Gamma(2,2) frailty.
    static GenConfig defaults();
    void validate() const;
};

// Unobservable ground truth kept beside the generated data for testing:
// the frailty draw and the terminal-event time continued beyond tau when the
// observable record is censored (absent when the continuation cap is hit).
struct UnitTruth {
    std::string unit_id;
    double z = 1.0;
    std::optional<double> true_te_time;
};

struct GeneratedData {
    Dataset data;
    std::vector<UnitTruth> truth;
};

// Draws one unit by evolving Q+1 competing clocks in continuous time; within
// an inter-event segment every multiplier is constant, so each clock's next
// event comes from exact inversion of its conditional cumulative hazard.
UnitHistory generate_unit(const GenConfig& cfg, std::uint64_t unit_seed,
                          const std::string& unit_id, UnitTruth* truth = nullptr);

GeneratedData generate_dataset(const GenConfig& cfg);

void save_truth_jsonl(const std::string& path, const std::vector<UnitTruth>& truth);
std::vector<UnitTruth> load_truth_jsonl(const std::string& path);

} // namespace rcrte

#endif
