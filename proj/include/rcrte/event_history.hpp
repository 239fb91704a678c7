#ifndef RCRTE_EVENT_HISTORY_HPP
#define RCRTE_EVENT_HISTORY_HPP

#include <optional>
#include <string>
#include <vector>

namespace rcrte {

// How an intervention after a recurrent event acts on effective ages:
// Perfect resets every risk's age to zero, Partial only the occurring risk's.
enum class RepairMode { Perfect, Partial };

RepairMode repair_mode_from_string(const std::string& s);
std::string to_string(RepairMode mode);

struct Event {
    double time = 0.0; // calendar time
    int risk = 0;      // 1..Q
};

// Event counts per risk at a fixed calendar time (left-limit convention).
using EventCounts = std::vector<int>;

// One unit's observed event stream. Immutable after construction; all
// operations below are pure functions of their inputs.
struct UnitHistory {
    std::string unit_id;
    int q_count = 0;                 // number of recurrent competing risks Q
    std::vector<Event> events;       // pooled across risks, strictly increasing times
    double monitoring_time = 0.0;    // tau
    std::optional<double> te_time;   // present iff the terminal event was observed
    std::vector<double> covariates;  // fixed dimension p across a dataset

    bool te_observed() const { return te_time.has_value(); }

    // min(tau, TE time): the end of this unit's observation window.
    double observed_end() const {
        return te_time ? std::min(*te_time, monitoring_time) : monitoring_time;
    }

    // Throws InputError when an invariant is violated (ordering, ranges,
    // events at or beyond the observation end, bad risk indices).
    void validate() const;
};

struct Dataset {
    std::vector<UnitHistory> units;
    int q_count = 0;
    int p = 0;

    std::size_t size() const { return units.size(); }
};

// Per-risk event counts strictly before v.
EventCounts counts_at(const UnitHistory& history, double v);

// Effective age of risk q at calendar time v. Perfect repair: time since the
// most recent event of any risk before v; Partial: since the most recent
// event of risk q itself. Age equals v when no qualifying event exists.
double effective_age(const UnitHistory& history, int q, double v, RepairMode mode);

// Event-count weight scaling a recurrent risk's baseline intensity:
// max(1 + alpha_q * counts[q], floor). Strictly positive for any input.
double rcr_count_weight(const EventCounts& counts, int q, double alpha_q);

// Terminal-event analogue: max(1 + gamma . counts, floor).
double te_count_weight(const EventCounts& counts, const std::vector<double>& gamma);

// 1 if the unit is still under observation at v, else 0.
int at_risk(const UnitHistory& history, double v);

// Copy of the unit with events at or after v dropped, monitoring time set to
// v, and the terminal event cleared; used when predicting from time v.
UnitHistory truncate_history(const UnitHistory& unit, double v);

// Lower bound for the count weights; keeps intensities valid for any
// parameter vector met during optimization.
inline constexpr double kCountWeightFloor = 1e-8;

} // namespace rcrte

#endif
