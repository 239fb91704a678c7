#include "rcrte/event_history.hpp"

#include <algorithm>
#include <cmath>

#include "rcrte/errors.hpp"

namespace rcrte {

RepairMode repair_mode_from_string(const std::string& s) {
    if (s == "perfect") return RepairMode::Perfect;
    if (s == "partial") return RepairMode::Partial;
    throw InputError("unknown repair mode '" + s + "' (expected 'perfect' or 'partial')");
}

std::string to_string(RepairMode mode) {
    return mode == RepairMode::Perfect ? "perfect" : "partial";
}

void UnitHistory::validate() const {
    if (q_count <= 0) throw InputError("unit " + unit_id + ": q_count must be positive");
    if (!(monitoring_time > 0.0) || !std::isfinite(monitoring_time))
        throw InputError("unit " + unit_id + ": monitoring_time must be positive and finite");
    if (te_time) {
        if (!(*te_time > 0.0) || !std::isfinite(*te_time))
            throw InputError("unit " + unit_id + ": te_time must be positive and finite");
        if (*te_time > monitoring_time)
            throw InputError("unit " + unit_id + ": te_time exceeds monitoring_time");
    }
    const double end = observed_end();
    double prev = 0.0;
    for (std::size_t k = 0; k < events.size(); ++k) {
        const Event& e = events[k];
        if (e.risk < 1 || e.risk > q_count)
            throw InputError("unit " + unit_id + ": event risk index out of range");
        if (!(e.time > 0.0) || !std::isfinite(e.time))
            throw InputError("unit " + unit_id + ": event time must be positive and finite");
        if (k > 0 && !(e.time > prev))
            throw InputError("unit " + unit_id + ": event times must be strictly increasing");
        if (!(e.time < end))
            throw InputError("unit " + unit_id + ": event at or beyond the observation end");
        prev = e.time;
    }
    for (double x : covariates)
        if (!std::isfinite(x))
            throw InputError("unit " + unit_id + ": covariate is missing or non-finite");
}

EventCounts counts_at(const UnitHistory& history, double v) {
    EventCounts counts(static_cast<std::size_t>(history.q_count), 0);
    for (const Event& e : history.events) {
        if (!(e.time < v)) break; // strict left limit
        ++counts[static_cast<std::size_t>(e.risk - 1)];
    }
    return counts;
}

double effective_age(const UnitHistory& history, int q, double v, RepairMode mode) {
    if (q < 1 || q > history.q_count)
        throw InputError("effective_age: risk index out of range");
    double last = 0.0;
    for (const Event& e : history.events) {
        if (!(e.time < v)) break;
        if (mode == RepairMode::Perfect || e.risk == q) last = e.time;
    }
    return v - last;
}

double rcr_count_weight(const EventCounts& counts, int q, double alpha_q) {
    if (q < 1 || static_cast<std::size_t>(q) > counts.size())
        throw InputError("rcr_count_weight: risk index out of range");
    const double raw = 1.0 + alpha_q * static_cast<double>(counts[static_cast<std::size_t>(q - 1)]);
    return std::max(raw, kCountWeightFloor);
}

double te_count_weight(const EventCounts& counts, const std::vector<double>& gamma) {
    if (gamma.size() != counts.size())
        throw InputError("te_count_weight: gamma dimension does not match counts");
    double raw = 1.0;
    for (std::size_t k = 0; k < counts.size(); ++k)
        raw += gamma[k] * static_cast<double>(counts[k]);
    return std::max(raw, kCountWeightFloor);
}

int at_risk(const UnitHistory& history, double v) {
    return v <= history.observed_end() ? 1 : 0;
}

UnitHistory truncate_history(const UnitHistory& unit, double v) {
    UnitHistory out = unit;
    out.monitoring_time = v;
    out.te_time.reset();
    out.events.clear();
    for (const Event& e : unit.events) {
        if (!(e.time < v)) break;
        out.events.push_back(e);
    }
    return out;
}

} // namespace rcrte
