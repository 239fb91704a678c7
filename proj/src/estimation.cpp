#include "rcrte/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Dense>
#include <boost/math/special_functions/digamma.hpp>

#include "rcrte/errors.hpp"

namespace rcrte {

namespace {

// One inter-reset interval of one unit's effective-age path for a fixed
// risk. The age traversed on the segment is (0, length]; rho_q is constant
// on it because only risk-q events change the risk-q count and none occur in
// the interior.
struct AgeSegment {
    int unit = 0;
    double start = 0.0;  // calendar time of the reset opening the segment
    double length = 0.0; // observed_end or next reset minus start
    int count_q = 0;     // risk-q count in force during the segment
};

struct RcrEventTerm {
    int unit = 0;
    double age = 0.0; // effective age at the event = enclosing segment length
    int count_q = 0;
};

struct RcrWorkspace {
    std::vector<AgeSegment> segments; // sorted by length, descending
    std::vector<RcrEventTerm> events; // sorted by age, descending
};

RcrWorkspace build_rcr_workspace(const Dataset& data, int q, RepairMode mode) {
    RcrWorkspace ws;
    for (std::size_t i = 0; i < data.units.size(); ++i) {
        const UnitHistory& u = data.units[i];
        double prev = 0.0;
        int count_q = 0;
        for (const Event& e : u.events) {
            const bool resets = mode == RepairMode::Perfect || e.risk == q;
            if (!resets) continue;
            const double age = e.time - prev;
            ws.segments.push_back({static_cast<int>(i), prev, age, count_q});
            if (e.risk == q) {
                ws.events.push_back({static_cast<int>(i), age, count_q});
                ++count_q;
            }
            prev = e.time;
        }
        ws.segments.push_back({static_cast<int>(i), prev, u.observed_end() - prev, count_q});
    }
    std::sort(ws.segments.begin(), ws.segments.end(),
              [](const AgeSegment& a, const AgeSegment& b) { return a.length > b.length; });
    std::sort(ws.events.begin(), ws.events.end(),
              [](const RcrEventTerm& a, const RcrEventTerm& b) { return a.age > b.age; });
    return ws;
}

// At-risk sums accumulated while sweeping event ages downward.
struct RcrSums {
    double s = 0.0;              // sum z rho exp(X beta)
    double ds_dalpha = 0.0;      // sum z N_q exp(X beta) over non-floored terms
    std::vector<double> ds_dbeta; // sum z rho exp(X beta) X
};

struct TeEventTerm {
    int unit = 0;
    double time = 0.0;
    EventCounts counts; // N(v-) of the unit at its terminal event
};

struct TeChange {
    double time = 0.0;
    int unit = 0;
    int risk = 0; // 1..Q: recurrent event; 0: unit leaves the risk set
};

struct TeWorkspace {
    std::vector<TeEventTerm> events; // ascending by time
    std::vector<TeChange> changes;   // ascending by time
};

TeWorkspace build_te_workspace(const Dataset& data) {
    TeWorkspace ws;
    for (std::size_t i = 0; i < data.units.size(); ++i) {
        const UnitHistory& u = data.units[i];
        for (const Event& e : u.events)
            ws.changes.push_back({e.time, static_cast<int>(i), e.risk});
        ws.changes.push_back({u.observed_end(), static_cast<int>(i), 0});
        if (u.te_observed())
            ws.events.push_back({static_cast<int>(i), *u.te_time, counts_at(u, *u.te_time)});
    }
    std::sort(ws.changes.begin(), ws.changes.end(),
              [](const TeChange& a, const TeChange& b) { return a.time < b.time; });
    std::sort(ws.events.begin(), ws.events.end(),
              [](const TeEventTerm& a, const TeEventTerm& b) { return a.time < b.time; });
    return ws;
}

std::vector<double> exp_covariate_effects(const Dataset& data, const std::vector<double>& beta) {
    std::vector<double> out(data.units.size());
    for (std::size_t i = 0; i < data.units.size(); ++i)
        out[i] = std::exp(dot(data.units[i].covariates, beta));
    return out;
}

void check_z(const Dataset& data, const std::vector<double>& z) {
    if (z.size() != data.units.size())
        throw InputError("frailty vector length does not match dataset size");
    for (double v : z)
        if (!(v > 0.0) || !std::isfinite(v))
            throw InputError("frailty values must be positive and finite");
}

// Runs `visit(event_index, sums)` for every risk-q event, in descending age
// order, with the at-risk sums current at that event's age.
template <typename Visitor>
void sweep_rcr(const RcrWorkspace& ws, const Dataset& data, double alpha_q,
               const std::vector<double>& exb, const std::vector<double>& z, bool with_derivs,
               Visitor&& visit) {
    const std::size_t p = data.units.empty() ? 0 : data.units.front().covariates.size();
    RcrSums sums;
    sums.ds_dbeta.assign(p, 0.0);
    std::size_t next_seg = 0;
    for (std::size_t e = 0; e < ws.events.size(); ++e) {
        const double w = ws.events[e].age;
        while (next_seg < ws.segments.size() && ws.segments[next_seg].length >= w) {
            const AgeSegment& seg = ws.segments[next_seg];
            const double raw = 1.0 + alpha_q * static_cast<double>(seg.count_q);
            const bool floored = raw < kCountWeightFloor;
            const double rho = floored ? kCountWeightFloor : raw;
            const double base = z[static_cast<std::size_t>(seg.unit)] *
                                exb[static_cast<std::size_t>(seg.unit)];
            sums.s += base * rho;
            if (with_derivs) {
                if (!floored) sums.ds_dalpha += base * static_cast<double>(seg.count_q);
                const auto& x = data.units[static_cast<std::size_t>(seg.unit)].covariates;
                for (std::size_t j = 0; j < p; ++j) sums.ds_dbeta[j] += base * rho * x[j];
            }
            ++next_seg;
        }
        visit(e, sums);
    }
}

// Runs `visit(event_index, s, dgamma, dbeta)` for every terminal event in
// ascending time order with left-limit at-risk sums.
template <typename Visitor>
void sweep_te(const TeWorkspace& ws, const Dataset& data, const std::vector<double>& gamma,
              const std::vector<double>& exb0, const std::vector<double>& z, bool with_derivs,
              Visitor&& visit) {
    const std::size_t n = data.units.size();
    const std::size_t Q = gamma.size();
    const std::size_t p = data.units.empty() ? 0 : data.units.front().covariates.size();

    std::vector<EventCounts> counts(n, EventCounts(Q, 0));
    std::vector<char> active(n, 1);

    double s = 0.0;
    std::vector<double> dgamma(Q, 0.0), dbeta(p, 0.0);

    auto contribution = [&](std::size_t i, double sign) {
        double raw = 1.0;
        for (std::size_t k = 0; k < Q; ++k)
            raw += gamma[k] * static_cast<double>(counts[i][k]);
        const bool floored = raw < kCountWeightFloor;
        const double rho = floored ? kCountWeightFloor : raw;
        const double base = sign * z[i] * exb0[i];
        s += base * rho;
        if (with_derivs) {
            if (!floored)
                for (std::size_t k = 0; k < Q; ++k)
                    dgamma[k] += base * static_cast<double>(counts[i][k]);
            const auto& x = data.units[i].covariates;
            for (std::size_t j = 0; j < p; ++j) dbeta[j] += base * rho * x[j];
        }
    };

    for (std::size_t i = 0; i < n; ++i) contribution(i, +1.0);

    std::size_t next_change = 0;
    for (std::size_t e = 0; e < ws.events.size(); ++e) {
        const double v = ws.events[e].time;
        while (next_change < ws.changes.size() && ws.changes[next_change].time < v) {
            const TeChange& c = ws.changes[next_change];
            const auto i = static_cast<std::size_t>(c.unit);
            if (active[i]) {
                contribution(i, -1.0);
                if (c.risk == 0) {
                    active[i] = 0;
                } else {
                    ++counts[i][static_cast<std::size_t>(c.risk - 1)];
                    contribution(i, +1.0);
                }
            }
            ++next_change;
        }
        visit(e, s, dgamma, dbeta);
    }
}

// Groups consecutive equal values (descending input) into an ascending
// Nelson-Aalen step function; denominators come from `at_risk_of_event`.
StepFunction assemble_baseline(const std::vector<double>& event_keys_desc,
                               const std::vector<double>& at_risk_desc, const char* what) {
    std::vector<double> locs, sizes;
    std::size_t e = 0;
    while (e < event_keys_desc.size()) {
        std::size_t g = e;
        while (g < event_keys_desc.size() && event_keys_desc[g] == event_keys_desc[e]) ++g;
        const double s = at_risk_desc[e];
        if (!(s > 0.0) || !std::isfinite(s))
            throw EstimationError(std::string("vanishing at-risk mass in ") + what +
                                  " baseline estimate");
        locs.push_back(event_keys_desc[e]);
        sizes.push_back(static_cast<double>(g - e) / s);
        e = g;
    }
    std::reverse(locs.begin(), locs.end());
    std::reverse(sizes.begin(), sizes.end());
    return StepFunction(std::move(locs), std::move(sizes));
}

} // namespace

// --- compensators ------------------------------------------------------------

double unit_compensator_rcr(const UnitHistory& history, int q, const ModelParams& params,
                            const StepFunction& baseline_rcr_q, RepairMode mode, double z,
                            double up_to) {
    if (q < 1 || q > history.q_count)
        throw InputError("unit_compensator_rcr: risk index out of range");
    const double end = std::min(up_to, history.observed_end());
    if (end <= 0.0 || baseline_rcr_q.empty()) return 0.0;

    const double alpha_q = params.alpha[static_cast<std::size_t>(q - 1)];
    double total = 0.0;
    double prev = 0.0;
    int count_q = 0;
    EventCounts counts(static_cast<std::size_t>(history.q_count), 0);
    auto segment = [&](double length) {
        counts[static_cast<std::size_t>(q - 1)] = count_q;
        total += rcr_count_weight(counts, q, alpha_q) * baseline_rcr_q.cumulative_at(length);
    };
    for (const Event& e : history.events) {
        if (!(e.time < end)) break;
        const bool resets = mode == RepairMode::Perfect || e.risk == q;
        if (resets) {
            segment(e.time - prev);
            prev = e.time;
        }
        if (e.risk == q) ++count_q;
    }
    segment(end - prev);
    return z * std::exp(dot(history.covariates, params.beta_rcr[static_cast<std::size_t>(q - 1)])) *
           total;
}

double unit_compensator_te(const UnitHistory& history, const ModelParams& params,
                           const StepFunction& baseline_te, double z, double up_to) {
    const double end = std::min(up_to, history.observed_end());
    if (end <= 0.0 || baseline_te.empty()) return 0.0;

    double total = 0.0;
    double prev = 0.0;
    EventCounts counts(static_cast<std::size_t>(history.q_count), 0);
    for (const Event& e : history.events) {
        if (!(e.time < end)) break;
        total += te_count_weight(counts, params.gamma) *
                 (baseline_te.cumulative_at(e.time) - baseline_te.cumulative_at(prev));
        ++counts[static_cast<std::size_t>(e.risk - 1)];
        prev = e.time;
    }
    total += te_count_weight(counts, params.gamma) *
             (baseline_te.cumulative_at(end) - baseline_te.cumulative_at(prev));
    return z * std::exp(dot(history.covariates, params.beta_te)) * total;
}

// --- aggregate at-risk processes ---------------------------------------------

double aggregate_at_risk_rcr(const Dataset& data, int q, double alpha_q,
                             const std::vector<double>& beta_q, const std::vector<double>& z,
                             RepairMode mode, double w) {
    check_z(data, z);
    if (w <= 0.0) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < data.units.size(); ++i) {
        const UnitHistory& u = data.units[i];
        const double exb = std::exp(dot(u.covariates, beta_q));
        double prev = 0.0;
        int count_q = 0;
        EventCounts counts(static_cast<std::size_t>(u.q_count), 0);
        auto add = [&](double length) {
            if (w <= length) {
                counts[static_cast<std::size_t>(q - 1)] = count_q;
                total += z[i] * rcr_count_weight(counts, q, alpha_q) * exb;
            }
        };
        for (const Event& e : u.events) {
            const bool resets = mode == RepairMode::Perfect || e.risk == q;
            if (resets) {
                add(e.time - prev);
                prev = e.time;
            }
            if (e.risk == q) ++count_q;
        }
        add(u.observed_end() - prev);
    }
    return total;
}

double aggregate_at_risk_te(const Dataset& data, const std::vector<double>& gamma,
                            const std::vector<double>& beta_te, const std::vector<double>& z,
                            double v) {
    check_z(data, z);
    double total = 0.0;
    for (std::size_t i = 0; i < data.units.size(); ++i) {
        const UnitHistory& u = data.units[i];
        if (!(u.observed_end() >= v)) continue;
        total += z[i] * te_count_weight(counts_at(u, v), gamma) *
                 std::exp(dot(u.covariates, beta_te));
    }
    return total;
}

// --- baseline estimators ------------------------------------------------------

StepFunction baseline_nelson_aalen_rcr(const Dataset& data, int q, double alpha_q,
                                       const std::vector<double>& beta_q,
                                       const std::vector<double>& z, RepairMode mode) {
    check_z(data, z);
    const RcrWorkspace ws = build_rcr_workspace(data, q, mode);
    if (ws.events.empty()) return {};
    const auto exb = exp_covariate_effects(data, beta_q);
    std::vector<double> ages(ws.events.size()), denom(ws.events.size());
    sweep_rcr(ws, data, alpha_q, exb, z, false, [&](std::size_t e, const RcrSums& sums) {
        ages[e] = ws.events[e].age;
        denom[e] = sums.s;
    });
    return assemble_baseline(ages, denom, "recurrent-risk");
}

StepFunction baseline_nelson_aalen_te(const Dataset& data, const std::vector<double>& gamma,
                                      const std::vector<double>& beta_te,
                                      const std::vector<double>& z) {
    check_z(data, z);
    const TeWorkspace ws = build_te_workspace(data);
    if (ws.events.empty()) return {};
    const auto exb0 = exp_covariate_effects(data, beta_te);
    std::vector<double> times(ws.events.size()), denom(ws.events.size());
    sweep_te(ws, data, gamma, exb0, z, false,
             [&](std::size_t e, double s, const std::vector<double>&, const std::vector<double>&) {
                 times[e] = ws.events[e].time;
                 denom[e] = s;
             });
    // The sweep is ascending; grouping expects descending keys.
    std::reverse(times.begin(), times.end());
    std::reverse(denom.begin(), denom.end());
    return assemble_baseline(times, denom, "terminal-event");
}

// --- E-step -------------------------------------------------------------------

FrailtyPosterior e_step(const Dataset& data, const ModelParams& params,
                        const std::vector<StepFunction>& baselines_rcr,
                        const StepFunction& baseline_te, RepairMode mode) {
    if (baselines_rcr.size() != static_cast<std::size_t>(data.q_count))
        throw InputError("e_step: expected one RCR baseline per risk");
    FrailtyPosterior out;
    out.reserve(data.units.size());
    for (const UnitHistory& u : data.units) {
        const double end = u.observed_end();
        double comp = 0.0;
        for (int q = 1; q <= data.q_count; ++q)
            comp += unit_compensator_rcr(u, q, params, baselines_rcr[static_cast<std::size_t>(q - 1)],
                                         mode, 1.0, end);
        comp += unit_compensator_te(u, params, baseline_te, 1.0, end);

        FrailtyRecord rec;
        rec.unit_id = u.unit_id;
        rec.shape = params.xi + static_cast<double>(u.events.size()) + (u.te_observed() ? 1.0 : 0.0);
        rec.rate = params.xi + comp;
        if (!(rec.rate > 0.0) || !std::isfinite(rec.rate))
            throw NumericalError("e_step: nonpositive posterior rate for unit " + u.unit_id);
        rec.mean = rec.shape / rec.rate;
        rec.log_mean = boost::math::digamma(rec.shape) - std::log(rec.rate);
        out.push_back(std::move(rec));
    }
    return out;
}

// --- score equations ----------------------------------------------------------

std::vector<double> score_rcr(const Dataset& data, int q, const std::vector<double>& z,
                              RepairMode mode, double alpha_q, const std::vector<double>& beta_q) {
    check_z(data, z);
    const RcrWorkspace ws = build_rcr_workspace(data, q, mode);
    const std::size_t p = beta_q.size();
    std::vector<double> score(1 + p, 0.0);
    if (ws.events.empty()) return score;
    const auto exb = exp_covariate_effects(data, beta_q);
    sweep_rcr(ws, data, alpha_q, exb, z, true, [&](std::size_t e, const RcrSums& sums) {
        const RcrEventTerm& ev = ws.events[e];
        const double raw = 1.0 + alpha_q * static_cast<double>(ev.count_q);
        const double own = raw < kCountWeightFloor
                               ? 0.0
                               : static_cast<double>(ev.count_q) / raw;
        score[0] += own - sums.ds_dalpha / sums.s;
        const auto& x = data.units[static_cast<std::size_t>(ev.unit)].covariates;
        for (std::size_t j = 0; j < p; ++j) score[1 + j] += x[j] - sums.ds_dbeta[j] / sums.s;
    });
    return score;
}

std::vector<double> score_te(const Dataset& data, const std::vector<double>& z,
                             const std::vector<double>& gamma, const std::vector<double>& beta_te) {
    check_z(data, z);
    const TeWorkspace ws = build_te_workspace(data);
    const std::size_t Q = gamma.size();
    const std::size_t p = beta_te.size();
    std::vector<double> score(Q + p, 0.0);
    if (ws.events.empty()) return score;
    const auto exb0 = exp_covariate_effects(data, beta_te);
    sweep_te(ws, data, gamma, exb0, z, true,
             [&](std::size_t e, double s, const std::vector<double>& dgamma,
                 const std::vector<double>& dbeta) {
                 const TeEventTerm& ev = ws.events[e];
                 double raw = 1.0;
                 for (std::size_t k = 0; k < Q; ++k)
                     raw += gamma[k] * static_cast<double>(ev.counts[k]);
                 const bool floored = raw < kCountWeightFloor;
                 for (std::size_t k = 0; k < Q; ++k) {
                     const double own =
                         floored ? 0.0 : static_cast<double>(ev.counts[k]) / raw;
                     score[k] += own - dgamma[k] / s;
                 }
                 const auto& x = data.units[static_cast<std::size_t>(ev.unit)].covariates;
                 for (std::size_t j = 0; j < p; ++j)
                     score[Q + j] += x[j] - dbeta[j] / s;
             });
    return score;
}

namespace {

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

// Damped Newton on an analytic score with a forward-difference Jacobian,
// falling back to cyclic per-coordinate bisection when a step cannot be
// made to decrease the residual.
ScoreSolveResult newton_solve(const std::function<std::vector<double>(const std::vector<double>&)>& score_fn,
                              std::vector<double> x, const FitConfig& cfg) {
    const std::size_t m = x.size();
    ScoreSolveResult out;
    std::vector<double> s = score_fn(x);
    double res = max_abs(s);

    for (int iter = 0; iter < cfg.newton_max_iter && res >= cfg.score_tol; ++iter) {
        Eigen::MatrixXd jac(m, m);
        for (std::size_t j = 0; j < m; ++j) {
            const double h = 1e-6 * std::max(1.0, std::abs(x[j]));
            std::vector<double> xh = x;
            xh[j] += h;
            const auto sh = score_fn(xh);
            for (std::size_t r = 0; r < m; ++r) jac(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = (sh[r] - s[r]) / h;
        }
        Eigen::VectorXd rhs(m);
        for (std::size_t r = 0; r < m; ++r) rhs(static_cast<Eigen::Index>(r)) = -s[r];

        bool stepped = false;
        Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
        if (lu.isInvertible()) {
            const Eigen::VectorXd dir = lu.solve(rhs);
            for (double lambda = 1.0; lambda >= 1e-4; lambda *= 0.5) {
                std::vector<double> xn = x;
                for (std::size_t r = 0; r < m; ++r) xn[r] += lambda * dir(static_cast<Eigen::Index>(r));
                const auto sn = score_fn(xn);
                if (!all_finite(sn)) continue;
                const double rn = max_abs(sn);
                if (rn < res) {
                    x = std::move(xn);
                    s = sn;
                    res = rn;
                    stepped = true;
                    break;
                }
            }
        }
        if (!stepped) {
            // Per-coordinate root bracketing on the matching score component.
            bool improved = false;
            for (std::size_t j = 0; j < m; ++j) {
                auto fj = [&](double v) {
                    std::vector<double> xn = x;
                    xn[j] = v;
                    return score_fn(xn)[j];
                };
                double lo = x[j], hi = x[j];
                double flo = s[j], fhi = s[j];
                bool bracketed = false;
                for (double step = 0.25; step <= 64.0; step *= 2.0) {
                    lo = x[j] - step;
                    hi = x[j] + step;
                    flo = fj(lo);
                    fhi = fj(hi);
                    if (std::isfinite(flo) && std::isfinite(fhi) && flo * fhi <= 0.0) {
                        bracketed = true;
                        break;
                    }
                }
                if (!bracketed) continue;
                for (int b = 0; b < 100; ++b) {
                    const double mid = 0.5 * (lo + hi);
                    const double fm = fj(mid);
                    if (!std::isfinite(fm)) break;
                    if (flo * fm <= 0.0) {
                        hi = mid;
                        fhi = fm;
                    } else {
                        lo = mid;
                        flo = fm;
                    }
                }
                std::vector<double> xn = x;
                xn[j] = 0.5 * (lo + hi);
                const auto sn = score_fn(xn);
                if (all_finite(sn) && max_abs(sn) < res) {
                    x = std::move(xn);
                    s = sn;
                    res = max_abs(s);
                    improved = true;
                }
            }
            if (!improved) break; // stuck; report what we have
        }
    }

    out.solution = std::move(x);
    out.residual = res;
    out.converged = res < cfg.score_tol;
    return out;
}

} // namespace

ScoreSolveResult solve_score_rcr(const Dataset& data, int q, const std::vector<double>& z,
                                 RepairMode mode, double init_alpha,
                                 const std::vector<double>& init_beta, const FitConfig& cfg) {
    std::vector<double> x;
    x.push_back(init_alpha);
    x.insert(x.end(), init_beta.begin(), init_beta.end());

    bool any_event = false;
    for (const auto& u : data.units)
        for (const auto& e : u.events) any_event |= (e.risk == q);
    if (!any_event) {
        ScoreSolveResult out;
        out.solution = std::move(x);
        out.converged = true;
        out.degenerate = true;
        return out;
    }
    auto fn = [&](const std::vector<double>& v) {
        return score_rcr(data, q, z, mode, v[0], {v.begin() + 1, v.end()});
    };
    return newton_solve(fn, std::move(x), cfg);
}

ScoreSolveResult solve_score_te(const Dataset& data, const std::vector<double>& z,
                                const std::vector<double>& init_gamma,
                                const std::vector<double>& init_beta, const FitConfig& cfg) {
    const std::size_t Q = init_gamma.size();
    std::vector<double> x = init_gamma;
    x.insert(x.end(), init_beta.begin(), init_beta.end());

    bool any_te = false;
    for (const auto& u : data.units) any_te |= u.te_observed();
    if (!any_te) {
        ScoreSolveResult out;
        out.solution = std::move(x);
        out.converged = true;
        out.degenerate = true;
        return out;
    }
    auto fn = [&](const std::vector<double>& v) {
        return score_te(data, z, {v.begin(), v.begin() + static_cast<std::ptrdiff_t>(Q)},
                        {v.begin() + static_cast<std::ptrdiff_t>(Q), v.end()});
    };
    return newton_solve(fn, std::move(x), cfg);
}

// --- xi update -----------------------------------------------------------------

double xi_objective(double xi, std::size_t n, double sum_mean, double sum_log_mean) {
    const double dn = static_cast<double>(n);
    return dn * xi * std::log(xi) - dn * std::lgamma(xi) + (xi - 1.0) * sum_log_mean -
           xi * sum_mean;
}

XiUpdate update_xi(const FrailtyPosterior& posterior, const FitConfig& cfg) {
    if (posterior.empty()) throw InputError("update_xi: empty posterior");
    double sum_mean = 0.0, sum_log_mean = 0.0;
    for (const auto& r : posterior) {
        sum_mean += r.mean;
        sum_log_mean += r.log_mean;
    }
    const std::size_t n = posterior.size();
    auto g = [&](double u) { return xi_objective(std::exp(u), n, sum_mean, sum_log_mean); };

    // Golden-section maximization on the log scale.
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = std::log(cfg.xi_min), b = std::log(cfg.xi_max);
    double c = b - phi * (b - a), d = a + phi * (b - a);
    double gc = g(c), gd = g(d);
    while (b - a > cfg.xi_tol) {
        if (gc > gd) {
            b = d;
            d = c;
            gd = gc;
            c = b - phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + phi * (b - a);
            gd = g(d);
        }
    }
    const double u = 0.5 * (a + b);
    XiUpdate out;
    out.xi = std::exp(u);
    out.at_boundary = (u - std::log(cfg.xi_min) < 1e-4) || (std::log(cfg.xi_max) - u < 1e-4);
    return out;
}

// --- EM driver -------------------------------------------------------------------

namespace {

std::vector<double> flatten(const ModelParams& p) {
    std::vector<double> out;
    out.push_back(p.xi);
    out.insert(out.end(), p.alpha.begin(), p.alpha.end());
    for (const auto& b : p.beta_rcr) out.insert(out.end(), b.begin(), b.end());
    out.insert(out.end(), p.gamma.begin(), p.gamma.end());
    out.insert(out.end(), p.beta_te.begin(), p.beta_te.end());
    return out;
}

double max_param_change(const ModelParams& a, const ModelParams& b) {
    const auto fa = flatten(a), fb = flatten(b);
    double m = 0.0;
    for (std::size_t k = 0; k < fa.size(); ++k) m = std::max(m, std::abs(fa[k] - fb[k]));
    return m;
}

} // namespace

FitResult fit_em(const Dataset& data, RepairMode mode, const FitConfig& cfg) {
    if (data.units.empty()) throw InputError("fit_em: empty dataset");
    const int Q = data.q_count;
    const int p = data.p;

    FitResult result;
    ModelParams params = cfg.init ? *cfg.init : ModelParams::zeros(Q, p);
    params.validate(Q, p);

    std::vector<bool> risk_has_events(static_cast<std::size_t>(Q), false);
    bool any_te = false;
    for (const auto& u : data.units) {
        for (const auto& e : u.events) risk_has_events[static_cast<std::size_t>(e.risk - 1)] = true;
        any_te |= u.te_observed();
    }
    for (int q = 1; q <= Q; ++q)
        if (!risk_has_events[static_cast<std::size_t>(q - 1)])
            result.warnings.push_back("risk " + std::to_string(q) +
                                      " has no events; its submodel keeps its initial values");
    if (!any_te)
        result.warnings.push_back(
            "no terminal events observed; gamma and beta_te keep their initial values");

    std::vector<double> z(data.units.size(), 1.0);
    if (cfg.init_z) {
        if (cfg.init_z->size() != z.size())
            throw InputError("fit_em: init_z length does not match the dataset");
        z = *cfg.init_z;
    }
    std::vector<StepFunction> baselines(static_cast<std::size_t>(Q));
    StepFunction baseline_te;
    FrailtyPosterior posterior;
    bool warned_boundary = false, warned_score = false;

    for (int iter = 1; iter <= cfg.em_max_iter; ++iter) {
        const ModelParams old = params;

        for (int q = 1; q <= Q; ++q)
            baselines[static_cast<std::size_t>(q - 1)] =
                risk_has_events[static_cast<std::size_t>(q - 1)]
                    ? baseline_nelson_aalen_rcr(data, q, params.alpha[static_cast<std::size_t>(q - 1)],
                                                params.beta_rcr[static_cast<std::size_t>(q - 1)], z,
                                                mode)
                    : StepFunction{};
        baseline_te = any_te ? baseline_nelson_aalen_te(data, params.gamma, params.beta_te, z)
                             : StepFunction{};

        posterior = e_step(data, params, baselines, baseline_te, mode);
        for (std::size_t i = 0; i < z.size(); ++i) z[i] = posterior[i].mean;

        const XiUpdate xiu = update_xi(posterior, cfg);
        params.xi = xiu.xi;
        if (xiu.at_boundary && !warned_boundary) {
            result.warnings.push_back("xi update hit the search boundary");
            warned_boundary = true;
        }

        double residual = 0.0;
        for (int q = 1; q <= Q; ++q) {
            if (!risk_has_events[static_cast<std::size_t>(q - 1)]) continue;
            const auto sol =
                solve_score_rcr(data, q, z, mode, params.alpha[static_cast<std::size_t>(q - 1)],
                                params.beta_rcr[static_cast<std::size_t>(q - 1)], cfg);
            params.alpha[static_cast<std::size_t>(q - 1)] = sol.solution[0];
            params.beta_rcr[static_cast<std::size_t>(q - 1)]
                .assign(sol.solution.begin() + 1, sol.solution.end());
            residual = std::max(residual, sol.residual);
            if (!sol.converged && !warned_score) {
                result.warnings.push_back("score solve did not reach tolerance (risk " +
                                          std::to_string(q) + ")");
                warned_score = true;
            }
        }
        if (any_te) {
            const auto sol = solve_score_te(data, z, params.gamma, params.beta_te, cfg);
            params.gamma.assign(sol.solution.begin(),
                                sol.solution.begin() + static_cast<std::ptrdiff_t>(Q));
            params.beta_te.assign(sol.solution.begin() + static_cast<std::ptrdiff_t>(Q),
                                  sol.solution.end());
            residual = std::max(residual, sol.residual);
            if (!sol.converged && !warned_score) {
                result.warnings.push_back("score solve did not reach tolerance (terminal event)");
                warned_score = true;
            }
        }

        const double delta = max_param_change(params, old);
        result.trace.push_back({iter, delta, params.xi, residual});
        result.iterations = iter;
        result.max_score_residual = residual;
        if (delta < cfg.em_tol) {
            result.converged = true;
            break;
        }
    }
    if (!result.converged)
        result.warnings.push_back("EM reached the iteration cap before converging");

    // Final self-consistent pass with the last parameter values.
    for (int q = 1; q <= Q; ++q)
        baselines[static_cast<std::size_t>(q - 1)] =
            risk_has_events[static_cast<std::size_t>(q - 1)]
                ? baseline_nelson_aalen_rcr(data, q, params.alpha[static_cast<std::size_t>(q - 1)],
                                            params.beta_rcr[static_cast<std::size_t>(q - 1)], z, mode)
                : StepFunction{};
    baseline_te =
        any_te ? baseline_nelson_aalen_te(data, params.gamma, params.beta_te, z) : StepFunction{};
    posterior = e_step(data, params, baselines, baseline_te, mode);

    FittedModel& model = result.model;
    model.params = std::move(params);
    model.baselines_rcr = std::move(baselines);
    model.baseline_te = std::move(baseline_te);
    model.frailty = std::move(posterior);
    model.repair_mode = mode;
    model.meta.n = static_cast<int>(data.units.size());
    model.meta.q_count = Q;
    model.meta.p = p;
    model.meta.max_observed_time = 0.0;
    for (const auto& u : data.units)
        model.meta.max_observed_time = std::max(model.meta.max_observed_time, u.observed_end());
    return result;
}

} // namespace rcrte
