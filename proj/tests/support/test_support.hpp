#ifndef RCRTE_TEST_SUPPORT_HPP
#define RCRTE_TEST_SUPPORT_HPP

// Test-only oracles and generators. Everything here is deliberately written
// by the dumbest route available (nested loops, public accessors, textbook
// formulas) and stays independent of the library's production code paths.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "rcrte/estimation.hpp"
#include "rcrte/event_history.hpp"
#include "rcrte/rng.hpp"

namespace rcrte::test {

// --- textbook Nelson-Aalen on (time, event) pairs ---------------------------

struct NaPoint {
    double time;
    double increment;
};

inline std::vector<NaPoint> brute_nelson_aalen(std::vector<std::pair<double, bool>> obs) {
    std::sort(obs.begin(), obs.end());
    std::vector<NaPoint> out;
    std::size_t i = 0;
    while (i < obs.size()) {
        std::size_t j = i, d = 0;
        while (j < obs.size() && obs[j].first == obs[i].first) {
            d += obs[j].second;
            ++j;
        }
        const std::size_t at_risk = obs.size() - i;
        if (d > 0)
            out.push_back({obs[i].first,
                           static_cast<double>(d) / static_cast<double>(at_risk)});
        i = j;
    }
    return out;
}

// --- adaptive Simpson quadrature --------------------------------------------

inline double simpson_rule(double a, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double b,
                                   double fa, double fm, double fb, double whole, double eps,
                                   int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson_rule(a, m, fa, flm, fm);
    const double right = simpson_rule(m, b, fm, frm, fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * eps)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double eps) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = simpson_rule(a, b, fa, fm, fb);
    return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, eps, 60);
}

// Pre-splits into uniform panels so a narrow peak cannot slip between the
// probe points of the adaptive refinement.
inline double integrate_peaked(const std::function<double(double)>& f, double a, double b,
                               double eps, int panels = 400) {
    double total = 0.0;
    const double h = (b - a) / panels;
    for (int k = 0; k < panels; ++k)
        total += adaptive_simpson(f, a + k * h, a + (k + 1) * h, eps / panels);
    return total;
}

// Posterior moments of Z with unnormalized density z^(shape-1) e^(-rate z),
// integrated on the log scale (z = e^u, so the weight becomes
// e^(shape*u - rate*e^u), smooth for every positive shape).
struct GammaMoments {
    double mean;
    double log_mean;
};

inline GammaMoments gamma_posterior_moments_quadrature(double shape, double rate) {
    const double peak = std::log(shape / rate);
    auto logw = [&](double u) { return shape * u - rate * std::exp(u); };
    const double top = logw(peak);
    double lo = peak, hi = peak;
    while (logw(lo) > top - 120.0 && lo > peak - 700.0) lo -= 0.25;
    while (logw(hi) > top - 120.0 && hi < peak + 700.0) hi += 0.25;

    auto w = [&](double u) { return std::exp(logw(u) - top); };
    const double norm = integrate_peaked(w, lo, hi, 1e-14);
    const double ez = integrate_peaked([&](double u) { return std::exp(u) * w(u); }, lo, hi, 1e-14);
    const double elog = integrate_peaked([&](double u) { return u * w(u); }, lo, hi, 1e-14);
    return {ez / norm, elog / norm};
}

// --- Kolmogorov-Smirnov ------------------------------------------------------

inline double ks_p_value(double n_effective, double d) {
    const double rn = std::sqrt(n_effective);
    const double lambda = (rn + 0.12 + 0.11 / rn) * d;
    double p = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 200; ++k) {
        const double term = std::exp(-2.0 * lambda * lambda * k * k);
        p += sign * term;
        sign = -sign;
        if (term < 1e-16) break;
    }
    return std::clamp(2.0 * p, 0.0, 1.0);
}

inline double ks_statistic(std::vector<double> sample,
                           const std::function<double(double)>& cdf) {
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double c = cdf(sample[i]);
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - c));
        d = std::max(d, std::abs(static_cast<double>(i) / n - c));
    }
    return d;
}

// Discrete variant over atoms 0..K-1: compares empirical and theoretical
// CDFs at every atom.
inline double ks_statistic_discrete(const std::vector<std::size_t>& counts,
                                    const std::vector<double>& probs) {
    double n = 0.0;
    for (auto c : counts) n += static_cast<double>(c);
    double emp = 0.0, theo = 0.0, d = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        emp += static_cast<double>(counts[k]) / n;
        theo += probs[k];
        d = std::max(d, std::abs(emp - theo));
    }
    return d;
}

// --- brute-force compensators -------------------------------------------------

// Walks every baseline jump age and every reset point of the observed path,
// using only the public effective-age and counts accessors.
inline double brute_compensator_rcr(const UnitHistory& u, int q, const ModelParams& params,
                                    const StepFunction& baseline, RepairMode mode, double z,
                                    double up_to) {
    std::vector<double> resets{0.0};
    for (const Event& e : u.events)
        if (mode == RepairMode::Perfect || e.risk == q) resets.push_back(e.time);

    double total = 0.0;
    for (std::size_t k = 0; k < baseline.n_jumps(); ++k) {
        const double w = baseline.locations()[k];
        // The age path can traverse the same age once per reset segment;
        // every traversal accumulates the jump.
        for (double r : resets) {
            const double v = r + w;
            if (v > up_to || v > u.observed_end()) continue;
            const double age = effective_age(u, q, v, mode);
            // Traversal means the age path reaches w at v without a reset in
            // between. A reset strictly inside (r, v) makes age(v) < w; an
            // event exactly at v does not (left limits).
            if (std::abs(age - w) < 1e-9 * std::max(1.0, std::abs(w))) {
                total += rcr_count_weight(counts_at(u, v), q,
                                          params.alpha[static_cast<std::size_t>(q - 1)]) *
                         baseline.sizes()[k];
            }
        }
    }
    return z * std::exp(dot(u.covariates, params.beta_rcr[static_cast<std::size_t>(q - 1)])) *
           total;
}

inline double brute_compensator_te(const UnitHistory& u, const ModelParams& params,
                                   const StepFunction& baseline, double z, double up_to) {
    double total = 0.0;
    for (std::size_t k = 0; k < baseline.n_jumps(); ++k) {
        const double v = baseline.locations()[k];
        if (v > up_to || !at_risk(u, v)) continue;
        total += te_count_weight(counts_at(u, v), params.gamma) * baseline.sizes()[k];
    }
    return z * std::exp(dot(u.covariates, params.beta_te)) * total;
}

// --- random-instance generators ------------------------------------------------

inline UnitHistory random_history(Rng& rng, int q_count, int p, double max_tau = 3.0) {
    UnitHistory u;
    u.unit_id = "r" + std::to_string(rng.next_u64() % 1000000);
    u.q_count = q_count;
    u.monitoring_time = rng.uniform(0.4, max_tau);
    double end = u.monitoring_time;
    if (rng.bernoulli(0.5)) {
        u.te_time = rng.uniform(0.2, 1.0) * u.monitoring_time;
        end = *u.te_time;
    }
    const int n_events = static_cast<int>(rng.next_u64() % 6);
    std::vector<double> times;
    for (int k = 0; k < n_events; ++k) times.push_back(rng.uniform(1e-6, end * 0.999));
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    for (double t : times)
        u.events.push_back({t, 1 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(
                                                        q_count))});
    u.covariates.resize(static_cast<std::size_t>(p));
    for (auto& x : u.covariates) x = rng.normal();
    u.validate();
    return u;
}

inline Dataset random_dataset(Rng& rng, int n, int q_count, int p) {
    Dataset data;
    data.q_count = q_count;
    data.p = p;
    for (int i = 0; i < n; ++i) {
        UnitHistory u = random_history(rng, q_count, p);
        u.unit_id = "u" + std::to_string(i);
        data.units.push_back(std::move(u));
    }
    return data;
}

inline StepFunction random_step_function(Rng& rng, int max_jumps, double max_loc = 3.0,
                                         double max_size = 0.4) {
    const int n = 1 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(max_jumps));
    std::vector<double> locs;
    for (int k = 0; k < n; ++k) locs.push_back(rng.uniform(1e-3, max_loc));
    std::sort(locs.begin(), locs.end());
    locs.erase(std::unique(locs.begin(), locs.end()), locs.end());
    std::vector<double> sizes;
    for (std::size_t k = 0; k < locs.size(); ++k) sizes.push_back(rng.uniform(1e-4, max_size));
    return StepFunction(std::move(locs), std::move(sizes));
}

} // namespace rcrte::test

#endif
