#include "rcrte/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "rcrte/errors.hpp"
#include "rcrte/prediction.hpp"
#include "rcrte/rng.hpp"

namespace rcrte {

namespace {

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace

KmEstimate km_monitoring(const Dataset& data) {
    if (data.units.empty()) throw InputError("km_monitoring: empty dataset");
    struct Obs {
        double time;
        bool tau_observed; // monitoring time seen (no terminal event first)
    };
    std::vector<Obs> obs;
    obs.reserve(data.units.size());
    for (const auto& u : data.units) obs.push_back({u.observed_end(), !u.te_observed()});
    std::sort(obs.begin(), obs.end(), [](const Obs& a, const Obs& b) { return a.time < b.time; });

    KmEstimate km;
    double surv = 1.0;
    std::size_t i = 0;
    std::size_t at_risk = obs.size();
    while (i < obs.size()) {
        std::size_t j = i;
        std::size_t d = 0;
        while (j < obs.size() && obs[j].time == obs[i].time) {
            if (obs[j].tau_observed) ++d;
            ++j;
        }
        if (d > 0) {
            if (at_risk == 0) {
                std::cerr << "km_monitoring: empty risk set at a drop time; curve kept flat\n";
            } else {
                surv *= 1.0 - static_cast<double>(d) / static_cast<double>(at_risk);
                km.times.push_back(obs[i].time);
                km.values.push_back(surv);
            }
        }
        at_risk -= (j - i);
        i = j;
    }
    return km;
}

std::optional<double> ipcw_weight(const UnitHistory& unit, double v, double t,
                                  const KmEstimate& km) {
    if (!at_risk(unit, v)) throw InputError("ipcw_weight: unit is not at risk at v");
    const double fv = km.at(v);
    if (unit.te_observed() && *unit.te_time > v && *unit.te_time <= v + t) {
        const double ft = km.before(*unit.te_time);
        if (!(ft > 0.0)) return std::nullopt;
        return fv / ft;
    }
    const bool survivor =
        unit.te_observed() ? *unit.te_time > v + t : unit.monitoring_time >= v + t;
    if (survivor) {
        const double fvt = km.at(v + t);
        if (!(fvt > 0.0)) return std::nullopt;
        return fv / fvt;
    }
    return 0.0; // censored inside the window
}

BrierResult empirical_brier(const Dataset& data, const std::vector<double>& predictions, double v,
                            double t, const KmEstimate& km) {
    if (predictions.size() != data.units.size())
        throw InputError("empirical_brier: predictions must align with the dataset");
    BrierResult out;
    out.v = v;
    out.horizon = t;
    double sum = 0.0;
    for (std::size_t i = 0; i < data.units.size(); ++i) {
        const UnitHistory& u = data.units[i];
        if (!at_risk(u, v)) continue;
        ++out.n_at_risk;
        const auto w = ipcw_weight(u, v, t, km);
        if (!w) {
            ++out.n_dropped;
            continue;
        }
        if (*w == 0.0) continue;
        const bool survivor = u.te_observed() ? *u.te_time > v + t : u.monitoring_time >= v + t;
        const double indicator = survivor ? 1.0 : 0.0;
        const double diff = indicator - predictions[i];
        sum += *w * diff * diff;
        ++out.n_effective;
    }
    if (out.n_at_risk == 0) throw InputError("empirical_brier: no units at risk at v");
    out.score = sum / static_cast<double>(out.n_at_risk);
    return out;
}

std::vector<int> cv_fold_assignment(const Dataset& data, int k, std::uint64_t seed) {
    const std::size_t n = data.units.size();
    if (k < 2 || static_cast<std::size_t>(k) > n)
        throw InputError("k_fold_cv: need 2 <= k <= n");
    // Canonical order by unit id so that assignment ignores input order.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return data.units[a].unit_id < data.units[b].unit_id;
    });
    Rng rng(Rng::derive(seed, 0xF01Dull));
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.next_u64() % i);
        std::swap(order[i - 1], order[j]);
    }
    std::vector<int> fold(n, -1);
    const std::size_t base = n / static_cast<std::size_t>(k);
    const std::size_t extra = n % static_cast<std::size_t>(k);
    std::size_t pos = 0;
    for (int f = 0; f < k; ++f) {
        const std::size_t len = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
        for (std::size_t r = 0; r < len; ++r) fold[order[pos + r]] = f;
        pos += len;
    }
    return fold;
}

CvResult k_fold_cv(const Dataset& data, const CvConfig& cfg) {
    if (cfg.horizons.empty()) throw InputError("k_fold_cv: horizons must not be empty");
    if (cfg.n_paths < 1) throw InputError("k_fold_cv: need at least one simulation path");
    if (!(cfg.v > 0.0)) throw InputError("k_fold_cv: v must be positive");
    const auto fold = cv_fold_assignment(data, cfg.k, cfg.seed);

    CvResult result;
    result.horizons = cfg.horizons;
    const KmEstimate km = km_monitoring(data);

    std::vector<double> sums(cfg.horizons.size(), 0.0);
    std::vector<int> counts(cfg.horizons.size(), 0);

    for (int f = 0; f < cfg.k; ++f) {
        // Sorted-by-id membership keeps summation order canonical.
        Dataset train, test;
        train.q_count = test.q_count = data.q_count;
        train.p = test.p = data.p;
        std::vector<std::size_t> idx(data.units.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return data.units[a].unit_id < data.units[b].unit_id;
        });
        for (std::size_t i : idx) {
            if (fold[i] == f)
                test.units.push_back(data.units[i]);
            else
                train.units.push_back(data.units[i]);
        }

        bool train_has_te = false;
        for (const auto& u : train.units) train_has_te |= u.te_observed();
        if (!train_has_te) {
            result.warnings.push_back("fold " + std::to_string(f) +
                                      " skipped: no terminal events in its training split");
            continue;
        }
        int at_risk_count = 0;
        for (const auto& u : test.units) at_risk_count += at_risk(u, cfg.v);
        if (at_risk_count == 0) {
            result.warnings.push_back("fold " + std::to_string(f) +
                                      " skipped: no held-out units at risk at v");
            continue;
        }

        const FitResult fit = fit_em(train, cfg.repair_mode, cfg.fit);
        for (const auto& w : fit.warnings)
            result.warnings.push_back("fold " + std::to_string(f) + ": " + w);

        // One ensemble per held-out unit (seeded by unit id), all horizons
        // read from the same predictive distribution.
        std::vector<std::vector<double>> preds(
            cfg.horizons.size(), std::vector<double>(test.units.size(), 0.0));
        for (std::size_t i = 0; i < test.units.size(); ++i) {
            const UnitHistory& u = test.units[i];
            if (!at_risk(u, cfg.v)) continue;
            const UnitHistory trunc = truncate_history(u, cfg.v);
            const auto dist =
                simulate_ensemble(trunc, fit.model, cfg.n_paths,
                                  Rng::derive(cfg.seed, fnv1a64(u.unit_id)), cfg.threads);
            for (std::size_t h = 0; h < cfg.horizons.size(); ++h)
                preds[h][i] = predicted_survival(dist, cfg.horizons[h]);
        }
        for (std::size_t h = 0; h < cfg.horizons.size(); ++h) {
            const BrierResult b = empirical_brier(test, preds[h], cfg.v, cfg.horizons[h], km);
            result.per_fold.push_back({f, b});
            sums[h] += b.score;
            ++counts[h];
        }
    }

    result.mean_score.resize(cfg.horizons.size(), 0.0);
    for (std::size_t h = 0; h < cfg.horizons.size(); ++h) {
        if (counts[h] == 0)
            result.warnings.push_back("no fold produced a score at horizon " +
                                      std::to_string(cfg.horizons[h]));
        else
            result.mean_score[h] = sums[h] / counts[h];
    }
    return result;
}

} // namespace rcrte
