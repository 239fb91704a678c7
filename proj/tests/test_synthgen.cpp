#include <doctest.h>

#include <cmath>
#include <sstream>

#include "rcrte/dataset_io.hpp"
#include "rcrte/errors.hpp"
#include "rcrte/synthgen.hpp"
#include "support/test_support.hpp"

using namespace rcrte;

namespace {

// Single-risk frailty-free config with no covariate or count effects.
GenConfig plain_single_risk(double shape, double scale, double tau) {
    GenConfig cfg;
    cfg.n = 1;
    cfg.q_count = 1;
    cfg.p = 1;
    cfg.params = ModelParams::zeros(1, 1, 1e6); // effectively degenerate frailty
    cfg.weibull_rcr = {{shape, scale}};
    cfg.weibull_te = {1.0, 1e9}; // terminal hazard ~ 0
    cfg.tau_lo = cfg.tau_hi = tau;
    cfg.seed = 7;
    cfg.extend_truth = false; // no terminal event to find
    return cfg;
}

} // namespace

TEST_SUITE("synthgen") {

TEST_CASE("exponential renewal oracle under perfect repair") {
    GenConfig cfg = plain_single_risk(1.0, 0.5, 10.0); // Exp(rate 2)
    cfg.n = 4000;
    cfg.seed = 2024;
    const auto gen = generate_dataset(cfg);

    // First inter-event time per unit; tau is 20 mean gaps so truncation of
    // the first gap is negligible.
    std::vector<double> gaps;
    for (const auto& u : gen.data.units)
        if (!u.events.empty()) gaps.push_back(u.events.front().time);
    REQUIRE(gaps.size() > 3900);
    const double d = test::ks_statistic(
        gaps, [](double t) { return 1.0 - std::exp(-2.0 * t); });
    CHECK(test::ks_p_value(static_cast<double>(gaps.size()), d) > 0.01);
}

TEST_CASE("weibull inter-event ages, perfect repair single risk") {
    const double shape = 1.7, scale = 0.9;
    GenConfig cfg = plain_single_risk(shape, scale, 16.0);
    cfg.n = 4000;
    cfg.seed = 555;
    const auto gen = generate_dataset(cfg);
    std::vector<double> gaps;
    for (const auto& u : gen.data.units)
        if (!u.events.empty()) gaps.push_back(u.events.front().time);
    REQUIRE(gaps.size() > 3900);
    const double d = test::ks_statistic(gaps, [&](double t) {
        return 1.0 - std::exp(-std::pow(t / scale, shape));
    });
    CHECK(test::ks_p_value(static_cast<double>(gaps.size()), d) > 0.01);
}

TEST_CASE("partial repair keeps per-risk clocks independent") {
    GenConfig cfg;
    cfg.n = 3000;
    cfg.q_count = 2;
    cfg.p = 1;
    cfg.params = ModelParams::zeros(2, 1, 1e6);
    cfg.weibull_rcr = {{1.4, 0.7}, {1.0, 0.3}}; // risk 2 fires often
    cfg.weibull_te = {1.0, 1e9};
    cfg.tau_lo = cfg.tau_hi = 14.0;
    cfg.repair_mode = RepairMode::Partial;
    cfg.seed = 42;
    const auto gen = generate_dataset(cfg);

    // First risk-1 event time is Weibull(1.4, 0.7) untouched by risk 2.
    std::vector<double> first;
    for (const auto& u : gen.data.units)
        for (const auto& e : u.events)
            if (e.risk == 1) {
                first.push_back(e.time);
                break;
            }
    REQUIRE(first.size() > 2900);
    const double d = test::ks_statistic(first, [&](double t) {
        return 1.0 - std::exp(-std::pow(t / 0.7, 1.4));
    });
    CHECK(test::ks_p_value(static_cast<double>(first.size()), d) > 0.01);
}

TEST_CASE("terminal hazard zero leaves every unit censored at tau") {
    GenConfig cfg = plain_single_risk(1.5, 1.0, 2.0);
    cfg.n = 200;
    const auto gen = generate_dataset(cfg);
    for (const auto& u : gen.data.units) {
        CHECK_FALSE(u.te_observed());
        CHECK(u.monitoring_time == 2.0);
    }
}

TEST_CASE("positive count effect on the terminal hazard shortens lifetimes") {
    GenConfig base;
    base.n = 2000;
    base.q_count = 1;
    base.p = 1;
    base.params = ModelParams::zeros(1, 1, 1e6);
    base.weibull_rcr = {{1.0, 0.25}}; // frequent recurrences
    base.weibull_te = {2.0, 1.2};
    base.tau_lo = base.tau_hi = 50.0; // essentially no censoring
    base.seed = 91;

    GenConfig loaded = base;
    loaded.params.gamma = {3.0};

    auto mean_te = [](const GeneratedData& g) {
        double s = 0.0;
        std::size_t n = 0;
        for (const auto& u : g.data.units)
            if (u.te_observed()) {
                s += *u.te_time;
                ++n;
            }
        REQUIRE(n > 1900);
        return s / static_cast<double>(n);
    };
    const double m0 = mean_te(generate_dataset(base));
    const double m1 = mean_te(generate_dataset(loaded));
    CHECK(m1 < m0 * 0.8); // strongly earlier, not a tie
}

TEST_CASE("frailty draws have mean 1 and variance 1/xi") {
    GenConfig cfg = plain_single_risk(1.0, 1.0, 0.01); // no events needed
    cfg.n = 10000;
    cfg.params.xi = 2.0;
    cfg.seed = 17;
    const auto gen = generate_dataset(cfg);
    double mean = 0.0, m2 = 0.0;
    for (const auto& t : gen.truth) mean += t.z;
    mean /= static_cast<double>(gen.truth.size());
    for (const auto& t : gen.truth) m2 += (t.z - mean) * (t.z - mean);
    m2 /= static_cast<double>(gen.truth.size());
    CHECK(mean == doctest::Approx(1.0).epsilon(0.03));
    CHECK(m2 == doctest::Approx(0.5).epsilon(0.08));
}

TEST_CASE("generated histories satisfy the event-stream invariants") {
    GenConfig cfg = GenConfig::defaults();
    cfg.n = 200;
    cfg.seed = 1234;
    const auto gen = generate_dataset(cfg);
    std::size_t n_te = 0, n_events = 0;
    for (const auto& u : gen.data.units) {
        u.validate(); // throws on any violation
        n_te += u.te_observed();
        n_events += u.events.size();
    }
    // Defaults give a mixture of terminated and censored units with events.
    CHECK(n_te > 20);
    CHECK(n_te < 180);
    CHECK(n_events > 200);

    // Truth sidecar covers observed terminal times exactly.
    for (std::size_t i = 0; i < gen.data.units.size(); ++i) {
        if (gen.data.units[i].te_observed()) {
            REQUIRE(gen.truth[i].true_te_time.has_value());
            CHECK(*gen.truth[i].true_te_time == *gen.data.units[i].te_time);
        }
        CHECK(gen.truth[i].z > 0.0);
    }
}

TEST_CASE("fixed seed reproduces the dataset byte for byte") {
    GenConfig cfg = GenConfig::defaults();
    cfg.n = 30;
    cfg.seed = 777;
    const auto a = generate_dataset(cfg);
    const auto b = generate_dataset(cfg);
    std::stringstream sa, sb;
    write_dataset_jsonl(sa, a.data);
    write_dataset_jsonl(sb, b.data);
    CHECK(sa.str() == sb.str());
}

TEST_CASE("degenerate requests are rejected") {
    GenConfig cfg = GenConfig::defaults();
    cfg.n = 0;
    CHECK_THROWS_AS(generate_dataset(cfg), InputError);
    cfg = GenConfig::defaults();
    cfg.weibull_rcr[0].scale = -1.0;
    CHECK_THROWS_AS(generate_dataset(cfg), InputError);
}

} // TEST_SUITE
