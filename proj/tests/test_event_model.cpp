#include <doctest.h>

#include "rcrte/errors.hpp"
#include "rcrte/event_history.hpp"
#include "rcrte/rng.hpp"
#include "support/test_support.hpp"

using namespace rcrte;

namespace {

UnitHistory make_unit(int q_count, std::vector<Event> events, double tau,
                      std::optional<double> te = std::nullopt, std::vector<double> x = {}) {
    UnitHistory u;
    u.unit_id = "t";
    u.q_count = q_count;
    u.events = std::move(events);
    u.monitoring_time = tau;
    u.te_time = te;
    u.covariates = std::move(x);
    u.validate();
    return u;
}

} // namespace

TEST_SUITE("event_model") {

TEST_CASE("counts_at uses strict left limits") {
    const auto empty = make_unit(3, {}, 5.0);
    CHECK(counts_at(empty, 5.0) == EventCounts{0, 0, 0});

    const auto u = make_unit(2, {{1.0, 2}, {2.0, 2}}, 4.0);
    CHECK(counts_at(u, 2.0) == EventCounts{0, 1}); // event at 2.0 not yet counted
    CHECK(counts_at(u, 2.5) == EventCounts{0, 2});

    // Two minor strokes... three events of risk 1 and one of risk 2 by tau.
    const auto fig = make_unit(2, {{0.5, 1}, {1.2, 1}, {1.8, 2}, {2.4, 1}}, 3.0);
    CHECK(counts_at(fig, 3.0) == EventCounts{3, 1});
}

TEST_CASE("effective_age under both repair modes") {
    const auto none = make_unit(2, {}, 2.0);
    CHECK(effective_age(none, 1, 1.3, RepairMode::Perfect) == doctest::Approx(1.3));
    CHECK(effective_age(none, 2, 1.3, RepairMode::Partial) == doctest::Approx(1.3));

    const auto u = make_unit(2, {{1.0, 1}, {2.0, 2}}, 3.0);
    CHECK(effective_age(u, 1, 2.5, RepairMode::Perfect) == doctest::Approx(0.5));
    CHECK(effective_age(u, 1, 2.5, RepairMode::Partial) == doctest::Approx(1.5));

    CHECK_THROWS_AS(effective_age(u, 3, 1.0, RepairMode::Perfect), InputError);
    CHECK_THROWS_AS(effective_age(u, 0, 1.0, RepairMode::Partial), InputError);
}

TEST_CASE("count weights: intercept form with positivity floor") {
    EventCounts zero{0, 0, 0, 0};
    CHECK(rcr_count_weight(zero, 1, 0.7) == doctest::Approx(1.0));
    EventCounts four{0, 0, 4, 0};
    CHECK(rcr_count_weight(four, 3, 0.25) == doctest::Approx(2.0));
    EventCounts twenty{20, 0, 0, 0};
    CHECK(rcr_count_weight(twenty, 1, -0.106) == doctest::Approx(kCountWeightFloor));

    const std::vector<double> gamma{0.1, 0.1, 0.05, 0.5};
    CHECK(te_count_weight(zero, gamma) == doctest::Approx(1.0));
    CHECK(te_count_weight(EventCounts{1, 1, 1, 1}, gamma) == doctest::Approx(1.75));
    CHECK(te_count_weight(EventCounts{3, 1, 0, 0}, gamma) == doctest::Approx(1.4));
    CHECK_THROWS_AS(te_count_weight(EventCounts{1, 1}, gamma), InputError);
}

TEST_CASE("at_risk window is closed at the observed end") {
    const auto censored = make_unit(1, {}, 3.0);
    CHECK(at_risk(censored, 2.0) == 1);
    CHECK(at_risk(censored, 3.0) == 1);
    CHECK(at_risk(censored, 3.0001) == 0);

    const auto dead = make_unit(1, {}, 3.0, 2.5);
    CHECK(at_risk(dead, 2.7) == 0);

    const auto edge = make_unit(1, {}, 3.0, 3.0); // observed T' = 3
    CHECK(at_risk(edge, 3.0) == 1);
}

TEST_CASE("history validation rejects malformed units") {
    CHECK_THROWS_AS(make_unit(1, {{1.0, 1}, {1.0, 1}}, 3.0), InputError); // tie
    CHECK_THROWS_AS(make_unit(1, {{2.0, 1}}, 1.5), InputError);          // beyond tau
    CHECK_THROWS_AS(make_unit(1, {{0.5, 2}}, 1.5), InputError);          // bad risk
    CHECK_THROWS_AS(make_unit(1, {{0.5, 1}}, 1.0, 0.5), InputError);     // event beyond TE
    CHECK_THROWS_AS(make_unit(1, {}, 1.0, 2.0), InputError);             // TE beyond tau
    CHECK_THROWS_AS(make_unit(1, {}, 1.0, std::nullopt,
                              std::vector<double>{std::nan("")}),
                    InputError); // missing covariate
}

TEST_CASE("truncate_history drops later events and clears the terminal event") {
    const auto u = make_unit(2, {{0.3, 1}, {0.9, 2}}, 2.0, 1.5);
    const auto t = truncate_history(u, 0.9);
    CHECK(t.monitoring_time == 0.9);
    CHECK_FALSE(t.te_observed());
    REQUIRE(t.events.size() == 1);
    CHECK(t.events[0].time == 0.3);
    t.validate();
}

TEST_CASE("age and count laws on randomized histories") {
    Rng rng(71);
    for (int rep = 0; rep < 1000; ++rep) {
        const int Q = 1 + static_cast<int>(rng.next_u64() % 4);
        const auto u = test::random_history(rng, Q, 2);
        const double end = u.observed_end();
        const double v = rng.uniform(1e-6, end);
        for (int q = 1; q <= Q; ++q) {
            const double per = effective_age(u, q, v, RepairMode::Perfect);
            const double par = effective_age(u, q, v, RepairMode::Partial);
            CHECK(per >= 0.0);
            CHECK(per <= v + 1e-12);
            CHECK(par <= v + 1e-12);
            CHECK(per <= par + 1e-12); // any-event reset can only be more recent

            // Unit slope between consecutive events.
            double lo = 0.0, hi = end;
            for (const auto& e : u.events) {
                if (e.time < v) lo = std::max(lo, e.time);
                if (e.time >= v) hi = std::min(hi, e.time);
            }
            if (hi - lo > 1e-6) {
                const double v1 = lo + (hi - lo) * 0.25, v2 = lo + (hi - lo) * 0.75;
                for (RepairMode m : {RepairMode::Perfect, RepairMode::Partial}) {
                    const double d =
                        effective_age(u, q, v2, m) - effective_age(u, q, v1, m);
                    CHECK(d == doctest::Approx(v2 - v1).epsilon(1e-12));
                }
            }
        }
        // Perfect age vanishes just after any event; partial only for the
        // event's own risk and is continuous across other risks' events.
        if (!u.events.empty()) {
            const auto& e = u.events[static_cast<std::size_t>(
                rng.next_u64() % u.events.size())];
            const double just_after = std::min(e.time + 1e-9, end);
            CHECK(effective_age(u, e.risk, just_after, RepairMode::Perfect) <= 2e-9);
            CHECK(effective_age(u, e.risk, just_after, RepairMode::Partial) <= 2e-9);
            for (int q = 1; q <= Q; ++q) {
                CHECK(effective_age(u, q, just_after, RepairMode::Perfect) <= 2e-9);
                if (q != e.risk) {
                    const double before = effective_age(u, q, e.time, RepairMode::Partial);
                    const double after =
                        effective_age(u, q, just_after, RepairMode::Partial);
                    CHECK(after == doctest::Approx(before + (just_after - e.time))
                                       .epsilon(1e-9));
                }
            }
        }
        // Counts: componentwise monotone in v, total = events strictly before v.
        const double v2 = rng.uniform(v, end);
        const auto c1 = counts_at(u, v);
        const auto c2 = counts_at(u, v2);
        int total = 0;
        for (int q = 0; q < Q; ++q) {
            CHECK(c1[static_cast<std::size_t>(q)] <= c2[static_cast<std::size_t>(q)]);
            total += c1[static_cast<std::size_t>(q)];
        }
        int expected = 0;
        for (const auto& e : u.events) expected += e.time < v;
        CHECK(total == expected);

        // Weight positivity and monotonicity for nonnegative coefficients.
        const double a = rng.uniform(-1.0, 1.0);
        for (int q = 1; q <= Q; ++q) {
            CHECK(rcr_count_weight(c1, q, a) >= kCountWeightFloor);
            CHECK(rcr_count_weight(c2, q, std::abs(a)) >=
                  rcr_count_weight(c1, q, std::abs(a)));
        }
        std::vector<double> gam(static_cast<std::size_t>(Q));
        for (auto& g : gam) g = rng.uniform(-1.0, 1.0);
        CHECK(te_count_weight(c1, gam) >= kCountWeightFloor);
        for (auto& g : gam) g = std::abs(g);
        CHECK(te_count_weight(c2, gam) >= te_count_weight(c1, gam));
    }
}

} // TEST_SUITE
