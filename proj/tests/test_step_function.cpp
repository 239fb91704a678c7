#include <doctest.h>

#include "rcrte/errors.hpp"
#include "rcrte/rng.hpp"
#include "rcrte/step_function.hpp"
#include "support/test_support.hpp"

using namespace rcrte;

TEST_SUITE("step_function") {

TEST_CASE("evaluation semantics") {
    const StepFunction f({0.5, 1.0, 2.0}, {0.1, 0.2, 0.3});
    CHECK(f.cumulative_at(0.49) == doctest::Approx(0.0));
    CHECK(f.cumulative_at(0.5) == doctest::Approx(0.1));
    CHECK(f.cumulative_before(0.5) == doctest::Approx(0.0));
    CHECK(f.cumulative_at(1.7) == doctest::Approx(0.3));
    CHECK(f.cumulative_at(99.0) == doctest::Approx(0.6));
    CHECK(f.total() == doctest::Approx(0.6));

    CHECK(StepFunction{}.cumulative_at(10.0) == 0.0);
    CHECK_THROWS_AS(StepFunction({1.0, 1.0}, {0.1, 0.1}), InputError);  // tie
    CHECK_THROWS_AS(StepFunction({2.0, 1.0}, {0.1, 0.1}), InputError);  // order
    CHECK_THROWS_AS(StepFunction({1.0}, {0.0}), InputError);            // zero size
    CHECK_THROWS_AS(StepFunction({1.0}, {0.1, 0.2}), InputError);       // mismatch
}

TEST_CASE("product-limit survival") {
    CHECK(product_limit_survival(StepFunction{}).at(3.0) == doctest::Approx(1.0));

    const auto s = product_limit_survival(StepFunction({1.0, 2.0}, {0.5, 0.5}));
    CHECK(s.at(0.5) == doctest::Approx(1.0));
    CHECK(s.at(1.0) == doctest::Approx(0.5));
    CHECK(s.at(1.5) == doctest::Approx(0.5));
    CHECK(s.at(2.0) == doctest::Approx(0.25));
    CHECK(s.before(2.0) == doctest::Approx(0.5));

    const auto absorbing = product_limit_survival(StepFunction({1.0, 2.0}, {1.0, 0.5}));
    CHECK(absorbing.at(1.0) == doctest::Approx(0.0));
    CHECK(absorbing.at(5.0) == doctest::Approx(0.0));

    CHECK_THROWS_AS(product_limit_survival(StepFunction({1.0}, {1.5})), InputError);
}

TEST_CASE("survival is nonincreasing in [0,1] on random hazards") {
    Rng rng(5);
    for (int rep = 0; rep < 1000; ++rep) {
        const auto f = test::random_step_function(rng, 12);
        const auto s = product_limit_survival(f);
        double prev = 1.0;
        for (double v : s.values) {
            CHECK(v >= 0.0);
            CHECK(v <= prev + 1e-15);
            prev = v;
        }
        const double t = rng.uniform(0.0, 4.0);
        CHECK(s.at(t) <= s.before(t) + 1e-15);
    }
}

} // TEST_SUITE
