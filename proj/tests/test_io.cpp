#include <doctest.h>

#include <sstream>

#include "rcrte/dataset_io.hpp"
#include "rcrte/errors.hpp"
#include "rcrte/model_io.hpp"
#include "rcrte/rng.hpp"
#include "rcrte/synthgen.hpp"
#include "support/test_support.hpp"

using namespace rcrte;

TEST_SUITE("io") {

TEST_CASE("dataset JSON Lines round-trip") {
    Rng rng(11);
    const Dataset data = test::random_dataset(rng, 25, 3, 2);

    std::stringstream buf;
    write_dataset_jsonl(buf, data);
    const Dataset back = read_dataset_jsonl(buf);

    REQUIRE(back.units.size() == data.units.size());
    CHECK(back.q_count == data.q_count);
    CHECK(back.p == data.p);
    for (std::size_t i = 0; i < data.units.size(); ++i) {
        const auto& a = data.units[i];
        const auto& b = back.units[i];
        CHECK(a.unit_id == b.unit_id);
        CHECK(a.monitoring_time == b.monitoring_time);
        CHECK(a.te_time == b.te_time);
        CHECK(a.covariates == b.covariates);
        REQUIRE(a.events.size() == b.events.size());
        for (std::size_t e = 0; e < a.events.size(); ++e) {
            CHECK(a.events[e].time == b.events[e].time);
            CHECK(a.events[e].risk == b.events[e].risk);
        }
    }
}

TEST_CASE("tabular import matches the JSON Lines reader") {
    std::stringstream csv;
    csv << "unit_id,tau,te_time,event_time,risk,x1,x2\n"
           "a,2.0,1.5,0.4,1,0.1,-0.2\n"
           "a,2.0,1.5,0.9,2,0.1,-0.2\n"
           "b,1.0,,,,1.0,2.0\n";
    const Dataset data = read_dataset_table(csv);
    REQUIRE(data.units.size() == 2);
    CHECK(data.q_count == 2);
    CHECK(data.p == 2);
    CHECK(data.units[0].unit_id == "a");
    CHECK(data.units[0].te_time == 1.5);
    CHECK(data.units[0].events.size() == 2);
    CHECK(data.units[1].events.empty());
    CHECK_FALSE(data.units[1].te_observed());
}

TEST_CASE("loaders reject inconsistent input") {
    { // covariate dimension varies
        std::stringstream in;
        in << R"({"unit_id":"a","tau":1.0,"te_time":null,"covariates":[1.0],"events":[]})" << "\n"
           << R"({"unit_id":"b","tau":1.0,"te_time":null,"covariates":[1.0,2.0],"events":[]})"
           << "\n";
        CHECK_THROWS_AS(read_dataset_jsonl(in), InputError);
    }
    { // risk index above declared Q
        std::stringstream in;
        in << R"({"unit_id":"a","q":2,"tau":2.0,"covariates":[],"events":[{"time":0.5,"risk":3}]})"
           << "\n";
        CHECK_THROWS_AS(read_dataset_jsonl(in), InputError);
    }
    { // missing covariate cell in tabular form
        std::stringstream in;
        in << "unit_id,tau,te_time,event_time,risk,x1\n"
              "a,1.0,,,,\n";
        CHECK_THROWS_AS(read_dataset_table(in), InputError);
    }
    { // malformed JSON
        std::stringstream in;
        in << "{not json}\n";
        CHECK_THROWS_AS(read_dataset_jsonl(in), InputError);
    }
}

TEST_CASE("truth sidecar round-trip") {
    GenConfig cfg = GenConfig::defaults();
    cfg.n = 8;
    cfg.seed = 99;
    const auto gen = generate_dataset(cfg);
    const std::string path = "test_truth_roundtrip.jsonl";
    save_truth_jsonl(path, gen.truth);
    const auto back = load_truth_jsonl(path);
    REQUIRE(back.size() == gen.truth.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].unit_id == gen.truth[i].unit_id);
        CHECK(back[i].z == gen.truth[i].z);
        CHECK(back[i].true_te_time == gen.truth[i].true_te_time);
    }
    std::remove(path.c_str());
}

TEST_CASE("fitted model JSON round-trips losslessly") {
    Rng rng(313);
    FittedModel m;
    m.repair_mode = RepairMode::Partial;
    m.params.xi = 1.7320508075688772;
    m.params.alpha = {0.25, -0.1};
    m.params.beta_rcr = {{0.3, -0.2}, {1.0 / 3.0, 0.7}};
    m.params.gamma = {0.1, 0.5};
    m.params.beta_te = {-0.4, 0.5};
    m.baselines_rcr = {test::random_step_function(rng, 20), test::random_step_function(rng, 20)};
    m.baseline_te = test::random_step_function(rng, 15);
    m.frailty = {{"u0", 3.0, 2.5, 1.2, 0.1234567890123456}, {"u1", 2.0, 2.0, 1.0, -0.05}};
    m.meta = {2, 2, 2, 2.718281828459045};

    std::stringstream buf;
    write_model_json(buf, m);
    const FittedModel b = read_model_json(buf);

    CHECK(b.repair_mode == m.repair_mode);
    CHECK(b.params.xi == m.params.xi);
    CHECK(b.params.alpha == m.params.alpha);
    CHECK(b.params.beta_rcr == m.params.beta_rcr);
    CHECK(b.params.gamma == m.params.gamma);
    CHECK(b.params.beta_te == m.params.beta_te);
    REQUIRE(b.baselines_rcr.size() == 2);
    for (std::size_t q = 0; q < 2; ++q) {
        CHECK(b.baselines_rcr[q].locations() == m.baselines_rcr[q].locations());
        CHECK(b.baselines_rcr[q].sizes() == m.baselines_rcr[q].sizes());
    }
    CHECK(b.baseline_te.locations() == m.baseline_te.locations());
    CHECK(b.baseline_te.sizes() == m.baseline_te.sizes());
    REQUIRE(b.frailty.size() == 2);
    CHECK(b.frailty[0].log_mean == m.frailty[0].log_mean);
    CHECK(b.meta.max_observed_time == m.meta.max_observed_time);
}

} // TEST_SUITE
