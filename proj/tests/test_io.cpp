// CSV round-trip fidelity and JSON configuration loading.

#include <catch2/catch_amalgamated.hpp>

#include <ptloop/csv.hpp>
#include <ptloop/mhe.hpp>
#include <ptloop/scenario.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

using namespace ptloop;

TEST_CASE("format_double is round-trip exact", "[io][csv]") {
    const std::vector<double> values = {
        0.0,
        1.0,
        -1.0,
        1.0 / 3.0,
        -2.0 / 7.0,
        5.114853898709598,
        1.2345678901234567e-5,
        9.87654321e17,
        1e-300,
        -1e300,
        2.2250738585072014e-308, // smallest normal
        1.7976931348623157e308,  // largest finite
        28800.0,
        136.0,
    };
    for (const double v : values) {
        const std::string text = csv::format_double(v);
        const double back = std::strtod(text.c_str(), nullptr);
        CHECK(back == v);
    }
}

TEST_CASE("table write/read round trip", "[io][csv]") {
    const std::string path = "io_test_table.csv";
    csv::Table table;
    table.header = {"alpha", "beta", "gamma"};
    table.rows = {{1.0, -0.5, 1.0 / 3.0},
                  {2.2250738585072014e-308, 0.0, 9.87654321e17},
                  {5.114853898709598, -1e300, 42.0}};
    csv::write_table(path, table);

    const csv::Table back = csv::read_table(path);
    CHECK(back.header == table.header);
    REQUIRE(back.rows.size() == table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        REQUIRE(back.rows[i].size() == table.rows[i].size());
        for (std::size_t j = 0; j < table.rows[i].size(); ++j) {
            CHECK(back.rows[i][j] == table.rows[i][j]);
        }
    }

    SECTION("column lookup") {
        CHECK(back.column("alpha") == 0);
        CHECK(back.column("gamma") == 2);
        CHECK_THROWS_WITH(back.column("delta"),
                          Catch::Matchers::ContainsSubstring("delta"));
    }
    std::remove(path.c_str());
}

TEST_CASE("malformed CSV input is rejected with context", "[io][csv]") {
    const std::string path = "io_test_bad.csv";

    SECTION("non-numeric cell quotes the offending line") {
        std::ofstream out(path);
        out << "a,b\n1.0,oops\n";
        out.close();
        CHECK_THROWS_WITH(csv::read_table(path), Catch::Matchers::ContainsSubstring("oops"));
    }

    SECTION("ragged row is rejected") {
        std::ofstream out(path);
        out << "a,b\n1.0\n";
        out.close();
        CHECK_THROWS_AS(csv::read_table(path), std::runtime_error);
    }

    SECTION("empty file is rejected") {
        std::ofstream out(path);
        out.close();
        CHECK_THROWS_AS(csv::read_table(path), std::runtime_error);
    }

    SECTION("missing file is rejected") {
        std::remove(path.c_str());
        CHECK_THROWS_AS(csv::read_table("io_test_does_not_exist.csv"), std::runtime_error);
    }
    std::remove(path.c_str());
}

TEST_CASE("estimator config JSON errors name the offender", "[io][config]") {
    CHECK_THROWS_WITH(estimator_config_from_json(R"({"variant": "hypo", "bogus_key": 1})"),
                      Catch::Matchers::ContainsSubstring("bogus_key"));
    CHECK_THROWS_WITH(
        estimator_config_from_json(R"({"variant": "hypo", "solver": {"max_steps": 3}})"),
        Catch::Matchers::ContainsSubstring("max_steps"));
    CHECK_THROWS_WITH(estimator_config_from_json(R"({"horizon": 10})"),
                      Catch::Matchers::ContainsSubstring("variant"));
    CHECK_THROWS_AS(estimator_config_from_json("{{{"), std::invalid_argument);
    CHECK_THROWS_AS(estimator_config_from_json(R"({"variant": "hypo", "eta": 1.5})"),
                    std::invalid_argument);
}

TEST_CASE("configs load from files", "[io][config]") {
    SECTION("estimator config") {
        const std::string path = "io_test_estimator.json";
        EstimatorConfig cfg = default_estimator_config(Variant::hyper);
        cfg.eta = 0.85;
        cfg.horizon = 12;
        std::ofstream out(path);
        out << estimator_config_to_json(cfg);
        out.close();

        const EstimatorConfig back = load_estimator_config(path);
        CHECK(back.variant == Variant::hyper);
        CHECK(back.eta == 0.85);
        CHECK(back.horizon == 12);
        CHECK((back.Q_diag.array() == cfg.Q_diag.array()).all());
        std::remove(path.c_str());

        CHECK_THROWS_AS(load_estimator_config("io_test_missing.json"), std::runtime_error);
    }

    SECTION("patient spec") {
        const std::string path = "io_test_patient.json";
        PatientSpec spec = default_patient(Variant::hypo);
        spec.duration_days = 31;
        spec.noise_scale = 0.25;
        std::ofstream out(path);
        out << patient_spec_to_json(spec);
        out.close();

        const PatientSpec back = load_patient_spec(path);
        CHECK(back.duration_days == 31);
        CHECK(back.noise_scale == 0.25);
        CHECK((back.x0.array() == spec.x0.array()).all());
        std::remove(path.c_str());

        CHECK_THROWS_AS(load_patient_spec("io_test_missing.json"), std::runtime_error);
    }
}
