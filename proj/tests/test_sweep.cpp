#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sbo/errors.hpp"
#include "sbo/sweep.hpp"

using namespace sbo;

namespace {

const char* kAfm = R"(run:
  scenario: misf-afm
  method: analytic
  workers: 2
model:
  U0: 1.0
  U2: 0.1
  dim: 2
axes:
  mu: {min: 0.0, max: 3.0, points: 41}
)";

std::string error_of(const std::string& text) {
    try {
        parse_config(text, "cfg.yaml").validate();
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("config parsing") {
    const auto c = parse_config(kAfm);
    CHECK(c.scenario == RunScenario::misf_afm);
    CHECK(c.workers == 2);
    CHECK(c.axes.at("mu").points == 41);
    CHECK(c.L == 16);
    CHECK(c.output.table == "results.csv");

    const auto t = parse_config("run: {scenario: misf-field-T}\nmodel: {U2: 0.04, eta: 0.05, temperatures: [0, 0.05]}\n"
                                "axes: {mu: {min: 0.1, max: 0.7, points: 3}}\n");
    CHECK(t.temperatures.size() == 2);
    CHECK_NOTHROW(t.validate());
}

TEST_CASE("config errors carry line and key") {
    CHECK(error_of("run: {scenario: misf-afm}\nmodel:\n  U1: 3\n").find("cfg.yaml:3") != std::string::npos);
    CHECK(error_of("run: {scenario: misf-afm}\nmodel:\n  U1: 3\n").find("U1") != std::string::npos);
    CHECK(error_of("run: {scenario: bogus}\n").find("misf-afm") != std::string::npos);
    CHECK(error_of("run: {scenario: misf-afm}\naxes: {mu: {min: 0, max: 1, points: 1}}\n").find("points") !=
          std::string::npos);
    CHECK(error_of("run: {scenario: misf-afm}\n").find("axes.mu") != std::string::npos);
    CHECK(error_of("run: {scenario: misf-afm}\nmodel: {U2: -0.1}\naxes: {mu: {min: 0, max: 1, points: 3}}\n")
              .find("U2") != std::string::npos);
    CHECK(error_of("run: {scenario: mott1-diagram}\naxes: {lambda: {min: 0, max: 1, points: 3}, q: {min: 0, max: 1, "
                   "points: 3}}\n")
              .find("spin") != std::string::npos);
    CHECK(error_of("run: {scenario: misf-afm}\nmodel: {U0: abc}\n").find("cfg.yaml:2") != std::string::npos);
    CHECK(error_of("run: [1, 2\n").find("cfg.yaml") != std::string::npos);
    CHECK(error_of("run: {scenario: misf-afm}\naxes: {mu: {min: 0, max: 1, points: 3}, q: {min: 0, max: 1, points: "
                   "3}}\n")
              .find("q") != std::string::npos);
}

TEST_CASE("config round trip through metadata") {
    auto c = parse_config(kAfm);
    c.output.plot = "";
    const std::string json = config_to_json(c);
    const auto back = parse_config(json);
    CHECK(config_to_json(back) == json);
    CHECK(back.output.plot.empty());
}

TEST_CASE("format_number") {
    CHECK(format_number(0.0) == "0");
    CHECK(format_number(0.25) == "0.25");
    CHECK(format_number(1.0 / 3.0) == "0.333333333333");
    CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_number(std::nan("")) == "nan");
}

TEST_CASE("misf run: columns, lobes, determinism") {
    const auto c = parse_config(kAfm);
    const auto a = execute(c);
    CHECK(a.table.header ==
          std::vector<std::string>{"mu_over_U0", "lobe_n", "tc_over_U0", "phase_label", "classifier", "converged",
                                   "iterations"});
    CHECK(a.table.rows.size() == 41);
    CHECK(a.failures == 0);
    int lobes[4] = {0, 0, 0, 0};
    for (const auto& r : a.table.rows) {
        const int n = std::stoi(r[1]);
        if (n > 0 && n < 4) ++lobes[n];
    }
    CHECK(lobes[1] > 0);
    CHECK(lobes[2] > lobes[1]);
    CHECK(lobes[3] > 0);
    const auto b = execute(c);
    CHECK(a.table.to_csv() == b.table.to_csv());
    CHECK(a.metadata == b.metadata);
    CHECK(a.plot.find("mu/U0") != std::string::npos);
    CHECK(a.plot.find("'results.csv'") != std::string::npos);
}

TEST_CASE("spin scenarios") {
    auto m1 = parse_config("run: {scenario: mott1-diagram}\nspin: {J1: 0.3, J2: 0.1}\n"
                           "axes: {lambda: {min: -1, max: 1, points: 5}, q: {min: 0, max: 2, points: 5}}\n");
    auto r1 = execute(m1);
    CHECK(r1.table.rows.size() == 25);
    CHECK(r1.table.header.front() == "lambda_over_zJ");

    auto m2 = parse_config("run: {scenario: mott2-diagram}\nmodel: {U2: 0.05}\n"
                           "axes: {lambda: {min: 0, max: 2, points: 5}, t: {min: 0, max: 1, points: 3}}\n");
    auto r2 = execute(m2);
    CHECK(r2.table.rows.size() == 15);
    CHECK(r2.table.rows[0][3] == "0.75");
    CHECK(r2.plot.find("t/t0") != std::string::npos);

    auto qc = parse_config("run: {scenario: qc-curve, method: self-consistent}\n"
                           "axes: {theta: {min: -0.95, max: -0.55, points: 3}}\n");
    auto r3 = execute(qc);
    CHECK(r3.table.rows.size() == 3);
    CHECK(r3.table.rows[2][4] == "nan");
    CHECK(r3.failures == 0);
    CHECK(r3.plot.find("theta/pi") != std::string::npos);
}

TEST_CASE("write outputs") {
    const auto dir = std::filesystem::temp_directory_path() / "sbo_unit_outputs";
    std::filesystem::remove_all(dir);
    const auto c = parse_config(kAfm);
    const auto r = execute(c);
    write_outputs(c, r, dir / "nested");
    CHECK(slurp(dir / "nested" / "results.csv") == r.table.to_csv());
    CHECK(slurp(dir / "nested" / "metadata.json") == r.metadata);
    CHECK(std::filesystem::exists(dir / "nested" / "plot.gp"));
    std::filesystem::remove_all(dir);
}
