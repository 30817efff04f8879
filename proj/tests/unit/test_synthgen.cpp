#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "eca/error.hpp"
#include "eca/outcome.hpp"
#include "eca/synthgen.hpp"

using namespace eca;

namespace {

std::string bytes(const Cohort& c) {
    std::ostringstream out;
    write_cohort(out, c);
    return out.str();
}

}  // namespace

TEST_CASE("fixed seed gives identical bytes") {
    ScenarioConfig sc;
    sc.seed = 77;
    sc.rw_lines_probs = {0.5, 0.5};
    sc.new_therapy_fraction = 0.2;
    CHECK(bytes(generate_cohort(sc).first) == bytes(generate_cohort(sc).first));
    ScenarioConfig other = sc;
    other.seed = 78;
    CHECK(bytes(generate_cohort(sc).first) != bytes(generate_cohort(other).first));
}

TEST_CASE("generated cohorts satisfy the cohort invariants") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        ScenarioConfig sc;
        sc.seed = seed;
        sc.n_trial = 30;
        sc.n_rw = 40;
        sc.rw_lines_probs = {0.4, 0.3, 0.3};
        sc.trial_line_offset_probs = {0.5, 0.5};
        sc.ineligible_line_prob = 0.3;
        sc.new_therapy_fraction = 0.3;
        sc.missing_response_rate = 0.1;
        const auto [c, truth] = generate_cohort(sc);
        // A round trip through the parser re-checks every row.
        std::istringstream in(bytes(c));
        const Cohort back = parse_cohort(in);
        CHECK(back.count(Arm::Trial) == 30);
        CHECK(back.count(Arm::ExternalControl) == 40);
        for (const auto& p : back.patients) {
            CHECK(!eligible_lines(p).empty());
            if (p.arm == Arm::Trial) CHECK(p.lines.size() == 1);
        }
    }
}

TEST_CASE("planted new therapies precede progression and death") {
    ScenarioConfig sc;
    sc.seed = 5;
    sc.n_trial = 200;
    sc.n_rw = 200;
    sc.new_therapy_fraction = 0.25;
    const auto [c, truth] = generate_cohort(sc);
    CHECK(truth.new_therapy_before_event.size() > 50);
    for (const auto& p : c.patients)
        for (const auto& l : p.lines) {
            if (!truth.planted(p.patient_id, l.line_number)) continue;
            REQUIRE(l.new_therapy_date);
            if (l.progression_date) CHECK(*l.new_therapy_date < *l.progression_date);
            if (l.death_date) CHECK(*l.new_therapy_date < *l.death_date);
        }
}

TEST_CASE("event times follow the configured hazard") {
    // No censoring, no covariates: OS times are exponential with the baseline rate.
    ScenarioConfig sc;
    sc.seed = 12;
    sc.n_trial = 1000;
    sc.n_rw = 1000;
    sc.censoring_rate = 0.0;
    sc.hazard_os = 0.05;
    const auto [c, truth] = generate_cohort(sc);
    std::vector<double> t;
    for (const auto& p : c.patients) {
        const auto os = derive_os(p.lines[0]);
        REQUIRE(os.event);
        t.push_back(os.time_months);
    }
    std::sort(t.begin(), t.end());
    // Kolmogorov-Smirnov distance; 1.63/sqrt(n) is the 1% critical value.
    // Day rounding adds at most half a day of shift.
    double dmax = 0;
    const double n = static_cast<double>(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double f = 1 - std::exp(-sc.hazard_os * t[i]);
        dmax = std::max({dmax, std::abs(f - i / n), std::abs(f - (i + 1) / n)});
    }
    CHECK(dmax < 1.63 / std::sqrt(n) + 0.001);
}

TEST_CASE("scenario parsing") {
    const auto sc = parse_scenario(R"(
n_trial = 20
n_rw = 30
seed = 3
start_date = "2013-05-01"

[[covariate]]
name = "stage"
kind = "categorical"
levels = ["I", "II"]
trial_probs = [0.5, 0.5]
rw_probs = [0.2, 0.8]
)");
    CHECK(sc.n_rw == 30);
    CHECK(sc.covariates[0].levels.size() == 2);
    CHECK(sc.start_date == Date::from_ymd(2013, 5, 1));
    CHECK_THROWS_AS(parse_scenario("censoring_rate = 1.0\n"), ConfigError);
    CHECK_THROWS_AS(parse_scenario("rw_lines_probs = [0.5, 0.2]\n"), ConfigError);
    CHECK_THROWS_AS(parse_scenario("typo = 1\n"), ConfigError);
}
