#include <doctest.h>

#include <sstream>

#include "eca/error.hpp"
#include "eca/report.hpp"
#include "eca/synthgen.hpp"

using namespace eca;

namespace {

Cohort synth_cohort() {
    ScenarioConfig sc;
    sc.seed = 31;
    sc.n_trial = 60;
    sc.n_rw = 80;
    sc.rw_lines_probs = {0.6, 0.4};
    sc.new_therapy_fraction = 0.1;
    CovariateGenerator g;
    g.name = "ecog";
    g.kind = CovariateGenerator::Kind::Bernoulli;
    g.trial_prob = 0.3;
    g.rw_prob = 0.5;
    g.effect_os = 0.5;
    sc.covariates = {g};
    return generate_cohort(sc).first;
}

const char* kPlan = R"(
bootstrap_reps = 40

[[covariate]]
name = "ecog"
type = "binary"

[[estimand]]
endpoint = "ORR"

[[estimand]]
endpoint = "PFS"
strategy = "HypotheticalCensor"
landmarks_months = [6.0, 12.0, 18.0]
)";

PipelineOptions options_for(const AnalysisPlan& plan) {
    PipelineOptions o;
    o.bootstrap.reps = plan.bootstrap_reps;
    o.bootstrap.seed = plan.seed;
    return o;
}

}  // namespace

TEST_CASE("effects table has one row per declared statistic") {
    const AnalysisPlan plan = parse_plan(kPlan);
    const AnalysisResult res = analyze(synth_cohort(), plan, options_for(plan));
    std::ostringstream out;
    write_effects_csv(out, res);
    std::size_t expected = 0;
    for (const auto& e : plan.estimands) expected += 2 * statistic_specs(e).size();
    const std::string s = out.str();
    CHECK(static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')) == expected + 1);
    // ORR: 5 statistics; PFS: 6 + 2 * 3 landmarks + 2.
    CHECK(expected == 2 * (5 + 14));
    CHECK(s.find("surv_18_rw") != std::string::npos);
}

TEST_CASE("subgroup that excludes every trial patient is fatal") {
    AnalysisPlan plan = parse_plan(kPlan);
    plan.subgroup = SubgroupFilter{"future", Date::from_ymd(2030, 1, 1), std::nullopt, {}};
    PipelineOptions o = options_for(plan);
    o.subgroup = true;
    CHECK_THROWS_AS(analyze(synth_cohort(), plan, o), ConfigError);
}

TEST_CASE("runlog records the plan echo and bootstrap interpretation") {
    std::vector<std::string> defaults;
    const AnalysisPlan plan = parse_plan(kPlan, &defaults);
    const AnalysisResult res = analyze(synth_cohort(), plan, options_for(plan));
    RunInfo info;
    info.defaults_applied = defaults;
    const auto log = runlog_json(res, info);
    CHECK(log["plan"]["estimand"][1]["admin_cutoff_months"] == 24.0);
    CHECK(log["seed"] == kDefaultSeed);
    CHECK(log["weights"]["rw_ess"].get<double>() <= 80.0);
    CHECK(log["effects"].size() == res.bootstrap.columns.size());
}
