#include <doctest.h>

#include <cmath>
#include <numeric>

#include "eca/bootstrap.hpp"
#include "eca/error.hpp"
#include "eca/random.hpp"
#include "eca/synthgen.hpp"
#include "fixtures.hpp"

using namespace eca;

TEST_CASE("percentile interval rank rule") {
    std::vector<double> v(100);
    std::iota(v.begin(), v.end(), 1.0);
    CHECK(percentile_ci(v) == std::pair<double, double>{3, 98});
    CHECK(percentile_ci(std::vector<double>(7, 2.5)) == std::pair<double, double>{2.5, 2.5});
    for (double level : {0.5, 0.9, 0.95, 0.99})
        CHECK(percentile_ci(std::vector<double>{4, -1}, level) == std::pair<double, double>{-1, 4});
    CHECK(percentile_ci(std::vector<double>{0.7}) == std::pair<double, double>{0.7, 0.7});
    // n*p integral: average of neighbours. 40 * 0.025 = 1.
    std::vector<double> w(40);
    std::iota(w.begin(), w.end(), 1.0);
    CHECK(percentile_ci(w) == std::pair<double, double>{1.5, 39.5});
    CHECK_THROWS_AS(percentile_ci(std::vector<double>{}), DomainError);
}

TEST_CASE("random streams") {
    Rng a = Rng::stream(1, 5), b = Rng::stream(1, 5), c = Rng::stream(1, 6);
    CHECK(a.next() == b.next());
    CHECK(a.next() != c.next());
    Rng r(4);
    std::vector<int> hist(3, 0);
    for (int i = 0; i < 30000; ++i) ++hist[r.below(3)];
    for (int h : hist) CHECK(std::abs(h - 10000) < 500);
}

namespace {

struct Fixture {
    Cohort cohort;
    AnalysisPlan plan;
    WeightingResult weighting;

    explicit Fixture(std::uint64_t seed) {
        ScenarioConfig sc;
        sc.n_trial = 40;
        sc.n_rw = 50;
        sc.rw_lines_probs = {0.6, 0.4};
        sc.seed = seed;
        CovariateGenerator g;
        g.name = "age";
        g.trial_mean = 60;
        g.rw_mean = 64;
        g.sd = 8;
        g.center = 62;
        g.effect_os = 0.03;
        sc.covariates = {g};
        cohort = generate_cohort(sc).first;
        plan.covariates = {{"age", CovariateType::Numeric, ""}};
        EstimandSpec os;
        os.id = "os";
        os.admin_cutoff_months = 24;
        os.landmarks_months = {12};
        EstimandSpec cr;
        cr.id = "cr";
        cr.endpoint = Endpoint::CR;
        cr.strategy = IntercurrentStrategy::CompositeNonResponder;
        cr.summary = SummaryMeasure::RiskDifference;
        plan.estimands = {cr, os};
        weighting = build_weighted_sample(cohort, fit_stage1(cohort, plan), plan);
    }
};

}  // namespace

TEST_CASE("bootstrap is deterministic across worker counts") {
    const Fixture f(21);
    BootstrapConfig cfg;
    cfg.reps = 60;
    cfg.seed = 5;
    const auto one = run_bootstrap(f.weighting, f.plan, cfg);
    cfg.workers = 4;
    const auto four = run_bootstrap(f.weighting, f.plan, cfg);
    CHECK(one.replicates == four.replicates);
    for (std::size_t c = 0; c < one.ci_low.size(); ++c) {
        if (std::isnan(one.ci_low[c])) {
            CHECK(std::isnan(four.ci_low[c]));
        } else {
            CHECK(one.ci_low[c] == four.ci_low[c]);
            CHECK(one.ci_high[c] == four.ci_high[c]);
        }
    }
    CHECK(one.succeeded == 60);

    cfg.seed = 6;
    const auto other = run_bootstrap(f.weighting, f.plan, cfg);
    CHECK(one.replicates != other.replicates);
}

TEST_CASE("stratified resampling keeps arm sizes") {
    const Fixture f(22);
    BootstrapConfig cfg;
    cfg.reps = 25;
    const auto res = run_bootstrap(f.weighting, f.plan, cfg);
    std::size_t n_trial_col = 0, n_rw_col = 0;
    for (std::size_t c = 0; c < res.columns.size(); ++c) {
        if (res.columns[c].weighting != "unweighted" || res.columns[c].estimand_id != "cr") continue;
        if (res.columns[c].statistic.name == "n_trial") n_trial_col = c;
        if (res.columns[c].statistic.name == "n_rw") n_rw_col = c;
    }
    REQUIRE(n_trial_col != n_rw_col);
    for (const auto& row : res.replicates) {
        CHECK(row[n_trial_col] == 40);
        CHECK(row[n_rw_col] == 50);
    }
    CHECK(std::isnan(res.ci_low[n_trial_col]));
}

TEST_CASE("single replicate and frozen weights") {
    const Fixture f(23);
    BootstrapConfig cfg;
    cfg.reps = 1;
    cfg.freeze_weights = true;
    const auto res = run_bootstrap(f.weighting, f.plan, cfg);
    for (std::size_t c = 0; c < res.columns.size(); ++c) {
        if (!res.columns[c].statistic.inferential) continue;
        CHECK(res.ci_low[c] == res.replicates[0][c]);
        CHECK(res.ci_high[c] == res.replicates[0][c]);
    }
}

TEST_CASE("identical outcomes give a zero-width interval") {
    Fixture f(24);
    for (auto& r : f.weighting.sample.rows) {
        r.line.best_response = BestResponse::CR;
        r.line.response_date = r.line.line_start + 1;
        r.line.progression_date.reset();
        r.line.new_therapy_date.reset();
    }
    BootstrapConfig cfg;
    cfg.reps = 30;
    const auto res = run_bootstrap(f.weighting, f.plan, cfg);
    for (std::size_t c = 0; c < res.columns.size(); ++c) {
        if (res.columns[c].estimand_id != "cr" || !res.columns[c].statistic.inferential) continue;
        CHECK(res.ci_low[c] == res.ci_high[c]);
    }
}
