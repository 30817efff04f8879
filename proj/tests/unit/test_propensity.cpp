#include <doctest.h>

#include <cmath>

#include "../oracles/oracles.hpp"
#include "eca/error.hpp"
#include "eca/plan.hpp"
#include "eca/propensity.hpp"
#include "eca/random.hpp"
#include "fixtures.hpp"

using namespace eca;
using fixtures::patient;

namespace {

// Trial: x=1 three times, x=0 once. RW: x=1 once, x=0 three times.
Cohort two_by_two() {
    Cohort c;
    c.covariate_names = {"flag"};
    const char* trial[] = {"1", "1", "1", "0"};
    const char* rw[] = {"1", "0", "0", "0"};
    for (int i = 0; i < 4; ++i) c.patients.push_back(patient("T" + std::to_string(i), Arm::Trial, {{trial[i]}}));
    for (int i = 0; i < 4; ++i)
        c.patients.push_back(patient("R" + std::to_string(i), Arm::ExternalControl, {{rw[i]}}));
    return c;
}

AnalysisPlan plan_with(std::vector<CovariateSpec> covs) {
    AnalysisPlan p;
    p.covariates = std::move(covs);
    p.estimands.push_back(EstimandSpec{});
    return p;
}

oracle::Matrix to_rows(const Eigen::MatrixXd& x) {
    oracle::Matrix m(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) m[static_cast<std::size_t>(i)].push_back(x(i, j));
    return m;
}

}  // namespace

TEST_CASE("intercept-only fit on balanced labels") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Ones(20, 1);
    Eigen::VectorXd y(20);
    for (int i = 0; i < 20; ++i) y(i) = i < 10;
    std::vector<std::size_t> cl(20);
    for (std::size_t i = 0; i < 20; ++i) cl[i] = i;
    const PsFit f = fit_logistic(x, y, cl);
    CHECK(std::abs(f.intercept) < 1e-12);
}

TEST_CASE("saturated two-by-two fit and predictions") {
    const Cohort c = two_by_two();
    const AnalysisPlan plan = plan_with({{"flag", CovariateType::Binary, ""}});
    const DesignMatrix d = build_design(c, plan, all_eligible_lines(c));
    const PsFit f = fit_logistic(d);
    CHECK(std::abs(f.coefficients(0) - std::log(9.0)) < 1e-8);
    CHECK(std::abs(f.intercept + std::log(3.0)) < 1e-8);

    const PsModel m{d.encoder, f};
    CHECK(predict_ps(m, CovariateVector{{"1"}}) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(predict_ps(m, CovariateVector{{"0"}}) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(inverse_logit(0.0) == 0.5);

    PsModel unconverged = m;
    unconverged.fit.converged = false;
    CHECK_THROWS_AS(predict_ps(unconverged, CovariateVector{{"1"}}), DomainError);
}

TEST_CASE("perfect separation") {
    Cohort c;
    c.covariate_names = {"flag"};
    for (int i = 0; i < 4; ++i) c.patients.push_back(patient("T" + std::to_string(i), Arm::Trial, {{"1"}}));
    for (int i = 0; i < 4; ++i) c.patients.push_back(patient("R" + std::to_string(i), Arm::ExternalControl, {{"0"}}));
    const DesignMatrix d = build_design(c, plan_with({{"flag", CovariateType::Binary, ""}}), all_eligible_lines(c));
    CHECK_THROWS_AS(fit_logistic(d), SeparationError);
}

TEST_CASE("collinear columns are singular") {
    Eigen::MatrixXd x(6, 3);
    x << 1, 0, 0, 1, 1, 1, 1, 0, 0, 1, 1, 1, 1, 1, 1, 1, 0, 0;
    Eigen::VectorXd y(6);
    y << 1, 1, 0, 0, 1, 0;
    std::vector<std::size_t> cl = {0, 1, 2, 3, 4, 5};
    CHECK_THROWS_AS(fit_logistic(x, y, cl), SingularityError);
}

TEST_CASE("design rows and encoding") {
    Cohort c;
    c.covariate_names = {"age", "stage", "sex"};
    c.patients.push_back(patient("T1", Arm::Trial, {{"50", "Stage I", "M"}}));
    c.patients.push_back(patient("T2", Arm::Trial, {{"60", "Stage II", "M"}}));
    c.patients.push_back(patient("R1", Arm::ExternalControl,
                                 {{"55", "Stage III", "M"}, {"56", "Stage I", "M"}, {"57", "Stage II", "M"}}));
    const LineSets lines = all_eligible_lines(c);

    const DesignMatrix d = build_design(
        c, plan_with({{"age", CovariateType::Numeric, ""}, {"stage", CovariateType::Categorical, "Stage I"}}), lines);
    CHECK(d.rows() == 5);
    CHECK(d.x.cols() == 4);  // intercept, age, two stage indicators
    CHECK(d.column_names[2] == "stage=Stage II");
    CHECK(d.column_names[3] == "stage=Stage III");
    CHECK(d.cluster[2] == d.cluster[4]);

    CHECK_THROWS_AS(build_design(c, plan_with({{"sex", CovariateType::Categorical, "M"}}), lines), DataError);
}

TEST_CASE("sandwich on six rows in three clusters") {
    Eigen::MatrixXd x(6, 2);
    x << 1, 0.3, 1, -1.2, 1, 0.8, 1, 1.5, 1, -0.4, 1, 0.1;
    Eigen::VectorXd y(6);
    y << 1, 0, 1, 0, 0, 1;
    const std::vector<std::size_t> cl = {0, 0, 1, 1, 2, 2};
    const PsFit f = fit_logistic(x, y, cl);

    const auto rows = to_rows(x);
    const std::vector<double> yy(y.data(), y.data() + 6);
    const auto beta = oracle::logistic_newton(rows, yy);
    const std::vector<double> fitted = {f.intercept, f.coefficients(0)};
    const auto s = oracle::sandwich(rows, yy, {0, 0, 1, 1, 2, 2}, fitted);
    for (int a = 0; a < 2; ++a) {
        CHECK(std::abs(f.beta()(a) - beta[a]) < 1e-8);
        for (int b = 0; b < 2; ++b) CHECK(std::abs(f.sandwich_covariance(a, b) - s[a][b]) < 1e-10);
    }
}

TEST_CASE("fitted estimate against grid search, gradient and finite differences") {
    Rng rng(3);
    for (int rep = 0; rep < 10; ++rep) {
        const int n = 12 + static_cast<int>(rng.below(10));
        Eigen::MatrixXd x(n, 2);
        Eigen::VectorXd y(n);
        std::vector<std::size_t> cl(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            x(i, 0) = 1;
            x(i, 1) = rng.normal();
            y(i) = rng.bernoulli(inverse_logit(0.3 + 0.8 * x(i, 1)));
            cl[static_cast<std::size_t>(i)] = static_cast<std::size_t>(i);
        }
        // Guard against separable draws; they are covered elsewhere.
        if (y.sum() < 2 || y.sum() > n - 2) continue;
        PsFit f;
        try {
            f = fit_logistic(x, y, cl);
        } catch (const SeparationError&) {
            continue;
        }
        const auto rows = to_rows(x);
        const std::vector<double> yy(y.data(), y.data() + n);
        auto ll = [&](double a, double b) { return oracle::logistic_loglik(rows, yy, {a, b}); };
        const auto [ga, gb] = oracle::grid_max_2d(ll, -8, 8);
        CHECK(std::abs(f.intercept - ga) < 1e-6);
        CHECK(std::abs(f.coefficients(0) - gb) < 1e-6);
        CHECK(f.max_abs_score < 1e-6);

        // Central differences of the log-likelihood match the analytic score (zero) in absolute terms.
        const double h = 1e-5;
        const double da = (ll(f.intercept + h, f.coefficients(0)) - ll(f.intercept - h, f.coefficients(0))) / (2 * h);
        CHECK(std::abs(da) < 1e-4);

        // Mean fitted probability equals the observed proportion, up to the score tolerance.
        double mean_p = 0;
        for (int i = 0; i < n; ++i) mean_p += predict_encoded(f, x.row(i));
        CHECK(std::abs(mean_p - y.sum()) < 1e-8);
    }
}
