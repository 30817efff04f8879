#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "eca/cohort.hpp"
#include "eca/plan.hpp"

namespace eca {

// One model column derived from a plan covariate. Numeric columns are
// centred and scaled with parameters estimated on the design rows; binary and
// categorical indicator columns are left as 0/1.
struct EncodedColumn {
    std::string name;
    std::size_t plan_index = 0;    // position in AnalysisPlan::covariates
    std::size_t cohort_index = 0;  // position in Cohort::covariate_names
    CovariateType type = CovariateType::Numeric;
    std::string level;  // categorical: the level this indicator marks
    double center = 0.0;
    double scale = 1.0;
};

class CovariateEncoder {
public:
    CovariateEncoder() = default;

    // Learns categorical levels and standardisation from `rows`. Throws
    // DataError naming the covariate when an encoded column is constant.
    static CovariateEncoder fit(const std::vector<CovariateSpec>& specs, const Cohort& cohort,
                                std::span<const LineRecord* const> rows);

    const std::vector<EncodedColumn>& columns() const { return columns_; }
    const std::vector<CovariateSpec>& specs() const { return specs_; }
    std::size_t width() const { return columns_.size(); }

    // Unstandardised values (numeric as read, indicators as 0/1). Throws
    // DomainError for a categorical level not seen when fitting.
    void encode_raw(const CovariateVector& cov, std::span<double> out) const;
    // Model-scale values: encode_raw followed by (x - center) / scale.
    void encode(const CovariateVector& cov, std::span<double> out) const;

    nlohmann::json to_json() const;

private:
    std::vector<CovariateSpec> specs_;
    std::vector<EncodedColumn> columns_;
    std::vector<std::vector<std::string>> levels_;  // per covariate; categorical only
};

struct RowLabel {
    std::string patient_id;
    int line_number = 0;
};

// Rows are (patient, line) observations; column 0 is the intercept.
struct DesignMatrix {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;                 // 1 = Trial, 0 = external control
    std::vector<std::size_t> cluster;  // patient position in the cohort
    std::vector<RowLabel> labels;
    std::vector<std::string> column_names;
    CovariateEncoder encoder;

    Eigen::Index rows() const { return x.rows(); }
};

// Line set per patient, parallel to Cohort::patients.
using LineSets = std::vector<std::vector<int>>;

LineSets all_eligible_lines(const Cohort& cohort);

DesignMatrix build_design(const Cohort& cohort, const AnalysisPlan& plan, const LineSets& lines);

struct LogisticOptions {
    double score_tolerance = 1e-8;
    double loglik_rel_tolerance = 1e-10;
    int max_iterations = 100;
    double separation_threshold = 15.0;
};

struct PsFit {
    double intercept = 0.0;
    Eigen::VectorXd coefficients;        // one per encoded covariate column
    Eigen::MatrixXd model_covariance;    // inverse information, intercept first
    Eigen::MatrixXd sandwich_covariance; // cluster-robust, intercept first
    bool converged = false;
    int iterations = 0;
    double max_abs_coef = 0.0;
    double log_likelihood = 0.0;
    double max_abs_score = 0.0;
    std::vector<std::string> column_names;  // intercept first

    Eigen::VectorXd beta() const;  // intercept followed by coefficients
};

// Bernoulli maximum likelihood by Newton/IRLS with step halving, plus the
// cluster-robust covariance B^-1 M B^-1 aggregating scores by `clusters`.
// Throws SeparationError, SingularityError or NonConvergence.
PsFit fit_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::span<const std::size_t> clusters,
                   std::vector<std::string> column_names = {}, const LogisticOptions& options = {});

inline PsFit fit_logistic(const DesignMatrix& d, const LogisticOptions& options = {}) {
    return fit_logistic(d.x, d.y, d.cluster, d.column_names, options);
}

double inverse_logit(double eta);

// Probability for an already-encoded row with leading intercept column.
double predict_encoded(const PsFit& fit, const Eigen::Ref<const Eigen::RowVectorXd>& row);

struct PsModel {
    CovariateEncoder encoder;
    PsFit fit;
};

// Requires a converged fit; applies the stored encoding to raw covariates.
double predict_ps(const PsModel& model, const CovariateVector& covariates);

nlohmann::json to_json(const PsModel& model);

}  // namespace eca
