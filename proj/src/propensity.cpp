#include "eca/propensity.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "eca/csv.hpp"
#include "eca/error.hpp"

namespace eca {

CovariateEncoder CovariateEncoder::fit(const std::vector<CovariateSpec>& specs, const Cohort& cohort,
                                       std::span<const LineRecord* const> rows) {
    CovariateEncoder enc;
    enc.specs_ = specs;
    enc.levels_.resize(specs.size());
    for (std::size_t s = 0; s < specs.size(); ++s) {
        const auto& spec = specs[s];
        auto k = cohort.covariate_index(spec.name);
        if (!k) throw ConfigError("covariate '" + spec.name + "' is not a column of the cohort");
        if (spec.type != CovariateType::Categorical) {
            enc.columns_.push_back({spec.name, s, *k, spec.type, {}, 0.0, 1.0});
            continue;
        }
        std::set<std::string> seen;
        for (const auto* l : rows) seen.insert(l->covariates.values[*k]);
        if (!seen.count(spec.reference))
            throw DataError("covariate '" + spec.name + "': reference level '" + spec.reference +
                            "' does not occur in the design rows");
        enc.levels_[s].assign(seen.begin(), seen.end());
        for (const auto& level : seen) {
            if (level == spec.reference) continue;
            enc.columns_.push_back({spec.name + "=" + level, s, *k, spec.type, level, 0.0, 1.0});
        }
        if (seen.size() == 1) throw DataError("covariate '" + spec.name + "' is constant (single level)");
    }

    // Column moments over the design rows; numeric columns get standardised.
    const std::size_t n = rows.size();
    std::vector<double> buf(enc.columns_.size());
    std::vector<double> sum(enc.columns_.size(), 0.0), sumsq(enc.columns_.size(), 0.0);
    std::vector<double> first(enc.columns_.size(), 0.0);
    std::vector<bool> varies(enc.columns_.size(), false);
    for (std::size_t r = 0; r < n; ++r) {
        enc.encode_raw(rows[r]->covariates, buf);
        for (std::size_t j = 0; j < buf.size(); ++j) {
            if (r == 0) first[j] = buf[j];
            else if (buf[j] != first[j]) varies[j] = true;
            sum[j] += buf[j];
        }
    }
    for (std::size_t j = 0; j < enc.columns_.size(); ++j) {
        if (!varies[j])
            throw DataError("covariate '" + enc.columns_[j].name + "' is constant over the design rows");
    }
    for (std::size_t r = 0; r < n; ++r) {
        enc.encode_raw(rows[r]->covariates, buf);
        for (std::size_t j = 0; j < buf.size(); ++j) {
            const double d = buf[j] - sum[j] / static_cast<double>(n);
            sumsq[j] += d * d;
        }
    }
    for (std::size_t j = 0; j < enc.columns_.size(); ++j) {
        auto& c = enc.columns_[j];
        if (c.type != CovariateType::Numeric) continue;
        c.center = sum[j] / static_cast<double>(n);
        c.scale = std::sqrt(sumsq[j] / static_cast<double>(n));
    }
    return enc;
}

void CovariateEncoder::encode_raw(const CovariateVector& cov, std::span<double> out) const {
    for (std::size_t j = 0; j < columns_.size(); ++j) {
        const auto& c = columns_[j];
        const std::string& raw = cov.values.at(c.cohort_index);
        if (raw.empty()) throw DataError("missing value for covariate '" + specs_[c.plan_index].name + "'");
        switch (c.type) {
            case CovariateType::Numeric: {
                auto v = csv::parse_number(raw);
                if (!v) throw DataError("covariate '" + c.name + "': '" + raw + "' is not numeric");
                out[j] = *v;
                break;
            }
            case CovariateType::Binary: {
                auto v = csv::parse_number(raw);
                if (!v || (*v != 0.0 && *v != 1.0))
                    throw DataError("binary covariate '" + c.name + "': '" + raw + "' is not 0/1");
                out[j] = *v;
                break;
            }
            case CovariateType::Categorical: {
                const auto& levels = levels_[c.plan_index];
                if (!std::binary_search(levels.begin(), levels.end(), raw))
                    throw DomainError("covariate '" + specs_[c.plan_index].name + "': level '" + raw +
                                      "' was not seen when the model was fitted");
                out[j] = raw == c.level ? 1.0 : 0.0;
                break;
            }
        }
    }
}

void CovariateEncoder::encode(const CovariateVector& cov, std::span<double> out) const {
    encode_raw(cov, out);
    for (std::size_t j = 0; j < columns_.size(); ++j) out[j] = (out[j] - columns_[j].center) / columns_[j].scale;
}

nlohmann::json CovariateEncoder::to_json() const {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : columns_) {
        cols.push_back({{"name", c.name},
                        {"covariate", specs_[c.plan_index].name},
                        {"type", to_string(c.type)},
                        {"level", c.level},
                        {"center", c.center},
                        {"scale", c.scale}});
    }
    nlohmann::json refs = nlohmann::json::object();
    for (const auto& s : specs_)
        if (s.type == CovariateType::Categorical) refs[s.name] = s.reference;
    return {{"columns", cols}, {"reference_levels", refs}};
}

LineSets all_eligible_lines(const Cohort& cohort) {
    LineSets out;
    out.reserve(cohort.patients.size());
    for (const auto& p : cohort.patients) out.push_back(eligible_lines(p));
    return out;
}

DesignMatrix build_design(const Cohort& cohort, const AnalysisPlan& plan, const LineSets& lines) {
    if (lines.size() != cohort.patients.size()) throw DomainError("line sets must parallel the cohort's patients");
    std::vector<const LineRecord*> rows;
    DesignMatrix d;
    for (std::size_t i = 0; i < cohort.patients.size(); ++i) {
        const auto& p = cohort.patients[i];
        if (p.arm == Arm::Trial && lines[i].size() > 1)
            throw SchemaError("trial patient " + p.patient_id + " contributes more than one row");
        for (int ln : lines[i]) {
            const LineRecord* l = p.find_line(ln);
            if (!l) throw DomainError("patient " + p.patient_id + " has no line " + std::to_string(ln));
            rows.push_back(l);
            d.cluster.push_back(i);
            d.labels.push_back({p.patient_id, ln});
        }
    }
    d.encoder = CovariateEncoder::fit(plan.covariates, cohort, rows);

    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto width = static_cast<Eigen::Index>(d.encoder.width());
    d.x.resize(n, width + 1);
    d.y.resize(n);
    std::vector<double> buf(d.encoder.width());
    for (Eigen::Index r = 0; r < n; ++r) {
        d.encoder.encode(rows[r]->covariates, buf);
        d.x(r, 0) = 1.0;
        for (Eigen::Index j = 0; j < width; ++j) d.x(r, j + 1) = buf[j];
        d.y(r) = cohort.patients[d.cluster[r]].arm == Arm::Trial ? 1.0 : 0.0;
    }
    d.column_names.push_back("(intercept)");
    for (const auto& c : d.encoder.columns()) d.column_names.push_back(c.name);
    return d;
}

double inverse_logit(double eta) {
    if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

namespace {

// log(1 + exp(eta)) without overflow.
double log1pexp(double eta) { return eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta)); }

double bernoulli_loglik(const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) ll += y(i) * eta(i) - log1pexp(eta(i));
    return ll;
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

// LDLT::rcond() skips zero pivots, so exact collinearity needs the pivot ratio too.
bool singular(const Eigen::LDLT<Eigen::MatrixXd>& ldlt) {
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return true;
    const Eigen::VectorXd d = ldlt.vectorD().cwiseAbs();
    return d.minCoeff() <= 1e-13 * d.maxCoeff() || ldlt.rcond() < 1e-13;
}

}  // namespace

Eigen::VectorXd PsFit::beta() const {
    Eigen::VectorXd b(coefficients.size() + 1);
    b(0) = intercept;
    b.tail(coefficients.size()) = coefficients;
    return b;
}

PsFit fit_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::span<const std::size_t> clusters,
                   std::vector<std::string> column_names, const LogisticOptions& opt) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    if (y.size() != n || static_cast<Eigen::Index>(clusters.size()) != n)
        throw DomainError("design, labels and clusters must have equal length");
    if (p < 1) throw DomainError("design needs at least an intercept column");
    const double n_pos = y.sum();
    if (n_pos < 1 || n_pos > static_cast<double>(n) - 1)
        throw DomainError("logistic fit needs at least one row per label value");
    if (column_names.empty()) {
        column_names.push_back("(intercept)");
        for (Eigen::Index j = 1; j < p; ++j) column_names.push_back("x" + std::to_string(j));
    }

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd eta = x * beta;
    double ll = bernoulli_loglik(eta, y);
    Eigen::VectorXd prob(n), w(n), score(p);
    Eigen::MatrixXd info(p, p);
    bool converged = false;
    int iter = 0;

    auto evaluate = [&]() {
        for (Eigen::Index i = 0; i < n; ++i) {
            prob(i) = inverse_logit(eta(i));
            w(i) = prob(i) * (1.0 - prob(i));
        }
        score.noalias() = x.transpose() * (y - prob);
        info.noalias() = x.transpose() * w.asDiagonal() * x;
    };

    auto separated_columns = [&](const Eigen::VectorXd& b) {
        std::string names;
        for (Eigen::Index j = 1; j < p; ++j) {
            if (std::abs(b(j)) > opt.separation_threshold) {
                if (!names.empty()) names += ", ";
                names += column_names[j];
            }
        }
        return names;
    };

    for (iter = 0; iter < opt.max_iterations; ++iter) {
        evaluate();
        if (score.cwiseAbs().maxCoeff() < opt.score_tolerance) {
            converged = true;
            break;
        }
        Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
        if (singular(ldlt))
            throw SingularityError("weighted normal equations are singular (collinear or constant columns)");
        const Eigen::VectorXd delta = ldlt.solve(score);

        double step = 1.0;
        Eigen::VectorXd candidate = beta + delta;
        Eigen::VectorXd cand_eta = x * candidate;
        double cand_ll = bernoulli_loglik(cand_eta, y);
        for (int h = 0; h < 30 && !(cand_ll >= ll - 1e-12 * std::abs(ll)); ++h) {
            step *= 0.5;
            candidate = beta + step * delta;
            cand_eta = x * candidate;
            cand_ll = bernoulli_loglik(cand_eta, y);
        }

        const bool improving = cand_ll > ll;
        const double rel_change = std::abs(cand_ll - ll) / std::max(std::abs(ll), 1e-300);
        beta = candidate;
        eta = cand_eta;
        ll = cand_ll;
        if (improving) {
            const auto names = separated_columns(beta);
            if (!names.empty())
                throw SeparationError("propensity model shows separation; coefficients diverging for: " + names);
        }
        if (step == 1.0 && rel_change < opt.loglik_rel_tolerance) {
            evaluate();
            converged = true;
            ++iter;
            break;
        }
    }
    if (!converged)
        throw NonConvergence("logistic fit did not converge within " + std::to_string(opt.max_iterations) +
                             " iterations");

    // Complete separation can also reach the score tolerance with every row fitted exactly.
    if ((y - prob).cwiseAbs().maxCoeff() < 1e-6)
        throw SeparationError("propensity model fits every row exactly (complete separation)");
    const auto names = separated_columns(beta);
    if (!names.empty()) throw SeparationError("propensity model shows separation; coefficients diverging for: " + names);

    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (singular(ldlt))
        throw SingularityError("information matrix is singular at the solution");
    const Eigen::MatrixXd bread = symmetrize(ldlt.solve(Eigen::MatrixXd::Identity(p, p)));

    const std::size_t n_clusters =
        clusters.empty() ? 0 : *std::max_element(clusters.begin(), clusters.end()) + 1;
    Eigen::MatrixXd cluster_score = Eigen::MatrixXd::Zero(p, static_cast<Eigen::Index>(n_clusters));
    for (Eigen::Index i = 0; i < n; ++i)
        cluster_score.col(static_cast<Eigen::Index>(clusters[i])) += x.row(i).transpose() * (y(i) - prob(i));
    const Eigen::MatrixXd meat = cluster_score * cluster_score.transpose();

    PsFit fit;
    fit.intercept = beta(0);
    fit.coefficients = beta.tail(p - 1);
    fit.model_covariance = bread;
    fit.sandwich_covariance = symmetrize(bread * meat * bread);
    fit.converged = true;
    fit.iterations = iter;
    fit.max_abs_coef = p > 1 ? fit.coefficients.cwiseAbs().maxCoeff() : 0.0;
    fit.log_likelihood = ll;
    fit.max_abs_score = score.cwiseAbs().maxCoeff();
    fit.column_names = std::move(column_names);
    return fit;
}

double predict_encoded(const PsFit& fit, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
    if (!fit.converged) throw DomainError("propensity model has not converged; predictions are blocked");
    if (row.size() != fit.coefficients.size() + 1) throw DomainError("encoded row has the wrong width");
    return inverse_logit(row.dot(fit.beta()));
}

double predict_ps(const PsModel& model, const CovariateVector& covariates) {
    if (!model.fit.converged) throw DomainError("propensity model has not converged; predictions are blocked");
    std::vector<double> buf(model.encoder.width());
    model.encoder.encode(covariates, buf);
    double eta = model.fit.intercept;
    for (std::size_t j = 0; j < buf.size(); ++j) eta += model.fit.coefficients(static_cast<Eigen::Index>(j)) * buf[j];
    return inverse_logit(eta);
}

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json r = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace

nlohmann::json to_json(const PsModel& model) {
    const auto& f = model.fit;
    nlohmann::json coefs = nlohmann::json::object();
    const Eigen::VectorXd b = f.beta();
    for (Eigen::Index j = 0; j < b.size(); ++j) coefs[f.column_names[j]] = b(j);
    return {{"column_names", f.column_names},
            {"coefficients", coefs},
            {"model_covariance", matrix_json(f.model_covariance)},
            {"sandwich_covariance", matrix_json(f.sandwich_covariance)},
            {"converged", f.converged},
            {"iterations", f.iterations},
            {"max_abs_coef", f.max_abs_coef},
            {"log_likelihood", f.log_likelihood},
            {"max_abs_score", f.max_abs_score},
            {"encoding", model.encoder.to_json()}};
}

}  // namespace eca
