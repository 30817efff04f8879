#include "eca/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "eca/csv.hpp"
#include "eca/error.hpp"

namespace eca {

int select_line(const std::map<int, double>& ps_by_line) {
    if (ps_by_line.empty()) throw DomainError("select_line needs at least one line");
    auto best = ps_by_line.begin();
    for (auto it = std::next(best); it != ps_by_line.end(); ++it)
        if (it->second > best->second) best = it;  // strict: earlier line keeps ties
    return best->first;
}

double odds_weight(double e) {
    if (!(e > 0.0 && e < 1.0)) throw DomainError("propensity score must lie in (0, 1), got " + csv::format_number(e));
    return e / (1.0 - e);
}

double effective_sample_size(std::span<const double> weights) {
    if (weights.empty()) throw DomainError("effective sample size of an empty weight vector");
    double s = 0, s2 = 0;
    for (double w : weights) {
        if (!(w > 0)) throw DomainError("weights must be positive");
        s += w;
        s2 += w * w;
    }
    return s * s / s2;
}

namespace {

double mean(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double sample_variance(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double ss = 0;
    for (double x : v) ss += (x - m) * (x - m);
    return ss / static_cast<double>(v.size() - 1);
}

double weighted_mean(std::span<const double> v, std::span<const double> w) {
    double sw = 0, swx = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        sw += w[i];
        swx += w[i] * v[i];
    }
    if (!(sw > 0)) throw DomainError("weights sum to zero");
    return swx / sw;
}

// Reliability-weighted variance with normalised weights; equals the n-1
// sample variance under equal weights.
double weighted_variance(std::span<const double> v, std::span<const double> w) {
    const double sw = std::accumulate(w.begin(), w.end(), 0.0);
    const double m = weighted_mean(v, w);
    double ss = 0, sw2 = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double a = w[i] / sw;
        ss += a * (v[i] - m) * (v[i] - m);
        sw2 += a * a;
    }
    return sw2 < 1.0 ? ss / (1.0 - sw2) : 0.0;
}

}  // namespace

std::optional<double> smd(std::span<const double> trial, std::span<const double> rw,
                          std::optional<std::span<const double>> rw_weights) {
    if (trial.empty() || rw.empty()) throw DomainError("smd needs non-empty samples in both arms");
    if (rw_weights && rw_weights->size() != rw.size()) throw DomainError("smd: weights and values differ in length");
    const double pooled = std::sqrt((sample_variance(trial) + sample_variance(rw)) / 2.0);
    if (!(pooled > 0)) return std::nullopt;
    const double m_rw = rw_weights ? weighted_mean(rw, *rw_weights) : mean(rw);
    return std::abs(mean(trial) - m_rw) / pooled;
}

std::size_t WeightedSample::count(Arm arm) const {
    return static_cast<std::size_t>(
        std::count_if(rows.begin(), rows.end(), [arm](const SampleRow& r) { return r.arm == arm; }));
}

double WeightedSample::external_weight_sum() const {
    double s = 0;
    for (const auto& r : rows)
        if (r.arm == Arm::ExternalControl) s += r.weight;
    return s;
}

double WeightedSample::external_ess() const {
    std::vector<double> w;
    for (const auto& r : rows)
        if (r.arm == Arm::ExternalControl) w.push_back(r.weight);
    return effective_sample_size(w);
}

PsModel fit_stage1(const Cohort& cohort, const AnalysisPlan& plan, const LogisticOptions& options) {
    DesignMatrix d = build_design(cohort, plan, all_eligible_lines(cohort));
    PsFit fit = fit_logistic(d, options);
    return {std::move(d.encoder), std::move(fit)};
}

std::vector<double> odds_weights_for(const DesignMatrix& design, const PsFit& fit, std::vector<double>* scores) {
    if (!fit.converged) throw DomainError("propensity model has not converged; weights are blocked");
    const Eigen::VectorXd eta = design.x * fit.beta();
    std::vector<double> w(static_cast<std::size_t>(design.rows()), 1.0);
    if (scores) scores->assign(w.size(), 0.0);
    for (Eigen::Index i = 0; i < design.rows(); ++i) {
        const double e = inverse_logit(eta(i));
        if (scores) (*scores)[static_cast<std::size_t>(i)] = e;
        if (design.y(i) == 1.0) continue;
        if (e >= kMaxPropensity || e <= 0.0)
            throw ExtremeWeightError("extreme propensity score " + csv::format_number(e) + " for patient " +
                                     design.labels[static_cast<std::size_t>(i)].patient_id);
        w[static_cast<std::size_t>(i)] = odds_weight(e);
    }
    return w;
}

WeightingResult build_weighted_sample(const Cohort& cohort, const PsModel& stage1, const AnalysisPlan& plan,
                                      const LogisticOptions& options) {
    if (!stage1.fit.converged) throw DomainError("stage-1 propensity model has not converged");
    WeightingResult out;
    out.stage1 = stage1;

    // Stage 1 scores on every eligible line; pick the argmax line per external patient.
    out.selected.resize(cohort.patients.size());
    std::vector<double> selected_lines;
    for (std::size_t i = 0; i < cohort.patients.size(); ++i) {
        const auto& p = cohort.patients[i];
        const auto lines = eligible_lines(p);
        if (lines.empty()) throw DomainError("patient " + p.patient_id + " has no eligible line");
        if (p.arm == Arm::Trial) {
            out.selected[i] = {lines.front()};
            continue;
        }
        std::map<int, double> scores;
        for (int ln : lines) scores[ln] = predict_ps(stage1, p.find_line(ln)->covariates);
        const int chosen = select_line(scores);
        out.selected[i] = {chosen};
        out.stage1_scores[p.patient_id] = std::move(scores);
        ++out.selection.selected_line_counts[chosen];
        if (lines.size() > 1) ++out.selection.external_patients_with_multiple_lines;
        selected_lines.push_back(chosen);
    }
    std::sort(selected_lines.begin(), selected_lines.end());
    if (!selected_lines.empty()) {
        const std::size_t m = selected_lines.size();
        out.selection.median_selected_line =
            m % 2 ? selected_lines[m / 2] : 0.5 * (selected_lines[m / 2 - 1] + selected_lines[m / 2]);
    }

    // Stage 2 on the selected data. Trial rows first so the sample has a stable layout.
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < cohort.patients.size(); ++i)
        if (cohort.patients[i].arm == Arm::Trial) order.push_back(i);
    for (std::size_t i = 0; i < cohort.patients.size(); ++i)
        if (cohort.patients[i].arm == Arm::ExternalControl) order.push_back(i);
    Cohort ordered;
    ordered.covariate_names = cohort.covariate_names;
    LineSets ordered_lines;
    for (std::size_t i : order) {
        ordered.patients.push_back(cohort.patients[i]);
        ordered_lines.push_back(out.selected[i]);
    }
    out.stage2_design = build_design(ordered, plan, ordered_lines);
    // Clusters refer back to positions in the caller's cohort.
    for (auto& c : out.stage2_design.cluster) c = order[c];
    PsFit fit2 = fit_logistic(out.stage2_design, options);

    std::vector<double> scores;
    const auto weights = odds_weights_for(out.stage2_design, fit2, &scores);
    for (std::size_t r = 0; r < order.size(); ++r) {
        const auto& p = cohort.patients[order[r]];
        SampleRow row;
        row.patient = order[r];
        row.patient_id = p.patient_id;
        row.arm = p.arm;
        row.line_number = out.selected[order[r]].front();
        row.ps = scores[r];
        row.weight = weights[r];
        row.line = *p.find_line(row.line_number);
        out.sample.rows.push_back(std::move(row));
    }
    out.stage2 = {out.stage2_design.encoder, std::move(fit2)};
    out.balance = balance_table(out.sample, cohort, plan);
    return out;
}

std::vector<BalanceRow> balance_table(const WeightedSample& sample, const Cohort& cohort, const AnalysisPlan& plan) {
    std::vector<BalanceRow> table;
    std::vector<double> rw_w;
    for (const auto& r : sample.rows)
        if (r.arm == Arm::ExternalControl) rw_w.push_back(r.weight);

    auto add_row = [&](const std::string& name, const std::string& level, auto&& value_of) {
        std::vector<double> t, e;
        for (const auto& r : sample.rows) (r.arm == Arm::Trial ? t : e).push_back(value_of(r.line));
        if (t.empty() || e.empty()) throw DomainError("balance table needs both arms");
        BalanceRow b;
        b.covariate = name;
        b.level = level;
        b.trial_mean = mean(t);
        b.trial_sd = std::sqrt(sample_variance(t));
        b.rw_mean = mean(e);
        b.rw_sd = std::sqrt(sample_variance(e));
        b.rw_weighted_mean = weighted_mean(e, rw_w);
        b.rw_weighted_sd = std::sqrt(weighted_variance(e, rw_w));
        b.smd_pre = smd(t, e);
        b.smd_post = smd(t, e, std::span<const double>(rw_w));
        table.push_back(std::move(b));
    };

    for (const auto& spec : plan.covariates) {
        auto k = cohort.covariate_index(spec.name);
        if (!k) throw ConfigError("covariate '" + spec.name + "' is not a column of the cohort");
        if (spec.type == CovariateType::Categorical) {
            std::set<std::string> levels;
            for (const auto& r : sample.rows) levels.insert(r.line.covariates.values[*k]);
            for (const auto& level : levels)
                add_row(spec.name, level, [&](const LineRecord& l) { return l.covariates.values[*k] == level ? 1.0 : 0.0; });
        } else {
            add_row(spec.name, "", [&](const LineRecord& l) {
                auto v = csv::parse_number(l.covariates.values[*k]);
                if (!v) throw DataError("covariate '" + spec.name + "' is not numeric for patient " + l.patient_id);
                return *v;
            });
        }
    }
    return table;
}

}  // namespace eca
