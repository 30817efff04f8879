#include "eca/pipeline.hpp"

#include <cmath>
#include <numeric>

#include "eca/csv.hpp"
#include "eca/error.hpp"

namespace eca {

AnalysisResult analyze(const Cohort& cohort, const AnalysisPlan& plan, const PipelineOptions& options) {
    AnalysisResult res;
    res.plan = plan;
    res.population = options.subgroup && plan.subgroup ? plan.subgroup->name : "all";
    res.input_patients_trial = cohort.count(Arm::Trial);
    res.input_patients_external = cohort.count(Arm::ExternalControl);

    res.validation = validate_plan(plan, cohort);
    if (res.validation.has_errors()) {
        std::string msg = "analysis plan does not fit the cohort:";
        for (const auto& e : res.validation.entries)
            if (e.severity == ValidationEntry::Severity::Error) msg += "\n  " + e.message;
        throw ConfigError(msg);
    }
    for (const auto& e : res.validation.entries) res.warnings.push_back(e.message);

    auto [complete, exclusions] = complete_case_filter(cohort, plan.covariate_names());
    res.exclusions = std::move(exclusions);
    res.analysed = options.subgroup && plan.subgroup ? apply_subgroup(complete, *plan.subgroup) : std::move(complete);

    const PsModel stage1 = fit_stage1(res.analysed, plan, options.logistic);
    res.weighting = build_weighted_sample(res.analysed, stage1, plan, options.logistic);
    const WeightedSample& sample = res.weighting.sample;

    for (const auto& b : res.weighting.balance) {
        const std::string label = b.level.empty() ? b.covariate : b.covariate + "=" + b.level;
        if (!b.smd_post)
            res.warnings.push_back("SMD undefined for " + label + " (zero pooled SD)");
        else if (*b.smd_post >= plan.smd_threshold)
            res.warnings.push_back("post-weighting |SMD| for " + label + " is " + csv::format_number(*b.smd_post) +
                                   ", at or above the threshold " + csv::format_number(plan.smd_threshold));
    }

    for (const auto& e : plan.estimands) res.estimands.push_back(prepare_estimand(e, sample));

    res.bootstrap = run_bootstrap(res.weighting, plan, options.bootstrap);
    res.warnings.insert(res.warnings.end(), res.bootstrap.warnings.begin(), res.bootstrap.warnings.end());

    const std::size_t n = sample.rows.size();
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    std::vector<double> w(n), ones(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) w[i] = sample.rows[i].weight;
    for (const auto& d : res.estimands) {
        if (is_binary(d.spec.endpoint)) continue;
        for (const auto& [name, weights] : {std::pair<const char*, const std::vector<double>*>{"weighted", &w},
                                            std::pair<const char*, const std::vector<double>*>{"unweighted", &ones}}) {
            const auto curves = km_by_arm(d.spec, gather(d, rows, *weights));
            res.curves.push_back({d.spec.id, name, Arm::Trial, curves[0]});
            res.curves.push_back({d.spec.id, name, Arm::ExternalControl, curves[1]});
        }
    }
    return res;
}

}  // namespace eca
