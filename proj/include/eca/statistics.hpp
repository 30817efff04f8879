#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "eca/estimators.hpp"
#include "eca/plan.hpp"
#include "eca/weighting.hpp"

namespace eca {

// Named summary produced for an estimand. Descriptive statistics (sample
// sizes, event weights) carry no confidence interval.
struct StatisticSpec {
    std::string name;
    bool inferential = true;
};

// Binary:  n_trial n_rw rate_trial rate_rw difference
// Survival: n_trial n_rw events_trial events_rw median_trial median_rw
//           surv_<t>_trial surv_<t>_rw ... log_hr hr
std::vector<StatisticSpec> statistic_specs(const EstimandSpec& spec);

// Outcomes per sample row for one estimand, derived once and reused by every
// bootstrap replicate.
struct EstimandData {
    EstimandSpec spec;
    std::vector<char> evaluable;  // parallel to WeightedSample::rows
    std::vector<int> treated;
    std::vector<int> response;
    std::vector<TimeToEvent> tte;
    std::size_t unevaluable_trial = 0;
    std::size_t unevaluable_external = 0;
};

EstimandData prepare_estimand(const EstimandSpec& spec, const WeightedSample& sample);

struct EstimandInputs {
    std::vector<int> treated;
    std::vector<int> response;
    std::vector<TimeToEvent> tte;
    std::vector<double> weights;
};

// Evaluable rows among `rows` (indices into the sample, repeats allowed) with
// the matching entry of `weights`.
EstimandInputs gather(const EstimandData& data, std::span<const std::size_t> rows, std::span<const double> weights);

// Values in statistic_specs order. Medians that are not reached are +inf.
std::vector<double> evaluate_statistics(const EstimandSpec& spec, const EstimandInputs& in);

// Per-arm curves for export; index 0 trial, 1 external.
std::vector<KmCurve> km_by_arm(const EstimandSpec& spec, const EstimandInputs& in);

}  // namespace eca
