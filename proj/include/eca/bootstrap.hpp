#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "eca/plan.hpp"
#include "eca/statistics.hpp"
#include "eca/weighting.hpp"

namespace eca {

struct BootstrapConfig {
    int reps = kDefaultBootstrapReps;
    std::uint64_t seed = kDefaultSeed;
    bool stratify_by_arm = true;
    bool freeze_weights = false;  // reuse the point-estimate weights instead of refitting stage 2
    unsigned workers = 1;
};

// Empirical quantiles at (1-level)/2 and 1-(1-level)/2. Rank rule: with
// k = n*p, take the ceil(k)-th order statistic, or the mean of the k-th and
// (k+1)-th when k is an integer.
std::pair<double, double> percentile_ci(std::span<const double> replicates, double level = 0.95);

// One reported quantity: an estimand statistic under a weighting scheme.
struct StatisticColumn {
    std::string estimand_id;
    std::string weighting;  // "weighted" or "unweighted"
    StatisticSpec statistic;
};

// Every statistic of every estimand, weighted then unweighted.
std::vector<StatisticColumn> statistic_columns(const AnalysisPlan& plan);

// Statistics of the full selected sample in statistic_columns order.
std::vector<double> point_statistics(const WeightedSample& sample, const std::vector<EstimandData>& data);

struct BootstrapResult {
    std::vector<StatisticColumn> columns;
    std::vector<double> point;
    std::vector<std::vector<double>> replicates;  // [replicate][column]; empty row when failed
    std::vector<std::string> replicate_error;     // empty when the replicate succeeded
    std::vector<double> ci_low, ci_high;          // NaN for descriptive columns
    std::size_t succeeded = 0;
    std::size_t failed = 0;
    std::map<std::string, std::size_t> failure_reasons;
    std::vector<std::string> warnings;
};

// Resamples patients of the selected sample with replacement (within arm when
// stratified), refits the stage-2 propensity model unless weights are frozen,
// and recomputes every statistic. Line selection is never redone. Throws when
// more than half of the replicates fail.
BootstrapResult run_bootstrap(const WeightingResult& selected, const AnalysisPlan& plan,
                              const BootstrapConfig& config);

}  // namespace eca
