#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "eca/bootstrap.hpp"
#include "eca/cohort.hpp"
#include "eca/estimators.hpp"
#include "eca/plan.hpp"
#include "eca/propensity.hpp"
#include "eca/statistics.hpp"
#include "eca/weighting.hpp"

namespace eca {

struct PipelineOptions {
    BootstrapConfig bootstrap;
    LogisticOptions logistic;
    bool subgroup = false;  // restrict to plan.subgroup before fitting
};

struct KmExport {
    std::string estimand_id;
    std::string weighting;
    Arm arm = Arm::Trial;
    KmCurve curve;
};

struct AnalysisResult {
    std::string population;  // "all" or the subgroup name
    AnalysisPlan plan;
    ValidationReport validation;
    std::size_t input_patients_trial = 0, input_patients_external = 0;
    ExclusionReport exclusions;
    Cohort analysed;  // after complete-case and subgroup filtering
    WeightingResult weighting;
    std::vector<EstimandData> estimands;
    BootstrapResult bootstrap;
    std::vector<KmExport> curves;
    std::vector<std::string> warnings;
};

// complete-case -> subgroup -> stage 1 -> selection -> stage 2 -> weights ->
// balance -> outcomes -> estimators -> bootstrap. Validation errors are
// raised as one ConfigError.
AnalysisResult analyze(const Cohort& cohort, const AnalysisPlan& plan, const PipelineOptions& options);

}  // namespace eca
