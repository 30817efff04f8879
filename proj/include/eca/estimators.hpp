#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "eca/outcome.hpp"

namespace eca {

// p_trial - p_rw,w with p_rw,w = sum(w * flag) / sum(w); trial rows unweighted.
double weighted_proportion_diff(std::span<const int> trial_flags, std::span<const int> rw_flags,
                                std::span<const double> rw_weights);

double weighted_proportion(std::span<const int> flags, std::span<const double> weights);

struct KmStep {
    double time = 0;
    double survival = 1;
    double at_risk = 0;   // weight at risk just before `time`
    double events = 0;    // event weight at `time`
    double censored = 0;  // censored weight at `time`
};

struct KmCurve {
    std::vector<KmStep> steps;  // one per distinct observed time, ascending
    std::optional<double> median;
    std::vector<std::pair<double, double>> landmarks;  // (time, survival)
    double total_weight = 0;
    double event_weight = 0;

    // Right-continuous step evaluation: the last step at or before t.
    double survival_at(double t) const;
};

// Product-limit estimate with weighted risk sets. Events at a tied time are
// processed before censorings. Median is the smallest t with S(t) <= 0.5.
KmCurve weighted_km(std::span<const TimeToEvent> data, std::span<const double> weights,
                    std::span<const double> landmarks = {});

struct CoxOptions {
    double score_tolerance = 1e-8;
    int max_iterations = 50;
};

struct CoxFit {
    double log_hr = 0;
    double score = 0;
    double information = 0;  // minus the second derivative at log_hr
    double log_partial_likelihood = 0;
    int iterations = 0;
};

// Single-regressor Cox model with weights entering as replication weights and
// Breslow handling of ties, fitted by Newton iteration with step halving.
// Throws SeparationError when the partial likelihood is monotone and
// DomainError without events or without both arms.
CoxFit weighted_cox(std::span<const int> treatment, std::span<const TimeToEvent> data,
                    std::span<const double> weights, const CoxOptions& options = {});

}  // namespace eca
