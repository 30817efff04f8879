#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eca/cohort.hpp"
#include "eca/plan.hpp"
#include "eca/propensity.hpp"

namespace eca {

// Argmax over lines; ties go to the earliest line number.
int select_line(const std::map<int, double>& ps_by_line);

// e / (1 - e); DomainError outside (0, 1).
double odds_weight(double e);

// Kish: (sum w)^2 / sum w^2.
double effective_sample_size(std::span<const double> weights);

// |mean_T - mean_RW,w| / sqrt((var_T + var_RW) / 2). Variances in the
// denominator are unweighted sample variances; only the RW mean is weighted.
// nullopt when the pooled SD is zero.
std::optional<double> smd(std::span<const double> trial, std::span<const double> rw,
                          std::optional<std::span<const double>> rw_weights = std::nullopt);

struct SampleRow {
    std::size_t patient = 0;  // position in the cohort
    std::string patient_id;
    Arm arm = Arm::ExternalControl;
    int line_number = 0;
    double ps = 0.0;      // stage-2 propensity score
    double weight = 1.0;  // 1 for trial rows, odds for external rows
    LineRecord line;
};

struct WeightedSample {
    std::vector<SampleRow> rows;  // trial rows first, then external, cohort order within each

    std::size_t count(Arm arm) const;
    double external_weight_sum() const;
    double external_ess() const;
};

struct BalanceRow {
    std::string covariate;
    std::string level;  // categorical level; empty otherwise
    double trial_mean = 0, trial_sd = 0;
    double rw_mean = 0, rw_sd = 0;
    double rw_weighted_mean = 0, rw_weighted_sd = 0;
    std::optional<double> smd_pre;
    std::optional<double> smd_post;
};

struct SelectionSummary {
    std::map<int, std::size_t> selected_line_counts;  // external patients, by selected line number
    std::size_t external_patients_with_multiple_lines = 0;
    double median_selected_line = 0.0;
};

struct WeightingResult {
    PsModel stage1;
    PsModel stage2;
    DesignMatrix stage2_design;  // rows parallel to sample.rows
    LineSets selected;           // parallel to the cohort's patients
    std::map<std::string, std::map<int, double>> stage1_scores;  // external patients
    WeightedSample sample;
    std::vector<BalanceRow> balance;
    SelectionSummary selection;
};

// Stage 1: one row per eligible line (trial patients contribute one row).
PsModel fit_stage1(const Cohort& cohort, const AnalysisPlan& plan, const LogisticOptions& options = {});

// Line selection on stage-1 scores, stage-2 refit on the one-row-per-patient
// data, odds weights from the stage-2 scores, and the balance table.
WeightingResult build_weighted_sample(const Cohort& cohort, const PsModel& stage1, const AnalysisPlan& plan,
                                      const LogisticOptions& options = {});

// Pre/post balance for every plan covariate (every level of a categorical).
std::vector<BalanceRow> balance_table(const WeightedSample& sample, const Cohort& cohort, const AnalysisPlan& plan);

// Stage-2 scores at or above this make an external weight degenerate.
inline constexpr double kMaxPropensity = 1.0 - 1e-12;

// Odds weights for rows of `design` under `fit`; trial rows get 1. Throws
// ExtremeWeightError naming the row label when a score reaches kMaxPropensity.
std::vector<double> odds_weights_for(const DesignMatrix& design, const PsFit& fit, std::vector<double>* scores = nullptr);

}  // namespace eca
