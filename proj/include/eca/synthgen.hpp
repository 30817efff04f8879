#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "eca/cohort.hpp"
#include "eca/date.hpp"

namespace eca {

// How one synthetic covariate is drawn. Effects act on the log hazard (OS,
// progression) or the response log-odds, per unit of (value - center) for
// normal covariates, per unit of the 0/1 value for Bernoulli ones, per level
// for categorical ones, and per prior line for the prior-lines covariate.
struct CovariateGenerator {
    enum class Kind { Normal, Bernoulli, Categorical, PriorLines };

    std::string name;
    Kind kind = Kind::Normal;
    double trial_mean = 0, rw_mean = 0, sd = 1, center = 0;  // normal
    double drift_per_line = 0;                               // normal, added per later line
    double trial_prob = 0.5, rw_prob = 0.5;                  // bernoulli
    std::vector<std::string> levels;                         // categorical
    std::vector<double> trial_probs, rw_probs;               // categorical
    std::vector<double> level_effect_os, level_effect_pfs, level_effect_response;
    double effect_os = 0, effect_pfs = 0, effect_response = 0;
};

struct ScenarioConfig {
    int n_trial = 100;
    int n_rw = 100;
    int first_line_number = 3;
    std::vector<double> rw_lines_probs = {1.0};           // P(patient has 1, 2, ... lines)
    std::vector<double> trial_line_offset_probs = {1.0};  // P(trial line = first_line_number + k)
    double ineligible_line_prob = 0.0;                    // per RW line; one line always stays eligible
    std::vector<CovariateGenerator> covariates;
    double hazard_os = 0.02;           // per month, at zero covariate effect
    double hazard_progression = 0.05;  // per month
    double log_hr_os = 0.0;            // conditional trial-vs-RW effect
    double log_hr_pfs = 0.0;
    double censoring_rate = 0.2;  // target censored fraction of deaths at baseline hazard
    double new_therapy_fraction = 0.0;  // lines with a new therapy planted before progression/death
    double cr_prob_trial = 0.5, cr_prob_rw = 0.3;
    double pr_share = 0.5;  // share of non-CR responses that are PR
    double missing_response_rate = 0.0;
    Date start_date = Date::from_ymd(2012, 1, 1);
    int accrual_days = 2000;
    std::uint64_t seed = 1;

    // Throws ConfigError on infeasible settings.
    void validate() const;
};

struct PlantedLine {
    std::string patient_id;
    int line_number = 0;
};

struct TruthRecord {
    ScenarioConfig config;
    std::vector<PlantedLine> new_therapy_before_event;  // lines where the planted new therapy strictly precedes progression/death
    std::size_t lines_total = 0;

    bool planted(const std::string& patient_id, int line_number) const;
    nlohmann::json to_json() const;
};

// Exponential event times; each line's outcomes are drawn from its own start
// date. Deterministic given config.seed.
std::pair<Cohort, TruthRecord> generate_cohort(const ScenarioConfig& config);

ScenarioConfig parse_scenario(const std::string& toml_text);
ScenarioConfig load_scenario(const std::string& path);

}  // namespace eca
