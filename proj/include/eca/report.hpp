#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "eca/pipeline.hpp"

namespace eca {

void write_balance_csv(std::ostream& out, const AnalysisResult& res);
// One row per (weighting, estimand, statistic).
void write_effects_csv(std::ostream& out, const AnalysisResult& res);
void write_km_csv(std::ostream& out, const AnalysisResult& res);
void write_replicates_csv(std::ostream& out, const AnalysisResult& res);

struct RunInfo {
    std::string cohort_path;
    std::string plan_path;
    std::vector<std::string> defaults_applied;
    std::vector<std::string> overrides;  // command-line settings that replaced plan values
    std::string started_at;
    std::string finished_at;
};

nlohmann::json fit_summary(const PsModel& model, const DesignMatrix* design = nullptr);
nlohmann::json runlog_json(const AnalysisResult& res, const RunInfo& info);

struct AnalyzeFlags {
    std::string cohort_path;
    std::string plan_path;
    std::string out_dir;
    std::optional<int> reps;
    std::optional<std::uint64_t> seed;
    bool no_stratify = false;
    bool freeze_weights = false;
    unsigned workers = 1;
    std::optional<std::string> dump_reps;
    std::optional<std::string> dump_psmodel;
};

// Full analysis with artifacts in flags.out_dir (and out_dir/subgroup when the
// plan declares one). Errors propagate as eca::Error.
void run_analysis(const AnalyzeFlags& flags);

// {"error": kind, "message": ...} on one line.
std::string error_json(const std::string& kind, const std::string& message);

std::string utc_timestamp();

}  // namespace eca
