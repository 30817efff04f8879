#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "eca/cohort.hpp"
#include "eca/date.hpp"

namespace eca {

enum class Endpoint { CR, ORR, OS, PFS };

enum class IntercurrentStrategy { CompositeNonResponder, HypotheticalCensor, CompositeEvent, TreatmentPolicy };

enum class SummaryMeasure { RiskDifference, HazardRatio };

std::string_view to_string(Endpoint e);
std::string_view to_string(IntercurrentStrategy s);
std::string_view to_string(SummaryMeasure m);

inline bool is_binary(Endpoint e) { return e == Endpoint::CR || e == Endpoint::ORR; }

// Legal pairings: CR/ORR with CompositeNonResponder, OS with TreatmentPolicy,
// PFS with HypotheticalCensor or CompositeEvent.
bool strategy_allowed(Endpoint e, IntercurrentStrategy s);

struct EstimandSpec {
    std::string id;
    Endpoint endpoint = Endpoint::OS;
    IntercurrentStrategy strategy = IntercurrentStrategy::TreatmentPolicy;
    std::optional<double> admin_cutoff_months;  // set for time-to-event endpoints only
    std::vector<double> landmarks_months;
    SummaryMeasure summary = SummaryMeasure::HazardRatio;

    bool operator==(const EstimandSpec&) const = default;
};

enum class CovariateType { Numeric, Binary, Categorical };

std::string_view to_string(CovariateType t);

struct CovariateSpec {
    std::string name;
    CovariateType type = CovariateType::Numeric;
    std::string reference;  // categorical only

    bool operator==(const CovariateSpec&) const = default;
};

enum class CompareOp { Less, LessEqual, Greater, GreaterEqual, Equal, NotEqual };

std::string_view to_string(CompareOp op);

// `covariate op value`. Ordering operators compare numerically; Equal and
// NotEqual compare text, so they also work for categorical levels.
struct CovariateThreshold {
    std::string covariate;
    CompareOp op = CompareOp::GreaterEqual;
    std::string value;

    bool operator==(const CovariateThreshold&) const = default;
};

// Line-level predicate. A line passes when its start date lies in the
// configured window and every threshold holds.
struct SubgroupFilter {
    std::string name;
    std::optional<Date> start_on_or_after;
    std::optional<Date> start_before;
    std::vector<CovariateThreshold> thresholds;

    bool operator==(const SubgroupFilter&) const = default;

    bool matches(const LineRecord& line, const Cohort& cohort) const;
};

inline constexpr int kDefaultBootstrapReps = 10000;
inline constexpr double kDefaultAdminCutoffMonths = 24.0;
inline constexpr double kDefaultSmdThreshold = 0.25;
inline constexpr std::uint64_t kDefaultSeed = 20140101;

struct AnalysisPlan {
    std::vector<CovariateSpec> covariates;
    std::vector<EstimandSpec> estimands;
    std::optional<SubgroupFilter> subgroup;
    int bootstrap_reps = kDefaultBootstrapReps;
    std::uint64_t seed = kDefaultSeed;
    double smd_threshold = kDefaultSmdThreshold;
    bool stratify_by_arm = true;

    bool operator==(const AnalysisPlan&) const = default;

    std::vector<std::string> covariate_names() const;
};

// Parses and validates a TOML plan. Names of keys filled from defaults are
// appended to `defaults_applied` when given.
AnalysisPlan parse_plan(std::string_view toml_text, std::vector<std::string>* defaults_applied = nullptr);
AnalysisPlan load_plan(const std::string& path, std::vector<std::string>* defaults_applied = nullptr);

// Fully explicit TOML; parse_plan(serialize_plan(p)) == p.
std::string serialize_plan(const AnalysisPlan& plan);

struct ValidationEntry {
    enum class Severity { Error, Warning } severity = Severity::Error;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationEntry> entries;

    bool empty() const { return entries.empty(); }
    bool has_errors() const;
};

ValidationReport validate_plan(const AnalysisPlan& plan, const Cohort& cohort);

// Keeps lines that pass the filter; patients left without an eligible line
// are dropped. Throws ConfigError if either arm empties.
Cohort apply_subgroup(const Cohort& cohort, const SubgroupFilter& filter);

}  // namespace eca
