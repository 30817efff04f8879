#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "eca/date.hpp"

namespace eca {

enum class Arm { Trial, ExternalControl };

std::string_view to_string(Arm arm);

enum class BestResponse { CR, PR, SD, PD, Unknown };

std::string_view to_string(BestResponse r);

// Raw covariate text in the order of Cohort::covariate_names. An empty
// string marks a missing value; interpretation (numeric, binary, categorical)
// is decided by the analysis plan.
struct CovariateVector {
    std::vector<std::string> values;

    bool missing(std::size_t k) const { return values[k].empty(); }
    std::size_t size() const { return values.size(); }
};

// One line of therapy. Trial patients have a single record whose line_start
// is the enrolment date.
struct LineRecord {
    std::string patient_id;
    int line_number = 1;
    Date line_start;
    bool eligible = true;
    CovariateVector covariates;
    std::optional<BestResponse> best_response;
    std::optional<Date> response_date;
    std::optional<Date> progression_date;
    std::optional<Date> new_therapy_date;
    std::optional<Date> death_date;
    Date last_contact_date;
};

struct PatientRecord {
    std::string patient_id;
    Arm arm = Arm::ExternalControl;
    std::vector<LineRecord> lines;  // ascending line_number

    const LineRecord* find_line(int line_number) const;
};

struct Cohort {
    std::vector<std::string> covariate_names;
    std::vector<PatientRecord> patients;

    std::size_t count(Arm arm) const;
    std::optional<std::size_t> covariate_index(std::string_view name) const;
};

// Column mapping for ingestion. When `covariates` is empty every column that
// is not one of the fixed columns is read as a covariate, in file order.
struct CohortSchema {
    std::vector<std::string> covariates;
};

Cohort parse_cohort(std::istream& in, const CohortSchema& schema = {});
Cohort read_cohort_file(const std::string& path, const CohortSchema& schema = {});

// Writes the CSV layout accepted by parse_cohort.
void write_cohort(std::ostream& out, const Cohort& cohort);

// Line numbers flagged eligible, ascending. The first one is the index line.
std::vector<int> eligible_lines(const PatientRecord& patient);

struct ExclusionEntry {
    std::string patient_id;
    Arm arm = Arm::ExternalControl;
    std::optional<int> line_number;  // nullopt: the whole patient was dropped
    std::string reason;
};

struct ExclusionReport {
    std::vector<ExclusionEntry> entries;
    std::size_t lines_dropped_trial = 0;
    std::size_t lines_dropped_external = 0;
    std::size_t patients_dropped_trial = 0;
    std::size_t patients_dropped_external = 0;

    bool empty() const { return entries.empty(); }
};

// Drops every line with a missing value on any of `covariates`, then every
// patient left without an eligible line. Throws ConfigError if an arm empties.
std::pair<Cohort, ExclusionReport> complete_case_filter(const Cohort& cohort,
                                                        const std::vector<std::string>& covariates);

}  // namespace eca
