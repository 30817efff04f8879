#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <vector>
#include <string>

#include "eca/cohort.hpp"
#include "eca/date.hpp"

namespace fixtures {

inline const char* kHeader =
    "patient_id,arm,line_number,line_start,eligible,age,stage,best_response,response_date,progression_date,"
    "new_therapy_date,death_date,last_contact_date\n";

inline eca::Cohort cohort_from(const std::string& body, const std::string& header = kHeader) {
    std::istringstream in(header + body);
    return eca::parse_cohort(in);
}

inline eca::Date day(int offset) { return eca::Date::from_ymd(2015, 1, 1) + offset; }

// A line starting 2015-01-01 with dates given in months from the start.
inline eca::LineRecord line_at_months(std::optional<double> progression, std::optional<double> new_therapy,
                                      std::optional<double> death, double last_contact) {
    auto at = [](double m) { return day(static_cast<int>(std::lround(eca::months_to_days(m)))); };
    eca::LineRecord l;
    l.patient_id = "P";
    l.line_start = day(0);
    if (progression) l.progression_date = at(*progression);
    if (new_therapy) l.new_therapy_date = at(*new_therapy);
    if (death) l.death_date = at(*death);
    l.last_contact_date = at(last_contact);
    return l;
}

}  // namespace fixtures

namespace fixtures {

// Patient whose lines carry the given covariate rows (one vector per line,
// line numbers from 1). Outcome dates are filler.
inline eca::PatientRecord patient(const std::string& id, eca::Arm arm,
                                  const std::vector<std::vector<std::string>>& lines) {
    eca::PatientRecord p;
    p.patient_id = id;
    p.arm = arm;
    int k = 0;
    for (const auto& values : lines) {
        eca::LineRecord l;
        l.patient_id = id;
        l.line_number = ++k;
        l.line_start = day(100 * k);
        l.last_contact_date = day(100 * k + 50);
        l.covariates.values = values;
        p.lines.push_back(l);
    }
    return p;
}

}  // namespace fixtures
