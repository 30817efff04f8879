#include "eca/cohort.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <unordered_map>

#include "eca/csv.hpp"
#include "eca/error.hpp"

namespace eca {

std::string_view to_string(Arm arm) {
    return arm == Arm::Trial ? "TRIAL" : "RW";
}

std::string_view to_string(BestResponse r) {
    switch (r) {
        case BestResponse::CR: return "CR";
        case BestResponse::PR: return "PR";
        case BestResponse::SD: return "SD";
        case BestResponse::PD: return "PD";
        case BestResponse::Unknown: return "UNK";
    }
    return "UNK";
}

const LineRecord* PatientRecord::find_line(int line_number) const {
    for (const auto& l : lines)
        if (l.line_number == line_number) return &l;
    return nullptr;
}

std::size_t Cohort::count(Arm arm) const {
    return static_cast<std::size_t>(
        std::count_if(patients.begin(), patients.end(), [arm](const auto& p) { return p.arm == arm; }));
}

std::optional<std::size_t> Cohort::covariate_index(std::string_view name) const {
    for (std::size_t k = 0; k < covariate_names.size(); ++k)
        if (covariate_names[k] == name) return k;
    return std::nullopt;
}

namespace {

constexpr std::array<std::string_view, 11> kFixedColumns = {
    "patient_id",       "arm",          "line_number",      "line_start",
    "eligible",         "best_response", "response_date",   "progression_date",
    "new_therapy_date", "death_date",   "last_contact_date"};

bool is_fixed(std::string_view col) {
    return std::find(kFixedColumns.begin(), kFixedColumns.end(), col) != kFixedColumns.end();
}

std::string where(std::size_t row) {
    // Data rows are 1-based; the header occupies file line 1.
    return "row " + std::to_string(row) + " (file line " + std::to_string(row + 1) + ")";
}

struct RowReader {
    const std::vector<std::string>& fields;
    std::size_t row;

    const std::string& at(std::size_t col) const { return fields[col]; }

    std::optional<Date> optional_date(std::size_t col, std::string_view name) const {
        const auto& s = fields[col];
        if (s.empty()) return std::nullopt;
        auto d = Date::parse(s);
        if (!d) throw ParseError(where(row) + ": malformed date in " + std::string(name) + ": '" + s + "'");
        return d;
    }

    Date required_date(std::size_t col, std::string_view name) const {
        auto d = optional_date(col, name);
        if (!d) throw ParseError(where(row) + ": missing required date " + std::string(name));
        return *d;
    }
};

Arm parse_arm(const std::string& s, std::size_t row) {
    if (s == "TRIAL") return Arm::Trial;
    if (s == "RW") return Arm::ExternalControl;
    throw ParseError(where(row) + ": unknown arm label '" + s + "' (expected TRIAL or RW)");
}

std::optional<BestResponse> parse_response(const std::string& s, std::size_t row) {
    if (s.empty()) return std::nullopt;
    if (s == "CR") return BestResponse::CR;
    if (s == "PR") return BestResponse::PR;
    if (s == "SD") return BestResponse::SD;
    if (s == "PD") return BestResponse::PD;
    if (s == "UNK") return BestResponse::Unknown;
    throw ParseError(where(row) + ": unknown best_response '" + s + "'");
}

int parse_line_number(const std::string& s, std::size_t row) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || v < 1)
        throw ParseError(where(row) + ": line_number must be a positive integer, got '" + s + "'");
    return v;
}

bool parse_flag(const std::string& s, std::size_t row) {
    if (s == "1") return true;
    if (s == "0") return false;
    throw ParseError(where(row) + ": eligible must be 0 or 1, got '" + s + "'");
}

void check_not_before_start(const LineRecord& l, const std::optional<Date>& d, std::string_view name,
                            std::size_t row) {
    if (d && *d < l.line_start)
        throw ParseError(where(row) + ": " + std::string(name) + " precedes line_start");
}

}  // namespace

Cohort parse_cohort(std::istream& in, const CohortSchema& schema) {
    std::vector<std::string> header;
    if (!csv::read_row(in, header)) throw ParseError("empty cohort file: header row required");

    std::unordered_map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (!col.emplace(header[i], i).second) throw ParseError("duplicate column '" + header[i] + "'");
    }
    for (auto name : kFixedColumns)
        if (!col.count(std::string(name)))
            throw ParseError("missing required column '" + std::string(name) + "'");

    Cohort cohort;
    if (schema.covariates.empty()) {
        for (const auto& h : header)
            if (!is_fixed(h)) cohort.covariate_names.push_back(h);
    } else {
        for (const auto& c : schema.covariates) {
            if (!col.count(c)) throw ParseError("missing covariate column '" + c + "'");
            cohort.covariate_names.push_back(c);
        }
    }
    std::vector<std::size_t> cov_cols;
    for (const auto& c : cohort.covariate_names) cov_cols.push_back(col.at(c));

    auto c = [&](std::string_view name) { return col.at(std::string(name)); };

    std::map<std::string, std::size_t> index;  // patient_id -> position in cohort.patients
    std::map<std::pair<std::string, int>, std::size_t> seen_lines;
    std::vector<std::string> fields;
    std::size_t row = 0;
    while (csv::read_row(in, fields)) {
        ++row;
        if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
        if (fields.size() != header.size())
            throw ParseError(where(row) + ": expected " + std::to_string(header.size()) + " fields, got " +
                             std::to_string(fields.size()));
        RowReader r{fields, row};

        LineRecord line;
        line.patient_id = r.at(c("patient_id"));
        if (line.patient_id.empty()) throw ParseError(where(row) + ": empty patient_id");
        const Arm arm = parse_arm(r.at(c("arm")), row);
        line.line_number = parse_line_number(r.at(c("line_number")), row);
        line.line_start = r.required_date(c("line_start"), "line_start");
        line.eligible = parse_flag(r.at(c("eligible")), row);
        for (std::size_t cc : cov_cols) line.covariates.values.push_back(r.at(cc));
        line.best_response = parse_response(r.at(c("best_response")), row);
        line.response_date = r.optional_date(c("response_date"), "response_date");
        line.progression_date = r.optional_date(c("progression_date"), "progression_date");
        line.new_therapy_date = r.optional_date(c("new_therapy_date"), "new_therapy_date");
        line.death_date = r.optional_date(c("death_date"), "death_date");
        line.last_contact_date = r.required_date(c("last_contact_date"), "last_contact_date");

        check_not_before_start(line, line.response_date, "response_date", row);
        check_not_before_start(line, line.progression_date, "progression_date", row);
        check_not_before_start(line, line.new_therapy_date, "new_therapy_date", row);
        check_not_before_start(line, line.death_date, "death_date", row);
        check_not_before_start(line, line.last_contact_date, "last_contact_date", row);

        const auto key = std::make_pair(line.patient_id, line.line_number);
        if (auto it = seen_lines.find(key); it != seen_lines.end())
            throw ParseError(where(row) + ": duplicate (patient_id, line_number) = (" + line.patient_id + ", " +
                             std::to_string(line.line_number) + "), first seen at " + where(it->second));
        seen_lines.emplace(key, row);

        auto [it, inserted] = index.emplace(line.patient_id, cohort.patients.size());
        if (inserted) {
            PatientRecord p;
            p.patient_id = line.patient_id;
            p.arm = arm;
            cohort.patients.push_back(std::move(p));
        }
        PatientRecord& patient = cohort.patients[it->second];
        if (patient.arm != arm)
            throw SchemaError(where(row) + ": patient " + patient.patient_id + " appears in both arms");
        if (arm == Arm::Trial && !patient.lines.empty())
            throw SchemaError(where(row) + ": trial patient " + patient.patient_id +
                              " has more than one line of therapy");
        patient.lines.push_back(std::move(line));
    }

    for (auto& p : cohort.patients)
        std::sort(p.lines.begin(), p.lines.end(),
                  [](const LineRecord& a, const LineRecord& b) { return a.line_number < b.line_number; });

    return cohort;
}

Cohort read_cohort_file(const std::string& path, const CohortSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open cohort file '" + path + "'");
    return parse_cohort(in, schema);
}

void write_cohort(std::ostream& out, const Cohort& cohort) {
    std::vector<std::string> header = {"patient_id", "arm", "line_number", "line_start", "eligible"};
    header.insert(header.end(), cohort.covariate_names.begin(), cohort.covariate_names.end());
    for (auto name : {"best_response", "response_date", "progression_date", "new_therapy_date", "death_date",
                      "last_contact_date"})
        header.emplace_back(name);
    csv::write_row(out, header);

    auto opt = [](const std::optional<Date>& d) { return d ? d->iso() : std::string(); };
    std::vector<std::string> row;
    for (const auto& p : cohort.patients) {
        for (const auto& l : p.lines) {
            row = {l.patient_id, std::string(to_string(p.arm)), std::to_string(l.line_number), l.line_start.iso(),
                   l.eligible ? "1" : "0"};
            row.insert(row.end(), l.covariates.values.begin(), l.covariates.values.end());
            row.push_back(l.best_response ? std::string(to_string(*l.best_response)) : std::string());
            row.push_back(opt(l.response_date));
            row.push_back(opt(l.progression_date));
            row.push_back(opt(l.new_therapy_date));
            row.push_back(opt(l.death_date));
            row.push_back(l.last_contact_date.iso());
            csv::write_row(out, row);
        }
    }
}

std::vector<int> eligible_lines(const PatientRecord& patient) {
    std::vector<int> out;
    for (const auto& l : patient.lines)
        if (l.eligible) out.push_back(l.line_number);
    return out;
}

std::pair<Cohort, ExclusionReport> complete_case_filter(const Cohort& cohort,
                                                        const std::vector<std::string>& covariates) {
    std::vector<std::size_t> idx;
    for (const auto& name : covariates) {
        auto k = cohort.covariate_index(name);
        if (!k) throw ConfigError("covariate '" + name + "' is not a column of the cohort");
        idx.push_back(*k);
    }

    Cohort out;
    out.covariate_names = cohort.covariate_names;
    ExclusionReport report;
    for (const auto& p : cohort.patients) {
        const bool trial = p.arm == Arm::Trial;
        PatientRecord kept{p.patient_id, p.arm, {}};
        for (const auto& l : p.lines) {
            std::string missing;
            for (std::size_t j = 0; j < idx.size(); ++j) {
                if (l.covariates.missing(idx[j])) {
                    if (!missing.empty()) missing += ", ";
                    missing += covariates[j];
                }
            }
            if (missing.empty()) {
                kept.lines.push_back(l);
                continue;
            }
            report.entries.push_back({p.patient_id, p.arm, l.line_number, "missing covariate: " + missing});
            ++(trial ? report.lines_dropped_trial : report.lines_dropped_external);
        }
        if (eligible_lines(kept).empty()) {
            report.entries.push_back({p.patient_id, p.arm, std::nullopt, "no eligible line with complete data"});
            ++(trial ? report.patients_dropped_trial : report.patients_dropped_external);
            continue;
        }
        out.patients.push_back(std::move(kept));
    }

    if (out.count(Arm::Trial) == 0)
        throw ConfigError("complete-case filtering removed every TRIAL patient");
    if (out.count(Arm::ExternalControl) == 0)
        throw ConfigError("complete-case filtering removed every RW patient");
    return {std::move(out), std::move(report)};
}

}  // namespace eca
