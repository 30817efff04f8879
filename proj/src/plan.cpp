#include "eca/plan.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "eca/csv.hpp"
#include "eca/error.hpp"
#include "eca/toml.hpp"

namespace eca {

using nlohmann::json;

std::string_view to_string(Endpoint e) {
    switch (e) {
        case Endpoint::CR: return "CR";
        case Endpoint::ORR: return "ORR";
        case Endpoint::OS: return "OS";
        case Endpoint::PFS: return "PFS";
    }
    return "?";
}

std::string_view to_string(IntercurrentStrategy s) {
    switch (s) {
        case IntercurrentStrategy::CompositeNonResponder: return "CompositeNonResponder";
        case IntercurrentStrategy::HypotheticalCensor: return "HypotheticalCensor";
        case IntercurrentStrategy::CompositeEvent: return "CompositeEvent";
        case IntercurrentStrategy::TreatmentPolicy: return "TreatmentPolicy";
    }
    return "?";
}

std::string_view to_string(SummaryMeasure m) {
    return m == SummaryMeasure::RiskDifference ? "RiskDifference" : "HazardRatio";
}

std::string_view to_string(CovariateType t) {
    switch (t) {
        case CovariateType::Numeric: return "numeric";
        case CovariateType::Binary: return "binary";
        case CovariateType::Categorical: return "categorical";
    }
    return "?";
}

std::string_view to_string(CompareOp op) {
    switch (op) {
        case CompareOp::Less: return "<";
        case CompareOp::LessEqual: return "<=";
        case CompareOp::Greater: return ">";
        case CompareOp::GreaterEqual: return ">=";
        case CompareOp::Equal: return "==";
        case CompareOp::NotEqual: return "!=";
    }
    return "?";
}

bool strategy_allowed(Endpoint e, IntercurrentStrategy s) {
    switch (e) {
        case Endpoint::CR:
        case Endpoint::ORR: return s == IntercurrentStrategy::CompositeNonResponder;
        case Endpoint::OS: return s == IntercurrentStrategy::TreatmentPolicy;
        case Endpoint::PFS:
            return s == IntercurrentStrategy::HypotheticalCensor || s == IntercurrentStrategy::CompositeEvent;
    }
    return false;
}

bool SubgroupFilter::matches(const LineRecord& line, const Cohort& cohort) const {
    if (start_on_or_after && line.line_start < *start_on_or_after) return false;
    if (start_before && !(line.line_start < *start_before)) return false;
    for (const auto& t : thresholds) {
        auto k = cohort.covariate_index(t.covariate);
        if (!k) throw ConfigError("subgroup covariate '" + t.covariate + "' is not a column of the cohort");
        const std::string& raw = line.covariates.values[*k];
        if (raw.empty()) return false;
        if (t.op == CompareOp::Equal || t.op == CompareOp::NotEqual) {
            // Numeric when both sides parse, so "1" matches "1.0".
            auto a = csv::parse_number(raw);
            auto b = csv::parse_number(t.value);
            const bool eq = (a && b) ? *a == *b : raw == t.value;
            if (eq != (t.op == CompareOp::Equal)) return false;
            continue;
        }
        auto a = csv::parse_number(raw);
        auto b = csv::parse_number(t.value);
        if (!b) throw ConfigError("subgroup threshold for '" + t.covariate + "' is not numeric: " + t.value);
        if (!a) throw DataError("subgroup covariate '" + t.covariate + "' has non-numeric value '" + raw + "'");
        bool ok = false;
        switch (t.op) {
            case CompareOp::Less: ok = *a < *b; break;
            case CompareOp::LessEqual: ok = *a <= *b; break;
            case CompareOp::Greater: ok = *a > *b; break;
            case CompareOp::GreaterEqual: ok = *a >= *b; break;
            default: break;
        }
        if (!ok) return false;
    }
    return true;
}

std::vector<std::string> AnalysisPlan::covariate_names() const {
    std::vector<std::string> out;
    for (const auto& c : covariates) out.push_back(c.name);
    return out;
}

bool ValidationReport::has_errors() const {
    return std::any_of(entries.begin(), entries.end(),
                       [](const auto& e) { return e.severity == ValidationEntry::Severity::Error; });
}

namespace {

template <class Enum, std::size_t N>
Enum enum_from(const std::string& text, const Enum (&values)[N], std::string_view what) {
    for (Enum v : values)
        if (to_string(v) == text) return v;
    throw ConfigError("unknown " + std::string(what) + " '" + text + "'");
}

constexpr Endpoint kEndpoints[] = {Endpoint::CR, Endpoint::ORR, Endpoint::OS, Endpoint::PFS};
constexpr IntercurrentStrategy kStrategies[] = {
    IntercurrentStrategy::CompositeNonResponder, IntercurrentStrategy::HypotheticalCensor,
    IntercurrentStrategy::CompositeEvent, IntercurrentStrategy::TreatmentPolicy};
constexpr SummaryMeasure kSummaries[] = {SummaryMeasure::RiskDifference, SummaryMeasure::HazardRatio};
constexpr CovariateType kCovTypes[] = {CovariateType::Numeric, CovariateType::Binary, CovariateType::Categorical};
constexpr CompareOp kOps[] = {CompareOp::Less,         CompareOp::LessEqual, CompareOp::Greater,
                              CompareOp::GreaterEqual, CompareOp::Equal,     CompareOp::NotEqual};

void check_keys(const json& table, std::initializer_list<std::string_view> allowed, std::string_view where) {
    for (auto it = table.begin(); it != table.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
            throw ConfigError("unknown key '" + it.key() + "' in " + std::string(where));
    }
}

std::string get_string(const json& t, const char* key, std::string_view where) {
    if (!t.contains(key)) throw ConfigError(std::string(where) + ": missing '" + key + "'");
    if (!t[key].is_string()) throw ConfigError(std::string(where) + ": '" + key + "' must be a string");
    return t[key].get<std::string>();
}

double get_number(const json& v, std::string_view what) {
    if (!v.is_number()) throw ConfigError(std::string(what) + " must be a number");
    return v.get<double>();
}

std::string default_id(const EstimandSpec& e) {
    std::string id(to_string(e.endpoint));
    std::transform(id.begin(), id.end(), id.begin(), [](unsigned char c) { return std::tolower(c); });
    if (e.endpoint == Endpoint::PFS)
        id += e.strategy == IntercurrentStrategy::CompositeEvent ? "_composite" : "_hypothetical";
    return id;
}

EstimandSpec parse_estimand(const json& t, std::size_t i, std::vector<std::string>* defaults) {
    const std::string where = "estimand[" + std::to_string(i) + "]";
    if (!t.is_object()) throw ConfigError(where + " must be a table");
    check_keys(t, {"id", "endpoint", "strategy", "admin_cutoff_months", "landmarks_months", "summary"}, where);
    EstimandSpec e;
    e.endpoint = enum_from(get_string(t, "endpoint", where), kEndpoints, "endpoint");
    if (t.contains("strategy")) {
        e.strategy = enum_from(get_string(t, "strategy", where), kStrategies, "intercurrent strategy");
    } else if (is_binary(e.endpoint)) {
        e.strategy = IntercurrentStrategy::CompositeNonResponder;
    } else if (e.endpoint == Endpoint::OS) {
        e.strategy = IntercurrentStrategy::TreatmentPolicy;
    } else {
        throw ConfigError(where + ": PFS requires an explicit strategy (HypotheticalCensor or CompositeEvent)");
    }
    if (!strategy_allowed(e.endpoint, e.strategy))
        throw ConfigError(where + ": strategy " + std::string(to_string(e.strategy)) + " is not allowed for " +
                          std::string(to_string(e.endpoint)));

    const SummaryMeasure expected = is_binary(e.endpoint) ? SummaryMeasure::RiskDifference : SummaryMeasure::HazardRatio;
    e.summary = t.contains("summary") ? enum_from(get_string(t, "summary", where), kSummaries, "summary measure")
                                      : expected;
    if (e.summary != expected)
        throw ConfigError(where + ": summary " + std::string(to_string(e.summary)) + " does not fit endpoint " +
                          std::string(to_string(e.endpoint)));

    if (is_binary(e.endpoint)) {
        if (t.contains("admin_cutoff_months") || t.contains("landmarks_months"))
            throw ConfigError(where + ": cutoff and landmarks apply to time-to-event endpoints only");
    } else {
        if (t.contains("admin_cutoff_months")) {
            e.admin_cutoff_months = get_number(t["admin_cutoff_months"], where + ".admin_cutoff_months");
            if (!(*e.admin_cutoff_months > 0)) throw ConfigError(where + ": admin_cutoff_months must be positive");
        } else {
            e.admin_cutoff_months = kDefaultAdminCutoffMonths;
            if (defaults) defaults->push_back(where + ".admin_cutoff_months");
        }
        if (t.contains("landmarks_months")) {
            if (!t["landmarks_months"].is_array()) throw ConfigError(where + ": landmarks_months must be an array");
            for (const auto& v : t["landmarks_months"]) {
                const double lm = get_number(v, where + ".landmarks_months");
                if (!(lm > 0)) throw ConfigError(where + ": landmarks must be positive");
                e.landmarks_months.push_back(lm);
            }
            if (!std::is_sorted(e.landmarks_months.begin(), e.landmarks_months.end()) ||
                std::adjacent_find(e.landmarks_months.begin(), e.landmarks_months.end()) != e.landmarks_months.end())
                throw ConfigError(where + ": landmarks must be strictly increasing");
        }
    }
    e.id = t.contains("id") ? get_string(t, "id", where) : default_id(e);
    if (e.id.empty()) throw ConfigError(where + ": empty id");
    return e;
}

std::optional<Date> get_date(const json& t, const char* key, std::string_view where) {
    if (!t.contains(key)) return std::nullopt;
    auto d = t[key].is_string() ? Date::parse(t[key].get<std::string>()) : std::nullopt;
    if (!d) throw ConfigError(std::string(where) + ": '" + key + "' must be a YYYY-MM-DD date");
    return d;
}

SubgroupFilter parse_subgroup(const json& t) {
    if (!t.is_object()) throw ConfigError("subgroup must be a table");
    check_keys(t, {"name", "line_start_on_or_after", "line_start_before", "threshold"}, "subgroup");
    SubgroupFilter f;
    f.name = t.contains("name") ? get_string(t, "name", "subgroup") : "subgroup";
    f.start_on_or_after = get_date(t, "line_start_on_or_after", "subgroup");
    f.start_before = get_date(t, "line_start_before", "subgroup");
    if (t.contains("threshold")) {
        if (!t["threshold"].is_array()) throw ConfigError("subgroup.threshold must be an array of tables");
        for (const auto& th : t["threshold"]) {
            check_keys(th, {"covariate", "op", "value"}, "subgroup.threshold");
            CovariateThreshold c;
            c.covariate = get_string(th, "covariate", "subgroup.threshold");
            c.op = enum_from(get_string(th, "op", "subgroup.threshold"), kOps, "comparison operator");
            if (!th.contains("value")) throw ConfigError("subgroup.threshold: missing 'value'");
            const auto& v = th["value"];
            if (v.is_string())
                c.value = v.get<std::string>();
            else if (v.is_number_integer())
                c.value = std::to_string(v.get<std::int64_t>());
            else if (v.is_number())
                c.value = csv::format_number(v.get<double>());
            else
                throw ConfigError("subgroup.threshold: 'value' must be a number or string");
            f.thresholds.push_back(std::move(c));
        }
    }
    if (!f.start_on_or_after && !f.start_before && f.thresholds.empty())
        throw ConfigError("subgroup defines no predicate");
    return f;
}

}  // namespace

AnalysisPlan parse_plan(std::string_view toml_text, std::vector<std::string>* defaults) {
    const json doc = toml::parse(toml_text);
    check_keys(doc, {"covariate", "estimand", "subgroup", "bootstrap_reps", "seed", "smd_threshold", "stratify_by_arm"},
               "plan");
    AnalysisPlan plan;

    if (doc.contains("bootstrap_reps")) {
        if (!doc["bootstrap_reps"].is_number_integer()) throw ConfigError("bootstrap_reps must be an integer");
        const auto reps = doc["bootstrap_reps"].get<std::int64_t>();
        if (reps < 1 || reps > 100'000'000) throw ConfigError("bootstrap_reps must be >= 1");
        plan.bootstrap_reps = static_cast<int>(reps);
    } else if (defaults) {
        defaults->push_back("bootstrap_reps");
    }
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_integer()) throw ConfigError("seed must be an integer");
        plan.seed = doc["seed"].get<std::uint64_t>();
    } else if (defaults) {
        defaults->push_back("seed");
    }
    if (doc.contains("smd_threshold")) {
        plan.smd_threshold = get_number(doc["smd_threshold"], "smd_threshold");
        if (!(plan.smd_threshold > 0)) throw ConfigError("smd_threshold must be positive");
    } else if (defaults) {
        defaults->push_back("smd_threshold");
    }
    if (doc.contains("stratify_by_arm")) {
        if (!doc["stratify_by_arm"].is_boolean()) throw ConfigError("stratify_by_arm must be a boolean");
        plan.stratify_by_arm = doc["stratify_by_arm"].get<bool>();
    } else if (defaults) {
        defaults->push_back("stratify_by_arm");
    }

    if (!doc.contains("covariate") || !doc["covariate"].is_array())
        throw ConfigError("plan needs at least one [[covariate]] table");
    std::set<std::string> names;
    for (const auto& t : doc["covariate"]) {
        check_keys(t, {"name", "type", "reference"}, "covariate");
        CovariateSpec c;
        c.name = get_string(t, "name", "covariate");
        c.type = enum_from(get_string(t, "type", "covariate " + c.name), kCovTypes, "covariate type");
        if (c.type == CovariateType::Categorical) {
            c.reference = get_string(t, "reference", "categorical covariate " + c.name);
        } else if (t.contains("reference")) {
            throw ConfigError("covariate " + c.name + ": reference applies to categorical covariates only");
        }
        if (!names.insert(c.name).second) throw ConfigError("duplicate covariate name '" + c.name + "'");
        plan.covariates.push_back(std::move(c));
    }

    if (!doc.contains("estimand") || !doc["estimand"].is_array() || doc["estimand"].empty())
        throw ConfigError("plan needs at least one [[estimand]] table");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < doc["estimand"].size(); ++i) {
        auto e = parse_estimand(doc["estimand"][i], i, defaults);
        if (!ids.insert(e.id).second) throw ConfigError("duplicate estimand id '" + e.id + "'");
        plan.estimands.push_back(std::move(e));
    }

    if (doc.contains("subgroup")) plan.subgroup = parse_subgroup(doc["subgroup"]);
    return plan;
}

AnalysisPlan load_plan(const std::string& path, std::vector<std::string>* defaults) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open plan file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_plan(ss.str(), defaults);
}

std::string serialize_plan(const AnalysisPlan& plan) {
    // Written by hand rather than through toml::dump so keys keep a readable order.
    std::ostringstream out;
    auto num = [](double v) {
        std::string t = csv::format_number(v);
        if (t.find_first_of(".eE") == std::string::npos) t += ".0";
        return t;
    };
    auto str = [](std::string_view s) { return nlohmann::json(std::string(s)).dump(); };
    out << "bootstrap_reps = " << plan.bootstrap_reps << '\n';
    out << "seed = " << plan.seed << '\n';
    out << "smd_threshold = " << num(plan.smd_threshold) << '\n';
    out << "stratify_by_arm = " << (plan.stratify_by_arm ? "true" : "false") << '\n';
    for (const auto& c : plan.covariates) {
        out << "\n[[covariate]]\nname = " << str(c.name) << "\ntype = " << str(to_string(c.type)) << '\n';
        if (c.type == CovariateType::Categorical) out << "reference = " << str(c.reference) << '\n';
    }
    for (const auto& e : plan.estimands) {
        out << "\n[[estimand]]\nid = " << str(e.id) << "\nendpoint = " << str(to_string(e.endpoint))
            << "\nstrategy = " << str(to_string(e.strategy)) << "\nsummary = " << str(to_string(e.summary)) << '\n';
        if (e.admin_cutoff_months) out << "admin_cutoff_months = " << num(*e.admin_cutoff_months) << '\n';
        if (!is_binary(e.endpoint)) {
            out << "landmarks_months = [";
            for (std::size_t i = 0; i < e.landmarks_months.size(); ++i)
                out << (i ? ", " : "") << num(e.landmarks_months[i]);
            out << "]\n";
        }
    }
    if (plan.subgroup) {
        const auto& f = *plan.subgroup;
        out << "\n[subgroup]\nname = " << str(f.name) << '\n';
        if (f.start_on_or_after) out << "line_start_on_or_after = " << f.start_on_or_after->iso() << '\n';
        if (f.start_before) out << "line_start_before = " << f.start_before->iso() << '\n';
        for (const auto& t : f.thresholds)
            out << "\n[[subgroup.threshold]]\ncovariate = " << str(t.covariate) << "\nop = " << str(to_string(t.op))
                << "\nvalue = " << str(t.value) << '\n';
    }
    return out.str();
}

ValidationReport validate_plan(const AnalysisPlan& plan, const Cohort& cohort) {
    using Sev = ValidationEntry::Severity;
    ValidationReport report;
    auto error = [&](std::string m) { report.entries.push_back({Sev::Error, std::move(m)}); };
    auto warn = [&](std::string m) { report.entries.push_back({Sev::Warning, std::move(m)}); };

    if (cohort.count(Arm::Trial) == 0) error("cohort has no TRIAL patients");
    if (cohort.count(Arm::ExternalControl) == 0) error("cohort has no RW patients");

    for (const auto& spec : plan.covariates) {
        auto k = cohort.covariate_index(spec.name);
        if (!k) {
            error("covariate '" + spec.name + "' is absent from the cohort");
            continue;
        }
        // Distinct non-missing values per arm over eligible lines.
        std::set<std::string> levels[2];
        std::size_t missing = 0;
        bool type_error = false;
        for (const auto& p : cohort.patients) {
            for (const auto& l : p.lines) {
                if (!l.eligible) continue;
                const std::string& raw = l.covariates.values[*k];
                if (raw.empty()) {
                    ++missing;
                    continue;
                }
                std::string key = raw;
                if (spec.type != CovariateType::Categorical) {
                    auto v = csv::parse_number(raw);
                    if (!v || (spec.type == CovariateType::Binary && *v != 0.0 && *v != 1.0)) {
                        if (!type_error)
                            error("covariate '" + spec.name + "' has value '" + raw + "' that is not " +
                                  (spec.type == CovariateType::Binary ? "0/1" : "numeric"));
                        type_error = true;
                        continue;
                    }
                    key = csv::format_number(*v);
                }
                levels[p.arm == Arm::Trial ? 0 : 1].insert(key);
            }
        }
        if (missing > 0)
            warn("covariate '" + spec.name + "' is missing on " + std::to_string(missing) +
                 " eligible line(s); complete-case filtering will drop them");
        if (type_error) continue;
        std::set<std::string> all = levels[0];
        all.insert(levels[1].begin(), levels[1].end());
        if (spec.type == CovariateType::Categorical && !all.empty() && !all.count(spec.reference))
            error("covariate '" + spec.name + "': reference level '" + spec.reference + "' does not occur in the data");
        if (all.size() == 1) {
            error("covariate '" + spec.name + "' is constant across both arms");
            continue;
        }
        for (int a = 0; a < 2; ++a) {
            if (levels[a].size() == 1)
                warn("covariate '" + spec.name + "' is constant within the " + (a == 0 ? "TRIAL" : "RW") +
                     " arm (separation risk)");
        }
    }

    if (plan.subgroup) {
        std::size_t per_arm[2] = {0, 0};
        for (const auto& p : cohort.patients) {
            bool any = false;
            for (const auto& l : p.lines) {
                try {
                    any = any || (l.eligible && plan.subgroup->matches(l, cohort));
                } catch (const Error& e) {
                    error(std::string("subgroup filter: ") + e.what());
                    return report;
                }
            }
            if (any) ++per_arm[p.arm == Arm::Trial ? 0 : 1];
        }
        if (per_arm[0] == 0) error("subgroup '" + plan.subgroup->name + "' leaves no TRIAL patient");
        if (per_arm[1] == 0) error("subgroup '" + plan.subgroup->name + "' leaves no RW patient");
    }
    return report;
}

Cohort apply_subgroup(const Cohort& cohort, const SubgroupFilter& filter) {
    Cohort out;
    out.covariate_names = cohort.covariate_names;
    for (const auto& p : cohort.patients) {
        PatientRecord kept{p.patient_id, p.arm, {}};
        for (const auto& l : p.lines)
            if (filter.matches(l, cohort)) kept.lines.push_back(l);
        if (!eligible_lines(kept).empty()) out.patients.push_back(std::move(kept));
    }
    if (out.count(Arm::Trial) == 0)
        throw ConfigError("subgroup '" + filter.name + "' excludes every TRIAL patient");
    if (out.count(Arm::ExternalControl) == 0)
        throw ConfigError("subgroup '" + filter.name + "' excludes every RW patient");
    return out;
}

}  // namespace eca
