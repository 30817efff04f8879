#include "eca/report.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>

#include "eca/csv.hpp"
#include "eca/error.hpp"
#include "eca/toml.hpp"

namespace eca {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string opt_number(const std::optional<double>& x) { return x ? csv::format_number(*x) : "NA"; }

// JSON has no infinities; they and NaN become null.
json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json opt_json(const std::optional<double>& x) { return x ? finite_or_null(*x) : json(nullptr); }

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("io_error", "cannot write '" + path.string() + "'");
    return out;
}

const EstimandSpec& spec_of(const AnalysisResult& res, const std::string& id) {
    for (const auto& e : res.plan.estimands)
        if (e.id == id) return e;
    throw DomainError("unknown estimand '" + id + "'");
}

}  // namespace

void write_balance_csv(std::ostream& out, const AnalysisResult& res) {
    csv::write_row(out, {"covariate", "level", "trial_mean", "trial_sd", "rw_mean", "rw_sd", "rw_weighted_mean",
                         "rw_weighted_sd", "smd_pre", "smd_post", "balanced_post"});
    for (const auto& b : res.weighting.balance) {
        const bool balanced = b.smd_post && *b.smd_post < res.plan.smd_threshold;
        csv::write_row(out, {b.covariate, b.level, csv::format_number(b.trial_mean), csv::format_number(b.trial_sd),
                             csv::format_number(b.rw_mean), csv::format_number(b.rw_sd),
                             csv::format_number(b.rw_weighted_mean), csv::format_number(b.rw_weighted_sd),
                             opt_number(b.smd_pre), opt_number(b.smd_post), balanced ? "yes" : "no"});
    }
}

void write_effects_csv(std::ostream& out, const AnalysisResult& res) {
    const auto& b = res.bootstrap;
    csv::write_row(out, {"estimand", "endpoint", "strategy", "weighting", "statistic", "point", "ci_low", "ci_high",
                         "n_boot_ok", "n_boot_failed"});
    for (std::size_t c = 0; c < b.columns.size(); ++c) {
        const auto& col = b.columns[c];
        const auto& spec = spec_of(res, col.estimand_id);
        csv::write_row(out, {col.estimand_id, std::string(to_string(spec.endpoint)), std::string(to_string(spec.strategy)),
                             col.weighting, col.statistic.name, csv::format_number(b.point[c]),
                             csv::format_number(b.ci_low[c]), csv::format_number(b.ci_high[c]),
                             std::to_string(b.succeeded), std::to_string(b.failed)});
    }
}

void write_km_csv(std::ostream& out, const AnalysisResult& res) {
    csv::write_row(out, {"estimand", "weighting", "arm", "time_months", "survival", "at_risk", "events", "censored"});
    for (const auto& k : res.curves) {
        const std::string arm(to_string(k.arm));
        csv::write_row(out, {k.estimand_id, k.weighting, arm, "0", "1", csv::format_number(k.curve.total_weight), "0", "0"});
        for (const auto& s : k.curve.steps)
            csv::write_row(out, {k.estimand_id, k.weighting, arm, csv::format_number(s.time),
                                 csv::format_number(s.survival), csv::format_number(s.at_risk),
                                 csv::format_number(s.events), csv::format_number(s.censored)});
    }
}

void write_replicates_csv(std::ostream& out, const AnalysisResult& res) {
    const auto& b = res.bootstrap;
    std::vector<std::string> header = {"replicate", "status"};
    for (const auto& c : b.columns) header.push_back(c.estimand_id + "/" + c.weighting + "/" + c.statistic.name);
    csv::write_row(out, header);
    for (std::size_t r = 0; r < b.replicates.size(); ++r) {
        std::vector<std::string> row = {std::to_string(r), b.replicate_error[r].empty() ? "ok" : b.replicate_error[r]};
        if (b.replicates[r].empty())
            row.resize(header.size(), "NA");
        else
            for (double x : b.replicates[r]) row.push_back(csv::format_number(x));
        csv::write_row(out, row);
    }
}

json fit_summary(const PsModel& model, const DesignMatrix* design) {
    const auto& f = model.fit;
    const Eigen::VectorXd b = f.beta();
    json coefs = json::array();
    for (Eigen::Index j = 0; j < b.size(); ++j) {
        coefs.push_back({{"name", f.column_names[static_cast<std::size_t>(j)]},
                         {"estimate", b(j)},
                         {"se_model", std::sqrt(f.model_covariance(j, j))},
                         {"se_sandwich", std::sqrt(f.sandwich_covariance(j, j))}});
    }
    json out = {{"converged", f.converged},
                {"iterations", f.iterations},
                {"log_likelihood", f.log_likelihood},
                {"max_abs_score", f.max_abs_score},
                {"max_abs_coef", f.max_abs_coef},
                {"coefficients", coefs},
                {"encoding", model.encoder.to_json()}};
    if (design) {
        out["rows"] = design->rows();
        out["clusters"] = std::set<std::size_t>(design->cluster.begin(), design->cluster.end()).size();
    }
    return out;
}

json runlog_json(const AnalysisResult& res, const RunInfo& info) {
    const auto& w = res.weighting;
    const auto& b = res.bootstrap;

    json exclusions = json::array();
    for (const auto& e : res.exclusions.entries)
        exclusions.push_back({{"patient_id", e.patient_id},
                              {"arm", std::string(to_string(e.arm))},
                              {"line_number", e.line_number ? json(*e.line_number) : json(nullptr)},
                              {"reason", e.reason}});

    json validation = json::array();
    for (const auto& v : res.validation.entries)
        validation.push_back(
            {{"severity", v.severity == ValidationEntry::Severity::Error ? "error" : "warning"}, {"message", v.message}});

    json selected_counts = json::object();
    for (const auto& [line, n] : w.selection.selected_line_counts) selected_counts[std::to_string(line)] = n;

    std::vector<double> ext_w;
    for (const auto& r : w.sample.rows)
        if (r.arm == Arm::ExternalControl) ext_w.push_back(r.weight);
    const auto [wmin, wmax] = std::minmax_element(ext_w.begin(), ext_w.end());

    json balance = json::array();
    for (const auto& r : w.balance)
        balance.push_back({{"covariate", r.covariate},
                           {"level", r.level},
                           {"trial_mean", r.trial_mean},
                           {"trial_sd", r.trial_sd},
                           {"rw_mean", r.rw_mean},
                           {"rw_sd", r.rw_sd},
                           {"rw_weighted_mean", r.rw_weighted_mean},
                           {"rw_weighted_sd", r.rw_weighted_sd},
                           {"smd_pre", opt_json(r.smd_pre)},
                           {"smd_post", opt_json(r.smd_post)}});

    json effects = json::array();
    for (std::size_t c = 0; c < b.columns.size(); ++c)
        effects.push_back({{"estimand", b.columns[c].estimand_id},
                           {"weighting", b.columns[c].weighting},
                           {"statistic", b.columns[c].statistic.name},
                           {"point", finite_or_null(b.point[c])},
                           {"ci_low", finite_or_null(b.ci_low[c])},
                           {"ci_high", finite_or_null(b.ci_high[c])}});

    json outcomes = json::array();
    for (const auto& d : res.estimands)
        outcomes.push_back({{"estimand", d.spec.id},
                            {"unevaluable_trial", d.unevaluable_trial},
                            {"unevaluable_rw", d.unevaluable_external}});

    json reasons = json::object();
    for (const auto& [k, n] : b.failure_reasons) reasons[k] = n;

    json plan = toml::parse(serialize_plan(res.plan));

    return {
        {"software", {{"name", "eca"}, {"version", ECA_VERSION}}},
        {"started_at", info.started_at},
        {"finished_at", info.finished_at},
        {"inputs", {{"cohort", info.cohort_path}, {"plan", info.plan_path}}},
        {"population", res.population},
        {"plan", plan},
        {"defaults_applied", info.defaults_applied},
        {"overrides", info.overrides},
        {"seed", res.plan.seed},
        {"flags",
         {{"bootstrap_reps", res.plan.bootstrap_reps},
          {"stratify_by_arm", res.plan.stratify_by_arm},
          {"freeze_weights", false}}},
        {"validation", validation},
        {"cohort",
         {{"input_patients_trial", res.input_patients_trial},
          {"input_patients_rw", res.input_patients_external},
          {"analysed_patients_trial", res.analysed.count(Arm::Trial)},
          {"analysed_patients_rw", res.analysed.count(Arm::ExternalControl)}}},
        {"exclusions",
         {{"lines_dropped_trial", res.exclusions.lines_dropped_trial},
          {"lines_dropped_rw", res.exclusions.lines_dropped_external},
          {"patients_dropped_trial", res.exclusions.patients_dropped_trial},
          {"patients_dropped_rw", res.exclusions.patients_dropped_external},
          {"entries", exclusions}}},
        {"stage1", fit_summary(w.stage1)},
        {"stage2", fit_summary(w.stage2, &w.stage2_design)},
        {"selection",
         {{"selected_line_counts", selected_counts},
          {"rw_patients_with_multiple_eligible_lines", w.selection.external_patients_with_multiple_lines},
          {"median_selected_line", w.selection.median_selected_line}}},
        {"weights",
         {{"n_trial", w.sample.count(Arm::Trial)},
          {"n_rw", w.sample.count(Arm::ExternalControl)},
          {"rw_weight_sum", w.sample.external_weight_sum()},
          {"rw_ess", w.sample.external_ess()},
          {"rw_weight_min", *wmin},
          {"rw_weight_max", *wmax}}},
        {"balance", balance},
        {"outcomes", outcomes},
        {"effects", effects},
        {"bootstrap",
         {{"replicates", b.replicates.size()},
          {"succeeded", b.succeeded},
          {"failed", b.failed},
          {"failure_reasons", reasons}}},
        {"warnings", res.warnings},
    };
}

std::string error_json(const std::string& kind, const std::string& message) {
    return json{{"error", kind}, {"message", message}}.dump();
}

std::string utc_timestamp() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

namespace {

void emit(const AnalysisResult& res, const AnalyzeFlags& flags, RunInfo info, const fs::path& dir,
          const std::optional<std::string>& dump_reps, const std::optional<std::string>& dump_psmodel) {
    fs::create_directories(dir);
    {
        auto out = open_out(dir / "balance.csv");
        write_balance_csv(out, res);
    }
    {
        auto out = open_out(dir / "effects.csv");
        write_effects_csv(out, res);
    }
    {
        auto out = open_out(dir / "km_curves.csv");
        write_km_csv(out, res);
    }
    if (dump_reps) {
        auto out = open_out(*dump_reps);
        write_replicates_csv(out, res);
    }
    if (dump_psmodel) {
        auto out = open_out(*dump_psmodel);
        out << json{{"stage1", to_json(res.weighting.stage1)}, {"stage2", to_json(res.weighting.stage2)}}.dump(2) << '\n';
    }
    info.finished_at = utc_timestamp();
    json log = runlog_json(res, info);
    log["flags"]["freeze_weights"] = flags.freeze_weights;
    log["flags"]["workers"] = flags.workers;
    auto out = open_out(dir / "runlog.json");
    out << log.dump(2) << '\n';
}

std::optional<std::string> suffixed(const std::optional<std::string>& path, const std::string& suffix) {
    if (!path) return std::nullopt;
    fs::path p(*path);
    return (p.parent_path() / (p.stem().string() + suffix + p.extension().string())).string();
}

}  // namespace

void run_analysis(const AnalyzeFlags& flags) {
    RunInfo info;
    info.started_at = utc_timestamp();
    info.cohort_path = flags.cohort_path;
    info.plan_path = flags.plan_path;

    AnalysisPlan plan = load_plan(flags.plan_path, &info.defaults_applied);
    if (flags.reps) {
        if (*flags.reps < 1) throw ConfigError("--reps must be positive");
        plan.bootstrap_reps = *flags.reps;
        info.overrides.push_back("bootstrap_reps");
    }
    if (flags.seed) {
        plan.seed = *flags.seed;
        info.overrides.push_back("seed");
    }
    if (flags.no_stratify) {
        plan.stratify_by_arm = false;
        info.overrides.push_back("stratify_by_arm");
    }
    const Cohort cohort = read_cohort_file(flags.cohort_path);

    PipelineOptions opts;
    opts.bootstrap.reps = plan.bootstrap_reps;
    opts.bootstrap.seed = plan.seed;
    opts.bootstrap.stratify_by_arm = plan.stratify_by_arm;
    opts.bootstrap.freeze_weights = flags.freeze_weights;
    opts.bootstrap.workers = std::max(1u, flags.workers);

    const AnalysisResult main = analyze(cohort, plan, opts);
    emit(main, flags, info, flags.out_dir, flags.dump_reps, flags.dump_psmodel);

    if (plan.subgroup) {
        opts.subgroup = true;
        const AnalysisResult sub = analyze(cohort, plan, opts);
        emit(sub, flags, info, fs::path(flags.out_dir) / "subgroup", suffixed(flags.dump_reps, "_subgroup"),
             suffixed(flags.dump_psmodel, "_subgroup"));
    }
}

}  // namespace eca
