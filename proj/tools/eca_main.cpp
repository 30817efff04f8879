#include <exception>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "eca/cohort.hpp"
#include "eca/error.hpp"
#include "eca/plan.hpp"
#include "eca/report.hpp"
#include "eca/synthgen.hpp"

namespace {

int validate(const std::string& cohort_path, const std::string& plan_path) {
    std::vector<std::string> defaults;
    const eca::AnalysisPlan plan = eca::load_plan(plan_path, &defaults);
    const eca::Cohort cohort = eca::read_cohort_file(cohort_path);
    const eca::ValidationReport report = eca::validate_plan(plan, cohort);
    for (const auto& e : report.entries)
        std::cout << (e.severity == eca::ValidationEntry::Severity::Error ? "error: " : "warning: ") << e.message
                  << '\n';
    for (const auto& d : defaults) std::cout << "default applied: " << d << '\n';
    if (report.has_errors()) {
        std::cerr << eca::error_json("configuration_error", "plan validation failed") << '\n';
        return 2;
    }
    std::cout << "ok: " << cohort.count(eca::Arm::Trial) << " trial and " << cohort.count(eca::Arm::ExternalControl)
              << " external patients\n";
    return 0;
}

int synth(const std::string& scenario_path, const std::string& out_path, const std::string& truth_path) {
    const auto [cohort, truth] = eca::generate_cohort(eca::load_scenario(scenario_path));
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw eca::Error("io_error", "cannot write '" + out_path + "'");
    eca::write_cohort(out, cohort);
    if (!truth_path.empty()) {
        std::ofstream t(truth_path, std::ios::binary);
        if (!t) throw eca::Error("io_error", "cannot write '" + truth_path + "'");
        t << truth.to_json().dump(2) << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"External control arm analysis"};
    app.set_version_flag("--version", ECA_VERSION);
    app.require_subcommand(1);

    eca::AnalyzeFlags flags;
    int reps = 0;
    std::uint64_t seed = 0;
    std::string dump_reps, dump_psmodel;
    auto* analyze = app.add_subcommand("analyze", "Run the weighted comparison and write reports");
    analyze->add_option("--cohort", flags.cohort_path, "Cohort CSV")->required();
    analyze->add_option("--plan", flags.plan_path, "Analysis plan TOML")->required();
    analyze->add_option("--out", flags.out_dir, "Output directory")->required();
    auto* reps_opt = analyze->add_option("--reps", reps, "Bootstrap replicates");
    auto* seed_opt = analyze->add_option("--seed", seed, "Bootstrap seed");
    analyze->add_flag("--no-stratify", flags.no_stratify, "Resample without stratifying by arm");
    analyze->add_flag("--freeze-weights", flags.freeze_weights, "Reuse point-estimate weights in every replicate");
    analyze->add_option("--workers", flags.workers, "Bootstrap worker threads")->check(CLI::PositiveNumber);
    analyze->add_option("--dump-reps", dump_reps, "Write every bootstrap replicate to this CSV");
    analyze->add_option("--dump-psmodel", dump_psmodel, "Write both propensity models to this JSON");

    std::string v_cohort, v_plan;
    auto* val = app.add_subcommand("validate", "Check a plan against a cohort");
    val->add_option("--cohort", v_cohort)->required();
    val->add_option("--plan", v_plan)->required();

    std::string scenario, synth_out, truth;
    auto* syn = app.add_subcommand("synth", "Generate a synthetic cohort");
    syn->add_option("--scenario", scenario, "Scenario TOML")->required();
    syn->add_option("--out", synth_out, "Cohort CSV to write")->required();
    syn->add_option("--truth", truth, "Truth JSON to write");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*analyze) {
            if (*reps_opt) flags.reps = reps;
            if (*seed_opt) flags.seed = seed;
            if (!dump_reps.empty()) flags.dump_reps = dump_reps;
            if (!dump_psmodel.empty()) flags.dump_psmodel = dump_psmodel;
            eca::run_analysis(flags);
            return 0;
        }
        if (*val) return validate(v_cohort, v_plan);
        return synth(scenario, synth_out, truth);
    } catch (const eca::Error& e) {
        std::cerr << eca::error_json(e.kind(), e.what()) << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << eca::error_json("internal_error", e.what()) << '\n';
        return 1;
    }
}
