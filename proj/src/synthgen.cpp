#include "eca/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "eca/csv.hpp"
#include "eca/error.hpp"
#include "eca/random.hpp"
#include "eca/toml.hpp"

namespace eca {

namespace {

void check_prob(double p, const std::string& what) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(what + " must lie in [0, 1]");
}

void check_distribution(const std::vector<double>& probs, const std::string& what) {
    if (probs.empty()) throw ConfigError(what + " must not be empty");
    for (double p : probs) check_prob(p, what);
    if (std::abs(std::accumulate(probs.begin(), probs.end(), 0.0) - 1.0) > 1e-9)
        throw ConfigError(what + " must sum to 1");
}

std::size_t draw_index(Rng& rng, const std::vector<double>& probs) {
    const double u = rng.uniform();
    double acc = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    return probs.size() - 1;
}

double logit(double p) { return std::log(p / (1.0 - p)); }

std::int32_t to_days(double months) {
    return static_cast<std::int32_t>(std::llround(months_to_days(months)));
}

}  // namespace

void ScenarioConfig::validate() const {
    if (n_trial < 2 || n_rw < 2) throw ConfigError("scenario needs at least 2 patients per arm");
    if (first_line_number < 1) throw ConfigError("first_line_number must be positive");
    check_distribution(rw_lines_probs, "rw_lines_probs");
    check_distribution(trial_line_offset_probs, "trial_line_offset_probs");
    check_prob(ineligible_line_prob, "ineligible_line_prob");
    if (!(hazard_os > 0) || !(hazard_progression > 0)) throw ConfigError("hazards must be positive");
    if (!(censoring_rate >= 0.0 && censoring_rate < 1.0))
        throw ConfigError("censoring_rate must lie in [0, 1); a rate of 1 leaves no events");
    check_prob(new_therapy_fraction, "new_therapy_fraction");
    for (double p : {cr_prob_trial, cr_prob_rw})
        if (!(p > 0.0 && p < 1.0)) throw ConfigError("cr probabilities must lie in (0, 1)");
    check_prob(pr_share, "pr_share");
    check_prob(missing_response_rate, "missing_response_rate");
    if (accrual_days < 1) throw ConfigError("accrual_days must be positive");
    for (const auto& c : covariates) {
        if (c.name.empty()) throw ConfigError("covariate generator without a name");
        switch (c.kind) {
            case CovariateGenerator::Kind::Normal:
                if (!(c.sd > 0)) throw ConfigError("covariate " + c.name + ": sd must be positive");
                break;
            case CovariateGenerator::Kind::Bernoulli:
                check_prob(c.trial_prob, "covariate " + c.name + " trial_prob");
                check_prob(c.rw_prob, "covariate " + c.name + " rw_prob");
                break;
            case CovariateGenerator::Kind::Categorical: {
                const std::size_t k = c.levels.size();
                if (k < 2) throw ConfigError("covariate " + c.name + ": needs at least two levels");
                check_distribution(c.trial_probs, "covariate " + c.name + " trial_probs");
                check_distribution(c.rw_probs, "covariate " + c.name + " rw_probs");
                if (c.trial_probs.size() != k || c.rw_probs.size() != k)
                    throw ConfigError("covariate " + c.name + ": one probability per level required");
                for (const auto* eff : {&c.level_effect_os, &c.level_effect_pfs, &c.level_effect_response})
                    if (!eff->empty() && eff->size() != k)
                        throw ConfigError("covariate " + c.name + ": one effect per level required");
                break;
            }
            case CovariateGenerator::Kind::PriorLines: break;
        }
    }
}

bool TruthRecord::planted(const std::string& patient_id, int line_number) const {
    return std::any_of(new_therapy_before_event.begin(), new_therapy_before_event.end(),
                       [&](const PlantedLine& p) { return p.patient_id == patient_id && p.line_number == line_number; });
}

nlohmann::json TruthRecord::to_json() const {
    const auto& c = config;
    nlohmann::json planted = nlohmann::json::array();
    for (const auto& p : new_therapy_before_event) planted.push_back({p.patient_id, p.line_number});
    return {{"seed", c.seed},
            {"n_trial", c.n_trial},
            {"n_rw", c.n_rw},
            {"true_log_hr_os", c.log_hr_os},
            {"true_log_hr_pfs", c.log_hr_pfs},
            {"hazard_os", c.hazard_os},
            {"hazard_progression", c.hazard_progression},
            {"censoring_rate", c.censoring_rate},
            {"cr_prob_trial", c.cr_prob_trial},
            {"cr_prob_rw", c.cr_prob_rw},
            {"new_therapy_fraction", c.new_therapy_fraction},
            {"lines_total", lines_total},
            {"planted_new_therapy_lines", planted}};
}

std::pair<Cohort, TruthRecord> generate_cohort(const ScenarioConfig& cfg) {
    cfg.validate();
    Rng rng(mix64(cfg.seed));
    Cohort cohort;
    for (const auto& c : cfg.covariates) cohort.covariate_names.push_back(c.name);
    TruthRecord truth;
    truth.config = cfg;

    const double censor_hazard =
        cfg.censoring_rate > 0 ? cfg.hazard_os * cfg.censoring_rate / (1.0 - cfg.censoring_rate) : 0.0;

    for (int a = 0; a < 2; ++a) {
        const bool trial = a == 0;
        const int n = trial ? cfg.n_trial : cfg.n_rw;
        for (int i = 0; i < n; ++i) {
            PatientRecord p;
            char id[16];
            std::snprintf(id, sizeof id, "%c%05d", trial ? 'T' : 'R', i + 1);
            p.patient_id = id;
            p.arm = trial ? Arm::Trial : Arm::ExternalControl;

            int first_line = cfg.first_line_number;
            int n_lines = 1;
            if (trial)
                first_line += static_cast<int>(draw_index(rng, cfg.trial_line_offset_probs));
            else
                n_lines = static_cast<int>(draw_index(rng, cfg.rw_lines_probs)) + 1;

            // Patient-level draws shared by all lines.
            std::vector<double> base(cfg.covariates.size(), 0.0);
            std::vector<std::size_t> level(cfg.covariates.size(), 0);
            for (std::size_t k = 0; k < cfg.covariates.size(); ++k) {
                const auto& g = cfg.covariates[k];
                switch (g.kind) {
                    case CovariateGenerator::Kind::Normal:
                        base[k] = rng.normal(trial ? g.trial_mean : g.rw_mean, g.sd);
                        break;
                    case CovariateGenerator::Kind::Bernoulli:
                        base[k] = rng.bernoulli(trial ? g.trial_prob : g.rw_prob) ? 1.0 : 0.0;
                        break;
                    case CovariateGenerator::Kind::Categorical:
                        level[k] = draw_index(rng, trial ? g.trial_probs : g.rw_probs);
                        break;
                    case CovariateGenerator::Kind::PriorLines: break;
                }
            }

            std::vector<bool> eligible(static_cast<std::size_t>(n_lines), true);
            if (!trial && cfg.ineligible_line_prob > 0) {
                for (auto&& e : eligible) e = !rng.bernoulli(cfg.ineligible_line_prob);
                if (std::none_of(eligible.begin(), eligible.end(), [](bool e) { return e; }))
                    eligible[rng.below(eligible.size())] = true;
            }

            Date start = cfg.start_date + static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(cfg.accrual_days)));
            for (int j = 0; j < n_lines; ++j) {
                if (j > 0) start = start + 90 + static_cast<std::int32_t>(std::llround(rng.exponential(1.0 / 240.0)));
                LineRecord l;
                l.patient_id = p.patient_id;
                l.line_number = first_line + j;
                l.line_start = start;
                l.eligible = eligible[static_cast<std::size_t>(j)];

                double lp_os = trial ? cfg.log_hr_os : 0.0;
                double lp_pfs = trial ? cfg.log_hr_pfs : 0.0;
                double lp_resp = logit(trial ? cfg.cr_prob_trial : cfg.cr_prob_rw);
                for (std::size_t k = 0; k < cfg.covariates.size(); ++k) {
                    const auto& g = cfg.covariates[k];
                    std::string text;
                    double x = 0;
                    switch (g.kind) {
                        case CovariateGenerator::Kind::Normal:
                            // Rounded before use so the written value drives the outcome.
                            x = std::round((base[k] + g.drift_per_line * j) * 1e4) / 1e4;
                            text = csv::format_number(x);
                            x -= g.center;
                            break;
                        case CovariateGenerator::Kind::Bernoulli:
                            x = base[k];
                            text = x ? "1" : "0";
                            break;
                        case CovariateGenerator::Kind::Categorical: {
                            const std::size_t lv = level[k];
                            text = g.levels[lv];
                            if (!g.level_effect_os.empty()) lp_os += g.level_effect_os[lv];
                            if (!g.level_effect_pfs.empty()) lp_pfs += g.level_effect_pfs[lv];
                            if (!g.level_effect_response.empty()) lp_resp += g.level_effect_response[lv];
                            break;
                        }
                        case CovariateGenerator::Kind::PriorLines:
                            x = l.line_number - 1;
                            text = std::to_string(l.line_number - 1);
                            break;
                    }
                    if (g.kind != CovariateGenerator::Kind::Categorical) {
                        lp_os += g.effect_os * x;
                        lp_pfs += g.effect_pfs * x;
                        lp_resp += g.effect_response * x;
                    }
                    l.covariates.values.push_back(std::move(text));
                }

                const std::int32_t death = to_days(rng.exponential(cfg.hazard_os * std::exp(lp_os)));
                const std::int32_t prog = to_days(rng.exponential(cfg.hazard_progression * std::exp(lp_pfs)));
                const std::int32_t cens = censor_hazard > 0 ? to_days(rng.exponential(censor_hazard))
                                                            : std::numeric_limits<std::int32_t>::max();
                std::int32_t last_contact = 0;
                if (death <= cens) {
                    l.death_date = start + death;
                    last_contact = death;
                } else {
                    last_contact = cens;
                }
                l.last_contact_date = start + last_contact;
                const bool prog_seen = prog <= last_contact && prog <= death;
                if (prog_seen) l.progression_date = start + prog;

                const std::int32_t first_event = prog_seen ? prog : last_contact;
                std::optional<std::int32_t> nt;
                if (rng.bernoulli(cfg.new_therapy_fraction) && first_event >= 2) {
                    nt = 1 + static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(first_event - 1)));
                    truth.new_therapy_before_event.push_back({p.patient_id, l.line_number});
                } else if (prog_seen && last_contact > prog && rng.bernoulli(0.5)) {
                    nt = prog + 1 + static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(last_contact - prog)));
                }
                if (nt) l.new_therapy_date = start + *nt;

                if (!rng.bernoulli(cfg.missing_response_rate)) {
                    const double u = rng.uniform();
                    const double p_cr = 1.0 / (1.0 + std::exp(-lp_resp));
                    if (u < p_cr)
                        l.best_response = BestResponse::CR;
                    else if (rng.bernoulli(cfg.pr_share))
                        l.best_response = BestResponse::PR;
                    else
                        l.best_response = rng.bernoulli(0.5) ? BestResponse::SD : BestResponse::PD;
                    std::int32_t limit = last_contact;
                    if (prog_seen) limit = std::min(limit, prog);
                    if (nt) limit = std::min(limit, *nt);
                    l.response_date = start + std::min<std::int32_t>(56, limit / 2);
                }
                p.lines.push_back(std::move(l));
                ++truth.lines_total;
            }
            cohort.patients.push_back(std::move(p));
        }
    }
    return {std::move(cohort), std::move(truth)};
}

namespace {

using nlohmann::json;

double num(const json& t, const char* key, double fallback) {
    if (!t.contains(key)) return fallback;
    if (!t[key].is_number()) throw ConfigError(std::string("scenario key '") + key + "' must be a number");
    return t[key].get<double>();
}

std::vector<double> nums(const json& t, const char* key, std::vector<double> fallback) {
    if (!t.contains(key)) return fallback;
    if (!t[key].is_array()) throw ConfigError(std::string("scenario key '") + key + "' must be an array");
    std::vector<double> out;
    for (const auto& v : t[key]) {
        if (!v.is_number()) throw ConfigError(std::string("scenario key '") + key + "' must hold numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

int integer(const json& t, const char* key, int fallback) {
    if (!t.contains(key)) return fallback;
    if (!t[key].is_number_integer()) throw ConfigError(std::string("scenario key '") + key + "' must be an integer");
    return t[key].get<int>();
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& text) {
    const json doc = toml::parse(text);
    static const std::vector<std::string> known = {
        "n_trial", "n_rw", "first_line_number", "rw_lines_probs", "trial_line_offset_probs", "ineligible_line_prob",
        "covariate", "hazard_os", "hazard_progression", "log_hr_os", "log_hr_pfs", "censoring_rate",
        "new_therapy_fraction", "cr_prob_trial", "cr_prob_rw", "pr_share", "missing_response_rate", "start_date",
        "accrual_days", "seed"};
    for (auto it = doc.begin(); it != doc.end(); ++it)
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw ConfigError("unknown scenario key '" + it.key() + "'");

    ScenarioConfig c;
    c.n_trial = integer(doc, "n_trial", c.n_trial);
    c.n_rw = integer(doc, "n_rw", c.n_rw);
    c.first_line_number = integer(doc, "first_line_number", c.first_line_number);
    c.rw_lines_probs = nums(doc, "rw_lines_probs", c.rw_lines_probs);
    c.trial_line_offset_probs = nums(doc, "trial_line_offset_probs", c.trial_line_offset_probs);
    c.ineligible_line_prob = num(doc, "ineligible_line_prob", c.ineligible_line_prob);
    c.hazard_os = num(doc, "hazard_os", c.hazard_os);
    c.hazard_progression = num(doc, "hazard_progression", c.hazard_progression);
    c.log_hr_os = num(doc, "log_hr_os", c.log_hr_os);
    c.log_hr_pfs = num(doc, "log_hr_pfs", c.log_hr_pfs);
    c.censoring_rate = num(doc, "censoring_rate", c.censoring_rate);
    c.new_therapy_fraction = num(doc, "new_therapy_fraction", c.new_therapy_fraction);
    c.cr_prob_trial = num(doc, "cr_prob_trial", c.cr_prob_trial);
    c.cr_prob_rw = num(doc, "cr_prob_rw", c.cr_prob_rw);
    c.pr_share = num(doc, "pr_share", c.pr_share);
    c.missing_response_rate = num(doc, "missing_response_rate", c.missing_response_rate);
    c.accrual_days = integer(doc, "accrual_days", c.accrual_days);
    if (doc.contains("start_date")) {
        auto d = doc["start_date"].is_string() ? Date::parse(doc["start_date"].get<std::string>()) : std::nullopt;
        if (!d) throw ConfigError("scenario start_date must be a YYYY-MM-DD date");
        c.start_date = *d;
    }
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_integer()) throw ConfigError("scenario seed must be an integer");
        c.seed = doc["seed"].get<std::uint64_t>();
    }

    if (doc.contains("covariate")) {
        for (const auto& t : doc["covariate"]) {
            CovariateGenerator g;
            if (!t.contains("name") || !t["name"].is_string()) throw ConfigError("scenario covariate needs a name");
            g.name = t["name"].get<std::string>();
            const std::string kind = t.contains("kind") ? t["kind"].get<std::string>() : "normal";
            if (kind == "normal") {
                g.kind = CovariateGenerator::Kind::Normal;
            } else if (kind == "bernoulli") {
                g.kind = CovariateGenerator::Kind::Bernoulli;
            } else if (kind == "categorical") {
                g.kind = CovariateGenerator::Kind::Categorical;
            } else if (kind == "prior_lines") {
                g.kind = CovariateGenerator::Kind::PriorLines;
            } else {
                throw ConfigError("unknown covariate kind '" + kind + "'");
            }
            g.trial_mean = num(t, "trial_mean", 0.0);
            g.rw_mean = num(t, "rw_mean", 0.0);
            g.sd = num(t, "sd", 1.0);
            g.center = num(t, "center", 0.5 * (g.trial_mean + g.rw_mean));
            g.drift_per_line = num(t, "drift_per_line", 0.0);
            g.trial_prob = num(t, "trial_prob", 0.5);
            g.rw_prob = num(t, "rw_prob", 0.5);
            if (t.contains("levels"))
                for (const auto& v : t["levels"]) g.levels.push_back(v.get<std::string>());
            g.trial_probs = nums(t, "trial_probs", {});
            g.rw_probs = nums(t, "rw_probs", {});
            g.level_effect_os = nums(t, "level_effect_os", {});
            g.level_effect_pfs = nums(t, "level_effect_pfs", {});
            g.level_effect_response = nums(t, "level_effect_response", {});
            g.effect_os = num(t, "effect_os", 0.0);
            g.effect_pfs = num(t, "effect_pfs", 0.0);
            g.effect_response = num(t, "effect_response", 0.0);
            c.covariates.push_back(std::move(g));
        }
    }
    c.validate();
    return c;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

}  // namespace eca
