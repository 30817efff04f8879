#include "eca/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "eca/error.hpp"

namespace eca {

double weighted_proportion(std::span<const int> flags, std::span<const double> weights) {
    if (flags.size() != weights.size()) throw DomainError("flags and weights differ in length");
    double sw = 0, swf = 0;
    for (std::size_t i = 0; i < flags.size(); ++i) {
        sw += weights[i];
        swf += weights[i] * (flags[i] ? 1.0 : 0.0);
    }
    if (!(sw > 0)) throw DomainError("total weight is zero");
    return swf / sw;
}

double weighted_proportion_diff(std::span<const int> trial_flags, std::span<const int> rw_flags,
                                std::span<const double> rw_weights) {
    if (trial_flags.empty()) throw DomainError("no evaluable trial patients");
    const std::vector<double> ones(trial_flags.size(), 1.0);
    return weighted_proportion(trial_flags, ones) - weighted_proportion(rw_flags, rw_weights);
}

double KmCurve::survival_at(double t) const {
    double s = 1.0;
    for (const auto& step : steps) {
        if (step.time > t) break;
        s = step.survival;
    }
    return s;
}

KmCurve weighted_km(std::span<const TimeToEvent> data, std::span<const double> weights,
                    std::span<const double> landmarks) {
    if (data.size() != weights.size()) throw DomainError("times and weights differ in length");
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!(data[i].time_months >= 0) || !std::isfinite(data[i].time_months))
            throw DomainError("survival times must be finite and non-negative");
        if (!(weights[i] > 0)) throw DomainError("KM weights must be positive");
    }
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return data[a].time_months < data[b].time_months; });

    KmCurve curve;
    double at_risk = 0;
    for (double w : weights) at_risk += w;
    curve.total_weight = at_risk;

    double s = 1.0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double t = data[order[i]].time_months;
        KmStep step{t, s, at_risk, 0, 0};
        for (; i < order.size() && data[order[i]].time_months == t; ++i) {
            const std::size_t k = order[i];
            (data[k].event ? step.events : step.censored) += weights[k];
        }
        if (step.events > 0) s *= std::max(0.0, (at_risk - step.events) / at_risk);
        step.survival = s;
        curve.event_weight += step.events;
        at_risk -= step.events + step.censored;
        curve.steps.push_back(step);
        if (!curve.median && step.events > 0 && s <= 0.5 + 1e-12) curve.median = t;
    }
    for (double lm : landmarks) curve.landmarks.emplace_back(lm, curve.survival_at(lm));
    return curve;
}

namespace {

// Subjects sorted by descending time, grouped by distinct time, so risk sets
// accumulate as we walk the list.
struct CoxData {
    struct Group {
        std::size_t begin, end;  // range in `idx`
        double event_weight = 0;
        double event_wz = 0;  // sum over events of w * z
    };
    std::vector<std::size_t> idx;
    std::vector<Group> groups;
};

CoxData prepare(std::span<const int> z, std::span<const TimeToEvent> data, std::span<const double> w) {
    CoxData cd;
    cd.idx.resize(data.size());
    std::iota(cd.idx.begin(), cd.idx.end(), 0);
    std::sort(cd.idx.begin(), cd.idx.end(),
              [&](std::size_t a, std::size_t b) { return data[a].time_months > data[b].time_months; });
    std::size_t i = 0;
    while (i < cd.idx.size()) {
        CoxData::Group g{i, i};
        const double t = data[cd.idx[i]].time_months;
        for (; i < cd.idx.size() && data[cd.idx[i]].time_months == t; ++i) {
            const std::size_t k = cd.idx[i];
            if (data[k].event) {
                g.event_weight += w[k];
                g.event_wz += w[k] * z[k];
            }
        }
        g.end = i;
        cd.groups.push_back(g);
    }
    return cd;
}

struct CoxEval {
    double loglik = 0, score = 0, info = 0;
};

CoxEval evaluate(double beta, const CoxData& cd, std::span<const int> z, std::span<const double> w) {
    CoxEval e;
    double s0 = 0, s1 = 0, s2 = 0;
    const double r1 = std::exp(beta);
    for (const auto& g : cd.groups) {
        for (std::size_t i = g.begin; i < g.end; ++i) {
            const std::size_t k = cd.idx[i];
            const double r = z[k] ? w[k] * r1 : w[k];
            s0 += r;
            s1 += r * z[k];
            s2 += r * z[k] * z[k];
        }
        if (g.event_weight <= 0) continue;
        const double zbar = s1 / s0;
        e.loglik += beta * g.event_wz - g.event_weight * std::log(s0);
        e.score += g.event_wz - g.event_weight * zbar;
        e.info += g.event_weight * (s2 / s0 - zbar * zbar);
    }
    return e;
}

}  // namespace

CoxFit weighted_cox(std::span<const int> treatment, std::span<const TimeToEvent> data, std::span<const double> weights,
                    const CoxOptions& options) {
    if (treatment.size() != data.size() || weights.size() != data.size())
        throw DomainError("treatment, times and weights differ in length");
    bool has_t = false, has_c = false, has_event = false;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (treatment[i] != 0 && treatment[i] != 1) throw DomainError("treatment must be 0/1");
        if (!(weights[i] > 0)) throw DomainError("Cox weights must be positive");
        if (!(data[i].time_months >= 0) || !std::isfinite(data[i].time_months))
            throw DomainError("survival times must be finite and non-negative");
        (treatment[i] ? has_t : has_c) = true;
        has_event = has_event || data[i].event;
    }
    if (!has_event) throw DomainError("Cox model needs at least one event");
    if (!has_t || !has_c) throw DomainError("Cox model needs both arms");

    const CoxData cd = prepare(treatment, data, weights);

    // The score is decreasing in beta; its limits at +/-infinity decide
    // whether a finite maximiser exists.
    double limit_pos = 0, limit_neg = 0, total_w = 0;
    {
        bool any_t = false, any_c = false;
        for (const auto& g : cd.groups) {
            for (std::size_t i = g.begin; i < g.end; ++i) {
                const std::size_t k = cd.idx[i];
                (treatment[k] ? any_t : any_c) = true;
                total_w += weights[k];
            }
            if (g.event_weight <= 0) continue;
            limit_pos += g.event_wz - g.event_weight * (any_t ? 1.0 : 0.0);
            limit_neg += g.event_wz - g.event_weight * (any_c ? 0.0 : 1.0);
        }
    }
    const double tol = 1e-12 * total_w;
    if (limit_pos >= -tol || limit_neg <= tol)
        throw SeparationError("Cox partial likelihood is monotone in the treatment effect (events ordered by arm)");

    CoxFit fit;
    double beta = 0;
    CoxEval cur = evaluate(beta, cd, treatment, weights);
    int iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        if (std::abs(cur.score) < options.score_tolerance) break;
        if (!(cur.info > 0)) throw SeparationError("Cox information vanished during iteration");
        double step = cur.score / cur.info;
        double next = beta + step;
        CoxEval cand = evaluate(next, cd, treatment, weights);
        for (int h = 0; h < 40 && !(cand.loglik >= cur.loglik - 1e-12 * std::abs(cur.loglik)); ++h) {
            step *= 0.5;
            next = beta + step;
            cand = evaluate(next, cd, treatment, weights);
        }
        beta = next;
        cur = cand;
    }
    if (std::abs(cur.score) >= options.score_tolerance)
        throw NonConvergence("weighted Cox fit did not converge within " + std::to_string(options.max_iterations) +
                             " iterations");
    fit.log_hr = beta;
    fit.score = cur.score;
    fit.information = cur.info;
    fit.log_partial_likelihood = cur.loglik;
    fit.iterations = iter;
    return fit;
}

}  // namespace eca
