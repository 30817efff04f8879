#include "eca/statistics.hpp"

#include <cmath>
#include <limits>

#include "eca/csv.hpp"
#include "eca/error.hpp"

namespace eca {

std::vector<StatisticSpec> statistic_specs(const EstimandSpec& spec) {
    std::vector<StatisticSpec> out = {{"n_trial", false}, {"n_rw", false}};
    if (is_binary(spec.endpoint)) {
        out.insert(out.end(), {{"rate_trial", true}, {"rate_rw", true}, {"difference", true}});
        return out;
    }
    out.insert(out.end(), {{"events_trial", false}, {"events_rw", false}, {"median_trial", true}, {"median_rw", true}});
    for (double lm : spec.landmarks_months) {
        const std::string t = csv::format_number(lm);
        out.push_back({"surv_" + t + "_trial", true});
        out.push_back({"surv_" + t + "_rw", true});
    }
    out.insert(out.end(), {{"log_hr", true}, {"hr", true}});
    return out;
}

EstimandData prepare_estimand(const EstimandSpec& spec, const WeightedSample& sample) {
    EstimandData d;
    d.spec = spec;
    const std::size_t n = sample.rows.size();
    d.evaluable.assign(n, 1);
    d.treated.resize(n);
    if (is_binary(spec.endpoint))
        d.response.resize(n);
    else
        d.tte.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = sample.rows[i];
        d.treated[i] = row.arm == Arm::Trial ? 1 : 0;
        if (is_binary(spec.endpoint)) {
            const auto r = derive_response(row.line, spec.endpoint);
            if (r == ResponseOutcome::Unevaluable) {
                d.evaluable[i] = 0;
                ++(row.arm == Arm::Trial ? d.unevaluable_trial : d.unevaluable_external);
            }
            d.response[i] = r == ResponseOutcome::Responder ? 1 : 0;
        } else {
            d.tte[i] = derive_time_to_event(row.line, spec);
        }
    }
    return d;
}

EstimandInputs gather(const EstimandData& data, std::span<const std::size_t> rows, std::span<const double> weights) {
    if (rows.size() != weights.size()) throw DomainError("rows and weights differ in length");
    const bool binary = is_binary(data.spec.endpoint);
    EstimandInputs in;
    in.treated.reserve(rows.size());
    in.weights.reserve(rows.size());
    for (std::size_t j = 0; j < rows.size(); ++j) {
        const std::size_t i = rows[j];
        if (!data.evaluable[i]) continue;
        in.treated.push_back(data.treated[i]);
        in.weights.push_back(weights[j]);
        if (binary)
            in.response.push_back(data.response[i]);
        else
            in.tte.push_back(data.tte[i]);
    }
    return in;
}

namespace {

template <class T>
void split(const std::vector<T>& v, const std::vector<int>& treated, std::vector<T>& t, std::vector<T>& c) {
    for (std::size_t i = 0; i < v.size(); ++i) (treated[i] ? t : c).push_back(v[i]);
}

}  // namespace

std::vector<KmCurve> km_by_arm(const EstimandSpec& spec, const EstimandInputs& in) {
    std::vector<TimeToEvent> tt, tc;
    std::vector<double> wt, wc;
    split(in.tte, in.treated, tt, tc);
    split(in.weights, in.treated, wt, wc);
    if (tt.empty() || tc.empty()) throw DomainError("estimand " + spec.id + " has an arm without evaluable patients");
    return {weighted_km(tt, wt, spec.landmarks_months), weighted_km(tc, wc, spec.landmarks_months)};
}

std::vector<double> evaluate_statistics(const EstimandSpec& spec, const EstimandInputs& in) {
    std::vector<double> out;
    double n_t = 0, n_c = 0;
    for (std::size_t i = 0; i < in.treated.size(); ++i) (in.treated[i] ? n_t : n_c) += in.weights[i];
    if (n_t == 0 || n_c == 0) throw DomainError("estimand " + spec.id + " has an arm without evaluable patients");
    out.push_back(n_t);
    out.push_back(n_c);

    if (is_binary(spec.endpoint)) {
        std::vector<int> ft, fc;
        std::vector<double> wt, wc;
        split(in.response, in.treated, ft, fc);
        split(in.weights, in.treated, wt, wc);
        const double rt = weighted_proportion(ft, wt);
        const double rc = weighted_proportion(fc, wc);
        out.insert(out.end(), {rt, rc, rt - rc});
        return out;
    }

    const auto curves = km_by_arm(spec, in);
    constexpr double inf = std::numeric_limits<double>::infinity();
    out.push_back(curves[0].event_weight);
    out.push_back(curves[1].event_weight);
    out.push_back(curves[0].median.value_or(inf));
    out.push_back(curves[1].median.value_or(inf));
    for (std::size_t k = 0; k < spec.landmarks_months.size(); ++k) {
        out.push_back(curves[0].landmarks[k].second);
        out.push_back(curves[1].landmarks[k].second);
    }
    const CoxFit cox = weighted_cox(in.treated, in.tte, in.weights);
    out.push_back(cox.log_hr);
    out.push_back(std::exp(cox.log_hr));
    return out;
}

}  // namespace eca
