#include "eca/bootstrap.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "eca/csv.hpp"
#include "eca/error.hpp"
#include "eca/random.hpp"

namespace eca {

std::pair<double, double> percentile_ci(std::span<const double> replicates, double level) {
    if (replicates.empty()) throw DomainError("percentile_ci needs at least one replicate");
    if (!(level > 0 && level < 1)) throw DomainError("confidence level must lie in (0, 1)");
    std::vector<double> v(replicates.begin(), replicates.end());
    std::sort(v.begin(), v.end());
    const auto n = static_cast<double>(v.size());
    auto quantile = [&](double p) {
        const double k = n * p;
        const double rounded = std::round(k);
        auto at = [&](double rank) {  // 1-based, clamped
            const auto r = static_cast<std::size_t>(std::clamp(rank, 1.0, n));
            return v[r - 1];
        };
        if (std::abs(k - rounded) < 1e-9) {
            const double a = at(rounded), b = at(rounded + 1);
            return a == b ? a : 0.5 * (a + b);  // equal neighbours, infinities included, pass through
        }
        return at(std::ceil(k));
    };
    const double alpha = (1.0 - level) / 2.0;
    return {quantile(alpha), quantile(1.0 - alpha)};
}

std::vector<StatisticColumn> statistic_columns(const AnalysisPlan& plan) {
    std::vector<StatisticColumn> cols;
    for (const char* weighting : {"weighted", "unweighted"})
        for (const auto& e : plan.estimands)
            for (const auto& s : statistic_specs(e)) cols.push_back({e.id, weighting, s});
    return cols;
}

namespace {

void append_statistics(const std::vector<EstimandData>& data, std::span<const std::size_t> rows,
                       std::span<const double> weights, std::span<const double> ones, std::vector<double>& out) {
    for (std::span<const double> w : {weights, ones}) {
        for (const auto& d : data) {
            const auto stats = evaluate_statistics(d.spec, gather(d, rows, w));
            out.insert(out.end(), stats.begin(), stats.end());
        }
    }
}

}  // namespace

std::vector<double> point_statistics(const WeightedSample& sample, const std::vector<EstimandData>& data) {
    const std::size_t n = sample.rows.size();
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    std::vector<double> w(n), ones(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) w[i] = sample.rows[i].weight;
    std::vector<double> out;
    append_statistics(data, rows, w, ones, out);
    return out;
}

BootstrapResult run_bootstrap(const WeightingResult& selected, const AnalysisPlan& plan,
                              const BootstrapConfig& config) {
    if (config.reps < 1) throw DomainError("bootstrap needs at least one replicate");
    const WeightedSample& sample = selected.sample;
    const DesignMatrix& design = selected.stage2_design;
    const std::size_t n = sample.rows.size();
    if (static_cast<std::size_t>(design.rows()) != n) throw DomainError("stage-2 design does not match the sample");

    std::vector<EstimandData> data;
    for (const auto& e : plan.estimands) data.push_back(prepare_estimand(e, sample));

    BootstrapResult res;
    res.columns = statistic_columns(plan);
    res.point = point_statistics(sample, data);
    const auto reps = static_cast<std::size_t>(config.reps);
    res.replicates.assign(reps, {});
    res.replicate_error.assign(reps, {});

    std::vector<std::size_t> trial_rows, external_rows;
    for (std::size_t i = 0; i < n; ++i) (sample.rows[i].arm == Arm::Trial ? trial_rows : external_rows).push_back(i);

    auto run_one = [&](std::size_t r) {
        Rng rng = Rng::stream(config.seed, r);
        std::vector<std::size_t> idx;
        idx.reserve(n);
        if (config.stratify_by_arm) {
            for (const auto* stratum : {&trial_rows, &external_rows})
                for (std::size_t k = 0; k < stratum->size(); ++k) idx.push_back((*stratum)[rng.below(stratum->size())]);
        } else {
            for (std::size_t k = 0; k < n; ++k) idx.push_back(rng.below(n));
        }
        try {
            std::vector<double> w(n);
            if (config.freeze_weights) {
                for (std::size_t k = 0; k < n; ++k) w[k] = sample.rows[idx[k]].weight;
            } else {
                DesignMatrix boot;
                boot.x.resize(static_cast<Eigen::Index>(n), design.x.cols());
                boot.y.resize(static_cast<Eigen::Index>(n));
                boot.cluster.resize(n);
                boot.labels.resize(n);
                for (std::size_t k = 0; k < n; ++k) {
                    const auto kk = static_cast<Eigen::Index>(k);
                    boot.x.row(kk) = design.x.row(static_cast<Eigen::Index>(idx[k]));
                    boot.y(kk) = design.y(static_cast<Eigen::Index>(idx[k]));
                    boot.cluster[k] = k;  // each draw is its own cluster
                    boot.labels[k] = design.labels[idx[k]];
                }
                boot.column_names = design.column_names;
                const PsFit fit = fit_logistic(boot.x, boot.y, boot.cluster, boot.column_names);
                w = odds_weights_for(boot, fit);
            }
            const std::vector<double> ones(n, 1.0);
            std::vector<double> stats;
            stats.reserve(res.columns.size());
            append_statistics(data, idx, w, ones, stats);
            res.replicates[r] = std::move(stats);
        } catch (const Error& e) {
            res.replicate_error[r] = e.kind();
        }
    };

    const unsigned workers = std::max(1u, std::min<unsigned>(config.workers, static_cast<unsigned>(reps)));
    if (workers == 1) {
        for (std::size_t r = 0; r < reps; ++r) run_one(r);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < workers; ++t)
            pool.emplace_back([&] {
                for (std::size_t r = next++; r < reps; r = next++) run_one(r);
            });
        for (auto& th : pool) th.join();
    }

    // Reduce in replicate order.
    for (std::size_t r = 0; r < reps; ++r) {
        if (res.replicate_error[r].empty()) {
            ++res.succeeded;
        } else {
            ++res.failed;
            ++res.failure_reasons[res.replicate_error[r]];
        }
    }
    const double fail_frac = static_cast<double>(res.failed) / static_cast<double>(reps);
    if (fail_frac > 0.5)
        throw Error("bootstrap_failure", std::to_string(res.failed) + " of " + std::to_string(reps) +
                                             " bootstrap replicates failed");
    if (fail_frac > 0.1)
        res.warnings.push_back(std::to_string(res.failed) + " of " + std::to_string(reps) +
                               " bootstrap replicates failed (more than 10%)");

    const double nan = std::numeric_limits<double>::quiet_NaN();
    res.ci_low.assign(res.columns.size(), nan);
    res.ci_high.assign(res.columns.size(), nan);
    std::vector<double> column;
    for (std::size_t c = 0; c < res.columns.size(); ++c) {
        if (!res.columns[c].statistic.inferential) continue;
        column.clear();
        for (const auto& row : res.replicates)
            if (!row.empty()) column.push_back(row[c]);
        std::tie(res.ci_low[c], res.ci_high[c]) = percentile_ci(column);
        const double p = res.point[c];
        if (p < res.ci_low[c] || p > res.ci_high[c])
            res.warnings.push_back("point estimate of " + res.columns[c].estimand_id + "/" + res.columns[c].weighting +
                                   "/" + res.columns[c].statistic.name + " (" + csv::format_number(p) +
                                   ") lies outside its percentile interval");
    }
    return res;
}

}  // namespace eca
