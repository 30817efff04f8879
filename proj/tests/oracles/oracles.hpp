#pragma once

// Deliberately naive reference computations used only by tests. Nothing here
// shares code with the library.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

// Gauss-Jordan with partial pivoting.
inline Matrix invert(Matrix a) {
    const std::size_t n = a.size();
    Matrix inv(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (a[piv][col] == 0.0) throw std::runtime_error("oracle: singular matrix");
        std::swap(a[piv], a[col]);
        std::swap(inv[piv], inv[col]);
        const double d = a[col][col];
        for (std::size_t j = 0; j < n; ++j) {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r][col];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                a[r][j] -= f * a[col][j];
                inv[r][j] -= f * inv[col][j];
            }
        }
    }
    return inv;
}

inline Matrix multiply(const Matrix& a, const Matrix& b) {
    Matrix c(a.size(), std::vector<double>(b[0].size(), 0.0));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t k = 0; k < b.size(); ++k)
            for (std::size_t j = 0; j < b[0].size(); ++j) c[i][j] += a[i][k] * b[k][j];
    return c;
}

inline double expit(double t) { return 1.0 / (1.0 + std::exp(-t)); }

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double logistic_loglik(const Matrix& x, const std::vector<double>& y, const std::vector<double>& beta) {
    double ll = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double eta = dot(x[i], beta);
        // log p = -log(1+e^-eta), log(1-p) = -log(1+e^eta)
        ll += y[i] > 0.5 ? -std::log1p(std::exp(-eta)) : -std::log1p(std::exp(eta));
    }
    return ll;
}

// Textbook Newton for the logistic MLE, for tiny problems.
inline std::vector<double> logistic_newton(const Matrix& x, const std::vector<double>& y) {
    const std::size_t p = x[0].size();
    std::vector<double> beta(p, 0.0);
    for (int it = 0; it < 200; ++it) {
        Matrix info(p, std::vector<double>(p, 0.0));
        std::vector<double> score(p, 0.0);
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double pi = expit(dot(x[i], beta));
            for (std::size_t a = 0; a < p; ++a) {
                score[a] += x[i][a] * (y[i] - pi);
                for (std::size_t b = 0; b < p; ++b) info[a][b] += pi * (1 - pi) * x[i][a] * x[i][b];
            }
        }
        const Matrix inv = invert(info);
        double step = 0;
        for (std::size_t a = 0; a < p; ++a) {
            double d = 0;
            for (std::size_t b = 0; b < p; ++b) d += inv[a][b] * score[b];
            beta[a] += d;
            step = std::max(step, std::abs(d));
        }
        if (step < 1e-14) break;
    }
    return beta;
}

// B^-1 M B^-1 with B the observed information and M the outer product of
// per-cluster score sums, evaluated at `beta`.
inline Matrix sandwich(const Matrix& x, const std::vector<double>& y, const std::vector<int>& cluster,
                       const std::vector<double>& beta) {
    const std::size_t p = beta.size();
    Matrix bread(p, std::vector<double>(p, 0.0));
    std::map<int, std::vector<double>> u;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double pi = expit(dot(x[i], beta));
        auto& s = u[cluster[i]];
        s.resize(p, 0.0);
        for (std::size_t a = 0; a < p; ++a) {
            s[a] += x[i][a] * (y[i] - pi);
            for (std::size_t b = 0; b < p; ++b) bread[a][b] += pi * (1 - pi) * x[i][a] * x[i][b];
        }
    }
    Matrix meat(p, std::vector<double>(p, 0.0));
    for (const auto& [c, s] : u)
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = 0; b < p; ++b) meat[a][b] += s[a] * s[b];
    const Matrix binv = invert(bread);
    return multiply(multiply(binv, meat), binv);
}

// Maximises a concave function of one variable by successively finer grids.
inline double grid_max_1d(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-9) {
    double center = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    while (half > tol) {
        const int n = 200;
        double best = center, best_f = -INFINITY;
        for (int k = 0; k <= n; ++k) {
            const double t = center - half + 2.0 * half * k / n;
            const double v = f(t);
            if (v > best_f) {
                best_f = v;
                best = t;
            }
        }
        center = best;
        half *= 4.0 / n;
    }
    return center;
}

// Two-dimensional counterpart of grid_max_1d.
inline std::pair<double, double> grid_max_2d(const std::function<double(double, double)>& f, double lo, double hi,
                                             double tol = 1e-9) {
    double ca = 0.5 * (lo + hi), cb = ca, half = 0.5 * (hi - lo);
    while (half > tol) {
        const int n = 60;
        double ba = ca, bb = cb, best_f = -INFINITY;
        for (int i = 0; i <= n; ++i)
            for (int j = 0; j <= n; ++j) {
                const double a = ca - half + 2.0 * half * i / n;
                const double b = cb - half + 2.0 * half * j / n;
                const double v = f(a, b);
                if (v > best_f) {
                    best_f = v;
                    ba = a;
                    bb = b;
                }
            }
        ca = ba;
        cb = bb;
        half *= 4.0 / n;
    }
    return {ca, cb};
}

struct Subject {
    double time;
    bool event;
    int treated;
    double weight = 1.0;
};

// Breslow partial log-likelihood written straight from its definition: for
// every event, its weight times (beta*z - log of the weighted risk-set sum).
inline double breslow_loglik(double beta, const std::vector<Subject>& s) {
    double ll = 0;
    for (const auto& i : s) {
        if (!i.event) continue;
        double denom = 0;
        for (const auto& j : s)
            if (j.time >= i.time) denom += j.weight * std::exp(beta * j.treated);
        ll += i.weight * (beta * i.treated - std::log(denom));
    }
    return ll;
}

// Unit-weight Kaplan-Meier by enumerating the risk set at each event time.
inline double km_survival(const std::vector<double>& times, const std::vector<bool>& events, double t) {
    std::set<double> event_times;
    for (std::size_t i = 0; i < times.size(); ++i)
        if (events[i]) event_times.insert(times[i]);
    double s = 1.0;
    for (double u : event_times) {
        if (u > t) break;
        int at_risk = 0, died = 0;
        for (std::size_t i = 0; i < times.size(); ++i) {
            if (times[i] >= u) ++at_risk;
            if (times[i] == u && events[i]) ++died;
        }
        s *= 1.0 - static_cast<double>(died) / at_risk;
    }
    return s;
}

}  // namespace oracle
