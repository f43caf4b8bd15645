#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls the solver or estimator code under test.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;

inline double inner(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline Vec softmax(const Vec& z) {
    const double m = *std::max_element(z.begin(), z.end());
    Vec out(z.size());
    double s = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) s += out[i] = std::exp(z[i] - m);
    for (double& v : out) v /= s;
    return out;
}

inline double kl(const Vec& p, const Vec& q) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] > 0.0) s += p[i] * std::log(p[i] / q[i]);
    return s;
}

/// Regret against the best vertex: max over beta in the vertex set of <beta - pi, s>.
inline double vertex_regret(const Vec& pi, const Vec& s) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < s.size(); ++j) best = std::max(best, s[j]);
    return best - inner(pi, s);
}

/// Worst-case regret by enumerating single-coordinate adversaries r + delta e_k and vertex competitors.
struct Adversary {
    double value;
    std::size_t index;
};
inline Adversary enumerate_adversaries(const Vec& pi, const Vec& r, double delta) {
    Adversary best{-std::numeric_limits<double>::infinity(), 0};
    for (std::size_t k = 0; k < r.size(); ++k) {
        Vec s = r;
        s[k] += delta;
        const double v = vertex_regret(pi, s);
        if (v > best.value + 1e-15) best = {v, k};
    }
    return best;
}

/// Minimum of the enumerated worst-case regret over the simplex lattice with spacing 1/res.
/// Adversary k lifts r_k by delta; the best vertex then scores max(max_j r_j, r_k + delta).
inline double lattice_min_regret(const Vec& r, double delta, int res) {
    const std::size_t n = r.size();
    const double top = *std::max_element(r.begin(), r.end());
    std::vector<int> c(n, 0);
    Vec pi(n);
    double best = std::numeric_limits<double>::infinity();
    std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
        if (i + 1 == n) {
            c[i] = left;
            double nominal = 0.0, worst = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < n; ++j) {
                pi[j] = static_cast<double>(c[j]) / res;
                nominal += pi[j] * r[j];
            }
            for (std::size_t k = 0; k < n; ++k) worst = std::max(worst, std::max(top, r[k] + delta) - delta * pi[k]);
            best = std::min(best, worst - nominal);
            return;
        }
        for (int k = 0; k <= left; ++k) {
            c[i] = k;
            rec(i + 1, left - k);
        }
    };
    rec(0, res);
    return best;
}

/// Central finite differences of f with respect to every coordinate of x.
inline Vec finite_difference(const std::function<double(const Vec&)>& f, const Vec& x, double h = 1e-5) {
    Vec g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        Vec up = x, dn = x;
        up[i] += h;
        dn[i] -= h;
        g[i] = (f(up) - f(dn)) / (2.0 * h);
    }
    return g;
}

inline double max_rel_error(const Vec& exact, const Vec& approx, double floor = 1e-3) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < exact.size(); ++i) {
        num = std::max(num, std::abs(exact[i] - approx[i]));
        den = std::max(den, std::abs(approx[i]));
    }
    return num / std::max(den, floor);
}

/// Small deterministic generator helpers on std::mt19937_64.
struct Draw {
    std::mt19937_64 gen;
    explicit Draw(std::uint64_t seed) : gen(seed) {}
    double uniform(double a = 0.0, double b = 1.0) { return std::uniform_real_distribution<double>(a, b)(gen); }
    double normal(double sd = 1.0) { return std::normal_distribution<double>(0.0, sd)(gen); }
    std::size_t integer(std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(gen);
    }
    Vec normals(std::size_t n, double sd = 1.0) {
        Vec v(n);
        for (double& x : v) x = normal(sd);
        return v;
    }
    Vec simplex(std::size_t n) {
        Vec v(n);
        double s = 0.0;
        for (double& x : v) s += x = std::exponential_distribution<double>(1.0)(gen);
        for (double& x : v) x /= s;
        return v;
    }
    std::size_t categorical(const Vec& p) { return std::discrete_distribution<std::size_t>(p.begin(), p.end())(gen); }
};

}  // namespace oracle
