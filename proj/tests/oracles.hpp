#pragma once

// Independent reference implementations used as test oracles. Everything in
// this header is deliberately written as straight-line scalar code with no
// calls into the library's kernel or solver paths.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <utility>
#include <vector>

namespace oracles {

// Plain ijk matrix product, row-major.
inline std::vector<double> matmul(const std::vector<double>& a, const std::vector<double>& b,
                                  std::size_t m, std::size_t k, std::size_t n) {
    std::vector<double> c(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
            c[i * n + j] = acc;
        }
    }
    return c;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

// Unbiased covariance matrix, straight-line.
inline std::vector<double> covariance(const std::vector<double>& rows, std::size_t n,
                                      std::size_t d) {
    std::vector<double> mean(d, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) mean[c] += rows[r * d + c];
    }
    for (double& v : mean) v /= static_cast<double>(n);
    std::vector<double> cov(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            double acc = 0.0;
            for (std::size_t r = 0; r < n; ++r) {
                acc += (rows[r * d + i] - mean[i]) * (rows[r * d + j] - mean[j]);
            }
            cov[i * d + j] = acc / static_cast<double>(n - 1);
        }
    }
    return cov;
}

// Kolmogorov-Smirnov statistic of samples against the U(0,1) CDF.
inline double ks_uniform(std::vector<double> samples) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double cdf = samples[i];  // F(x) = x on [0,1]
        worst = std::max(worst, std::fabs(cdf - static_cast<double>(i) / n));
        worst = std::max(worst, std::fabs(static_cast<double>(i + 1) / n - cdf));
    }
    return worst;
}

// 2-D rotation angle (degrees) that best maps base points onto observed
// points in the least-squares sense.
inline double rotation_angle_deg(const std::vector<std::pair<double, double>>& base,
                                 const std::vector<std::pair<double, double>>& observed) {
    double s = 0.0, c = 0.0;
    for (std::size_t i = 0; i < base.size(); ++i) {
        c += base[i].first * observed[i].first + base[i].second * observed[i].second;
        s += base[i].first * observed[i].second - base[i].second * observed[i].first;
    }
    return std::atan2(s, c) * 180.0 / 3.14159265358979323846;
}

// Accuracy via an explicit confusion matrix.
inline double confusion_accuracy(const std::vector<int>& pred, const std::vector<int>& truth,
                                 int classes) {
    std::vector<std::vector<std::size_t>> conf(classes, std::vector<std::size_t>(classes, 0));
    for (std::size_t i = 0; i < pred.size(); ++i) conf[truth[i]][pred[i]]++;
    std::size_t diag = 0, total = 0;
    for (int i = 0; i < classes; ++i) {
        for (int j = 0; j < classes; ++j) {
            total += conf[i][j];
            if (i == j) diag += conf[i][j];
        }
    }
    return static_cast<double>(diag) / static_cast<double>(total);
}

// Argmax with first-occurrence tie break.
inline std::size_t argmax_first(const std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = i;
    }
    return best;
}

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------------------
// Brute-force reference for the simplex-weight program:
//   max c.w  s.t.  K-rows w >= rhs,  sum w = 1,  w >= 0
// Vertex enumeration over all choices of m-1 active constraints plus the
// simplex equality, with a feasibility filter. Exact for these tiny sizes.
// ---------------------------------------------------------------------------

struct LpOracleProblem {
    std::vector<double> c;
    std::vector<std::vector<double>> rows;
    std::vector<double> rhs;
};

struct LpOracleResult {
    bool feasible = false;
    double value = 0.0;
    std::vector<double> w;
};

// Gaussian elimination with partial pivoting; returns false when singular.
inline bool solve_linear(std::vector<std::vector<double>> a, std::vector<double> b,
                         std::vector<double>& x) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
        }
        if (std::fabs(a[piv][col]) < 1e-12) return false;
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r][col] / a[col][col];
            if (f == 0.0) continue;
            for (std::size_t cc = col; cc < n; ++cc) a[r][cc] -= f * a[col][cc];
            b[r] -= f * b[col];
        }
    }
    x.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[i] / a[i][i];
    return true;
}

inline LpOracleResult lp_vertex_oracle(const LpOracleProblem& p) {
    const std::size_t m = p.c.size();
    // Constraint pool: inequality rows then the m nonnegativity rows.
    std::vector<std::vector<double>> pool_rows = p.rows;
    std::vector<double> pool_rhs = p.rhs;
    for (std::size_t i = 0; i < m; ++i) {
        std::vector<double> e(m, 0.0);
        e[i] = 1.0;
        pool_rows.push_back(e);
        pool_rhs.push_back(0.0);
    }
    const std::size_t pool = pool_rows.size();

    auto feasible = [&](const std::vector<double>& w) {
        double sum = 0.0;
        for (double v : w) {
            if (v < -1e-9) return false;
            sum += v;
        }
        if (std::fabs(sum - 1.0) > 1e-9) return false;
        for (std::size_t r = 0; r < p.rows.size(); ++r) {
            double lhs = 0.0;
            for (std::size_t i = 0; i < m; ++i) lhs += p.rows[r][i] * w[i];
            if (lhs < p.rhs[r] - 1e-9) return false;
        }
        return true;
    };

    LpOracleResult best;
    std::vector<std::size_t> pick(m - 1);
    // Enumerate all (m-1)-subsets of the pool as active constraints.
    auto consider = [&](const std::vector<std::size_t>& active) {
        std::vector<std::vector<double>> a;
        std::vector<double> b;
        a.push_back(std::vector<double>(m, 1.0));  // sum w = 1
        b.push_back(1.0);
        for (std::size_t idx : active) {
            a.push_back(pool_rows[idx]);
            b.push_back(pool_rhs[idx]);
        }
        std::vector<double> w;
        if (!solve_linear(a, b, w)) return;
        if (!feasible(w)) return;
        double value = 0.0;
        for (std::size_t i = 0; i < m; ++i) value += p.c[i] * w[i];
        if (!best.feasible || value > best.value) {
            best.feasible = true;
            best.value = value;
            best.w = w;
        }
    };

    std::vector<std::size_t> idx(pool);
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<std::size_t> comb;
    // Simple recursive combination walk.
    std::function<void(std::size_t)> rec = [&](std::size_t start) {
        if (comb.size() == m - 1) {
            consider(comb);
            return;
        }
        for (std::size_t i = start; i < pool; ++i) {
            comb.push_back(i);
            rec(i + 1);
            comb.pop_back();
        }
    };
    rec(0);
    // m = 1 would make the equality alone determine w; not used here (m >= 2).
    return best;
}

// Grid scan over the simplex (m = 2 or 3) at the given resolution; refines
// the vertex oracle on a couple of spec'd cases.
inline LpOracleResult lp_grid_oracle(const LpOracleProblem& p, double step) {
    const std::size_t m = p.c.size();
    LpOracleResult best;
    auto consider = [&](const std::vector<double>& w) {
        for (std::size_t r = 0; r < p.rows.size(); ++r) {
            double lhs = 0.0;
            for (std::size_t i = 0; i < m; ++i) lhs += p.rows[r][i] * w[i];
            if (lhs < p.rhs[r] - 1e-9) return;
        }
        double value = 0.0;
        for (std::size_t i = 0; i < m; ++i) value += p.c[i] * w[i];
        if (!best.feasible || value > best.value) {
            best.feasible = true;
            best.value = value;
            best.w = w;
        }
    };
    if (m == 2) {
        for (double t = 0.0; t <= 1.0 + 1e-12; t += step) {
            consider({t, 1.0 - t});
        }
    } else if (m == 3) {
        for (double a = 0.0; a <= 1.0 + 1e-12; a += step) {
            for (double b = 0.0; a + b <= 1.0 + 1e-12; b += step) {
                consider({a, b, 1.0 - a - b});
            }
        }
    }
    return best;
}

}  // namespace oracles
