#include "mixdg/pareto.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mixdg/errors.hpp"
#include "mixdg/kernels.hpp"

namespace mixdg {

void GradientProblem::validate() const {
    if (columns.size() < 2) throw ContractError("gradient problem needs m >= 2 objectives");
    if (!(epsilon > 0.0)) throw ContractError("epsilon must be > 0");
    for (const auto& col : columns) {
        if (col.size() != g_optd.size()) {
            throw DimensionError("gradient column length differs from g_optd");
        }
        for (double v : col) {
            if (!std::isfinite(v)) throw NumericError("gradient column has a non-finite entry");
        }
    }
    for (double v : g_optd) {
        if (!std::isfinite(v)) throw NumericError("g_optd has a non-finite entry");
    }
    if (!std::isfinite(ell_optd)) throw NumericError("ell_optd is non-finite");
}

std::string to_string(ParetoMode m) {
    return m == ParetoMode::PureDescent ? "pure-descent" : "guidance-descent";
}

std::string to_string(LpStatus s) {
    return s == LpStatus::Optimal ? "optimal" : "fallback-mean";
}

IndexSets build_index_sets(const GradientProblem& problem) {
    problem.validate();
    const auto& k = kernels::active();
    IndexSets sets;
    sets.dots.resize(problem.m());
    for (std::size_t j = 0; j < problem.m(); ++j) {
        sets.dots[j] = k.dot(problem.g_optd.data(), problem.columns[j].data(), problem.dim());
    }
    const double best = *std::max_element(sets.dots.begin(), sets.dots.end());
    constexpr double kTieTol = 1e-10;
    for (std::size_t j = 0; j < problem.m(); ++j) {
        if (sets.dots[j] > 0.0) sets.J.push_back(static_cast<int>(j));
        if (sets.dots[j] < 0.0) sets.J_bar.push_back(static_cast<int>(j));
        if (sets.dots[j] >= best - kTieTol) sets.J_star.push_back(static_cast<int>(j));
    }
    return sets;
}

namespace {

// max c.w  s.t.  A w >= b,  sum(w) = 1,  w >= 0.
struct LpInput {
    std::vector<double> c;
    std::vector<std::vector<double>> rows;
    std::vector<double> rhs;
};

struct LpOutput {
    bool feasible = false;
    std::vector<double> w;
    double value = 0.0;
};

constexpr double kPivotEps = 1e-11;
constexpr double kFeasEps = 1e-9;

// Dense two-phase simplex with Bland's rule. Problem sizes here are tiny
// (m <= 8 variables, m + 1 rows), so no effort is spent on sparsity.
LpOutput simplex_solve(const LpInput& in) {
    const std::size_t nvar = in.c.size();
    const std::size_t nineq = in.rows.size();
    const std::size_t nrows = nineq + 1;                  // + simplex equality
    const std::size_t nslack = nineq;                     // surplus per inequality
    const std::size_t nart = nrows;                       // artificial per row
    const std::size_t ncols = nvar + nslack + nart + 1;   // + rhs

    // Tableau rows: [vars | surplus | artificial | rhs]
    std::vector<std::vector<double>> t(nrows, std::vector<double>(ncols, 0.0));
    for (std::size_t r = 0; r < nineq; ++r) {
        for (std::size_t v = 0; v < nvar; ++v) t[r][v] = in.rows[r][v];
        t[r][nvar + r] = -1.0;  // A w - s = b
        t[r][ncols - 1] = in.rhs[r];
    }
    for (std::size_t v = 0; v < nvar; ++v) t[nineq][v] = 1.0;
    t[nineq][ncols - 1] = 1.0;

    for (std::size_t r = 0; r < nrows; ++r) {
        if (t[r][ncols - 1] < 0.0) {
            for (double& x : t[r]) x = -x;
        }
        t[r][nvar + nslack + r] = 1.0;
    }

    std::vector<std::size_t> basis(nrows);
    for (std::size_t r = 0; r < nrows; ++r) basis[r] = nvar + nslack + r;

    auto pivot = [&](std::size_t prow, std::size_t pcol) {
        const double pv = t[prow][pcol];
        for (double& x : t[prow]) x /= pv;
        for (std::size_t r = 0; r < nrows; ++r) {
            if (r == prow) continue;
            const double f = t[r][pcol];
            if (f == 0.0) continue;
            for (std::size_t cidx = 0; cidx < ncols; ++cidx) t[r][cidx] -= f * t[prow][cidx];
        }
        basis[prow] = pcol;
    };

    // Runs the simplex loop on the given objective row (maximization,
    // reduced costs z_j - c_j stored in obj). Bland's rule: smallest
    // eligible column, smallest ratio row with smallest basis tie-break.
    auto optimize = [&](std::vector<double>& obj, std::size_t usable_cols) {
        for (int iter = 0; iter < 10000; ++iter) {
            std::size_t pcol = usable_cols;
            for (std::size_t cidx = 0; cidx < usable_cols; ++cidx) {
                if (obj[cidx] < -kPivotEps) {
                    pcol = cidx;
                    break;
                }
            }
            if (pcol == usable_cols) return true;  // optimal
            std::size_t prow = nrows;
            double best_ratio = 0.0;
            for (std::size_t r = 0; r < nrows; ++r) {
                if (t[r][pcol] > kPivotEps) {
                    const double ratio = t[r][ncols - 1] / t[r][pcol];
                    if (prow == nrows || ratio < best_ratio - 1e-15 ||
                        (std::fabs(ratio - best_ratio) <= 1e-15 && basis[r] < basis[prow])) {
                        prow = r;
                        best_ratio = ratio;
                    }
                }
            }
            if (prow == nrows) return false;  // unbounded (cannot happen on the simplex)
            pivot(prow, pcol);
            for (std::size_t cidx = 0; cidx < ncols; ++cidx) {
                if (!std::isfinite(t[0][cidx])) throw NumericError("simplex tableau went non-finite");
            }
            const double f = obj[pcol];
            for (std::size_t cidx = 0; cidx < ncols; ++cidx) obj[cidx] -= f * t[prow][cidx];
        }
        throw NumericError("simplex failed to converge");
    };

    // Phase 1: minimize the artificial mass.
    std::vector<double> obj1(ncols, 0.0);
    for (std::size_t r = 0; r < nrows; ++r) {
        for (std::size_t cidx = 0; cidx < ncols; ++cidx) obj1[cidx] -= t[r][cidx];
    }
    for (std::size_t a = 0; a < nart; ++a) obj1[nvar + nslack + a] = 0.0;
    if (!optimize(obj1, nvar + nslack)) return {};
    if (-obj1[ncols - 1] > kFeasEps) return {};  // leftover artificial mass -> infeasible

    // Drive any degenerate artificial out of the basis.
    for (std::size_t r = 0; r < nrows; ++r) {
        if (basis[r] >= nvar + nslack) {
            std::size_t cidx = 0;
            for (; cidx < nvar + nslack; ++cidx) {
                if (std::fabs(t[r][cidx]) > kPivotEps) break;
            }
            if (cidx < nvar + nslack) pivot(r, cidx);
        }
    }

    // Phase 2: maximize c.w, expressed as reduced costs over the tableau.
    std::vector<double> obj2(ncols, 0.0);
    for (std::size_t v = 0; v < nvar; ++v) obj2[v] = -in.c[v];
    for (std::size_t r = 0; r < nrows; ++r) {
        if (basis[r] < nvar) {
            const double f = obj2[basis[r]];
            if (f != 0.0) {
                for (std::size_t cidx = 0; cidx < ncols; ++cidx) obj2[cidx] -= f * t[r][cidx];
            }
        }
    }
    if (!optimize(obj2, nvar + nslack)) return {};

    LpOutput out;
    out.feasible = true;
    out.w.assign(nvar, 0.0);
    for (std::size_t r = 0; r < nrows; ++r) {
        if (basis[r] < nvar) out.w[basis[r]] = t[r][ncols - 1];
    }
    out.value = 0.0;
    for (std::size_t v = 0; v < nvar; ++v) out.value += in.c[v] * out.w[v];
    return out;
}

}  // namespace

SimplexWeights solve_lp(const GradientProblem& problem, const IndexSets& sets) {
    problem.validate();
    const auto& k = kernels::active();
    const std::size_t m = problem.m();
    const std::size_t dim = problem.dim();

    // Gram matrix K[i][j] = g_i . g_j; every LP quantity lives in this space.
    std::vector<std::vector<double>> gram(m, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i; j < m; ++j) {
            gram[i][j] = gram[j][i] =
                k.dot(problem.columns[i].data(), problem.columns[j].data(), dim);
        }
    }

    const bool guidance = problem.ell_optd > problem.epsilon;
    LpInput lp;
    lp.c.assign(m, 0.0);
    if (guidance) {
        // c_i = g_i . g_optd
        lp.c = sets.dots;
        const bool j_nonempty = !sets.J.empty();
        std::vector<bool> in_star(m, false);
        for (int j : sets.J_star) in_star[j] = true;
        for (int j : sets.J_bar) {
            if (in_star[j]) continue;
            lp.rows.push_back(gram[j]);
            lp.rhs.push_back(j_nonempty ? sets.dots[j] : 0.0);
        }
        for (int j : sets.J_star) {
            lp.rows.push_back(gram[j]);
            lp.rhs.push_back(0.0);
        }
    } else {
        // Guidance loss at its floor: the paper's ell_optd = 0 case, where
        // g_optd vanishes and every objective becomes a descent constraint.
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) lp.c[i] += gram[i][j] / static_cast<double>(m);
        }
        for (std::size_t j = 0; j < m; ++j) {
            lp.rows.push_back(gram[j]);
            lp.rhs.push_back(0.0);
        }
    }

    SimplexWeights out;
    out.mode = guidance ? ParetoMode::GuidanceDescent : ParetoMode::PureDescent;
    out.version = problem.version;

    const LpOutput sol = simplex_solve(lp);
    if (sol.feasible) {
        out.lp_status = LpStatus::Optimal;
        out.omega = sol.w;
        out.objective_value = sol.value;
    } else {
        out.lp_status = LpStatus::FallbackMean;
        out.omega.assign(m, 1.0 / static_cast<double>(m));
        out.objective_value = 0.0;
        for (std::size_t i = 0; i < m; ++i) out.objective_value += lp.c[i] * out.omega[i];
    }

    out.direction.assign(dim, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        k.axpy(out.omega[i], problem.columns[i].data(), out.direction.data(), dim);
    }
    out.gamma_star = k.dot(out.direction.data(), problem.g_optd.data(), dim);
    for (std::size_t r = 0; r < lp.rows.size(); ++r) {
        double lhs = 0.0;
        for (std::size_t i = 0; i < m; ++i) lhs += lp.rows[r][i] * out.omega[i];
        out.constraint_slacks.push_back(lhs - lp.rhs[r]);
    }
    for (double v : out.direction) {
        if (!std::isfinite(v)) throw NumericError("fused direction has a non-finite entry");
    }
    return out;
}

Theorem1Report theorem1_check(const SimplexWeights& weights, const GradientProblem& problem) {
    const auto& k = kernels::active();
    Theorem1Report report;
    report.mode = weights.mode;
    report.gamma_star = weights.gamma_star;

    constexpr double kDescentTol = -1e-8;
    auto add_descent_predicates = [&] {
        for (std::size_t j = 0; j < problem.m(); ++j) {
            const double dj =
                k.dot(weights.direction.data(), problem.columns[j].data(), problem.dim());
            Theorem1Report::Predicate p;
            p.name = "d.g_" + std::to_string(j) + " >= 0";
            p.margin = dj - kDescentTol;
            p.ok = dj >= kDescentTol;
            report.pass = report.pass && p.ok;
            report.predicates.push_back(std::move(p));
        }
    };

    if (weights.mode == ParetoMode::PureDescent) {
        add_descent_predicates();
    } else if (weights.gamma_star > 0.0) {
        Theorem1Report::Predicate p;
        p.name = "d.g_optd > 0";
        p.margin = weights.gamma_star;
        p.ok = weights.gamma_star > 0.0;
        report.pass = p.ok;
        report.predicates.push_back(std::move(p));
    } else {
        add_descent_predicates();
    }
    return report;
}

GuidanceResult compute_guidance(ModelBundle& bundle, const std::vector<MixSample>& optd,
                                GuidanceScope scope, std::size_t batch_size, Rng& rng) {
    if (optd.empty()) throw DataError("guidance set is empty");

    std::vector<MixSample> subset;
    const std::vector<MixSample>* used = &optd;
    if (scope == GuidanceScope::Batch) {
        const std::size_t n = std::min(batch_size, optd.size());
        if (n == 0) throw DataError("guidance batch size is zero");
        subset.reserve(n);
        for (std::size_t i = 0; i < n; ++i) subset.push_back(optd[rng.index(optd.size())]);
        used = &subset;
    }

    const int c = static_cast<int>(used->front().y.size());
    const Tensor x = mix_features(*used);
    const Tensor y = mix_soft_labels(*used, c);

    const Tensor feat_out = bundle.feat.forward(x);
    const Tensor logits = bundle.clf.forward(feat_out);
    const CrossEntropyResult ce = cross_entropy(logits, y);

    // Only theta_f matters here; the classifier head gradient is discarded.
    std::vector<double> saved_clf = bundle.clf.params().flat_grads();
    bundle.clf.zero_grads();
    const Tensor dfeat = bundle.clf.backward(ce.dlogits);
    bundle.feat.zero_grads();
    bundle.feat.backward(dfeat);

    GuidanceResult out;
    out.g_optd = bundle.feat.params().flat_grads();
    out.ell_optd = ce.loss;

    // Restore whatever the caller had accumulated on the classifier.
    unflatten_grads(saved_clf, {&bundle.clf.params()});
    bundle.feat.zero_grads();
    return out;
}

void apply_direction(ModelBundle& bundle, const std::vector<double>& direction,
                     double learning_rate, std::uint64_t version) {
    if (bundle.feat.params().version() != version) {
        throw StateError("gradient snapshot is stale: parameters changed since it was computed");
    }
    if (direction.size() != bundle.feat.params().flat_size()) {
        throw DimensionError("direction length does not match theta_f");
    }
    bundle.feat.params().apply_flat_step(direction.data(), -learning_rate);

    const std::vector<double> clf_grads = bundle.clf.params().flat_grads();
    bundle.clf.params().apply_flat_step(clf_grads.data(), -learning_rate);
    if (bundle.disc) {
        const std::vector<double> disc_grads = bundle.disc->params().flat_grads();
        bundle.disc->params().apply_flat_step(disc_grads.data(), -learning_rate);
    }
}

void fuse_and_apply(ModelBundle& bundle, const SimplexWeights& weights, double learning_rate) {
    apply_direction(bundle, weights.direction, learning_rate, weights.version);
}

}  // namespace mixdg
