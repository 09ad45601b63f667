#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mixdg/losses.hpp"
#include "mixdg/mixup.hpp"
#include "mixdg/rng.hpp"

namespace mixdg {

// Inputs to one weight solve: the per-objective theta_f gradient columns,
// the guidance gradient, the guidance loss, and the relaxation threshold.
struct GradientProblem {
    std::vector<std::vector<double>> columns;  // m columns over theta_f
    std::vector<double> g_optd;
    double ell_optd = 0.0;
    double epsilon = 1e-3;
    std::uint64_t version = 0;  // feat parameter version the columns belong to

    std::size_t m() const { return columns.size(); }
    std::size_t dim() const { return g_optd.size(); }
    void validate() const;  // m >= 2, equal lengths, finite entries
};

// J = {j : g_optd . g_j > 0}, J_bar the strictly negative set, J_star the
// argmax set of the dot products (ties kept whole, 1e-10 absolute tolerance).
struct IndexSets {
    std::vector<int> J;
    std::vector<int> J_bar;
    std::vector<int> J_star;
    std::vector<double> dots;
};

IndexSets build_index_sets(const GradientProblem& problem);

enum class ParetoMode { PureDescent, GuidanceDescent };
enum class LpStatus { Optimal, FallbackMean };

std::string to_string(ParetoMode m);
std::string to_string(LpStatus s);

struct SimplexWeights {
    std::vector<double> omega;      // on the simplex
    std::vector<double> direction;  // d = G omega
    double gamma_star = 0.0;        // d . g_optd
    double objective_value = 0.0;   // LP objective at omega
    ParetoMode mode = ParetoMode::GuidanceDescent;
    LpStatus lp_status = LpStatus::Optimal;
    std::vector<double> constraint_slacks;  // active inequality slack per row
    std::uint64_t version = 0;
};

// Guidance mode (ell_optd > epsilon): maximize (G w).g_optd subject to
// (G w).g_j >= [J nonempty] g_optd.g_j for j in J_bar \ J_star and
// (G w).g_j >= 0 for j in J_star. At or below epsilon the problem is solved
// in its guidance-loss-zero limit: maximize (G w).(G 1/m) subject to
// (G w).g_j >= 0 for every j. Infeasible solves fall back to uniform
// weights; non-finite arithmetic is a hard error.
SimplexWeights solve_lp(const GradientProblem& problem, const IndexSets& sets);

struct Theorem1Report {
    struct Predicate {
        std::string name;
        double margin = 0.0;  // >= 0 means the predicate holds
        bool ok = true;
    };
    ParetoMode mode = ParetoMode::GuidanceDescent;
    double gamma_star = 0.0;
    std::vector<Predicate> predicates;
    bool pass = true;
};

// Descent/guidance dichotomy: below the threshold every objective dot must
// be >= -1e-8; above it, gamma_star > 0 certifies guidance alignment, else
// every objective dot must again be >= -1e-8.
Theorem1Report theorem1_check(const SimplexWeights& weights, const GradientProblem& problem);

enum class GuidanceScope { Whole, Batch };

struct GuidanceResult {
    std::vector<double> g_optd;
    double ell_optd = 0.0;
};

// Classification-loss gradient over the guidance set: Whole averages over
// all samples, Batch over one drawn mini-batch.
GuidanceResult compute_guidance(ModelBundle& bundle, const std::vector<MixSample>& optd,
                                GuidanceScope scope, std::size_t batch_size, Rng& rng);

// theta_f <- theta_f - lr * d; each head steps along its own accumulated
// gradient. Throws StateError when the weights were computed against an
// older parameter snapshot.
void fuse_and_apply(ModelBundle& bundle, const SimplexWeights& weights, double learning_rate);

// Shared by the fixed-weight baseline path: identical update rule, caller
// supplies the direction.
void apply_direction(ModelBundle& bundle, const std::vector<double>& direction,
                     double learning_rate, std::uint64_t version);

}  // namespace mixdg
