#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mixdg/network.hpp"
#include "mixdg/tensor.hpp"

namespace mixdg {

enum class Method { Erm, ErmPerSource, Dann, Coral };

Method method_from_string(const std::string& s);
std::string to_string(Method m);

// Feature extractor + classification head, plus the domain discriminator for
// the adversarial method. The discriminator input width must equal the
// feature width and its output width the source-domain count.
struct ModelBundle {
    Method method = Method::Erm;
    DenseNet feat;
    DenseNet clf;
    std::optional<DenseNet> disc;
    int domain_count = 0;

    ModelBundle(Method m, NetworkSpec feat_spec, NetworkSpec clf_spec,
                std::optional<NetworkSpec> disc_spec, int domains);

    std::size_t feature_width() const { return feat.spec().output_width(); }
    void zero_all_grads();

    struct Snapshot {
        std::vector<double> feat, clf, disc;
    };
    Snapshot snapshot() const;
    void restore(const Snapshot& s);
};

struct LossVector {
    std::vector<double> values;
    std::vector<std::string> labels;

    std::size_t size() const { return values.size(); }
};

struct CrossEntropyResult {
    double loss = 0.0;
    Tensor dlogits;  // (softmax - y) / batch
};

// Mean batch cross-entropy against (possibly soft) label rows.
CrossEntropyResult cross_entropy(const Tensor& logits, const Tensor& soft_labels);

Tensor onehot(const std::vector<int>& labels, int class_count);

// Identity forward, exact sign flip backward.
namespace grl {
Tensor forward(const Tensor& x);
Tensor backward(const Tensor& upstream);
}  // namespace grl

struct CoralResult {
    double loss = 0.0;
    Tensor grad_a;
    Tensor grad_b;
};

// || Cov(A) - Cov(B) ||_F^2 / (4 d^2), covariances with 1/(n-1).
CoralResult coral_loss(const Tensor& features_a, const Tensor& features_b);

// One pooled batch with per-row provenance. Rows are grouped per domain (the
// harness samples equal per-domain chunks).
struct TrainBatch {
    Tensor x;                  // n x d inputs
    Tensor y;                  // n x C soft labels (one-hot for real data)
    std::vector<int> domains;  // per-row source domain
    int domain_count = 0;
};

// Per-objective losses and theta_f gradient columns for one batch. Head
// gradients (h_c and, for DANN, h_adv) are left accumulated in the bundle,
// each holding exactly its own objective's gradient. For DANN the theta_f
// column of the domain objective is the gradient-reversed one, i.e. the
// gradient of the minimax objective the feature extractor actually descends.
struct ObjectiveGrads {
    LossVector losses;
    std::vector<std::vector<double>> feat_columns;
    std::uint64_t feat_version = 0;
};

ObjectiveGrads compute_objectives(ModelBundle& bundle, const TrainBatch& batch);

// Fixed-weight baseline direction: grad l_0 + sum_i lambda_i * grad l_i over
// theta_f. Lambdas must be non-negative and of length m - 1.
std::vector<double> scalarized_direction(const ObjectiveGrads& grads,
                                         const std::vector<double>& lambdas);

// Forward through feature extractor + classifier.
Tensor predict_logits(ModelBundle& bundle, const Tensor& x);

}  // namespace mixdg
