#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mixdg/dataset.hpp"
#include "mixdg/rng.hpp"
#include "mixdg/tensor.hpp"

namespace mixdg {

struct MixupConfig {
    double alpha = 0.2;     // Beta(alpha, alpha) concentration
    std::uint64_t seed = 0;
    std::size_t count = 0;  // number of virtual samples to generate

    void validate() const;
};

enum class MixRule { Vanilla, OptdCrossDomain, OptdWithinDomain, Vald };

std::string to_string(MixRule r);

// One generated virtual example with full provenance, so every structural
// constraint and the convex combination itself stay checkable after the fact.
struct MixSample {
    Tensor x;                     // length-d feature vector
    std::vector<double> y;        // soft label, length C, sums to 1
    double lambda = 0.0;
    std::size_t parent_i = 0;
    std::size_t parent_j = 0;
    int domain_i = 0;
    int domain_j = 0;
    MixRule rule = MixRule::Vanilla;
};

// lambda ~ Beta(alpha, alpha) restricted to the open interval (0, 1);
// exact endpoint draws are rejected and resampled.
double sample_lambda(const MixupConfig& cfg, Rng& rng);

// Plain Mixup over uniformly drawn distinct parents; labels interpolate.
std::vector<MixSample> gen_vanilla(const DomainDataset& data, const MixupConfig& cfg);

// Guidance set: ceil(count/2) cross-domain same-class mixes with hard labels,
// floor(count/2) within-domain arbitrary-class mixes with soft labels.
std::vector<MixSample> gen_optd(const DomainDataset& sources, const MixupConfig& cfg);

// Selection set: same-class mixes, domains unconstrained, hard labels.
std::vector<MixSample> gen_vald(const DomainDataset& sources, const MixupConfig& cfg);

// Batch views over a generated set.
Tensor mix_features(const std::vector<MixSample>& samples);
Tensor mix_soft_labels(const std::vector<MixSample>& samples, int class_count);
bool is_hard_label(const std::vector<double>& y, double tol = 1e-9);
// Argmax of a one-hot label; throws ContractError on soft labels.
std::vector<int> mix_hard_labels(const std::vector<MixSample>& samples);

void save_mixsamples_csv(const std::string& path, const std::vector<MixSample>& samples);

}  // namespace mixdg
