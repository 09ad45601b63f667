#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mixdg/dataset.hpp"
#include "mixdg/losses.hpp"
#include "mixdg/mixup.hpp"
#include "mixdg/tensor.hpp"

namespace mixdg {

// Probe classifier used to estimate distribution distance; fresh init per
// call, small enough to be cheap.
struct ProbeSpec {
    int hidden_width = 16;
    int epochs = 200;
    double learning_rate = 0.1;
};

// 2 (1 - 2 err) for a freshly trained A-vs-B probe on a 50/50 split, with
// the held-out error clipped to [0, 0.5] first so the result stays in [0, 2].
double proxy_a_distance(const Tensor& set_a, const Tensor& set_b, const ProbeSpec& probe,
                        std::uint64_t seed);

struct DivergenceReport {
    struct PairEntry {
        std::string label;
        double proxy_a_distance = 0.0;
        double heldout_err = 0.0;
    };
    std::vector<PairEntry> source_pairs;
    double max_pairwise_source = 0.0;

    std::vector<double> per_source_error;  // 1 - accuracy of the trained bundle
    double weighted_source_error = 0.0;    // uniform-phi weighted mean

    double proxy_trainsplit_val_vs_target = 0.0;
    double proxy_vald_vs_target = 0.0;
};

// Measurable terms of the generalization bound for a trained bundle: the
// weighted source errors, the max pairwise source divergence, and the
// divergence of each validation signal from the target.
DivergenceReport bound_terms_report(const DomainDataset& sources, const DomainDataset& val_split,
                                    const std::vector<MixSample>& vald,
                                    const DomainDataset& target, ModelBundle& bundle,
                                    const ProbeSpec& probe, std::uint64_t seed);

std::string to_json(const DivergenceReport& report);

}  // namespace mixdg
