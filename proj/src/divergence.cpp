#include "mixdg/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mixdg/errors.hpp"
#include "mixdg/network.hpp"
#include "mixdg/rng.hpp"
#include "mixdg/selection.hpp"

namespace mixdg {
namespace {

struct ProbeOutcome {
    double heldout_err = 0.0;
    double proxy = 0.0;
};

ProbeOutcome run_probe(const Tensor& set_a, const Tensor& set_b, const ProbeSpec& probe,
                       std::uint64_t seed) {
    if (set_a.rows() < 20 || set_b.rows() < 20) {
        throw DataError("proxy A-distance needs at least 20 samples per set");
    }
    if (set_a.cols() != set_b.cols()) throw DimensionError("probe sets disagree on width");

    Rng rng(seed);
    auto halves = [&](std::size_t n, std::uint64_t stream) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        Rng r = rng.derive(stream);
        r.shuffle(idx);
        return idx;
    };
    const std::vector<std::size_t> ia = halves(set_a.rows(), 1);
    const std::vector<std::size_t> ib = halves(set_b.rows(), 2);
    const std::size_t half_a = set_a.rows() / 2;
    const std::size_t half_b = set_b.rows() / 2;

    const std::size_t d = set_a.cols();
    auto build = [&](bool train) {
        const std::size_t na = train ? half_a : set_a.rows() - half_a;
        const std::size_t nb = train ? half_b : set_b.rows() - half_b;
        Tensor x({na + nb, d});
        std::vector<int> y(na + nb, 0);
        for (std::size_t i = 0; i < na; ++i) {
            const std::size_t src = ia[train ? i : half_a + i];
            for (std::size_t c = 0; c < d; ++c) x.at(i, c) = set_a.at(src, c);
        }
        for (std::size_t i = 0; i < nb; ++i) {
            const std::size_t src = ib[train ? i : half_b + i];
            for (std::size_t c = 0; c < d; ++c) x.at(na + i, c) = set_b.at(src, c);
            y[na + i] = 1;
        }
        return std::pair<Tensor, std::vector<int>>(std::move(x), std::move(y));
    };
    auto [train_x, train_y] = build(true);
    auto [test_x, test_y] = build(false);

    NetworkSpec spec;
    spec.layers = {{d, static_cast<std::size_t>(probe.hidden_width), Activation::Relu},
                   {static_cast<std::size_t>(probe.hidden_width), 2, Activation::Identity}};
    spec.seed = rng.derive(3).index(1u << 30);
    DenseNet net(spec);

    const Tensor labels = onehot(train_y, 2);
    for (int e = 0; e < probe.epochs; ++e) {
        net.zero_grads();
        const Tensor logits = net.forward(train_x);
        const CrossEntropyResult ce = cross_entropy(logits, labels);
        net.backward(ce.dlogits);
        const std::vector<double> g = net.params().flat_grads();
        net.params().apply_flat_step(g.data(), -probe.learning_rate);
    }

    const Tensor logits = net.forward(test_x);
    std::size_t wrong = 0;
    for (std::size_t r = 0; r < test_x.rows(); ++r) {
        const int pred = logits.at(r, 1) > logits.at(r, 0) ? 1 : 0;
        if (pred != test_y[r]) ++wrong;
    }
    ProbeOutcome out;
    out.heldout_err = static_cast<double>(wrong) / static_cast<double>(test_x.rows());
    // Anti-learning noise would give err > 0.5 and a negative distance.
    out.heldout_err = std::min(out.heldout_err, 0.5);
    out.proxy = std::clamp(2.0 * (1.0 - 2.0 * out.heldout_err), 0.0, 2.0);
    return out;
}

}  // namespace

double proxy_a_distance(const Tensor& set_a, const Tensor& set_b, const ProbeSpec& probe,
                        std::uint64_t seed) {
    return run_probe(set_a, set_b, probe, seed).proxy;
}

DivergenceReport bound_terms_report(const DomainDataset& sources, const DomainDataset& val_split,
                                    const std::vector<MixSample>& vald,
                                    const DomainDataset& target, ModelBundle& bundle,
                                    const ProbeSpec& probe, std::uint64_t seed) {
    DivergenceReport report;
    Rng rng(seed);

    for (int i = 0; i < sources.domain_count; ++i) {
        for (int j = i + 1; j < sources.domain_count; ++j) {
            const DomainDataset a = sources.subset(sources.indices_of_domain(i));
            const DomainDataset b = sources.subset(sources.indices_of_domain(j));
            const ProbeOutcome po = run_probe(a.features, b.features, probe,
                                              rng.derive(100 + i * 37 + j).index(1u << 30));
            DivergenceReport::PairEntry entry;
            entry.label = "P" + std::to_string(i) + "-P" + std::to_string(j);
            entry.proxy_a_distance = po.proxy;
            entry.heldout_err = po.heldout_err;
            report.max_pairwise_source = std::max(report.max_pairwise_source, po.proxy);
            report.source_pairs.push_back(std::move(entry));
        }
    }

    for (int i = 0; i < sources.domain_count; ++i) {
        const DomainDataset s = sources.subset(sources.indices_of_domain(i));
        report.per_source_error.push_back(1.0 - evaluate_accuracy(bundle, s));
    }
    for (double e : report.per_source_error) {
        report.weighted_source_error += e / static_cast<double>(report.per_source_error.size());
    }

    report.proxy_trainsplit_val_vs_target =
        proxy_a_distance(val_split.features, target.features, probe, rng.derive(7).index(1u << 30));
    report.proxy_vald_vs_target =
        proxy_a_distance(mix_features(vald), target.features, probe, rng.derive(8).index(1u << 30));
    return report;
}

std::string to_json(const DivergenceReport& report) {
    std::ostringstream os;
    os.precision(17);
    os << "{";
    os << "\"source_pairs\":{";
    for (std::size_t i = 0; i < report.source_pairs.size(); ++i) {
        const auto& p = report.source_pairs[i];
        if (i) os << ",";
        os << "\"" << p.label << "\":{\"proxy_a_distance\":" << p.proxy_a_distance
           << ",\"heldout_err\":" << p.heldout_err << "}";
    }
    os << "},\"max_pairwise_source\":" << report.max_pairwise_source;
    os << ",\"per_source_error\":[";
    for (std::size_t i = 0; i < report.per_source_error.size(); ++i) {
        if (i) os << ",";
        os << report.per_source_error[i];
    }
    os << "],\"weighted_source_error\":" << report.weighted_source_error;
    os << ",\"proxy_trainsplit_val_vs_target\":" << report.proxy_trainsplit_val_vs_target;
    os << ",\"proxy_vald_vs_target\":" << report.proxy_vald_vs_target;
    os << "}";
    return os.str();
}

}  // namespace mixdg
