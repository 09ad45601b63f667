#include "mixdg/mixup.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "mixdg/errors.hpp"

namespace mixdg {

void MixupConfig::validate() const {
    if (!(alpha > 0.0)) throw ConfigError("mixup alpha must be > 0");
}

std::string to_string(MixRule r) {
    switch (r) {
        case MixRule::Vanilla: return "vanilla";
        case MixRule::OptdCrossDomain: return "optd-cross-domain";
        case MixRule::OptdWithinDomain: return "optd-within-domain";
        case MixRule::Vald: return "vald";
    }
    return "?";
}

double sample_lambda(const MixupConfig& cfg, Rng& rng) {
    cfg.validate();
    for (;;) {
        const double a = rng.gamma(cfg.alpha);
        const double b = rng.gamma(cfg.alpha);
        if (a + b == 0.0) continue;
        const double lam = a / (a + b);
        if (lam > 0.0 && lam < 1.0) return lam;
    }
}

namespace {

// x~ = lambda * x_i + (1 - lambda) * x_j, spelled exactly like this so any
// recomputation of the formula reproduces it bit for bit.
MixSample make_mix(const DomainDataset& data, std::size_t i, std::size_t j, double lambda,
                   MixRule rule) {
    const std::size_t d = data.feature_width();
    MixSample s;
    s.x = Tensor({d});
    for (std::size_t t = 0; t < d; ++t) {
        s.x[t] = lambda * data.features.at(i, t) + (1.0 - lambda) * data.features.at(j, t);
    }
    s.y.assign(data.class_count, 0.0);
    if (rule == MixRule::OptdWithinDomain || rule == MixRule::Vanilla) {
        s.y[data.labels[i]] += lambda;
        s.y[data.labels[j]] += 1.0 - lambda;
    } else {
        s.y[data.labels[i]] = 1.0;  // same-class rules keep the hard label
    }
    s.lambda = lambda;
    s.parent_i = i;
    s.parent_j = j;
    s.domain_i = data.domains[i];
    s.domain_j = data.domains[j];
    s.rule = rule;
    return s;
}

}  // namespace

std::vector<MixSample> gen_vanilla(const DomainDataset& data, const MixupConfig& cfg) {
    cfg.validate();
    if (data.size() < 2) throw DataError("vanilla mixup needs at least 2 samples");
    Rng rng(cfg.seed);
    std::vector<MixSample> out;
    out.reserve(cfg.count);
    for (std::size_t k = 0; k < cfg.count; ++k) {
        const std::size_t i = rng.index(data.size());
        std::size_t j = i;
        while (j == i) j = rng.index(data.size());
        out.push_back(make_mix(data, i, j, sample_lambda(cfg, rng), MixRule::Vanilla));
    }
    return out;
}

std::vector<MixSample> gen_optd(const DomainDataset& sources, const MixupConfig& cfg) {
    cfg.validate();
    if (sources.domain_count < 2) throw DataError("optd needs at least 2 domains");

    // Cells indexed by (class, domain); part one needs every class in >= 2 domains.
    std::vector<std::vector<std::vector<std::size_t>>> cell(
        sources.class_count, std::vector<std::vector<std::size_t>>(sources.domain_count));
    for (std::size_t i = 0; i < sources.size(); ++i) {
        cell[sources.labels[i]][sources.domains[i]].push_back(i);
    }
    for (int c = 0; c < sources.class_count; ++c) {
        int domains_with_class = 0;
        for (int d = 0; d < sources.domain_count; ++d) {
            if (!cell[c][d].empty()) ++domains_with_class;
        }
        if (domains_with_class < 2) {
            throw GenerationError("class " + std::to_string(c) +
                                  " is present in fewer than 2 domains");
        }
    }

    Rng rng(cfg.seed);
    std::vector<MixSample> out;
    out.reserve(cfg.count);

    const std::size_t cross = (cfg.count + 1) / 2;
    for (std::size_t k = 0; k < cross; ++k) {
        const std::size_t i = rng.index(sources.size());
        const int c = sources.labels[i];
        std::vector<std::size_t> partners;
        for (int d = 0; d < sources.domain_count; ++d) {
            if (d == sources.domains[i]) continue;
            partners.insert(partners.end(), cell[c][d].begin(), cell[c][d].end());
        }
        const std::size_t j = partners[rng.index(partners.size())];
        out.push_back(make_mix(sources, i, j, sample_lambda(cfg, rng), MixRule::OptdCrossDomain));
    }
    std::vector<std::vector<std::size_t>> by_domain(sources.domain_count);
    for (std::size_t i = 0; i < sources.size(); ++i) by_domain[sources.domains[i]].push_back(i);
    std::vector<std::size_t> eligible;  // indices living in a domain with >= 2 samples
    for (const auto& dom : by_domain) {
        if (dom.size() >= 2) eligible.insert(eligible.end(), dom.begin(), dom.end());
    }
    if (cfg.count > cross && eligible.empty()) {
        throw GenerationError("no domain has 2 samples for within-domain mixes");
    }
    for (std::size_t k = cross; k < cfg.count; ++k) {
        const std::size_t i = eligible[rng.index(eligible.size())];
        const auto& pool = by_domain[sources.domains[i]];
        std::size_t j = i;
        while (j == i) j = pool[rng.index(pool.size())];
        out.push_back(make_mix(sources, i, j, sample_lambda(cfg, rng), MixRule::OptdWithinDomain));
    }
    return out;
}

std::vector<MixSample> gen_vald(const DomainDataset& sources, const MixupConfig& cfg) {
    cfg.validate();
    std::vector<std::vector<std::size_t>> by_class(sources.class_count);
    for (std::size_t i = 0; i < sources.size(); ++i) by_class[sources.labels[i]].push_back(i);
    for (int c = 0; c < sources.class_count; ++c) {
        if (by_class[c].size() < 2) {
            throw GenerationError("class " + std::to_string(c) + " has fewer than 2 samples");
        }
    }

    Rng rng(cfg.seed);
    std::vector<MixSample> out;
    out.reserve(cfg.count);
    for (std::size_t k = 0; k < cfg.count; ++k) {
        const std::size_t i = rng.index(sources.size());
        const auto& pool = by_class[sources.labels[i]];
        std::size_t j = i;
        while (j == i) j = pool[rng.index(pool.size())];
        out.push_back(make_mix(sources, i, j, sample_lambda(cfg, rng), MixRule::Vald));
    }
    return out;
}

Tensor mix_features(const std::vector<MixSample>& samples) {
    if (samples.empty()) throw DataError("empty mix sample list");
    const std::size_t d = samples.front().x.size();
    Tensor out({samples.size(), d});
    for (std::size_t r = 0; r < samples.size(); ++r) {
        for (std::size_t c = 0; c < d; ++c) out.at(r, c) = samples[r].x[c];
    }
    return out;
}

Tensor mix_soft_labels(const std::vector<MixSample>& samples, int class_count) {
    if (samples.empty()) throw DataError("empty mix sample list");
    Tensor out({samples.size(), static_cast<std::size_t>(class_count)});
    for (std::size_t r = 0; r < samples.size(); ++r) {
        for (int c = 0; c < class_count; ++c) out.at(r, c) = samples[r].y[c];
    }
    return out;
}

bool is_hard_label(const std::vector<double>& y, double tol) {
    for (double v : y) {
        if (std::fabs(v) > tol && std::fabs(v - 1.0) > tol) return false;
    }
    return true;
}

std::vector<int> mix_hard_labels(const std::vector<MixSample>& samples) {
    std::vector<int> out;
    out.reserve(samples.size());
    for (const MixSample& s : samples) {
        if (!is_hard_label(s.y)) {
            throw ContractError("accuracy is undefined on soft-labeled mixes (rule " +
                                to_string(s.rule) + ")");
        }
        out.push_back(static_cast<int>(std::max_element(s.y.begin(), s.y.end()) - s.y.begin()));
    }
    return out;
}

void save_mixsamples_csv(const std::string& path, const std::vector<MixSample>& samples) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    if (samples.empty()) throw DataError("empty mix sample list");
    const std::size_t d = samples.front().x.size();
    const std::size_t c = samples.front().y.size();
    for (std::size_t t = 0; t < d; ++t) f << "f" << t << ",";
    for (std::size_t t = 0; t < c; ++t) f << "y" << t << ",";
    f << "lambda,parent_i,parent_j,domain_i,domain_j,rule\n";
    f.precision(17);
    for (const MixSample& s : samples) {
        for (std::size_t t = 0; t < d; ++t) f << s.x[t] << ",";
        for (std::size_t t = 0; t < c; ++t) f << s.y[t] << ",";
        f << s.lambda << "," << s.parent_i << "," << s.parent_j << "," << s.domain_i << ","
          << s.domain_j << "," << to_string(s.rule) << "\n";
    }
}

}  // namespace mixdg
