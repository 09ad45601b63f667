#include "mixdg/losses.hpp"

#include <algorithm>
#include <cmath>

#include "mixdg/errors.hpp"
#include "mixdg/kernels.hpp"

namespace mixdg {

Method method_from_string(const std::string& s) {
    if (s == "erm") return Method::Erm;
    if (s == "erm-per-source") return Method::ErmPerSource;
    if (s == "dann") return Method::Dann;
    if (s == "coral") return Method::Coral;
    throw ConfigError("unknown method: " + s);
}

std::string to_string(Method m) {
    switch (m) {
        case Method::Erm: return "erm";
        case Method::ErmPerSource: return "erm-per-source";
        case Method::Dann: return "dann";
        case Method::Coral: return "coral";
    }
    return "?";
}

ModelBundle::ModelBundle(Method m, NetworkSpec feat_spec, NetworkSpec clf_spec,
                         std::optional<NetworkSpec> disc_spec, int domains)
    : method(m), feat(std::move(feat_spec)), clf(std::move(clf_spec)), domain_count(domains) {
    if (clf.spec().input_width() != feat.spec().output_width()) {
        throw ConfigError("classifier input width must equal feature width");
    }
    if (m == Method::Dann) {
        if (!disc_spec) throw ConfigError("dann requires a domain discriminator");
        disc.emplace(std::move(*disc_spec));
        if (disc->spec().input_width() != feat.spec().output_width()) {
            throw ConfigError("discriminator input width must equal feature width");
        }
        if (disc->spec().output_width() != static_cast<std::size_t>(domains)) {
            throw ConfigError("discriminator output width must equal the domain count");
        }
    } else if (disc_spec) {
        disc.emplace(std::move(*disc_spec));
    }
}

void ModelBundle::zero_all_grads() {
    feat.zero_grads();
    clf.zero_grads();
    if (disc) disc->zero_grads();
}

ModelBundle::Snapshot ModelBundle::snapshot() const {
    Snapshot s;
    s.feat = feat.params().flat_values();
    s.clf = clf.params().flat_values();
    if (disc) s.disc = disc->params().flat_values();
    return s;
}

void ModelBundle::restore(const Snapshot& s) {
    feat.params().set_flat_values(s.feat);
    clf.params().set_flat_values(s.clf);
    if (disc) disc->params().set_flat_values(s.disc);
}

CrossEntropyResult cross_entropy(const Tensor& logits, const Tensor& soft_labels) {
    if (!logits.same_shape(soft_labels)) {
        throw DimensionError("cross_entropy: logits and labels disagree on shape");
    }
    logits.require_finite("cross_entropy logits");
    const std::size_t n = logits.rows();
    const std::size_t c = logits.cols();
    for (std::size_t r = 0; r < n; ++r) {
        double sum = 0.0;
        for (std::size_t k = 0; k < c; ++k) {
            const double v = soft_labels.at(r, k);
            if (v < -1e-12) throw LabelError("negative soft-label entry");
            sum += v;
        }
        if (std::fabs(sum - 1.0) > 1e-6) {
            throw LabelError("soft-label row " + std::to_string(r) + " sums to " +
                             std::to_string(sum));
        }
    }

    CrossEntropyResult out;
    out.dlogits = Tensor(logits.shape());
    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        double mx = logits.at(r, 0);
        for (std::size_t k = 1; k < c; ++k) mx = std::max(mx, logits.at(r, k));
        double z = 0.0;
        for (std::size_t k = 0; k < c; ++k) z += std::exp(logits.at(r, k) - mx);
        const double logz = std::log(z) + mx;
        for (std::size_t k = 0; k < c; ++k) {
            const double logp = logits.at(r, k) - logz;
            const double p = std::exp(logp);
            total -= soft_labels.at(r, k) * logp;
            out.dlogits.at(r, k) = (p - soft_labels.at(r, k)) / static_cast<double>(n);
        }
    }
    out.loss = total / static_cast<double>(n);
    return out;
}

Tensor onehot(const std::vector<int>& labels, int class_count) {
    Tensor out({labels.size(), static_cast<std::size_t>(class_count)});
    for (std::size_t r = 0; r < labels.size(); ++r) {
        if (labels[r] < 0 || labels[r] >= class_count) throw DataError("label out of range");
        out.at(r, labels[r]) = 1.0;
    }
    return out;
}

namespace grl {

Tensor forward(const Tensor& x) { return x; }

Tensor backward(const Tensor& upstream) {
    Tensor out = upstream;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = -out[i];
    return out;
}

}  // namespace grl

namespace {

// Column-centered copy and its unbiased covariance.
struct Centered {
    Tensor rows;  // n x d, mean-free columns
    Tensor cov;   // d x d
};

Centered covariance_of(const Tensor& f) {
    if (f.rows() < 2) throw CovarianceError("covariance needs at least 2 rows");
    const std::size_t n = f.rows();
    const std::size_t d = f.cols();
    Centered out{Tensor({n, d}), Tensor({d, d})};
    for (std::size_t c = 0; c < d; ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < n; ++r) mean += f.at(r, c);
        mean /= static_cast<double>(n);
        for (std::size_t r = 0; r < n; ++r) out.rows.at(r, c) = f.at(r, c) - mean;
    }
    kernels::active().matmul_tn(out.rows.data(), out.rows.data(), out.cov.data(), d, n, d);
    kernels::active().scale(1.0 / static_cast<double>(n - 1), out.cov.data(), out.cov.size());
    return out;
}

}  // namespace

CoralResult coral_loss(const Tensor& features_a, const Tensor& features_b) {
    if (features_a.cols() != features_b.cols()) {
        throw DimensionError("coral_loss: feature widths differ");
    }
    const std::size_t d = features_a.cols();
    const Centered a = covariance_of(features_a);
    const Centered b = covariance_of(features_b);

    Tensor diff({d, d});
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = a.cov[i] - b.cov[i];

    CoralResult out;
    const double dd = static_cast<double>(d) * static_cast<double>(d);
    out.loss = kernels::active().dot(diff.data(), diff.data(), diff.size()) / (4.0 * dd);

    // dL/dA = Ac * D / ((n_a - 1) d^2); the B side gets the sign flip.
    out.grad_a = Tensor(features_a.shape());
    out.grad_b = Tensor(features_b.shape());
    kernels::active().matmul_nn(a.rows.data(), diff.data(), out.grad_a.data(), a.rows.rows(), d, d);
    kernels::active().scale(1.0 / (static_cast<double>(features_a.rows() - 1) * dd),
                            out.grad_a.data(), out.grad_a.size());
    kernels::active().matmul_nn(b.rows.data(), diff.data(), out.grad_b.data(), b.rows.rows(), d, d);
    kernels::active().scale(-1.0 / (static_cast<double>(features_b.rows() - 1) * dd),
                            out.grad_b.data(), out.grad_b.size());
    return out;
}

namespace {

// theta_f column for one objective: zero feature grads, push `dfeat` through
// the extractor, flatten. Gradient accumulation is explicit-zeroing so the
// columns stay independent.
std::vector<double> feat_column(ModelBundle& bundle, const Tensor& dfeat) {
    bundle.feat.zero_grads();
    bundle.feat.backward(dfeat);
    return bundle.feat.params().flat_grads();
}

Tensor log_softmax_rows(const Tensor& logits) {
    Tensor out(logits.shape());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        double mx = logits.at(r, 0);
        for (std::size_t c = 1; c < logits.cols(); ++c) mx = std::max(mx, logits.at(r, c));
        double z = 0.0;
        for (std::size_t c = 0; c < logits.cols(); ++c) z += std::exp(logits.at(r, c) - mx);
        const double logz = std::log(z) + mx;
        for (std::size_t c = 0; c < logits.cols(); ++c) out.at(r, c) = logits.at(r, c) - logz;
    }
    return out;
}

Tensor gather_rows(const Tensor& src, const std::vector<std::size_t>& rows) {
    Tensor out({rows.size(), src.cols()});
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < src.cols(); ++c) out.at(r, c) = src.at(rows[r], c);
    }
    return out;
}

void scatter_add_rows(Tensor& dst, const Tensor& part, const std::vector<std::size_t>& rows) {
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < dst.cols(); ++c) dst.at(rows[r], c) += part.at(r, c);
    }
}

}  // namespace

ObjectiveGrads compute_objectives(ModelBundle& bundle, const TrainBatch& batch) {
    batch.x.require_finite("training batch");
    ObjectiveGrads out;
    const auto& k = kernels::active();

    bundle.clf.zero_grads();
    if (bundle.disc) bundle.disc->zero_grads();

    const Tensor feat_out = bundle.feat.forward(batch.x);

    // Objective 0: classification (pooled or per-source).
    if (bundle.method == Method::ErmPerSource) {
        const std::size_t n = batch.x.rows();
        const int m = batch.domain_count;
        if (m < 1) throw ConfigError("per-source objectives need a domain count");
        const Tensor logits = bundle.clf.forward(feat_out);
        const CrossEntropyResult pooled = cross_entropy(logits, batch.y);
        const Tensor logp = log_softmax_rows(logits);
        for (int s = 0; s < m; ++s) {
            std::vector<std::size_t> rows;
            for (std::size_t r = 0; r < n; ++r) {
                if (batch.domains[r] == s) rows.push_back(r);
            }
            if (rows.empty()) {
                throw ConfigError("missing batch rows for source " + std::to_string(s));
            }
            // l_s = mean CE over this source's rows; upstream is row-masked.
            Tensor dlogits(logits.shape());
            double loss_s = 0.0;
            for (std::size_t r : rows) {
                for (std::size_t c = 0; c < logits.cols(); ++c) {
                    // pooled.dlogits rows are (p - y)/n; rescale to 1/n_s.
                    dlogits.at(r, c) = pooled.dlogits.at(r, c) * static_cast<double>(n) /
                                       static_cast<double>(rows.size());
                    loss_s -= batch.y.at(r, c) * logp.at(r, c);
                }
            }
            loss_s /= static_cast<double>(rows.size());
            bundle.clf.zero_grads();
            const Tensor dfeat = bundle.clf.backward(dlogits);
            out.feat_columns.push_back(feat_column(bundle, dfeat));
            out.losses.values.push_back(loss_s);
            out.losses.labels.push_back("l_src" + std::to_string(s));
        }
        // Head keeps the pooled classification gradient.
        bundle.clf.zero_grads();
        bundle.clf.backward(pooled.dlogits);
        out.feat_version = bundle.feat.params().version();
        return out;
    }

    const Tensor logits = bundle.clf.forward(feat_out);
    const CrossEntropyResult ce = cross_entropy(logits, batch.y);
    const Tensor dfeat_cls = bundle.clf.backward(ce.dlogits);
    out.feat_columns.push_back(feat_column(bundle, dfeat_cls));
    out.losses.values.push_back(ce.loss);
    out.losses.labels.push_back("l_cls");

    if (bundle.method == Method::Dann) {
        if (!bundle.disc) throw ConfigError("dann requires a domain discriminator");
        // Domain loss through the reversal layer: the discriminator head
        // keeps the plain gradient, theta_f the negated one.
        const Tensor disc_in = grl::forward(feat_out);
        const Tensor logits_dom = bundle.disc->forward(disc_in);
        const CrossEntropyResult dce =
            cross_entropy(logits_dom, onehot(batch.domains, batch.domain_count));
        const Tensor dfeat_dom = bundle.disc->backward(dce.dlogits);
        out.feat_columns.push_back(feat_column(bundle, grl::backward(dfeat_dom)));
        out.losses.values.push_back(dce.loss);
        out.losses.labels.push_back("l_dom");
    } else if (bundle.method == Method::Coral) {
        // Mean covariance alignment over all source pairs.
        const int m = batch.domain_count;
        std::vector<std::vector<std::size_t>> rows_of(m);
        for (std::size_t r = 0; r < batch.x.rows(); ++r) rows_of[batch.domains[r]].push_back(r);
        Tensor dfeat(feat_out.shape());
        double loss = 0.0;
        int pairs = 0;
        for (int i = 0; i < m; ++i) {
            for (int j = i + 1; j < m; ++j) {
                if (rows_of[i].empty() || rows_of[j].empty()) continue;
                Tensor fi = gather_rows(feat_out, rows_of[i]);
                Tensor fj = gather_rows(feat_out, rows_of[j]);
                const CoralResult cr = coral_loss(fi, fj);
                loss += cr.loss;
                scatter_add_rows(dfeat, cr.grad_a, rows_of[i]);
                scatter_add_rows(dfeat, cr.grad_b, rows_of[j]);
                ++pairs;
            }
        }
        if (pairs == 0) throw DataError("coral needs at least two populated domains");
        loss /= pairs;
        k.scale(1.0 / pairs, dfeat.data(), dfeat.size());
        out.feat_columns.push_back(feat_column(bundle, dfeat));
        out.losses.values.push_back(loss);
        out.losses.labels.push_back("l_coral");
    }

    out.feat_version = bundle.feat.params().version();
    return out;
}

std::vector<double> scalarized_direction(const ObjectiveGrads& grads,
                                         const std::vector<double>& lambdas) {
    if (grads.feat_columns.empty()) throw ConfigError("no gradient columns");
    if (lambdas.size() != grads.feat_columns.size() - 1) {
        throw ConfigError("expected " + std::to_string(grads.feat_columns.size() - 1) +
                          " lambda weights");
    }
    for (double l : lambdas) {
        if (l < 0.0) throw ConfigError("fixed lambda weights must be >= 0");
    }
    std::vector<double> dir = grads.feat_columns[0];
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        kernels::active().axpy(lambdas[i], grads.feat_columns[i + 1].data(), dir.data(),
                               dir.size());
    }
    return dir;
}

Tensor predict_logits(ModelBundle& bundle, const Tensor& x) {
    return bundle.clf.forward(bundle.feat.forward(x));
}

}  // namespace mixdg
