#include "mixdg/network.hpp"

#include <cmath>
#include <cstring>

#include "mixdg/errors.hpp"
#include "mixdg/kernels.hpp"
#include "mixdg/rng.hpp"

namespace mixdg {

Activation activation_from_string(const std::string& s) {
    if (s == "identity") return Activation::Identity;
    if (s == "relu") return Activation::Relu;
    if (s == "tanh") return Activation::Tanh;
    throw ConfigError("unknown activation: " + s);
}

std::string to_string(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::Relu: return "relu";
        case Activation::Tanh: return "tanh";
    }
    return "?";
}

void NetworkSpec::validate() const {
    if (layers.empty()) throw ConfigError("network needs at least one layer");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].in == 0 || layers[i].out == 0) {
            throw ConfigError("layer " + std::to_string(i) + " has a zero width");
        }
        if (i > 0 && layers[i].in != layers[i - 1].out) {
            throw ConfigError("layer " + std::to_string(i) + " input width " +
                              std::to_string(layers[i].in) + " does not chain from " +
                              std::to_string(layers[i - 1].out));
        }
    }
}

std::size_t ParamStore::add(std::string name, Tensor init) {
    Param p;
    p.name = std::move(name);
    p.grad = Tensor(init.shape());
    p.value = std::move(init);
    params_.push_back(std::move(p));
    return params_.size() - 1;
}

std::size_t ParamStore::flat_size() const {
    std::size_t n = 0;
    for (const Param& p : params_) n += p.value.size();
    return n;
}

void ParamStore::zero_grads() {
    for (Param& p : params_) p.grad.fill(0.0);
}

std::vector<double> ParamStore::flat_values() const {
    std::vector<double> out;
    out.reserve(flat_size());
    for (const Param& p : params_) out.insert(out.end(), p.value.vec().begin(), p.value.vec().end());
    return out;
}

std::vector<double> ParamStore::flat_grads() const {
    std::vector<double> out;
    out.reserve(flat_size());
    for (const Param& p : params_) out.insert(out.end(), p.grad.vec().begin(), p.grad.vec().end());
    return out;
}

void ParamStore::set_flat_values(const std::vector<double>& v) {
    if (v.size() != flat_size()) {
        throw StateError("flat value vector length " + std::to_string(v.size()) +
                         " vs store size " + std::to_string(flat_size()));
    }
    std::size_t off = 0;
    for (Param& p : params_) {
        std::memcpy(p.value.data(), v.data() + off, p.value.size() * sizeof(double));
        off += p.value.size();
    }
    ++version_;
}

void ParamStore::apply_flat_step(const double* delta, double alpha) {
    std::size_t off = 0;
    for (Param& p : params_) {
        kernels::active().axpy(alpha, delta + off, p.value.data(), p.value.size());
        off += p.value.size();
    }
    ++version_;
}

FlatLayout layout_of(const std::vector<const ParamStore*>& stores) {
    FlatLayout layout;
    for (const ParamStore* s : stores) {
        for (std::size_t i = 0; i < s->count(); ++i) {
            const auto& p = (*s)[i];
            layout.entries.push_back({p.name, p.value.shape()});
            layout.total += p.value.size();
        }
    }
    return layout;
}

std::vector<double> flatten_grads(const std::vector<const ParamStore*>& stores) {
    std::vector<double> out;
    for (const ParamStore* s : stores) {
        std::vector<double> g = s->flat_grads();
        out.insert(out.end(), g.begin(), g.end());
    }
    return out;
}

std::vector<double> flatten_grads(const std::vector<const ParamStore*>& stores,
                                  const FlatLayout& expect) {
    if (layout_of(stores) != expect) {
        throw StateError("parameter flat-view ordering does not match the captured layout");
    }
    return flatten_grads(stores);
}

void unflatten_grads(const std::vector<double>& flat, const std::vector<ParamStore*>& stores) {
    std::size_t total = 0;
    for (ParamStore* s : stores) total += s->flat_size();
    if (flat.size() != total) {
        throw StateError("flat gradient length " + std::to_string(flat.size()) +
                         " vs stores total " + std::to_string(total));
    }
    std::size_t off = 0;
    for (ParamStore* s : stores) {
        for (std::size_t i = 0; i < s->count(); ++i) {
            Tensor& g = (*s)[i].grad;
            std::memcpy(g.data(), flat.data() + off, g.size() * sizeof(double));
            off += g.size();
        }
    }
}

DenseNet::DenseNet(NetworkSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    Rng rng(spec_.seed);
    for (std::size_t l = 0; l < spec_.layers.size(); ++l) {
        const LayerSpec& ls = spec_.layers[l];
        Rng layer_rng = rng.derive(l);
        const double a = std::sqrt(6.0 / static_cast<double>(ls.in + ls.out));
        Tensor w({ls.in, ls.out});
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = layer_rng.uniform(-a, a);
        params_.add("W" + std::to_string(l), std::move(w));
        params_.add("b" + std::to_string(l), Tensor({1, ls.out}));
    }
    pre_.resize(spec_.layers.size());
    post_.resize(spec_.layers.size());
}

Tensor DenseNet::forward(const Tensor& batch) {
    if (batch.rank() != 2 || batch.cols() != spec_.input_width()) {
        throw DimensionError("forward: batch width " +
                             std::to_string(batch.rank() == 2 ? batch.cols() : 0) +
                             " vs network input " + std::to_string(spec_.input_width()));
    }
    batch.require_finite("forward input");
    const auto& k = kernels::active();

    input_ = batch;
    const Tensor* x = &input_;
    for (std::size_t l = 0; l < spec_.layers.size(); ++l) {
        const LayerSpec& ls = spec_.layers[l];
        const Tensor& w = params_[2 * l].value;
        const Tensor& b = params_[2 * l + 1].value;
        const std::size_t n = x->rows();

        Tensor pre({n, ls.out});
        k.matmul_nn(x->data(), w.data(), pre.data(), n, ls.in, ls.out);
        for (std::size_t r = 0; r < n; ++r) {
            k.axpy(1.0, b.data(), pre.data() + r * ls.out, ls.out);
        }

        Tensor post(pre.shape());
        switch (ls.act) {
            case Activation::Identity:
                post = pre;
                break;
            case Activation::Relu:
                k.relu_fwd(pre.data(), post.data(), pre.size());
                break;
            case Activation::Tanh:
                for (std::size_t i = 0; i < pre.size(); ++i) post[i] = std::tanh(pre[i]);
                break;
        }
        pre_[l] = std::move(pre);
        post_[l] = std::move(post);
        x = &post_[l];
    }
    have_forward_ = true;
    forward_version_ = params_.version();
    return post_.back();
}

Tensor DenseNet::backward(const Tensor& upstream_grad) {
    if (!have_forward_) throw StateError("backward called before forward");
    if (params_.version() != forward_version_) {
        throw StateError("parameters changed since the cached forward pass");
    }
    if (!upstream_grad.same_shape(post_.back())) {
        throw DimensionError("backward: upstream gradient shape does not match network output");
    }
    const auto& k = kernels::active();

    Tensor dpost = upstream_grad;
    for (std::size_t li = spec_.layers.size(); li-- > 0;) {
        const LayerSpec& ls = spec_.layers[li];
        const Tensor& pre = pre_[li];
        const Tensor& post = post_[li];
        const Tensor& x = (li == 0) ? input_ : post_[li - 1];
        const std::size_t n = pre.rows();

        Tensor dpre(pre.shape());
        switch (ls.act) {
            case Activation::Identity:
                dpre = dpost;
                break;
            case Activation::Relu:
                k.relu_bwd(pre.data(), dpost.data(), dpre.data(), pre.size());
                break;
            case Activation::Tanh:
                for (std::size_t i = 0; i < pre.size(); ++i) {
                    dpre[i] = dpost[i] * (1.0 - post[i] * post[i]);
                }
                break;
        }

        Tensor& dw = params_[2 * li].grad;
        Tensor& db = params_[2 * li + 1].grad;
        Tensor dw_local({ls.in, ls.out});
        k.matmul_tn(x.data(), dpre.data(), dw_local.data(), ls.in, n, ls.out);
        k.axpy(1.0, dw_local.data(), dw.data(), dw.size());
        for (std::size_t r = 0; r < n; ++r) {
            k.axpy(1.0, dpre.data() + r * ls.out, db.data(), ls.out);
        }

        Tensor dx({n, ls.in});
        k.matmul_nt(dpre.data(), params_[2 * li].value.data(), dx.data(), n, ls.out, ls.in);
        dpost = std::move(dx);
    }
    return dpost;
}

GradCheckReport finite_diff_check(ParamStore& ps, const std::function<double()>& loss_eval,
                                  const std::function<void()>& grad_eval, double step,
                                  double tolerance) {
    if (step <= 0.0) throw ConfigError("finite difference step must be > 0");

    GradCheckReport report;
    if (ps.flat_size() == 0) return report;  // vacuous pass

    ps.zero_grads();
    grad_eval();
    std::vector<std::vector<double>> analytic;
    for (std::size_t i = 0; i < ps.count(); ++i) analytic.push_back(ps[i].grad.vec());

    for (std::size_t i = 0; i < ps.count(); ++i) {
        GradCheckEntry entry{ps[i].name, 0.0};
        Tensor& v = ps[i].value;
        for (std::size_t j = 0; j < v.size(); ++j) {
            const double orig = v[j];
            v[j] = orig + step;
            const double lp = loss_eval();
            v[j] = orig - step;
            const double lm = loss_eval();
            v[j] = orig;

            const double fd = (lp - lm) / (2.0 * step);
            const double an = analytic[i][j];
            const double denom = std::max({std::fabs(fd), std::fabs(an), 1e-5});
            entry.max_rel_err = std::max(entry.max_rel_err, std::fabs(fd - an) / denom);
        }
        report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
        report.per_param.push_back(std::move(entry));
    }
    report.pass = report.max_rel_err <= tolerance;
    return report;
}

GradCheckReport finite_diff_check(DenseNet& net, const LossFn& loss_fn, const Tensor& batch,
                                  double step, double tolerance) {
    auto loss_eval = [&]() { return loss_fn(net.forward(batch)).first; };
    auto grad_eval = [&]() {
        auto [loss, dout] = loss_fn(net.forward(batch));
        (void)loss;
        net.backward(dout);
    };
    GradCheckReport report =
        finite_diff_check(net.params(), loss_eval, grad_eval, step, tolerance);
    // Leave a consistent cached forward for the unperturbed parameters.
    net.forward(batch);
    return report;
}

}  // namespace mixdg
