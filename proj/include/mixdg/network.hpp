#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mixdg/tensor.hpp"

namespace mixdg {

enum class Activation { Identity, Relu, Tanh };

Activation activation_from_string(const std::string& s);
std::string to_string(Activation a);

struct LayerSpec {
    std::size_t in = 0;
    std::size_t out = 0;
    Activation act = Activation::Identity;
};

// Dense feed-forward architecture plus its init seed. Softmax is applied at
// the loss, never as a layer activation.
struct NetworkSpec {
    std::vector<LayerSpec> layers;
    std::uint64_t seed = 0;

    // Throws ConfigError unless widths chain and at least one layer exists.
    void validate() const;
    std::size_t input_width() const { return layers.front().in; }
    std::size_t output_width() const { return layers.back().out; }
};

// Named parameter tensors with same-shape gradient slots. Flat-view order is
// insertion order and never changes for a fixed architecture.
class ParamStore {
public:
    struct Param {
        std::string name;
        Tensor value;
        Tensor grad;
    };

    std::size_t add(std::string name, Tensor init);
    std::size_t count() const { return params_.size(); }
    Param& operator[](std::size_t i) { return params_[i]; }
    const Param& operator[](std::size_t i) const { return params_[i]; }

    std::size_t flat_size() const;
    void zero_grads();

    std::vector<double> flat_values() const;
    std::vector<double> flat_grads() const;
    void set_flat_values(const std::vector<double>& v);
    // value += alpha * delta over the flat view; bumps the version.
    void apply_flat_step(const double* delta, double alpha);

    // Monotone counter bumped on every parameter mutation; gradient snapshots
    // carry the version they were computed against.
    std::uint64_t version() const { return version_; }
    void bump_version() { ++version_; }

private:
    std::vector<Param> params_;
    std::uint64_t version_ = 0;
};

// Flat concatenation of gradient vectors across one or more stores, with the
// layout captured so later calls can be checked against it.
struct FlatLayout {
    struct Entry {
        std::string name;
        std::vector<std::size_t> shape;

        bool operator==(const Entry&) const = default;
    };
    std::vector<Entry> entries;
    std::size_t total = 0;

    bool operator==(const FlatLayout&) const = default;
};

FlatLayout layout_of(const std::vector<const ParamStore*>& stores);
std::vector<double> flatten_grads(const std::vector<const ParamStore*>& stores);
// Throws StateError when the stores' layout differs from `expect`.
std::vector<double> flatten_grads(const std::vector<const ParamStore*>& stores,
                                  const FlatLayout& expect);
void unflatten_grads(const std::vector<double>& flat, const std::vector<ParamStore*>& stores);

// Fully-connected network with manual backprop. forward() caches the
// activations backward() consumes; backward() accumulates parameter
// gradients (callers zero them explicitly) and returns the input gradient so
// stages can be chained.
class DenseNet {
public:
    explicit DenseNet(NetworkSpec spec);

    Tensor forward(const Tensor& batch);
    Tensor backward(const Tensor& upstream_grad);

    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    const NetworkSpec& spec() const { return spec_; }
    void zero_grads() { params_.zero_grads(); }

private:
    NetworkSpec spec_;
    ParamStore params_;

    Tensor input_;
    std::vector<Tensor> pre_;
    std::vector<Tensor> post_;
    bool have_forward_ = false;
    std::uint64_t forward_version_ = 0;
};

struct GradCheckEntry {
    std::string param;
    double max_rel_err = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> per_param;
    double max_rel_err = 0.0;
    bool pass = true;
};

// loss_fn maps the network output to (loss value, dloss/doutput).
using LossFn = std::function<std::pair<double, Tensor>(const Tensor&)>;

// Central finite differences over every parameter entry vs the analytic
// gradients. Empty parameter store passes vacuously. The generic form takes
// a loss evaluator at the current parameters plus a routine that fills the
// gradient slots.
GradCheckReport finite_diff_check(ParamStore& params, const std::function<double()>& loss_eval,
                                  const std::function<void()>& grad_eval, double step,
                                  double tolerance);
GradCheckReport finite_diff_check(DenseNet& net, const LossFn& loss_fn, const Tensor& batch,
                                  double step, double tolerance);

}  // namespace mixdg
