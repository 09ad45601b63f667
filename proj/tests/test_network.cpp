#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mixdg/errors.hpp"
#include "mixdg/network.hpp"
#include "mixdg/rng.hpp"
#include "oracles.hpp"

using namespace mixdg;

namespace {

// Quadratic loss 0.5 * sum(out^2); gradient = out.
std::pair<double, Tensor> quadratic_loss(const Tensor& out) {
    double loss = 0.0;
    Tensor d(out.shape());
    for (std::size_t i = 0; i < out.size(); ++i) {
        loss += 0.5 * out[i] * out[i];
        d[i] = out[i];
    }
    return {loss, d};
}

DenseNet identity_single_layer(std::size_t n) {
    NetworkSpec spec{{{n, n, Activation::Identity}}, 0};
    DenseNet net(spec);
    ParamStore& ps = net.params();
    ps[0].value = Tensor::identity(n);
    ps[1].value.fill(0.0);
    return net;
}

}  // namespace

TEST_CASE("identity layer passes input through") {
    DenseNet net = identity_single_layer(2);
    const Tensor out = net.forward(Tensor::row_vector({1.0, 2.0}));
    CHECK(out.at(0, 0) == 1.0);
    CHECK(out.at(0, 1) == 2.0);
}

TEST_CASE("relu layer clamps negatives") {
    NetworkSpec spec{{{2, 2, Activation::Relu}}, 0};
    DenseNet net(spec);
    net.params()[0].value = Tensor::identity(2);
    net.params()[1].value.fill(0.0);
    const Tensor out = net.forward(Tensor::row_vector({-1.0, 3.0}));
    CHECK(out.at(0, 0) == 0.0);
    CHECK(out.at(0, 1) == 3.0);
}

TEST_CASE("two-layer forward equals straight-line matmul oracle") {
    NetworkSpec spec{{{3, 4, Activation::Identity}, {4, 2, Activation::Identity}}, 42};
    DenseNet net(spec);
    Rng rng(7);
    Tensor x({2, 3});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.normal(0.0, 1.0);
    const Tensor out = net.forward(x);

    const auto& w0 = net.params()[0].value;
    const auto& b0 = net.params()[1].value;
    const auto& w1 = net.params()[2].value;
    const auto& b1 = net.params()[3].value;
    auto h = oracles::matmul(x.vec(), w0.vec(), 2, 3, 4);
    for (std::size_t r = 0; r < 2; ++r) {
        for (std::size_t c = 0; c < 4; ++c) h[r * 4 + c] += b0.vec()[c];
    }
    auto o = oracles::matmul(h, w1.vec(), 2, 4, 2);
    for (std::size_t r = 0; r < 2; ++r) {
        for (std::size_t c = 0; c < 2; ++c) o[r * 2 + c] += b1.vec()[c];
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        CHECK(std::fabs(out[i] - o[i]) <= 1e-12 * std::max(1.0, std::fabs(o[i])));
    }
}

TEST_CASE("forward is pure: repeated calls agree bitwise") {
    NetworkSpec spec{{{3, 5, Activation::Tanh}, {5, 2, Activation::Identity}}, 9};
    DenseNet net(spec);
    Rng rng(8);
    Tensor x({4, 3});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.normal(0.0, 1.0);
    const Tensor a = net.forward(x);
    const Tensor b = net.forward(x);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("zero upstream gradient produces zero parameter gradients") {
    NetworkSpec spec{{{2, 3, Activation::Tanh}, {3, 2, Activation::Identity}}, 5};
    DenseNet net(spec);
    Tensor x({3, 2});
    Rng rng(5);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.normal(0.0, 1.0);
    net.zero_grads();
    const Tensor out = net.forward(x);
    net.backward(Tensor(out.shape()));
    for (double g : net.params().flat_grads()) CHECK(g == 0.0);
}

TEST_CASE("linear layer, sum-of-outputs loss: weight gradient is column-sums outer input") {
    NetworkSpec spec{{{2, 3, Activation::Identity}}, 3};
    DenseNet net(spec);
    Tensor x({4, 2});
    Rng rng(6);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.normal(0.0, 1.0);
    net.zero_grads();
    const Tensor out = net.forward(x);
    Tensor ones(out.shape());
    ones.fill(1.0);
    net.backward(ones);

    // dW[i][j] = sum_r x[r][i]; db[j] = batch rows
    const Tensor& dw = net.params()[0].grad;
    for (std::size_t i = 0; i < 2; ++i) {
        double colsum = 0.0;
        for (std::size_t r = 0; r < 4; ++r) colsum += x.at(r, i);
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(std::fabs(dw.at(i, j) - colsum) < 1e-12);
        }
    }
    const Tensor& db = net.params()[1].grad;
    for (std::size_t j = 0; j < 3; ++j) CHECK(db.vec()[j] == 4.0);
}

TEST_CASE("backward before forward is a state error") {
    NetworkSpec spec{{{2, 2, Activation::Identity}}, 0};
    DenseNet net(spec);
    CHECK_THROWS_AS(net.backward(Tensor({1, 2})), StateError);
}

TEST_CASE("gradients match central finite differences on random nets") {
    // 100 seeded trials, widths <= 16, depth <= 3, mixed activations.
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        Rng rng(1000 + trial);
        const std::size_t depth = 1 + rng.index(3);
        std::vector<LayerSpec> layers;
        std::size_t in = 2 + rng.index(6);
        const std::size_t input_width = in;
        for (std::size_t l = 0; l < depth; ++l) {
            const std::size_t out = 2 + rng.index(15);
            const Activation act = l + 1 == depth
                                       ? Activation::Identity
                                       : (rng.index(2) ? Activation::Tanh : Activation::Relu);
            layers.push_back({in, out, act});
            in = out;
        }
        DenseNet net(NetworkSpec{layers, 77 + static_cast<std::uint64_t>(trial)});
        Tensor x({3, input_width});
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.normal(0.0, 1.0);

        const GradCheckReport report = finite_diff_check(net, quadratic_loss, x, 1e-5, 1e-4);
        worst = std::max(worst, report.max_rel_err);
        CHECK(report.pass);
    }
    CHECK(worst <= 1e-4);
}

TEST_CASE("finite_diff_check catches a corrupted gradient") {
    NetworkSpec spec{{{2, 3, Activation::Identity}}, 1};
    DenseNet net(spec);
    Tensor x({2, 2});
    Rng rng(3);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.normal(0.0, 1.0);

    // Loss whose reported gradient is deliberately off by +1 on one entry:
    // wrap the check by corrupting after the analytic pass is impossible from
    // outside, so emulate by a loss with a wrong gradient component.
    auto skewed_loss = [](const Tensor& out) {
        double loss = 0.0;
        Tensor d(out.shape());
        for (std::size_t i = 0; i < out.size(); ++i) {
            loss += 0.5 * out[i] * out[i];
            d[i] = out[i];
        }
        d[0] += 1.0;  // lies about d loss / d out_0
        return std::pair<double, Tensor>(loss, d);
    };
    const GradCheckReport report = finite_diff_check(net, skewed_loss, x, 1e-5, 1e-4);
    CHECK_FALSE(report.pass);
}

TEST_CASE("finite_diff_check on quadratic loss over a linear net is exact to 1e-6") {
    NetworkSpec spec{{{3, 4, Activation::Identity}}, 21};
    DenseNet net(spec);
    Tensor x({5, 3});
    Rng rng(21);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.normal(0.0, 1.0);
    const GradCheckReport report = finite_diff_check(net, quadratic_loss, x, 1e-5, 1e-6);
    CHECK(report.pass);
    CHECK(report.max_rel_err <= 1e-6);
}

TEST_CASE("finite_diff_check over an empty parameter store passes vacuously") {
    ParamStore empty;
    const GradCheckReport report = finite_diff_check(
        empty, [] { return 1.0; }, [] {}, 1e-5, 1e-6);
    CHECK(report.pass);
    CHECK(report.per_param.empty());
    CHECK(report.max_rel_err == 0.0);
}

TEST_CASE("flatten_grads: ordering, determinism, and unflatten round trip") {
    NetworkSpec spec{{{2, 3, Activation::Tanh}, {3, 2, Activation::Identity}}, 4};
    DenseNet net(spec);
    Tensor x({2, 2});
    Rng rng(4);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.normal(0.0, 1.0);
    net.zero_grads();
    auto [loss, dout] = quadratic_loss(net.forward(x));
    (void)loss;
    net.backward(dout);

    const std::vector<const ParamStore*> stores = {&net.params()};
    const FlatLayout layout = layout_of(stores);
    const std::vector<double> g1 = flatten_grads(stores, layout);
    const std::vector<double> g2 = flatten_grads(stores, layout);
    CHECK(g1 == g2);
    CHECK(g1.size() == net.params().flat_size());

    // unflatten . flatten is the identity on the gradient slots
    std::vector<double> perturbed = g1;
    for (double& v : perturbed) v += 1.25;
    unflatten_grads(perturbed, {&net.params()});
    CHECK(flatten_grads(stores) == perturbed);

    // single scalar parameter -> vector [2.5]
    ParamStore tiny;
    Tensor p({1});
    tiny.add("w", p);
    tiny[0].grad[0] = 2.5;
    const std::vector<double> flat = flatten_grads({&tiny});
    REQUIRE(flat.size() == 1);
    CHECK(flat[0] == 2.5);

    // layout mismatch is a state error
    CHECK_THROWS_AS(flatten_grads({&tiny}, layout), StateError);
}

TEST_CASE("all-zero gradients flatten to the zero vector") {
    NetworkSpec spec{{{2, 2, Activation::Identity}}, 0};
    DenseNet net(spec);
    net.zero_grads();
    for (double g : flatten_grads({&net.params()})) CHECK(g == 0.0);
}

TEST_CASE("forward rejects shape mismatch, spec rejects broken chains") {
    NetworkSpec bad{{{2, 3, Activation::Identity}, {4, 2, Activation::Identity}}, 0};
    CHECK_THROWS_AS(DenseNet{bad}, ConfigError);
    NetworkSpec empty{};
    CHECK_THROWS_AS(DenseNet{empty}, ConfigError);

    NetworkSpec ok{{{3, 2, Activation::Identity}}, 0};
    DenseNet net(ok);
    CHECK_THROWS_AS(net.forward(Tensor({1, 2})), DimensionError);
}
