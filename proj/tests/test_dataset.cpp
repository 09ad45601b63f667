#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "mixdg/dataset.hpp"
#include "mixdg/errors.hpp"
#include "mixdg/losses.hpp"
#include "mixdg/network.hpp"
#include "oracles.hpp"

using namespace mixdg;

namespace {

ShiftFamilySpec case1_spec(std::uint64_t seed, std::size_t n = 500) {
    ShiftFamilySpec spec;
    spec.source_angles_deg = {0.0, 30.0, 60.0};
    spec.convex_target = true;
    spec.target_mixture = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    spec.samples_per_domain = n;
    spec.seed = seed;
    return spec;
}

std::vector<std::pair<double, double>> class_means_of(const DomainDataset& data) {
    std::vector<std::pair<double, double>> means(data.class_count, {0.0, 0.0});
    std::vector<std::size_t> counts(data.class_count, 0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        means[data.labels[i]].first += data.features.at(i, 0);
        means[data.labels[i]].second += data.features.at(i, 1);
        counts[data.labels[i]]++;
    }
    for (int c = 0; c < data.class_count; ++c) {
        means[c].first /= static_cast<double>(counts[c]);
        means[c].second /= static_cast<double>(counts[c]);
    }
    return means;
}

}  // namespace

TEST_CASE("extrapolated target angle is recovered by the rotation-moment oracle") {
    ShiftFamilySpec spec = case1_spec(91, 2000);
    spec.convex_target = false;
    spec.target_mixture.clear();
    spec.target_angle_deg = 90.0;
    auto [sources, target] = generate_synthetic(spec);
    (void)sources;

    const double est = oracles::rotation_angle_deg(gaussian_class_means(spec.class_count),
                                                   class_means_of(target));
    CHECK(std::fabs(est - 90.0) <= 3.0);
}

TEST_CASE("degenerate mixture phi = (1,0,0) reproduces source 0's generator moments") {
    ShiftFamilySpec spec = case1_spec(17, 2000);
    spec.target_mixture = {1.0, 0.0, 0.0};
    auto [sources, target] = generate_synthetic(spec);

    const DomainDataset source0 = sources.subset(sources.indices_of_domain(0));
    const auto m_src = class_means_of(source0);
    const auto m_tgt = class_means_of(target);
    for (int c = 0; c < spec.class_count; ++c) {
        CHECK(std::fabs(m_src[c].first - m_tgt[c].first) < 0.06);
        CHECK(std::fabs(m_src[c].second - m_tgt[c].second) < 0.06);
    }
}

TEST_CASE("zero shift: a domain probe cannot beat chance by more than 5 points") {
    ShiftFamilySpec spec;
    spec.source_angles_deg = {25.0, 25.0};
    spec.target_angle_deg = 25.0;
    spec.samples_per_domain = 400;
    spec.seed = 5;
    auto [sources, target] = generate_synthetic(spec);
    (void)target;

    // Train/val split, then a small domain classifier on domain ids.
    const DataSplit ds = split(sources, 0.5, 7);
    NetworkSpec probe{{{2, 16, Activation::Relu}, {16, 2, Activation::Identity}}, 3};
    DenseNet net(probe);
    const Tensor labels = onehot(ds.train.domains, 2);
    for (int e = 0; e < 200; ++e) {
        net.zero_grads();
        const CrossEntropyResult ce = cross_entropy(net.forward(ds.train.features), labels);
        net.backward(ce.dlogits);
        const std::vector<double> g = net.params().flat_grads();
        net.params().apply_flat_step(g.data(), -0.1);
    }
    const Tensor logits = net.forward(ds.val.features);
    std::size_t correct = 0;
    for (std::size_t r = 0; r < ds.val.size(); ++r) {
        const int pred = logits.at(r, 1) > logits.at(r, 0) ? 1 : 0;
        if (pred == ds.val.domains[r]) ++correct;
    }
    const double acc = static_cast<double>(correct) / static_cast<double>(ds.val.size());
    CHECK(acc <= 0.55);
}

TEST_CASE("convex targets keep the effective parameter inside the source hull") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        ShiftFamilySpec spec = case1_spec(seed, 10);
        spec.target_mixture = {0.2, 0.5, 0.3};
        const double angle = spec.effective_target_angle_deg();
        CHECK(angle >= 0.0);
        CHECK(angle <= 60.0);
        auto [sources, target] = generate_synthetic(spec);
        CHECK(sources.features.all_finite());
        CHECK(target.features.all_finite());
    }
}

TEST_CASE("per-domain class balance is within one sample") {
    ShiftFamilySpec spec = case1_spec(3, 101);  // not divisible by C=4
    auto [sources, target] = generate_synthetic(spec);
    (void)target;
    for (int d = 0; d < sources.domain_count; ++d) {
        std::vector<std::size_t> hist(spec.class_count, 0);
        for (std::size_t i : sources.indices_of_domain(d)) hist[sources.labels[i]]++;
        const auto [lo, hi] = std::minmax_element(hist.begin(), hist.end());
        CHECK(*hi - *lo <= 1);
    }
}

TEST_CASE("degenerate specs are rejected") {
    ShiftFamilySpec spec;
    spec.source_angles_deg = {0.0};  // single domain
    CHECK_THROWS_AS(generate_synthetic(spec), ConfigError);

    ShiftFamilySpec spec2 = case1_spec(0);
    spec2.samples_per_domain = 0;
    CHECK_THROWS_AS(generate_synthetic(spec2), ConfigError);

    ShiftFamilySpec spec3 = case1_spec(0);
    spec3.target_mixture = {0.5, 0.2, 0.2};  // does not sum to 1
    CHECK_THROWS_AS(generate_synthetic(spec3), ConfigError);
}

TEST_CASE("rotated moons produce two classes") {
    ShiftFamilySpec spec;
    spec.family = ShiftFamily::RotatedMoons;
    spec.source_angles_deg = {0.0, 20.0};
    spec.target_angle_deg = 40.0;
    spec.samples_per_domain = 50;
    auto [sources, target] = generate_synthetic(spec);
    CHECK(sources.class_count == 2);
    CHECK(target.class_count == 2);
}

TEST_CASE("split honors the 80/20 ratio per domain") {
    ShiftFamilySpec spec = case1_spec(11, 100);
    auto [sources, target] = generate_synthetic(spec);
    (void)target;
    const DataSplit ds = split(sources, 0.8, 123);
    for (int d = 0; d < sources.domain_count; ++d) {
        CHECK(ds.train.indices_of_domain(d).size() == 80);
        CHECK(ds.val.indices_of_domain(d).size() == 20);
    }
    CHECK(ds.proportions.size() == 3);
    for (double p : ds.proportions) CHECK(p == doctest::Approx(1.0 / 3));
}

TEST_CASE("split is deterministic and a stratified partition") {
    ShiftFamilySpec spec = case1_spec(29, 97);
    auto [sources, target] = generate_synthetic(spec);
    (void)target;

    const DataSplit a = split(sources, 0.8, 55);
    const DataSplit b = split(sources, 0.8, 55);
    CHECK(a.train.features.vec() == b.train.features.vec());
    CHECK(a.val.features.vec() == b.val.features.vec());
    CHECK(a.train.labels == b.train.labels);

    // Partition: sizes add up and every feature row is used exactly once.
    CHECK(a.train.size() + a.val.size() == sources.size());
    std::multiset<std::pair<double, double>> parent, pieces;
    for (std::size_t i = 0; i < sources.size(); ++i) {
        parent.insert({sources.features.at(i, 0), sources.features.at(i, 1)});
    }
    for (std::size_t i = 0; i < a.train.size(); ++i) {
        pieces.insert({a.train.features.at(i, 0), a.train.features.at(i, 1)});
    }
    for (std::size_t i = 0; i < a.val.size(); ++i) {
        pieces.insert({a.val.features.at(i, 0), a.val.features.at(i, 1)});
    }
    CHECK(parent == pieces);

    // Stratified: per-(domain,class) train counts track the ratio within 1.
    for (int d = 0; d < sources.domain_count; ++d) {
        for (int c = 0; c < sources.class_count; ++c) {
            const double parent_count = static_cast<double>(sources.indices_of(d, c).size());
            const double train_count = static_cast<double>(a.train.indices_of(d, c).size());
            CHECK(std::fabs(train_count - 0.8 * parent_count) <= 1.0);
        }
    }
}

TEST_CASE("split rejects undersized cells and bad ratios") {
    DomainDataset tiny;
    tiny.class_count = 2;
    tiny.domain_count = 1;
    tiny.features = Tensor({3, 1}, {0.0, 1.0, 2.0});
    tiny.labels = {0, 0, 1};  // class 1 has a single sample
    tiny.domains = {0, 0, 0};
    CHECK_THROWS_AS(split(tiny, 0.8, 1), SplitError);
    CHECK_THROWS_AS(split(tiny, 1.0, 1), ConfigError);
}

TEST_CASE("csv ingestion: minimal file") {
    const std::string path = "mixdg_test_min.csv";
    {
        std::ofstream f(path);
        f << "x0,x1,label,domain\n1.0,2.0,a,d0\n3.0,4.0,b,d0\n";
    }
    const LoadedCsv loaded = load_csv(path, {{"x0", "x1"}, "label", "domain"});
    CHECK(loaded.data.size() == 2);
    CHECK(loaded.data.class_count == 2);
    CHECK(loaded.data.domain_count == 1);
    CHECK(loaded.data.features.at(0, 1) == 2.0);
    CHECK(loaded.label_names == std::vector<std::string>{"a", "b"});
    std::remove(path.c_str());
}

TEST_CASE("csv ingestion: non-numeric cell names row and column") {
    const std::string path = "mixdg_test_bad.csv";
    {
        std::ofstream f(path);
        f << "f0,f1,f2,label,domain\n";
        for (int r = 1; r <= 6; ++r) f << r << ",2,3,a,d0\n";
        f << "1,2,oops,a,d0\n";  // data row 7, file column 3
    }
    try {
        load_csv(path, {{"f0", "f1", "f2"}, "label", "domain"});
        FAIL("expected IngestError");
    } catch (const IngestError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("row 7") != std::string::npos);
        CHECK(msg.find("column 3") != std::string::npos);
    }
    std::remove(path.c_str());
}

TEST_CASE("csv ingestion: missing column and empty file") {
    const std::string path = "mixdg_test_empty.csv";
    {
        std::ofstream f(path);
        f << "f0,label,domain\n";
    }
    CHECK_THROWS_AS(load_csv(path, {{"f0"}, "label", "domain"}), IngestError);
    CHECK_THROWS_AS(load_csv(path, {{"nope"}, "label", "domain"}), IngestError);
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_csv("does_not_exist.csv", {{"f0"}, "label", "domain"}), IngestError);
}

TEST_CASE("csv round trip reproduces tensors and ids through the remap table") {
    ShiftFamilySpec spec = case1_spec(41, 30);
    auto [sources, target] = generate_synthetic(spec);
    (void)target;

    const std::string path = "mixdg_test_rt.csv";
    save_csv(path, sources);
    CsvSchema schema;
    for (std::size_t c = 0; c < sources.feature_width(); ++c) {
        schema.feature_columns.push_back("f" + std::to_string(c));
    }
    schema.label_column = "label";
    schema.domain_column = "domain";
    const LoadedCsv loaded = load_csv(path, schema);

    CHECK(loaded.data.features.vec() == sources.features.vec());
    REQUIRE(loaded.data.size() == sources.size());
    for (std::size_t i = 0; i < sources.size(); ++i) {
        CHECK(loaded.label_names[loaded.data.labels[i]] == std::to_string(sources.labels[i]));
        CHECK(loaded.domain_names[loaded.data.domains[i]] == std::to_string(sources.domains[i]));
    }
    std::remove(path.c_str());
}
