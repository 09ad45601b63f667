#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mixdg/tensor.hpp"

namespace mixdg {

// Labeled multi-domain sample container. Rows of `features` align with
// `labels` and `domains`.
struct DomainDataset {
    Tensor features;             // n x d
    std::vector<int> labels;     // in [0, class_count)
    std::vector<int> domains;    // in [0, domain_count)
    int class_count = 0;
    int domain_count = 0;

    std::size_t size() const { return labels.size(); }
    std::size_t feature_width() const;
    void validate() const;
    DomainDataset subset(const std::vector<std::size_t>& indices) const;
    std::vector<std::size_t> indices_of_domain(int d) const;
    std::vector<std::size_t> indices_of(int domain, int label) const;
};

struct DataSplit {
    DomainDataset train;
    DomainDataset val;
    std::vector<double> proportions;  // parent per-domain mass, sums to 1
    double split_ratio = 0.0;
    std::uint64_t seed = 0;
};

enum class ShiftFamily { RotatedGaussians, RotatedMoons };

ShiftFamily shift_family_from_string(const std::string& s);
std::string to_string(ShiftFamily f);

// One-parameter shift family: every domain is the same class layout rotated
// by its angle. Convex targets draw each sample from a source generator
// picked by the mixture phi; non-convex targets use an extrapolated angle.
struct ShiftFamilySpec {
    ShiftFamily family = ShiftFamily::RotatedGaussians;
    std::vector<double> source_angles_deg;
    bool convex_target = false;
    std::vector<double> target_mixture;  // phi, required when convex_target
    double target_angle_deg = 0.0;       // used when !convex_target
    double noise_scale = 0.25;
    std::size_t samples_per_domain = 500;
    int class_count = 4;  // moons family is fixed to 2 classes
    std::uint64_t seed = 0;

    void validate() const;
    // Mixture-weighted angle for convex targets, else the explicit angle.
    double effective_target_angle_deg() const;
};

// Unrotated class-mean layout of the gaussian family (C points on a circle).
std::vector<std::pair<double, double>> gaussian_class_means(int class_count);

std::pair<DomainDataset, DomainDataset> generate_synthetic(const ShiftFamilySpec& spec);

// Stratified per (domain, class); both sides of every cell stay non-empty.
DataSplit split(const DomainDataset& dataset, double ratio, std::uint64_t seed);

struct CsvSchema {
    std::vector<std::string> feature_columns;
    std::string label_column;
    std::string domain_column;
};

struct LoadedCsv {
    DomainDataset data;
    std::vector<std::string> label_names;   // dense id -> original string
    std::vector<std::string> domain_names;  // dense id -> original string
};

LoadedCsv load_csv(const std::string& path, const CsvSchema& schema);
void save_csv(const std::string& path, const DomainDataset& data,
              const std::vector<std::string>& label_names = {},
              const std::vector<std::string>& domain_names = {});

}  // namespace mixdg
