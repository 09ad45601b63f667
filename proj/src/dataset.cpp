#include "mixdg/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "mixdg/errors.hpp"
#include "mixdg/rng.hpp"

namespace mixdg {

std::size_t DomainDataset::feature_width() const {
    return features.rank() == 2 ? features.cols() : 0;
}

void DomainDataset::validate() const {
    const std::size_t n = labels.size();
    if (features.rank() != 2 || features.rows() != n || domains.size() != n) {
        throw DataError("dataset arrays disagree on length");
    }
    features.require_finite("dataset features");
    for (int y : labels) {
        if (y < 0 || y >= class_count) throw DataError("label out of range");
    }
    for (int d : domains) {
        if (d < 0 || d >= domain_count) throw DataError("domain id out of range");
    }
}

DomainDataset DomainDataset::subset(const std::vector<std::size_t>& indices) const {
    DomainDataset out;
    out.class_count = class_count;
    out.domain_count = domain_count;
    const std::size_t d = feature_width();
    out.features = Tensor({indices.size(), d});
    out.labels.reserve(indices.size());
    out.domains.reserve(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const std::size_t src = indices[r];
        for (std::size_t c = 0; c < d; ++c) out.features.at(r, c) = features.at(src, c);
        out.labels.push_back(labels[src]);
        out.domains.push_back(domains[src]);
    }
    return out;
}

std::vector<std::size_t> DomainDataset::indices_of_domain(int d) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < size(); ++i) {
        if (domains[i] == d) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> DomainDataset::indices_of(int domain, int label) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < size(); ++i) {
        if (domains[i] == domain && labels[i] == label) out.push_back(i);
    }
    return out;
}

ShiftFamily shift_family_from_string(const std::string& s) {
    if (s == "rotated-gaussians") return ShiftFamily::RotatedGaussians;
    if (s == "rotated-moons") return ShiftFamily::RotatedMoons;
    throw ConfigError("unknown shift family: " + s);
}

std::string to_string(ShiftFamily f) {
    return f == ShiftFamily::RotatedGaussians ? "rotated-gaussians" : "rotated-moons";
}

void ShiftFamilySpec::validate() const {
    if (source_angles_deg.size() < 2) throw ConfigError("need at least 2 source domains");
    if (samples_per_domain == 0) throw ConfigError("samples_per_domain must be positive");
    const int c = family == ShiftFamily::RotatedMoons ? 2 : class_count;
    if (c < 2) throw ConfigError("need at least 2 classes");
    if (noise_scale < 0.0) throw ConfigError("noise_scale must be >= 0");
    if (convex_target) {
        if (target_mixture.size() != source_angles_deg.size()) {
            throw ConfigError("target_mixture length must equal the source count");
        }
        double total = 0.0;
        for (double phi : target_mixture) {
            if (phi < 0.0) throw ConfigError("target_mixture entries must be >= 0");
            total += phi;
        }
        if (std::fabs(total - 1.0) > 1e-9) throw ConfigError("target_mixture must sum to 1");
    }
}

double ShiftFamilySpec::effective_target_angle_deg() const {
    if (!convex_target) return target_angle_deg;
    double angle = 0.0;
    for (std::size_t i = 0; i < source_angles_deg.size(); ++i) {
        angle += target_mixture[i] * source_angles_deg[i];
    }
    return angle;
}

std::vector<std::pair<double, double>> gaussian_class_means(int class_count) {
    std::vector<std::pair<double, double>> means;
    const double radius = 1.5;
    for (int c = 0; c < class_count; ++c) {
        const double phase = 2.0 * std::numbers::pi * c / class_count + std::numbers::pi / 4.0;
        means.emplace_back(radius * std::cos(phase), radius * std::sin(phase));
    }
    return means;
}

namespace {

struct Rotation {
    double c, s;
    explicit Rotation(double deg) {
        const double rad = deg * std::numbers::pi / 180.0;
        c = std::cos(rad);
        s = std::sin(rad);
    }
    std::pair<double, double> apply(double x, double y) const {
        return {c * x - s * y, s * x + c * y};
    }
};

// Draws one sample of class `cls` from the domain generator at `angle_deg`.
std::pair<double, double> draw_sample(const ShiftFamilySpec& spec,
                                      const std::vector<std::pair<double, double>>& means,
                                      int cls, double angle_deg, Rng& rng) {
    const Rotation rot(angle_deg);
    if (spec.family == ShiftFamily::RotatedGaussians) {
        auto [mx, my] = rot.apply(means[cls].first, means[cls].second);
        return {mx + spec.noise_scale * rng.normal(0.0, 1.0),
                my + spec.noise_scale * rng.normal(0.0, 1.0)};
    }
    // Two interleaved half-moons, rotated as a whole.
    const double t = rng.uniform(0.0, std::numbers::pi);
    double x, y;
    if (cls == 0) {
        x = std::cos(t);
        y = std::sin(t);
    } else {
        x = 1.0 - std::cos(t);
        y = 0.5 - std::sin(t);
    }
    auto [rx, ry] = rot.apply(x, y);
    return {rx + spec.noise_scale * rng.normal(0.0, 1.0),
            ry + spec.noise_scale * rng.normal(0.0, 1.0)};
}

// Class sequence with per-domain balance within +-1 sample.
std::vector<int> balanced_classes(std::size_t n, int c) {
    std::vector<int> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(static_cast<int>(i % c));
    return out;
}

}  // namespace

std::pair<DomainDataset, DomainDataset> generate_synthetic(const ShiftFamilySpec& spec) {
    spec.validate();
    const int c = spec.family == ShiftFamily::RotatedMoons ? 2 : spec.class_count;
    const int m = static_cast<int>(spec.source_angles_deg.size());
    const std::size_t n = spec.samples_per_domain;
    const std::vector<std::pair<double, double>> means = gaussian_class_means(c);
    Rng master(spec.seed);

    DomainDataset sources;
    sources.class_count = c;
    sources.domain_count = m;
    sources.features = Tensor({n * m, 2});
    std::size_t row = 0;
    for (int d = 0; d < m; ++d) {
        Rng rng = master.derive(static_cast<std::uint64_t>(d));
        for (int cls : balanced_classes(n, c)) {
            auto [x, y] = draw_sample(spec, means, cls, spec.source_angles_deg[d], rng);
            sources.features.at(row, 0) = x;
            sources.features.at(row, 1) = y;
            sources.labels.push_back(cls);
            sources.domains.push_back(d);
            ++row;
        }
    }

    DomainDataset target;
    target.class_count = c;
    target.domain_count = 1;
    target.features = Tensor({n, 2});
    Rng rng = master.derive(1000);
    row = 0;
    for (int cls : balanced_classes(n, c)) {
        double angle = spec.target_angle_deg;
        if (spec.convex_target) {
            // Mixture draw over source generators.
            double u = rng.uniform(0.0, 1.0);
            std::size_t pick = spec.target_mixture.size() - 1;
            double acc = 0.0;
            for (std::size_t i = 0; i < spec.target_mixture.size(); ++i) {
                acc += spec.target_mixture[i];
                if (u <= acc) {
                    pick = i;
                    break;
                }
            }
            angle = spec.source_angles_deg[pick];
        }
        auto [x, y] = draw_sample(spec, means, cls, angle, rng);
        target.features.at(row, 0) = x;
        target.features.at(row, 1) = y;
        target.labels.push_back(cls);
        target.domains.push_back(0);
        ++row;
    }
    return {std::move(sources), std::move(target)};
}

DataSplit split(const DomainDataset& dataset, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split ratio must lie in (0, 1)");
    dataset.validate();

    std::vector<std::size_t> train_idx, val_idx;
    Rng master(seed);
    for (int d = 0; d < dataset.domain_count; ++d) {
        for (int c = 0; c < dataset.class_count; ++c) {
            std::vector<std::size_t> cell = dataset.indices_of(d, c);
            if (cell.empty()) continue;
            if (cell.size() < 2) {
                throw SplitError("cell (domain " + std::to_string(d) + ", class " +
                                 std::to_string(c) + ") has fewer than 2 samples");
            }
            Rng rng = master.derive(static_cast<std::uint64_t>(d) * 1000 + c);
            rng.shuffle(cell);
            std::size_t take = static_cast<std::size_t>(std::llround(ratio * cell.size()));
            take = std::clamp<std::size_t>(take, 1, cell.size() - 1);
            train_idx.insert(train_idx.end(), cell.begin(), cell.begin() + take);
            val_idx.insert(val_idx.end(), cell.begin() + take, cell.end());
        }
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(val_idx.begin(), val_idx.end());

    DataSplit out;
    out.train = dataset.subset(train_idx);
    out.val = dataset.subset(val_idx);
    out.split_ratio = ratio;
    out.seed = seed;
    out.proportions.assign(dataset.domain_count, 0.0);
    for (int d : dataset.domains) out.proportions[d] += 1.0 / dataset.size();
    return out;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

}  // namespace

LoadedCsv load_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open " + path);

    std::string header;
    if (!std::getline(in, header)) throw IngestError(path + " is empty");
    if (!header.empty() && header.back() == '\r') header.pop_back();
    const std::vector<std::string> columns = split_line(header);

    auto column_index = [&](const std::string& name) {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (columns[i] == name) return i;
        }
        throw IngestError("missing column '" + name + "' in " + path);
    };

    std::vector<std::size_t> feat_cols;
    for (const std::string& f : schema.feature_columns) feat_cols.push_back(column_index(f));
    const std::size_t label_col = column_index(schema.label_column);
    const std::size_t domain_col = column_index(schema.domain_column);

    std::vector<double> feat_values;
    std::vector<std::string> raw_labels, raw_domains;
    std::string line;
    std::size_t data_row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++data_row;
        const std::vector<std::string> cells = split_line(line);
        if (cells.size() != columns.size()) {
            throw IngestError(path + ": row " + std::to_string(data_row) + " has " +
                              std::to_string(cells.size()) + " cells, header has " +
                              std::to_string(columns.size()));
        }
        for (std::size_t fc : feat_cols) {
            const std::string& cell = cells[fc];
            try {
                std::size_t used = 0;
                const double v = std::stod(cell, &used);
                if (used != cell.size()) throw std::invalid_argument(cell);
                feat_values.push_back(v);
            } catch (const std::exception&) {
                throw IngestError(path + ": non-numeric feature at row " +
                                  std::to_string(data_row) + ", column " +
                                  std::to_string(fc + 1) + " ('" + cell + "')");
            }
        }
        raw_labels.push_back(cells[label_col]);
        raw_domains.push_back(cells[domain_col]);
    }
    if (data_row == 0) throw IngestError(path + " has a header but no data rows");

    // Dense ids in first-appearance order; originals kept for reporting.
    auto remap = [](const std::vector<std::string>& raw, std::vector<std::string>& names) {
        std::map<std::string, int> ids;
        std::vector<int> out;
        out.reserve(raw.size());
        for (const std::string& s : raw) {
            auto it = ids.find(s);
            if (it == ids.end()) {
                it = ids.emplace(s, static_cast<int>(names.size())).first;
                names.push_back(s);
            }
            out.push_back(it->second);
        }
        return out;
    };

    LoadedCsv out;
    out.data.labels = remap(raw_labels, out.label_names);
    out.data.domains = remap(raw_domains, out.domain_names);
    out.data.class_count = static_cast<int>(out.label_names.size());
    out.data.domain_count = static_cast<int>(out.domain_names.size());
    out.data.features = Tensor({data_row, feat_cols.size()}, std::move(feat_values));
    out.data.validate();
    return out;
}

void save_csv(const std::string& path, const DomainDataset& data,
              const std::vector<std::string>& label_names,
              const std::vector<std::string>& domain_names) {
    std::ofstream outf(path);
    if (!outf) throw IoError("cannot write " + path);
    const std::size_t d = data.feature_width();
    for (std::size_t c = 0; c < d; ++c) outf << "f" << c << ",";
    outf << "label,domain\n";
    outf.precision(17);
    for (std::size_t r = 0; r < data.size(); ++r) {
        for (std::size_t c = 0; c < d; ++c) outf << data.features.at(r, c) << ",";
        if (label_names.empty()) {
            outf << data.labels[r];
        } else {
            outf << label_names[data.labels[r]];
        }
        outf << ",";
        if (domain_names.empty()) {
            outf << data.domains[r];
        } else {
            outf << domain_names[data.domains[r]];
        }
        outf << "\n";
    }
}

}  // namespace mixdg
