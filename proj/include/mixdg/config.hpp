#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mixdg/dataset.hpp"
#include "mixdg/losses.hpp"
#include "mixdg/selection.hpp"

namespace mixdg {

enum class GradMode { WholeWhole, BatchWhole, WholeSplit };  // w-w | b-w | w-s

GradMode grad_mode_from_string(const std::string& s);
std::string to_string(GradMode g);

enum class DatasetKind { Synthetic, Csv };

struct RunConfig {
    DatasetKind dataset = DatasetKind::Synthetic;
    ShiftFamilySpec synthetic;

    std::string csv_path;
    CsvSchema csv_schema;
    std::string csv_target_domain;

    Method method = Method::Dann;
    bool use_pareto = false;
    SelectionPolicy selection = SelectionPolicy::Vald;
    double alpha = 0.2;
    double epsilon = 1e-3;
    int refresh_period = 5;  // B
    double learning_rate = 0.05;
    int epochs = 60;
    int batch_per_domain = 16;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    GradMode grad_mode = GradMode::WholeWhole;
    std::string out_dir = ".";
    bool diag = false;

    double fixed_lambda = 1.0;  // weight of each regularizer in the baseline
    double split_ratio = 0.8;
    int hidden_width = 16;
    int feat_width = 8;
    int disc_hidden = 8;
    std::size_t optd_count = 0;  // 0 -> one source domain's training-split size
    std::size_t vald_count = 0;  // 0 -> validation split size
    int eval_every_epochs = 1;
    std::string optimizer = "sgd";
    bool vald_parents_from_train = false;
    bool track_oracle = true;

    // Every violated rule, so a bad config reports all problems at once.
    std::vector<std::string> violations() const;
    // Throws ConfigError listing all violations.
    void validate() const;
    // Objective count the run will produce.
    int objective_count() const;
};

// Flat JSON document; unknown keys are an error, every CLI flag overrides
// its config key.
RunConfig load_config(const std::string& path);
RunConfig parse_config_json(const std::string& text);
std::string config_to_json(const RunConfig& cfg);

}  // namespace mixdg
