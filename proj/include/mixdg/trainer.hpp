#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mixdg/config.hpp"
#include "mixdg/dataset.hpp"
#include "mixdg/losses.hpp"
#include "mixdg/mixup.hpp"
#include "mixdg/selection.hpp"

namespace mixdg {

struct ParetoDiagSummary {
    int refreshes = 0;
    int pure_descent = 0;
    int guidance_descent = 0;
    int fallback_mean = 0;
    int theorem1_failures = 0;
};

struct TrialResult {
    std::uint64_t seed = 0;
    std::vector<CheckpointRecord> checkpoints;
    std::vector<SelectionOutcome> outcomes;  // trainsplit, vald, oracle (when tracked)
    std::vector<std::string> objective_labels;
    std::vector<std::vector<double>> epoch_losses;  // [epoch][objective] batch means
    ParetoDiagSummary pareto;
    double selected_target_acc = 0.0;  // under cfg.selection
    int iterations = 0;
};

struct RunResult {
    std::vector<TrialResult> trials;
};

// Materialized data for one trial.
struct ExperimentData {
    DomainDataset sources;
    DomainDataset target;
    DataSplit split;
};

ExperimentData prepare_data(const RunConfig& cfg, std::uint64_t seed);

// Full training loop for one seed: generate VALD and OPTD, iterate with the
// weight refresh cadence, checkpoint, and resolve every selection policy.
// `diag` (optional) receives JSON-lines events.
TrialResult run_trial(const RunConfig& cfg, std::uint64_t seed, std::ostream* diag);

// Same loop, also handing back the data, the VALD set, and the bundle
// restored to the checkpoint the configured policy selected.
struct TrainedModel {
    TrialResult trial;
    ExperimentData data;
    std::vector<MixSample> vald;
    ModelBundle bundle;
};

TrainedModel run_trial_full(const RunConfig& cfg, std::uint64_t seed, std::ostream* diag);

// All seeds; writes results.csv / results.jsonl / report.md (and diag.jsonl
// when enabled) into cfg.out_dir.
RunResult run_experiment(const RunConfig& cfg);

enum class SweepAxis { Alpha, GradMode, Component };

SweepAxis sweep_axis_from_string(const std::string& s);

struct SweepEntry {
    std::string variant;
    RunConfig cfg;
    RunResult result;
};

// Fig-style ablations: alpha sweeps Beta concentrations, grad-mode the three
// gradient computation modes, component {vanilla, +optd, +vald, +both}.
std::vector<SweepEntry> ablation_sweep(const RunConfig& base, SweepAxis axis,
                                       const std::vector<double>& alpha_values);

}  // namespace mixdg
