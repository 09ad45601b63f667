#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mixdg/dataset.hpp"
#include "mixdg/losses.hpp"
#include "mixdg/mixup.hpp"

namespace mixdg {

enum class SelectionPolicy { TrainSplit, Vald, Oracle };

SelectionPolicy selection_policy_from_string(const std::string& s);
std::string to_string(SelectionPolicy p);

struct CheckpointRecord {
    int iteration = 0;
    int snapshot_id = 0;
    double val_acc_trainsplit = 0.0;
    double val_acc_vald = 0.0;
    double target_acc = 0.0;  // NaN when the run does not track the oracle signal
};

struct SelectionOutcome {
    SelectionPolicy policy = SelectionPolicy::TrainSplit;
    int chosen_iteration = 0;
    int chosen_snapshot = 0;
    double chosen_signal = 0.0;
    double chosen_target_acc = 0.0;
    double regret = 0.0;  // oracle-best target acc minus chosen target acc
};

// Fraction of argmax-correct predictions.
double evaluate_accuracy(ModelBundle& bundle, const Tensor& x, const std::vector<int>& labels);
double evaluate_accuracy(ModelBundle& bundle, const DomainDataset& data);
// Mix samples must carry hard labels; soft-labeled sets are a contract error.
double evaluate_accuracy(ModelBundle& bundle, const std::vector<MixSample>& samples);

// Algorithm-1 best tracking: strictly-greater updates, first checkpoint wins
// ties. Streaming and batch scans agree.
class BestTracker {
public:
    explicit BestTracker(SelectionPolicy policy) : policy_(policy) {}
    void update(const CheckpointRecord& rec);
    bool have() const { return have_; }
    const CheckpointRecord& best() const;
    SelectionPolicy policy() const { return policy_; }

private:
    SelectionPolicy policy_;
    bool have_ = false;
    CheckpointRecord best_{};
};

double selection_signal(const CheckpointRecord& rec, SelectionPolicy policy);
SelectionOutcome track_best(const std::vector<CheckpointRecord>& records, SelectionPolicy policy);

// Spearman rank correlation with average ranks on ties; `defined` is false
// for constant sequences (no rank variance to correlate).
double spearman(const std::vector<double>& a, const std::vector<double>& b, bool& defined);

struct StudyRow {
    std::uint64_t seed = 0;
    SelectionPolicy policy = SelectionPolicy::TrainSplit;
    int chosen_iter = 0;
    double target_acc = 0.0;
    double regret = 0.0;
    double spearman = 0.0;
    bool spearman_defined = false;
};

struct Trajectory {
    std::uint64_t seed = 0;
    std::vector<CheckpointRecord> checkpoints;
};

// Per-(seed, policy) regret plus the rank correlation between the policy's
// validation signal and the target accuracy along the trajectory.
std::vector<StudyRow> selection_study(const std::vector<Trajectory>& trajectories,
                                      const std::vector<SelectionPolicy>& policies);

void write_study_csv(const std::string& path, const std::vector<StudyRow>& rows);

}  // namespace mixdg
