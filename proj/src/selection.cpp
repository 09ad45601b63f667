#include "mixdg/selection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "mixdg/errors.hpp"

namespace mixdg {

SelectionPolicy selection_policy_from_string(const std::string& s) {
    if (s == "trainsplit") return SelectionPolicy::TrainSplit;
    if (s == "vald") return SelectionPolicy::Vald;
    if (s == "oracle") return SelectionPolicy::Oracle;
    throw ConfigError("unknown selection policy: " + s);
}

std::string to_string(SelectionPolicy p) {
    switch (p) {
        case SelectionPolicy::TrainSplit: return "trainsplit";
        case SelectionPolicy::Vald: return "vald";
        case SelectionPolicy::Oracle: return "oracle";
    }
    return "?";
}

double evaluate_accuracy(ModelBundle& bundle, const Tensor& x, const std::vector<int>& labels) {
    if (x.rows() != labels.size() || labels.empty()) {
        throw DataError("evaluation set rows and labels disagree");
    }
    const Tensor logits = predict_logits(bundle, x);
    std::size_t correct = 0;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        std::size_t arg = 0;
        for (std::size_t c = 1; c < logits.cols(); ++c) {
            if (logits.at(r, c) > logits.at(r, arg)) arg = c;
        }
        if (static_cast<int>(arg) == labels[r]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(x.rows());
}

double evaluate_accuracy(ModelBundle& bundle, const DomainDataset& data) {
    return evaluate_accuracy(bundle, data.features, data.labels);
}

double evaluate_accuracy(ModelBundle& bundle, const std::vector<MixSample>& samples) {
    const std::vector<int> labels = mix_hard_labels(samples);  // throws on soft labels
    return evaluate_accuracy(bundle, mix_features(samples), labels);
}

double selection_signal(const CheckpointRecord& rec, SelectionPolicy policy) {
    switch (policy) {
        case SelectionPolicy::TrainSplit: return rec.val_acc_trainsplit;
        case SelectionPolicy::Vald: return rec.val_acc_vald;
        case SelectionPolicy::Oracle: return rec.target_acc;
    }
    return 0.0;
}

void BestTracker::update(const CheckpointRecord& rec) {
    const double signal = selection_signal(rec, policy_);
    if (!have_ || signal > selection_signal(best_, policy_)) {
        best_ = rec;
        have_ = true;
    }
}

const CheckpointRecord& BestTracker::best() const {
    if (!have_) throw StateError("best() on an empty tracker");
    return best_;
}

SelectionOutcome track_best(const std::vector<CheckpointRecord>& records, SelectionPolicy policy) {
    if (records.empty()) throw DataError("empty checkpoint stream");
    BestTracker tracker(policy);
    for (const CheckpointRecord& rec : records) tracker.update(rec);

    double oracle_best = -1.0;
    for (const CheckpointRecord& rec : records) oracle_best = std::max(oracle_best, rec.target_acc);

    SelectionOutcome out;
    out.policy = policy;
    out.chosen_iteration = tracker.best().iteration;
    out.chosen_snapshot = tracker.best().snapshot_id;
    out.chosen_signal = selection_signal(tracker.best(), policy);
    out.chosen_target_acc = tracker.best().target_acc;
    out.regret = oracle_best - out.chosen_target_acc;
    return out;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b, bool& defined) {
    defined = false;
    if (a.size() != b.size() || a.size() < 2) return 0.0;

    auto ranks = [](const std::vector<double>& v) {
        const std::size_t n = v.size();
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
        std::vector<double> r(n, 0.0);
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
            const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
            for (std::size_t t = i; t <= j; ++t) r[order[t]] = avg;
            i = j + 1;
        }
        return r;
    };

    const std::vector<double> ra = ranks(a);
    const std::vector<double> rb = ranks(b);
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va <= 0.0 || vb <= 0.0) return 0.0;  // constant sequence: undefined, flagged
    defined = true;
    return cov / std::sqrt(va * vb);
}

std::vector<StudyRow> selection_study(const std::vector<Trajectory>& trajectories,
                                      const std::vector<SelectionPolicy>& policies) {
    std::vector<StudyRow> rows;
    for (const Trajectory& traj : trajectories) {
        std::vector<double> target;
        for (const CheckpointRecord& rec : traj.checkpoints) target.push_back(rec.target_acc);
        for (SelectionPolicy policy : policies) {
            const SelectionOutcome outcome = track_best(traj.checkpoints, policy);
            std::vector<double> signal;
            for (const CheckpointRecord& rec : traj.checkpoints) {
                signal.push_back(selection_signal(rec, policy));
            }
            StudyRow row;
            row.seed = traj.seed;
            row.policy = policy;
            row.chosen_iter = outcome.chosen_iteration;
            row.target_acc = outcome.chosen_target_acc;
            row.regret = outcome.regret;
            row.spearman = spearman(signal, target, row.spearman_defined);
            rows.push_back(row);
        }
    }
    return rows;
}

void write_study_csv(const std::string& path, const std::vector<StudyRow>& rows) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    f << "seed,policy,chosen_iter,target_acc,regret,spearman\n";
    f.precision(17);
    for (const StudyRow& row : rows) {
        f << row.seed << "," << to_string(row.policy) << "," << row.chosen_iter << ","
          << row.target_acc << "," << row.regret << ",";
        if (row.spearman_defined) {
            f << row.spearman;
        } else {
            f << "undefined";
        }
        f << "\n";
    }
}

}  // namespace mixdg
