#include "mixdg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "mixdg/errors.hpp"
#include "mixdg/kernels.hpp"
#include "mixdg/pareto.hpp"
#include "mixdg/report.hpp"
#include "mixdg/rng.hpp"

namespace mixdg {

using nlohmann::json;

namespace {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a + 0x9E3779B97F4A7C15ull * (b + 1);
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Plain Adam over one flat store; offered off the acceptance path (SGD keeps
// the update direction exactly d*, which the descent diagnostics reason about).
struct AdamState {
    std::vector<double> m, v;
    int t = 0;

    void step(ParamStore& store, const std::vector<double>& grad, double lr) {
        constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        if (m.empty()) {
            m.assign(grad.size(), 0.0);
            v.assign(grad.size(), 0.0);
        }
        ++t;
        std::vector<double> upd(grad.size());
        for (std::size_t i = 0; i < grad.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
            v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
            const double mhat = m[i] / (1.0 - std::pow(b1, t));
            const double vhat = v[i] / (1.0 - std::pow(b2, t));
            upd[i] = mhat / (std::sqrt(vhat) + eps);
        }
        store.apply_flat_step(upd.data(), -lr);
    }
};

struct Optimizer {
    bool adam = false;
    AdamState feat, clf, disc;

    void apply(ModelBundle& bundle, const std::vector<double>& direction, double lr,
               std::uint64_t version) {
        if (!adam) {
            apply_direction(bundle, direction, lr, version);
            return;
        }
        if (bundle.feat.params().version() != version) {
            throw StateError("gradient snapshot is stale: parameters changed since it was computed");
        }
        feat.step(bundle.feat.params(), direction, lr);
        clf.step(bundle.clf.params(), bundle.clf.params().flat_grads(), lr);
        if (bundle.disc) disc.step(bundle.disc->params(), bundle.disc->params().flat_grads(), lr);
    }
};

// Per-domain shuffled index streams; every iteration takes an equal chunk
// from each domain.
struct BatchSampler {
    std::vector<std::vector<std::size_t>> pools;
    std::vector<std::size_t> cursor;
    Rng rng;
    int batch_per_domain;

    BatchSampler(const DomainDataset& train, int batch, Rng r)
        : rng(std::move(r)), batch_per_domain(batch) {
        pools.resize(train.domain_count);
        cursor.assign(train.domain_count, 0);
        for (int d = 0; d < train.domain_count; ++d) {
            pools[d] = train.indices_of_domain(d);
            if (pools[d].size() < static_cast<std::size_t>(batch)) {
                throw DataError("domain " + std::to_string(d) + " has fewer than " +
                                std::to_string(batch) + " training samples per batch");
            }
        }
    }

    std::size_t iters_per_epoch() const {
        std::size_t it = SIZE_MAX;
        for (const auto& p : pools) {
            it = std::min(it, p.size() / static_cast<std::size_t>(batch_per_domain));
        }
        return it;
    }

    void start_epoch() {
        for (auto& p : pools) rng.shuffle(p);
        std::fill(cursor.begin(), cursor.end(), 0);
    }

    TrainBatch next(const DomainDataset& train) {
        const std::size_t d = train.feature_width();
        const std::size_t rows = pools.size() * static_cast<std::size_t>(batch_per_domain);
        TrainBatch batch;
        batch.domain_count = train.domain_count;
        batch.x = Tensor({rows, d});
        batch.domains.reserve(rows);
        std::vector<int> labels;
        labels.reserve(rows);
        std::size_t r = 0;
        for (std::size_t dom = 0; dom < pools.size(); ++dom) {
            for (int i = 0; i < batch_per_domain; ++i) {
                const std::size_t src = pools[dom][cursor[dom]++];
                for (std::size_t c = 0; c < d; ++c) batch.x.at(r, c) = train.features.at(src, c);
                labels.push_back(train.labels[src]);
                batch.domains.push_back(static_cast<int>(dom));
                ++r;
            }
        }
        batch.y = onehot(labels, train.class_count);
        return batch;
    }
};

ModelBundle build_bundle(const RunConfig& cfg, const ExperimentData& data, Rng& rng) {
    const std::size_t in = data.sources.feature_width();
    const std::size_t hidden = static_cast<std::size_t>(cfg.hidden_width);
    const std::size_t feat = static_cast<std::size_t>(cfg.feat_width);
    const std::size_t classes = static_cast<std::size_t>(data.sources.class_count);
    const std::size_t domains = static_cast<std::size_t>(data.sources.domain_count);

    NetworkSpec feat_spec{{{in, hidden, Activation::Relu}, {hidden, feat, Activation::Tanh}},
                          rng.raw()};
    NetworkSpec clf_spec{{{feat, classes, Activation::Identity}}, rng.raw()};
    std::optional<NetworkSpec> disc_spec;
    if (cfg.method == Method::Dann) {
        disc_spec = NetworkSpec{{{feat, static_cast<std::size_t>(cfg.disc_hidden), Activation::Relu},
                                 {static_cast<std::size_t>(cfg.disc_hidden), domains, Activation::Identity}},
                                rng.raw()};
    }
    return ModelBundle(cfg.method, std::move(feat_spec), std::move(clf_spec), std::move(disc_spec),
                       data.sources.domain_count);
}

void diag_event(std::ostream* diag, const json& j) {
    if (diag) *diag << j.dump() << "\n";
}

}  // namespace

ExperimentData prepare_data(const RunConfig& cfg, std::uint64_t seed) {
    ExperimentData data;
    if (cfg.dataset == DatasetKind::Synthetic) {
        ShiftFamilySpec spec = cfg.synthetic;
        spec.seed = mix_seed(cfg.synthetic.seed, seed);
        auto [sources, target] = generate_synthetic(spec);
        data.sources = std::move(sources);
        data.target = std::move(target);
    } else {
        const LoadedCsv loaded = load_csv(cfg.csv_path, cfg.csv_schema);
        int target_id = -1;
        for (std::size_t i = 0; i < loaded.domain_names.size(); ++i) {
            if (loaded.domain_names[i] == cfg.csv_target_domain) target_id = static_cast<int>(i);
        }
        if (target_id < 0) {
            throw ConfigError("csv_target_domain '" + cfg.csv_target_domain +
                              "' not present in " + cfg.csv_path);
        }
        std::vector<std::size_t> src_rows, tgt_rows;
        for (std::size_t i = 0; i < loaded.data.size(); ++i) {
            (loaded.data.domains[i] == target_id ? tgt_rows : src_rows).push_back(i);
        }
        if (src_rows.empty() || tgt_rows.empty()) {
            throw DataError("csv split left sources or target empty");
        }
        data.sources = loaded.data.subset(src_rows);
        data.target = loaded.data.subset(tgt_rows);
        // Dense source domain ids with the target's id removed.
        std::vector<int> remap(loaded.domain_names.size(), -1);
        int next = 0;
        for (std::size_t i = 0; i < loaded.domain_names.size(); ++i) {
            if (static_cast<int>(i) != target_id) remap[i] = next++;
        }
        for (int& d : data.sources.domains) d = remap[d];
        data.sources.domain_count = next;
        for (int& d : data.target.domains) d = 0;
        data.target.domain_count = 1;
    }
    data.split = split(data.sources, cfg.split_ratio, mix_seed(seed, 17));
    return data;
}

TrialResult run_trial(const RunConfig& cfg, std::uint64_t seed, std::ostream* diag) {
    return run_trial_full(cfg, seed, diag).trial;
}

TrainedModel run_trial_full(const RunConfig& cfg, std::uint64_t seed, std::ostream* diag) {
    cfg.validate();
    Rng master(mix_seed(seed, 0xA11CE));

    ExperimentData data = prepare_data(cfg, seed);
    const int sources_m = data.sources.domain_count;
    if (cfg.use_pareto && cfg.method == Method::ErmPerSource && sources_m < 2) {
        throw ConfigError("per-source pareto needs at least 2 sources");
    }

    Rng net_rng = master.derive(1);
    ModelBundle bundle = build_bundle(cfg, data, net_rng);

    TrialResult trial;
    trial.seed = seed;

    // Algorithm order: both mix sets exist before the first iteration.
    const DomainDataset& vald_pool = cfg.vald_parents_from_train ? data.split.train : data.split.val;
    MixupConfig vald_cfg{cfg.alpha, master.derive(2).raw(),
                         cfg.vald_count ? cfg.vald_count : data.split.val.size()};
    const std::vector<MixSample> vald = gen_vald(vald_pool, vald_cfg);
    diag_event(diag, {{"event", "generate_vald"},
                      {"seed", seed},
                      {"count", vald.size()},
                      {"parents", cfg.vald_parents_from_train ? "train" : "val"}});

    std::vector<MixSample> optd;
    if (cfg.use_pareto) {
        MixupConfig optd_cfg{cfg.alpha, master.derive(3).raw(),
                             cfg.optd_count ? cfg.optd_count
                                            : data.split.train.size() /
                                                  static_cast<std::size_t>(sources_m)};
        optd = gen_optd(data.split.train, optd_cfg);
        diag_event(diag, {{"event", "generate_optd"}, {"seed", seed}, {"count", optd.size()}});
    }

    BatchSampler sampler(data.split.train, cfg.batch_per_domain, master.derive(4));
    Rng guidance_rng = master.derive(5);
    Optimizer opt;
    opt.adam = cfg.optimizer == "adam";

    const std::size_t iters_per_epoch = sampler.iters_per_epoch();
    const GuidanceScope scope =
        cfg.grad_mode == GradMode::BatchWhole ? GuidanceScope::Batch : GuidanceScope::Whole;
    const std::size_t guidance_batch =
        static_cast<std::size_t>(cfg.batch_per_domain) * static_cast<std::size_t>(sources_m);

    std::vector<ModelBundle::Snapshot> snapshots;
    std::vector<double> cached_omega;
    int global_iter = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        sampler.start_epoch();
        std::vector<double> loss_accum;
        for (std::size_t it = 0; it < iters_per_epoch; ++it, ++global_iter) {
            const TrainBatch batch = sampler.next(data.split.train);

            if (cfg.use_pareto && global_iter % cfg.refresh_period == 0) {
                const GuidanceResult guidance =
                    compute_guidance(bundle, optd, scope, guidance_batch, guidance_rng);
                const ObjectiveGrads grads = compute_objectives(bundle, batch);
                GradientProblem problem;
                problem.columns = grads.feat_columns;
                problem.g_optd = guidance.g_optd;
                problem.ell_optd = guidance.ell_optd;
                problem.epsilon = cfg.epsilon;
                problem.version = grads.feat_version;
                const IndexSets sets = build_index_sets(problem);
                const SimplexWeights weights = solve_lp(problem, sets);
                const Theorem1Report thm = theorem1_check(weights, problem);

                trial.pareto.refreshes++;
                if (weights.mode == ParetoMode::PureDescent) {
                    trial.pareto.pure_descent++;
                } else {
                    trial.pareto.guidance_descent++;
                }
                if (weights.lp_status == LpStatus::FallbackMean) trial.pareto.fallback_mean++;
                if (!thm.pass) trial.pareto.theorem1_failures++;

                diag_event(diag, {{"event", "omega_refresh"},
                                  {"seed", seed},
                                  {"iteration", global_iter},
                                  {"omega", weights.omega},
                                  {"gamma_star", weights.gamma_star},
                                  {"mode", to_string(weights.mode)},
                                  {"lp_status", to_string(weights.lp_status)},
                                  {"ell_optd", problem.ell_optd},
                                  {"constraint_slacks", weights.constraint_slacks},
                                  {"theorem1_pass", thm.pass}});

                cached_omega = weights.omega;
                opt.apply(bundle, weights.direction, cfg.learning_rate, weights.version);
                if (trial.objective_labels.empty()) trial.objective_labels = grads.losses.labels;
                if (loss_accum.empty()) loss_accum.assign(grads.losses.size(), 0.0);
                for (std::size_t i = 0; i < grads.losses.size(); ++i) {
                    loss_accum[i] += grads.losses.values[i];
                }
            } else {
                const ObjectiveGrads grads = compute_objectives(bundle, batch);
                std::vector<double> direction;
                if (cfg.use_pareto) {
                    // Cached omega reweights fresh gradient columns.
                    direction.assign(grads.feat_columns.front().size(), 0.0);
                    for (std::size_t i = 0; i < cached_omega.size(); ++i) {
                        kernels::active().axpy(cached_omega[i], grads.feat_columns[i].data(),
                                               direction.data(), direction.size());
                    }
                } else {
                    const std::vector<double> lambdas(grads.feat_columns.size() - 1,
                                                      cfg.fixed_lambda);
                    direction = scalarized_direction(grads, lambdas);
                }
                opt.apply(bundle, direction, cfg.learning_rate, grads.feat_version);
                if (trial.objective_labels.empty()) trial.objective_labels = grads.losses.labels;
                if (loss_accum.empty()) loss_accum.assign(grads.losses.size(), 0.0);
                for (std::size_t i = 0; i < grads.losses.size(); ++i) {
                    loss_accum[i] += grads.losses.values[i];
                }
            }
        }

        for (double& v : loss_accum) v /= static_cast<double>(iters_per_epoch);
        trial.epoch_losses.push_back(loss_accum);

        // Numeric blow-up aborts the run but keeps the checkpoints taken so far.
        bool blown = false;
        for (double v : loss_accum) {
            if (!std::isfinite(v)) blown = true;
        }
        if (blown) {
            diag_event(diag, {{"event", "aborted_non_finite"}, {"seed", seed}, {"epoch", epoch}});
            break;
        }

        if ((epoch + 1) % cfg.eval_every_epochs == 0 || epoch == cfg.epochs - 1) {
            CheckpointRecord rec;
            rec.iteration = global_iter;
            rec.snapshot_id = static_cast<int>(snapshots.size());
            rec.val_acc_trainsplit = evaluate_accuracy(bundle, data.split.val);
            rec.val_acc_vald = evaluate_accuracy(bundle, vald);
            rec.target_acc = cfg.track_oracle ? evaluate_accuracy(bundle, data.target)
                                              : std::numeric_limits<double>::quiet_NaN();
            snapshots.push_back(bundle.snapshot());
            trial.checkpoints.push_back(rec);
            diag_event(diag, {{"event", "checkpoint"},
                              {"seed", seed},
                              {"iteration", rec.iteration},
                              {"val_trainsplit", rec.val_acc_trainsplit},
                              {"val_vald", rec.val_acc_vald},
                              {"target", rec.target_acc}});
        }
    }
    trial.iterations = global_iter;
    if (trial.checkpoints.empty()) throw StateError("run produced no checkpoints");

    std::vector<SelectionPolicy> policies = {SelectionPolicy::TrainSplit, SelectionPolicy::Vald};
    if (cfg.track_oracle) policies.push_back(SelectionPolicy::Oracle);
    for (SelectionPolicy policy : policies) {
        SelectionOutcome outcome = track_best(trial.checkpoints, policy);
        if (!cfg.track_oracle) {
            bundle.restore(snapshots[outcome.chosen_snapshot]);
            outcome.chosen_target_acc = evaluate_accuracy(bundle, data.target);
            outcome.regret = std::numeric_limits<double>::quiet_NaN();
        }
        trial.outcomes.push_back(outcome);
    }
    int selected_snapshot = trial.outcomes.front().chosen_snapshot;
    for (const SelectionOutcome& outcome : trial.outcomes) {
        if (outcome.policy == cfg.selection) {
            trial.selected_target_acc = outcome.chosen_target_acc;
            selected_snapshot = outcome.chosen_snapshot;
        }
    }
    bundle.restore(snapshots[selected_snapshot]);

    return TrainedModel{std::move(trial), std::move(data), vald, std::move(bundle)};
}

namespace {

std::string variant_name(const RunConfig& cfg) {
    std::string name = to_string(cfg.method);
    name += cfg.use_pareto ? "+pareto" : "+fixed";
    name += "+" + to_string(cfg.selection);
    return name;
}

}  // namespace

RunResult run_experiment(const RunConfig& cfg) {
    cfg.validate();
    std::filesystem::create_directories(cfg.out_dir);

    std::ofstream diag_file;
    std::ostream* diag = nullptr;
    if (cfg.diag) {
        diag_file.open(cfg.out_dir + "/diag.jsonl");
        if (!diag_file) throw IoError("cannot write " + cfg.out_dir + "/diag.jsonl");
        diag = &diag_file;
    }

    RunResult result;
    for (std::uint64_t seed : cfg.seeds) {
        result.trials.push_back(run_trial(cfg, seed, diag));
    }

    const std::string variant = variant_name(cfg);
    const std::vector<ResultRow> rows = rows_from_result(variant, result);
    write_results_csv(cfg.out_dir + "/results.csv", rows);
    write_results_jsonl(cfg.out_dir + "/results.jsonl", rows);

    ResultsTable table;
    table.variants = {variant};
    table.targets = {"target"};
    std::vector<double> accs;
    for (const TrialResult& t : result.trials) accs.push_back(t.selected_target_acc);
    std::sort(accs.begin(), accs.end());
    table.acc = {{accs[accs.size() / 2]}};
    write_md_table(cfg.out_dir + "/report.md", table);
    return result;
}

SweepAxis sweep_axis_from_string(const std::string& s) {
    if (s == "alpha") return SweepAxis::Alpha;
    if (s == "grad-mode") return SweepAxis::GradMode;
    if (s == "component") return SweepAxis::Component;
    throw ConfigError("unknown sweep axis: " + s);
}

std::vector<SweepEntry> ablation_sweep(const RunConfig& base, SweepAxis axis,
                                       const std::vector<double>& alpha_values) {
    std::vector<SweepEntry> entries;
    auto run_variant = [&](const std::string& name, RunConfig cfg) {
        cfg.out_dir = base.out_dir + "/" + name;
        SweepEntry entry{name, cfg, run_experiment(cfg)};
        entries.push_back(std::move(entry));
    };

    switch (axis) {
        case SweepAxis::Alpha: {
            if (alpha_values.empty()) throw ConfigError("alpha sweep needs values");
            for (double a : alpha_values) {
                RunConfig cfg = base;
                cfg.alpha = a;
                std::string label = "alpha_" + std::to_string(a);
                label.erase(label.find_last_not_of('0') + 1);
                if (!label.empty() && label.back() == '.') label.pop_back();
                run_variant(label, cfg);
            }
            break;
        }
        case SweepAxis::GradMode: {
            for (GradMode mode : {GradMode::WholeWhole, GradMode::BatchWhole, GradMode::WholeSplit}) {
                RunConfig cfg = base;
                cfg.grad_mode = mode;
                if (mode == GradMode::WholeSplit) cfg.method = Method::ErmPerSource;
                run_variant("grad_" + to_string(mode), cfg);
            }
            break;
        }
        case SweepAxis::Component: {
            struct Component {
                const char* name;
                bool pareto;
                SelectionPolicy selection;
            };
            // Fig-3 structure: vanilla, +OPTD, +VALD, +both.
            const Component components[] = {
                {"vanilla", false, SelectionPolicy::TrainSplit},
                {"optd_only", true, SelectionPolicy::TrainSplit},
                {"vald_only", false, SelectionPolicy::Vald},
                {"optd_vald", true, SelectionPolicy::Vald},
            };
            for (const Component& comp : components) {
                RunConfig cfg = base;
                cfg.use_pareto = comp.pareto;
                cfg.selection = comp.selection;
                run_variant(comp.name, cfg);
            }
            break;
        }
    }

    // Combined table + row dump across variants.
    ResultsTable table;
    table.targets = {"target"};
    std::vector<ResultRow> all_rows;
    for (const SweepEntry& entry : entries) {
        table.variants.push_back(entry.variant);
        std::vector<double> accs;
        for (const TrialResult& t : entry.result.trials) accs.push_back(t.selected_target_acc);
        std::sort(accs.begin(), accs.end());
        table.acc.push_back({accs[accs.size() / 2]});
        for (ResultRow row : rows_from_result(entry.variant, entry.result)) {
            all_rows.push_back(std::move(row));
        }
    }
    std::filesystem::create_directories(base.out_dir);
    write_md_table(base.out_dir + "/report.md", table);
    write_results_csv(base.out_dir + "/results.csv", all_rows);
    write_results_jsonl(base.out_dir + "/results.jsonl", all_rows);
    return entries;
}

}  // namespace mixdg
