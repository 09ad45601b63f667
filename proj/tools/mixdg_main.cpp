// mixdg command line: multi-domain training runs with Pareto-guided
// optimization and Mixup-based model selection, ablation sweeps, and
// divergence diagnostics.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "mixdg/config.hpp"
#include "mixdg/divergence.hpp"
#include "mixdg/errors.hpp"
#include "mixdg/kernels.hpp"
#include "mixdg/mixup.hpp"
#include "mixdg/pareto.hpp"
#include "mixdg/report.hpp"
#include "mixdg/rng.hpp"
#include "mixdg/trainer.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::string method, selection, grad_mode, out_dir;
    double alpha = -1.0, epsilon = -1.0, learning_rate = -1.0;
    int refresh = -1, epochs = -1;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool pareto = false, no_pareto = false, diag = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "JSON config file")->required();
    cmd->add_option("--method", f.method, "erm|erm-per-source|dann|coral");
    cmd->add_flag("--pareto", f.pareto, "enable Pareto-guided weighting");
    cmd->add_flag("--no-pareto", f.no_pareto, "disable Pareto-guided weighting");
    cmd->add_option("--selection", f.selection, "trainsplit|vald|oracle");
    cmd->add_option("--alpha", f.alpha, "Beta concentration for the mix samplers");
    cmd->add_option("--epsilon", f.epsilon, "guidance-loss relaxation threshold");
    cmd->add_option("--B", f.refresh, "weight refresh period in iterations");
    cmd->add_option("--epochs", f.epochs, "training epochs");
    cmd->add_option("--lr", f.learning_rate, "learning rate");
    cmd->add_option("--grad-mode", f.grad_mode, "w-w|b-w|w-s");
    cmd->add_option("--seed", f.seed, "run a single seed instead of the config list")
        ->each([&f](const std::string&) { f.seed_set = true; });
    cmd->add_flag("--diag", f.diag, "write diag.jsonl with per-refresh LP diagnostics");
    cmd->add_option("--out", f.out_dir, "output directory");
}

mixdg::RunConfig apply_flags(const CommonFlags& f) {
    mixdg::RunConfig cfg = mixdg::load_config(f.config_path);
    if (!f.method.empty()) cfg.method = mixdg::method_from_string(f.method);
    if (f.pareto) cfg.use_pareto = true;
    if (f.no_pareto) cfg.use_pareto = false;
    if (!f.selection.empty()) cfg.selection = mixdg::selection_policy_from_string(f.selection);
    if (f.alpha > 0.0) cfg.alpha = f.alpha;
    if (f.epsilon > 0.0) cfg.epsilon = f.epsilon;
    if (f.refresh > 0) cfg.refresh_period = f.refresh;
    if (f.epochs > 0) cfg.epochs = f.epochs;
    if (f.learning_rate > 0.0) cfg.learning_rate = f.learning_rate;
    if (!f.grad_mode.empty()) cfg.grad_mode = mixdg::grad_mode_from_string(f.grad_mode);
    if (f.seed_set) cfg.seeds = {f.seed};
    if (f.diag) cfg.diag = true;
    if (!f.out_dir.empty()) cfg.out_dir = f.out_dir;
    return cfg;
}

void print_summary(const mixdg::RunResult& result) {
    for (const mixdg::TrialResult& t : result.trials) {
        std::cout << "seed " << t.seed << ": selected target acc " << t.selected_target_acc;
        for (const mixdg::SelectionOutcome& o : t.outcomes) {
            std::cout << "  [" << mixdg::to_string(o.policy) << " acc " << o.chosen_target_acc
                      << " iter " << o.chosen_iteration << "]";
        }
        if (t.pareto.refreshes > 0) {
            std::cout << "  (refreshes " << t.pareto.refreshes << ", guidance "
                      << t.pareto.guidance_descent << ", pure " << t.pareto.pure_descent
                      << ", theorem1 failures " << t.pareto.theorem1_failures << ")";
        }
        std::cout << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-domain generalization trainer with Pareto-guided optimization "
                 "and Mixup-based model selection"};
    app.require_subcommand(1);

    CommonFlags run_flags;
    CLI::App* run_cmd = app.add_subcommand("run", "train with one configuration");
    add_common(run_cmd, run_flags);

    CommonFlags sweep_flags;
    std::string axis = "component";
    std::vector<double> alpha_values = {0.1, 0.2, 0.5, 1.0, 2.0};
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "run an ablation sweep");
    add_common(sweep_cmd, sweep_flags);
    sweep_cmd->add_option("--axis", axis, "alpha|grad-mode|component");
    sweep_cmd->add_option("--alpha-values", alpha_values, "values for the alpha axis");

    CommonFlags div_flags;
    CLI::App* div_cmd = app.add_subcommand("diverge", "divergence diagnostics report");
    add_common(div_cmd, div_flags);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            const mixdg::RunConfig cfg = apply_flags(run_flags);
            std::cout << "kernels: " << mixdg::kernels::active_name() << "\n";
            print_summary(mixdg::run_experiment(cfg));
            std::cout << "results written to " << cfg.out_dir << "\n";
        } else if (*sweep_cmd) {
            const mixdg::RunConfig cfg = apply_flags(sweep_flags);
            const auto entries =
                mixdg::ablation_sweep(cfg, mixdg::sweep_axis_from_string(axis), alpha_values);
            for (const mixdg::SweepEntry& entry : entries) {
                std::cout << "== " << entry.variant << " ==\n";
                print_summary(entry.result);
            }
            std::cout << "sweep results written to " << cfg.out_dir << "\n";
        } else if (*div_cmd) {
            const mixdg::RunConfig cfg = apply_flags(div_flags);
            cfg.validate();
            const std::uint64_t seed = cfg.seeds.front();

            // Train, keep the selected checkpoint, then measure the bound terms.
            mixdg::TrainedModel trained = mixdg::run_trial_full(cfg, seed, nullptr);
            const mixdg::DivergenceReport report = mixdg::bound_terms_report(
                trained.data.sources, trained.data.split.val, trained.vald, trained.data.target,
                trained.bundle, mixdg::ProbeSpec{}, seed);
            std::filesystem::create_directories(cfg.out_dir);
            std::ofstream f(cfg.out_dir + "/divergence.json");
            if (!f) throw mixdg::IoError("cannot write " + cfg.out_dir + "/divergence.json");
            f << mixdg::to_json(report) << "\n";
            std::cout << mixdg::to_json(report) << "\n";
            std::cout << "divergence report written to " << cfg.out_dir << "/divergence.json\n";
        }
    } catch (const mixdg::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
