#include "mixdg/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mixdg/errors.hpp"

namespace mixdg {

using nlohmann::json;

GradMode grad_mode_from_string(const std::string& s) {
    if (s == "w-w") return GradMode::WholeWhole;
    if (s == "b-w") return GradMode::BatchWhole;
    if (s == "w-s") return GradMode::WholeSplit;
    throw ConfigError("unknown grad mode: " + s);
}

std::string to_string(GradMode g) {
    switch (g) {
        case GradMode::WholeWhole: return "w-w";
        case GradMode::BatchWhole: return "b-w";
        case GradMode::WholeSplit: return "w-s";
    }
    return "?";
}

int RunConfig::objective_count() const {
    switch (method) {
        case Method::Erm: return 1;
        case Method::Dann:
        case Method::Coral: return 2;
        case Method::ErmPerSource:
            return dataset == DatasetKind::Synthetic
                       ? static_cast<int>(synthetic.source_angles_deg.size())
                       : -1;  // known after ingestion
    }
    return 1;
}

std::vector<std::string> RunConfig::violations() const {
    std::vector<std::string> v;
    if (batch_per_domain < 2) v.push_back("batch_per_domain must be >= 2");
    if (epochs < 1) v.push_back("epochs must be >= 1");
    if (!(alpha > 0.0)) v.push_back("alpha must be > 0");
    if (!(epsilon > 0.0)) v.push_back("epsilon must be > 0");
    if (refresh_period < 1) v.push_back("B (refresh period) must be >= 1");
    if (!(learning_rate > 0.0)) v.push_back("learning_rate must be > 0");
    if (seeds.empty()) v.push_back("seeds must be non-empty");
    if (!(split_ratio > 0.0 && split_ratio < 1.0)) v.push_back("split_ratio must lie in (0,1)");
    if (hidden_width < 1) v.push_back("hidden_width must be >= 1");
    if (feat_width < 1) v.push_back("feat_width must be >= 1");
    if (eval_every_epochs < 1) v.push_back("eval_every_epochs must be >= 1");
    if (fixed_lambda < 0.0) v.push_back("fixed_lambda must be >= 0");
    if (optimizer != "sgd" && optimizer != "adam") v.push_back("optimizer must be sgd or adam");
    if (grad_mode == GradMode::WholeSplit && method != Method::ErmPerSource) {
        v.push_back("grad_mode w-s requires method erm-per-source");
    }
    if (use_pareto && method == Method::Erm) {
        v.push_back("pareto needs m >= 2 objectives; method erm has a single objective");
    }
    if (selection == SelectionPolicy::Oracle && !track_oracle) {
        v.push_back("selection oracle requires track_oracle");
    }
    if (dataset == DatasetKind::Synthetic) {
        try {
            synthetic.validate();
        } catch (const Error& e) {
            v.push_back(std::string("synthetic spec: ") + e.what());
        }
    } else {
        if (csv_path.empty()) v.push_back("csv_path is required for csv datasets");
        if (csv_schema.feature_columns.empty()) v.push_back("csv feature columns are required");
        if (csv_schema.label_column.empty()) v.push_back("csv label column is required");
        if (csv_schema.domain_column.empty()) v.push_back("csv domain column is required");
        if (csv_target_domain.empty()) v.push_back("csv_target_domain is required");
    }
    return v;
}

void RunConfig::validate() const {
    const std::vector<std::string> v = violations();
    if (v.empty()) return;
    std::string msg = "invalid configuration:";
    for (const std::string& s : v) msg += "\n  - " + s;
    throw ConfigError(msg);
}

namespace {

template <typename T>
void read_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig parse_config_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");

    static const std::vector<std::string> known = {
        "dataset", "family", "source_angles", "convex_target", "target_mixture", "target_angle",
        "noise_scale", "samples_per_domain", "class_count", "data_seed", "csv_path",
        "csv_features", "csv_label", "csv_domain", "csv_target_domain", "method", "pareto",
        "selection", "alpha", "epsilon", "B", "learning_rate", "epochs", "batch_per_domain",
        "seeds", "grad_mode", "out_dir", "diag", "fixed_lambda", "split_ratio", "hidden_width",
        "feat_width", "disc_hidden", "optd_count", "vald_count", "eval_every_epochs", "optimizer",
        "vald_parents_from_train", "track_oracle"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
            throw ConfigError("unknown config key: " + it.key());
        }
    }

    RunConfig cfg;
    if (j.contains("dataset")) {
        const std::string kind = j.at("dataset").get<std::string>();
        if (kind == "synthetic") {
            cfg.dataset = DatasetKind::Synthetic;
        } else if (kind == "csv") {
            cfg.dataset = DatasetKind::Csv;
        } else {
            throw ConfigError("dataset must be 'synthetic' or 'csv'");
        }
    }
    if (j.contains("family")) {
        cfg.synthetic.family = shift_family_from_string(j.at("family").get<std::string>());
    }
    read_if(j, "source_angles", cfg.synthetic.source_angles_deg);
    read_if(j, "convex_target", cfg.synthetic.convex_target);
    read_if(j, "target_mixture", cfg.synthetic.target_mixture);
    read_if(j, "target_angle", cfg.synthetic.target_angle_deg);
    read_if(j, "noise_scale", cfg.synthetic.noise_scale);
    read_if(j, "samples_per_domain", cfg.synthetic.samples_per_domain);
    read_if(j, "class_count", cfg.synthetic.class_count);
    read_if(j, "data_seed", cfg.synthetic.seed);
    read_if(j, "csv_path", cfg.csv_path);
    read_if(j, "csv_features", cfg.csv_schema.feature_columns);
    read_if(j, "csv_label", cfg.csv_schema.label_column);
    read_if(j, "csv_domain", cfg.csv_schema.domain_column);
    read_if(j, "csv_target_domain", cfg.csv_target_domain);
    if (j.contains("method")) cfg.method = method_from_string(j.at("method").get<std::string>());
    read_if(j, "pareto", cfg.use_pareto);
    if (j.contains("selection")) {
        cfg.selection = selection_policy_from_string(j.at("selection").get<std::string>());
    }
    read_if(j, "alpha", cfg.alpha);
    read_if(j, "epsilon", cfg.epsilon);
    read_if(j, "B", cfg.refresh_period);
    read_if(j, "learning_rate", cfg.learning_rate);
    read_if(j, "epochs", cfg.epochs);
    read_if(j, "batch_per_domain", cfg.batch_per_domain);
    read_if(j, "seeds", cfg.seeds);
    if (j.contains("grad_mode")) {
        cfg.grad_mode = grad_mode_from_string(j.at("grad_mode").get<std::string>());
    }
    read_if(j, "out_dir", cfg.out_dir);
    read_if(j, "diag", cfg.diag);
    read_if(j, "fixed_lambda", cfg.fixed_lambda);
    read_if(j, "split_ratio", cfg.split_ratio);
    read_if(j, "hidden_width", cfg.hidden_width);
    read_if(j, "feat_width", cfg.feat_width);
    read_if(j, "disc_hidden", cfg.disc_hidden);
    read_if(j, "optd_count", cfg.optd_count);
    read_if(j, "vald_count", cfg.vald_count);
    read_if(j, "eval_every_epochs", cfg.eval_every_epochs);
    read_if(j, "optimizer", cfg.optimizer);
    read_if(j, "vald_parents_from_train", cfg.vald_parents_from_train);
    read_if(j, "track_oracle", cfg.track_oracle);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_json(ss.str());
}

std::string config_to_json(const RunConfig& cfg) {
    json j;
    j["dataset"] = cfg.dataset == DatasetKind::Synthetic ? "synthetic" : "csv";
    j["family"] = to_string(cfg.synthetic.family);
    j["source_angles"] = cfg.synthetic.source_angles_deg;
    j["convex_target"] = cfg.synthetic.convex_target;
    j["target_mixture"] = cfg.synthetic.target_mixture;
    j["target_angle"] = cfg.synthetic.target_angle_deg;
    j["noise_scale"] = cfg.synthetic.noise_scale;
    j["samples_per_domain"] = cfg.synthetic.samples_per_domain;
    j["class_count"] = cfg.synthetic.class_count;
    j["data_seed"] = cfg.synthetic.seed;
    if (cfg.dataset == DatasetKind::Csv) {
        j["csv_path"] = cfg.csv_path;
        j["csv_features"] = cfg.csv_schema.feature_columns;
        j["csv_label"] = cfg.csv_schema.label_column;
        j["csv_domain"] = cfg.csv_schema.domain_column;
        j["csv_target_domain"] = cfg.csv_target_domain;
    }
    j["method"] = to_string(cfg.method);
    j["pareto"] = cfg.use_pareto;
    j["selection"] = to_string(cfg.selection);
    j["alpha"] = cfg.alpha;
    j["epsilon"] = cfg.epsilon;
    j["B"] = cfg.refresh_period;
    j["learning_rate"] = cfg.learning_rate;
    j["epochs"] = cfg.epochs;
    j["batch_per_domain"] = cfg.batch_per_domain;
    j["seeds"] = cfg.seeds;
    j["grad_mode"] = to_string(cfg.grad_mode);
    j["fixed_lambda"] = cfg.fixed_lambda;
    j["split_ratio"] = cfg.split_ratio;
    j["hidden_width"] = cfg.hidden_width;
    j["feat_width"] = cfg.feat_width;
    j["disc_hidden"] = cfg.disc_hidden;
    j["optd_count"] = cfg.optd_count;
    j["vald_count"] = cfg.vald_count;
    j["eval_every_epochs"] = cfg.eval_every_epochs;
    j["optimizer"] = cfg.optimizer;
    j["vald_parents_from_train"] = cfg.vald_parents_from_train;
    j["track_oracle"] = cfg.track_oracle;
    return j.dump();
}

}  // namespace mixdg
