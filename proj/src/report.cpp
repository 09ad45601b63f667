#include "mixdg/report.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mixdg/errors.hpp"

namespace mixdg {

using nlohmann::json;

namespace {

double row_avg(const std::vector<double>& row) {
    double s = 0.0;
    for (double v : row) s += v;
    return s / static_cast<double>(row.size());
}

}  // namespace

void write_md_table(const std::string& path, const ResultsTable& table) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    f.precision(17);
    f << "| method |";
    for (const std::string& t : table.targets) f << " " << t << " |";
    f << " AVG |\n";
    f << "|---|";
    for (std::size_t i = 0; i < table.targets.size(); ++i) f << "---|";
    f << "---|\n";
    for (std::size_t r = 0; r < table.variants.size(); ++r) {
        f << "| " << table.variants[r] << " |";
        for (double v : table.acc[r]) f << " " << v << " |";
        f << " " << row_avg(table.acc[r]) << " |\n";
    }
}

void write_csv_table(const std::string& path, const ResultsTable& table) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    f.precision(17);
    f << "method";
    for (const std::string& t : table.targets) f << "," << t;
    f << ",AVG\n";
    for (std::size_t r = 0; r < table.variants.size(); ++r) {
        f << table.variants[r];
        for (double v : table.acc[r]) f << "," << v;
        f << "," << row_avg(table.acc[r]) << "\n";
    }
}

std::vector<ResultRow> rows_from_result(const std::string& variant, const RunResult& result) {
    std::vector<ResultRow> rows;
    for (const TrialResult& trial : result.trials) {
        // One study row per (seed, policy) with the trajectory correlation.
        std::vector<Trajectory> traj = {{trial.seed, trial.checkpoints}};
        std::vector<SelectionPolicy> policies;
        for (const SelectionOutcome& o : trial.outcomes) policies.push_back(o.policy);
        for (const StudyRow& s : selection_study(traj, policies)) {
            ResultRow row;
            row.variant = variant;
            row.seed = s.seed;
            row.policy = to_string(s.policy);
            row.chosen_iter = s.chosen_iter;
            row.target_acc = s.target_acc;
            row.regret = s.regret;
            row.spearman = s.spearman;
            row.spearman_defined = s.spearman_defined;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

void write_results_jsonl(const std::string& path, const std::vector<ResultRow>& rows) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    for (const ResultRow& row : rows) {
        json j{{"variant", row.variant},
               {"seed", row.seed},
               {"policy", row.policy},
               {"chosen_iter", row.chosen_iter},
               {"target_acc", row.target_acc},
               {"regret", row.regret},
               {"spearman", row.spearman},
               {"spearman_defined", row.spearman_defined}};
        f << j.dump() << "\n";
    }
}

std::vector<ResultRow> read_results_jsonl(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot read " + path);
    std::vector<ResultRow> rows;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        // NaN fields serialize as JSON null.
        auto num = [](const json& v) {
            return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
        };
        ResultRow row;
        row.variant = j.at("variant").get<std::string>();
        row.seed = j.at("seed").get<std::uint64_t>();
        row.policy = j.at("policy").get<std::string>();
        row.chosen_iter = j.at("chosen_iter").get<int>();
        row.target_acc = num(j.at("target_acc"));
        row.regret = num(j.at("regret"));
        row.spearman = num(j.at("spearman"));
        row.spearman_defined = j.at("spearman_defined").get<bool>();
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    f.precision(17);
    f << "variant,seed,policy,chosen_iter,target_acc,regret,spearman\n";
    for (const ResultRow& row : rows) {
        f << row.variant << "," << row.seed << "," << row.policy << "," << row.chosen_iter << ","
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
