#pragma once

#include <string>
#include <vector>

#include "mixdg/selection.hpp"
#include "mixdg/trainer.hpp"

namespace mixdg {

// Accuracy grid in the usual per-target layout: one row per method variant,
// one column per target domain, plus a derived AVG column.
struct ResultsTable {
    std::vector<std::string> variants;
    std::vector<std::string> targets;
    std::vector<std::vector<double>> acc;  // [variant][target]
};

void write_md_table(const std::string& path, const ResultsTable& table);
void write_csv_table(const std::string& path, const ResultsTable& table);

// One JSON line per (seed, policy) with the echoed config fingerprint.
struct ResultRow {
    std::string variant;
    std::uint64_t seed = 0;
    std::string policy;
    int chosen_iter = 0;
    double target_acc = 0.0;
    double regret = 0.0;
    double spearman = 0.0;
    bool spearman_defined = false;

    bool operator==(const ResultRow&) const = default;
};

std::vector<ResultRow> rows_from_result(const std::string& variant, const RunResult& result);
void write_results_jsonl(const std::string& path, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_results_jsonl(const std::string& path);
void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows);

}  // namespace mixdg
