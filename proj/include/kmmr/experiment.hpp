#pragma once

// Simulation harness: sweeps (n, scenario, f*) cells over replications, runs
// each configured method and records test MSE. Replication r draws a fresh
// dataset from seed base + r; the ITC split, CV folds and initialization
// seeds are labeled substreams of that seed.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kmmr/config.hpp"
#include "kmmr/selection.hpp"

namespace kmmr::experiment {

struct ReplicationSeeds {
    std::uint64_t data = 0;
    selection::SelectionSeeds selection;
};

[[nodiscard]] ReplicationSeeds replication_seeds(std::uint64_t base, int rep);

struct Cell {
    datagen::Scenario scenario = datagen::Scenario::LS;
    datagen::TrueFunction true_function = datagen::TrueFunction::Linear;
    int n = 0;
    int rep = 0;
};

// Ordered by n, scenario, f*, replication.
[[nodiscard]] std::vector<Cell> cells(const config::ExperimentConfig& cfg);

[[nodiscard]] datagen::ScenarioSpec scenario_spec(const config::ExperimentConfig& cfg,
                                                  const Cell& cell);
[[nodiscard]] selection::Options selection_options(const config::ExperimentConfig& cfg,
                                                   const ReplicationSeeds& seeds);

// One method's selection on the cell's training split.
[[nodiscard]] selection::SelectionResult run_method(const config::ExperimentConfig& cfg,
                                                    config::Method method,
                                                    const datagen::DataSplits& data,
                                                    const ReplicationSeeds& seeds);

struct RunRow {
    Cell cell;
    config::Method method = config::Method::Lisc;
    std::optional<double> mse;  // empty when the run failed
    std::string chosen_label;
    std::string path;           // selection path, or "error"
    std::string error;
    std::optional<selection::SelectionResult> selection;
};

// All methods for one cell; failures are caught per method.
[[nodiscard]] std::vector<RunRow> run_cell(const config::ExperimentConfig& cfg, const Cell& cell);

using Progress = std::function<void(std::size_t done, std::size_t total)>;

// Runs every cell on cfg.jobs workers. Row order follows cells() and
// cfg.methods regardless of scheduling.
[[nodiscard]] std::vector<RunRow> run_experiment(const config::ExperimentConfig& cfg,
                                                 const Progress& progress = {});

struct AggregateRow {
    datagen::Scenario scenario = datagen::Scenario::LS;
    datagen::TrueFunction true_function = datagen::TrueFunction::Linear;
    int n = 0;
    config::Method method = config::Method::Lisc;
    int ok = 0;
    int failed = 0;
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation; 0 with fewer than 2 runs
};

// Groups in first-appearance order; failed rows only count toward `failed`.
[[nodiscard]] std::vector<AggregateRow> aggregate(const std::vector<RunRow>& rows);

// "scenario,f_star,method,rep,mse,chosen_label,path"
void write_runs_csv(const std::vector<RunRow>& rows, std::ostream& out);
// "scenario,f_star,n,method,ok,failed,mean,std"
void write_aggregate_csv(const std::vector<AggregateRow>& rows, std::ostream& out);
// Config fingerprint plus every row, with its selection report when present.
[[nodiscard]] std::string record_json(const config::ExperimentConfig& cfg,
                                      const std::vector<RunRow>& rows);
// Human-readable "mean ± std" table.
void print_aggregate(const std::vector<AggregateRow>& rows, std::ostream& out);

struct PlotRow {
    datagen::Scenario scenario = datagen::Scenario::LS;
    datagen::TrueFunction true_function = datagen::TrueFunction::Linear;
    int n = 0;
    int rep = 0;
    std::string label;  // kernel label, or "threshold"
    double itc = 0.0;
    double normalized = 0.0;
    bool identifiable = false;
};

// Per cell: each candidate's raw ITC and ITC / max ITC, followed by a
// "threshold" row holding Q_{1-alpha} and Q_{1-alpha} / max ITC.
[[nodiscard]] std::vector<PlotRow> plot_rows(const config::ExperimentConfig& cfg,
                                             const Cell& cell);
[[nodiscard]] std::vector<PlotRow> run_plotdata(const config::ExperimentConfig& cfg);
// "scenario,f_star,n,rep,label,itc,normalized,identifiable"
void write_plot_csv(const std::vector<PlotRow>& rows, std::ostream& out);

// Writes via a temporary file and rename. Throws IoError.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace kmmr::experiment
