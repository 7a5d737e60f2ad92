// kmmr: data generation, instrument-space selection and simulation sweeps.
//
//   kmmr generate   [--config FILE] [overrides]   train/valid/test CSV + metadata.json
//   kmmr select     [--config FILE] [overrides]   one LISC selection, report + table
//   kmmr experiment [--config FILE] [overrides]   full sweep, per-run and aggregate CSV
//   kmmr plotdata   [--config FILE] [overrides]   raw and max-normalized ITC per candidate
//
// Exit codes: 0 success, 1 I/O or other error, 2 config error, 3 numerical
// failure, 4 partial experiment failure.

#include <cstdio>
#include <exception>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kmmr/config.hpp"
#include "kmmr/error.hpp"
#include "kmmr/experiment.hpp"

namespace {

using kmmr::config::ExperimentConfig;

constexpr int kExitIo = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitPartial = 4;

struct Overrides {
    std::string config_path;
    // Flag name -> config key, applied in this order after the file.
    std::vector<std::pair<std::string, std::string>> flags{
        {"scenario", "scenario"},     {"f-star", "f_star"},   {"model", "model"},
        {"candidates", "candidates"}, {"n", "n"},             {"replications", "replications"},
        {"seed", "seed"},             {"alpha", "alpha"},     {"out", "output"},
        {"d", "d"},                   {"methods", "methods"}, {"itc-mask", "itc_mask"},
        {"refit-per-half", "refit_per_half"},                 {"jobs", "jobs"},
    };
    std::map<std::string, std::string> values;
    std::vector<std::string> sets;
};

void add_config_options(CLI::App* cmd, Overrides& ov) {
    cmd->add_option("-c,--config", ov.config_path, "config file (key = value)");
    for (const auto& [flag, key] : ov.flags) {
        cmd->add_option("--" + flag, ov.values[flag], "override config key '" + key + "'");
    }
    cmd->add_option("--set", ov.sets, "override any key: key=value (repeatable)");
}

ExperimentConfig resolve(const CLI::App* cmd, const Overrides& ov) {
    ExperimentConfig cfg =
        ov.config_path.empty() ? ExperimentConfig{} : kmmr::config::load_config(ov.config_path);
    for (const auto& [flag, key] : ov.flags) {
        if (cmd->count("--" + flag) > 0) kmmr::config::apply_setting(cfg, key, ov.values.at(flag));
    }
    for (const auto& s : ov.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw kmmr::ConfigError("--set expects key=value, got '" + s + "'");
        kmmr::config::apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
}

std::string join_path(const std::string& dir, const std::string& name) { return dir + "/" + name; }

kmmr::experiment::Cell first_cell(const ExperimentConfig& cfg) {
    return kmmr::experiment::Cell{cfg.scenarios.front(), cfg.true_functions.front(),
                                  cfg.sizes.front(), 0};
}

int cmd_generate(const ExperimentConfig& cfg) {
    const auto spec = kmmr::experiment::scenario_spec(cfg, first_cell(cfg));
    const auto splits = kmmr::datagen::generate(spec);
    const std::pair<const char*, const kmmr::datagen::Dataset*> parts[] = {
        {"train.csv", &splits.train}, {"valid.csv", &splits.valid}, {"test.csv", &splits.test}};
    for (const auto& [name, ds] : parts) {
        std::ostringstream out;
        kmmr::datagen::write_csv(*ds, out);
        kmmr::experiment::write_file_atomic(join_path(cfg.output, name), out.str());
    }
    kmmr::experiment::write_file_atomic(join_path(cfg.output, "metadata.json"),
                                        kmmr::datagen::metadata_json(spec, splits) + "\n");
    std::cout << "wrote " << spec.n << " rows per split to " << cfg.output << "\n";
    return 0;
}

void print_table(const kmmr::selection::SelectionResult& res, std::ostream& out) {
    char line[200];
    std::snprintf(line, sizeof(line), "%-10s %12s %6s %12s %12s\n", "kernel", "itc", "ident",
                  "keic", "keic/itc");
    out << line;
    for (std::size_t i = 0; i < res.table.size(); ++i) {
        const auto& row = res.table[i];
        std::snprintf(line, sizeof(line), "%-10s %12.5g %6s %12.5g %12.5g%s\n",
                      row.kernel.label().c_str(), row.itc ? row.itc->itc_value : 0.0,
                      row.itc ? (row.itc->identifiable ? "yes" : "no") : "-",
                      row.keic ? row.keic->keic_value : 0.0, row.ratio,
                      i == res.chosen_index ? "  <- chosen" : "");
        out << line;
    }
}

int cmd_select(const ExperimentConfig& cfg) {
    const auto cell = first_cell(cfg);
    const auto seeds = kmmr::experiment::replication_seeds(cfg.seed, 0);
    const auto data = kmmr::datagen::generate(kmmr::experiment::scenario_spec(cfg, cell));
    const auto res = kmmr::experiment::run_method(cfg, kmmr::config::Method::Lisc, data, seeds);

    print_table(res, std::cout);
    std::cout << "chosen: " << res.chosen.label() << " (path " << kmmr::selection::to_string(res.path)
              << ", Q = " << kmmr::numerics::chi2_quantile_1df(1.0 - cfg.alpha) << ")\n";
    if (!res.note.empty()) std::cout << res.note << "\n";
    std::cout << "test mse: "
              << kmmr::selection::evaluate_mse(res.fitted, data.test, cell.true_function) << "\n";

    kmmr::experiment::write_file_atomic(join_path(cfg.output, "selection.json"),
                                        kmmr::selection::report_json(res) + "\n");
    std::ostringstream csv;
    kmmr::selection::write_candidate_csv(res, csv);
    kmmr::experiment::write_file_atomic(join_path(cfg.output, "candidates.csv"), csv.str());
    return 0;
}

int cmd_experiment(const ExperimentConfig& cfg, bool quiet) {
    const auto rows = kmmr::experiment::run_experiment(cfg, [quiet](std::size_t done, std::size_t total) {
        if (!quiet) std::cerr << "\r" << done << "/" << total << " cells" << (done == total ? "\n" : "")
                              << std::flush;
    });

    int failed = 0;
    for (int n : cfg.sizes) {
        std::vector<kmmr::experiment::RunRow> part;
        for (const auto& r : rows) {
            if (r.cell.n != n) continue;
            part.push_back(r);
            if (!r.mse) {
                ++failed;
                std::cerr << "failed: " << kmmr::datagen::to_string(r.cell.scenario) << " "
                          << kmmr::datagen::to_string(r.cell.true_function) << " n=" << n
                          << " rep=" << r.cell.rep << " " << kmmr::config::to_string(r.method)
                          << ": " << r.error << "\n";
            }
        }
        const auto agg = kmmr::experiment::aggregate(part);
        const std::string suffix = "_n" + std::to_string(n);
        std::ostringstream runs;
        kmmr::experiment::write_runs_csv(part, runs);
        kmmr::experiment::write_file_atomic(join_path(cfg.output, "runs" + suffix + ".csv"), runs.str());
        std::ostringstream agg_csv;
        kmmr::experiment::write_aggregate_csv(agg, agg_csv);
        kmmr::experiment::write_file_atomic(join_path(cfg.output, "aggregate" + suffix + ".csv"),
                                            agg_csv.str());
        kmmr::experiment::write_file_atomic(join_path(cfg.output, "record" + suffix + ".json"),
                                            kmmr::experiment::record_json(cfg, part));
    }
    kmmr::experiment::print_aggregate(kmmr::experiment::aggregate(rows), std::cout);
    return failed > 0 ? kExitPartial : 0;
}

int cmd_plotdata(const ExperimentConfig& cfg) {
    const auto rows = kmmr::experiment::run_plotdata(cfg);
    std::ostringstream csv;
    kmmr::experiment::write_plot_csv(rows, csv);
    kmmr::experiment::write_file_atomic(join_path(cfg.output, "plotdata.csv"), csv.str());
    std::cout << "wrote " << rows.size() << " rows to " << join_path(cfg.output, "plotdata.csv")
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kernel maximum moment restriction with instrument-space selection"};
    app.require_subcommand(1);

    Overrides gen_ov, sel_ov, exp_ov, plot_ov;
    auto* gen = app.add_subcommand("generate", "write train/valid/test CSV and metadata");
    add_config_options(gen, gen_ov);
    auto* sel = app.add_subcommand("select", "run one selection and report the candidate table");
    add_config_options(sel, sel_ov);
    auto* exp = app.add_subcommand("experiment", "run the replication sweep");
    add_config_options(exp, exp_ov);
    bool quiet = false;
    exp->add_flag("-q,--quiet", quiet, "no progress output");
    auto* plot = app.add_subcommand("plotdata", "export raw and normalized ITC per candidate");
    add_config_options(plot, plot_ov);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (gen->parsed()) return cmd_generate(resolve(gen, gen_ov));
        if (sel->parsed()) return cmd_select(resolve(sel, sel_ov));
        if (exp->parsed()) return cmd_experiment(resolve(exp, exp_ov), quiet);
        if (plot->parsed()) return cmd_plotdata(resolve(plot, plot_ov));
    } catch (const kmmr::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const kmmr::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const kmmr::Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return 0;
}
