#include "kmmr/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "kmmr/error.hpp"

namespace kmmr::experiment {

namespace {

std::string fmt(double x) { return numerics::format_double(x); }

std::string fixed(double x, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, x);
    return buf;
}

}  // namespace

ReplicationSeeds replication_seeds(std::uint64_t base, int rep) {
    const std::uint64_t seed = base + static_cast<std::uint64_t>(rep);
    return ReplicationSeeds{seed, selection::SelectionSeeds::derive(seed)};
}

std::vector<Cell> cells(const config::ExperimentConfig& cfg) {
    std::vector<Cell> out;
    for (int n : cfg.sizes) {
        for (auto s : cfg.scenarios) {
            for (auto f : cfg.true_functions) {
                for (int r = 0; r < cfg.replications; ++r) out.push_back(Cell{s, f, n, r});
            }
        }
    }
    return out;
}

datagen::ScenarioSpec scenario_spec(const config::ExperimentConfig& cfg, const Cell& cell) {
    datagen::ScenarioSpec spec;
    spec.true_function = cell.true_function;
    spec.scenario = cell.scenario;
    spec.d = cfg.dimension(cell.scenario);
    spec.n = cell.n;
    spec.seed = replication_seeds(cfg.seed, cell.rep).data;
    return spec;
}

selection::Options selection_options(const config::ExperimentConfig& cfg,
                                     const ReplicationSeeds& seeds) {
    selection::Options opts;
    opts.alpha = cfg.alpha;
    opts.seeds = seeds.selection;
    opts.mlp_mask = cfg.itc_mask;
    opts.refit_per_half = cfg.refit_per_half;
    return opts;
}

selection::SelectionResult run_method(const config::ExperimentConfig& cfg, config::Method method,
                                      const datagen::DataSplits& data,
                                      const ReplicationSeeds& seeds) {
    const auto opts = selection_options(cfg, seeds);
    switch (method) {
        case config::Method::Lisc:
            return selection::lisc_select(data.train, &data.valid, cfg.candidates, cfg.model, opts);
        case config::Method::Median:
            return selection::baseline_select(data.train, &data.valid,
                                              selection::BaselineRule::Median, cfg.model, opts);
        case config::Method::Silverman:
            return selection::baseline_select(data.train, &data.valid,
                                              selection::BaselineRule::Silverman, cfg.model, opts);
    }
    throw ConfigError("run_method: unknown method");
}

std::vector<RunRow> run_cell(const config::ExperimentConfig& cfg, const Cell& cell) {
    const auto seeds = replication_seeds(cfg.seed, cell.rep);
    std::vector<RunRow> rows;
    std::optional<datagen::DataSplits> data;
    std::string data_error;
    try {
        data = datagen::generate(scenario_spec(cfg, cell));
    } catch (const Error& e) {
        data_error = e.what();
    }
    for (auto method : cfg.methods) {
        RunRow row;
        row.cell = cell;
        row.method = method;
        try {
            if (!data) throw NumericalFailure("data generation failed: " + data_error);
            auto result = run_method(cfg, method, *data, seeds);
            row.mse = selection::evaluate_mse(result.fitted, data->test, cell.true_function);
            if (!std::isfinite(*row.mse)) throw NumericalFailure("non-finite test MSE");
            row.chosen_label = result.chosen.label();
            row.path = selection::to_string(result.path);
            row.selection = std::move(result);
        } catch (const Error& e) {
            row.mse.reset();
            row.path = "error";
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<RunRow> run_experiment(const config::ExperimentConfig& cfg, const Progress& progress) {
    cfg.validate();
    const auto all = cells(cfg);
    std::vector<std::vector<RunRow>> per_cell(all.size());
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::mutex progress_mutex;

    auto worker = [&] {
        for (std::size_t i = next++; i < all.size(); i = next++) {
            per_cell[i] = run_cell(cfg, all[i]);
            const std::size_t d = ++done;
            if (progress) {
                std::lock_guard lock(progress_mutex);
                progress(d, all.size());
            }
        }
    };
    const auto jobs = std::min<std::size_t>(static_cast<std::size_t>(cfg.jobs), all.size());
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
    }

    std::vector<RunRow> rows;
    for (auto& c : per_cell) {
        for (auto& r : c) rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<AggregateRow> aggregate(const std::vector<RunRow>& rows) {
    using Key = std::tuple<int, int, int, int>;
    std::vector<AggregateRow> out;
    std::vector<std::vector<double>> values;
    std::map<Key, std::size_t> index;
    for (const auto& r : rows) {
        const Key key{static_cast<int>(r.cell.scenario), static_cast<int>(r.cell.true_function),
                      r.cell.n, static_cast<int>(r.method)};
        auto [it, inserted] = index.try_emplace(key, out.size());
        if (inserted) {
            AggregateRow a;
            a.scenario = r.cell.scenario;
            a.true_function = r.cell.true_function;
            a.n = r.cell.n;
            a.method = r.method;
            out.push_back(a);
            values.emplace_back();
        }
        if (r.mse) {
            values[it->second].push_back(*r.mse);
        } else {
            ++out[it->second].failed;
        }
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].ok = static_cast<int>(values[i].size());
        if (values[i].empty()) {
            out[i].mean = std::nan("");
            out[i].std = std::nan("");
            continue;
        }
        out[i].mean = numerics::mean(values[i]);
        out[i].std = values[i].size() > 1 ? numerics::sample_std(values[i]) : 0.0;
    }
    return out;
}

void write_runs_csv(const std::vector<RunRow>& rows, std::ostream& out) {
    out << "scenario,f_star,method,rep,mse,chosen_label,path\n";
    for (const auto& r : rows) {
        out << datagen::to_string(r.cell.scenario) << ',' << datagen::to_string(r.cell.true_function)
            << ',' << config::to_string(r.method) << ',' << r.cell.rep << ','
            << (r.mse ? fmt(*r.mse) : "NA") << ',' << r.chosen_label << ',' << r.path << '\n';
    }
}

void write_aggregate_csv(const std::vector<AggregateRow>& rows, std::ostream& out) {
    out << "scenario,f_star,n,method,ok,failed,mean,std\n";
    for (const auto& a : rows) {
        out << datagen::to_string(a.scenario) << ',' << datagen::to_string(a.true_function) << ','
            << a.n << ',' << config::to_string(a.method) << ',' << a.ok << ',' << a.failed << ','
            << (a.ok ? fmt(a.mean) : "NA") << ',' << (a.ok ? fmt(a.std) : "NA") << '\n';
    }
}

std::string record_json(const config::ExperimentConfig& cfg, const std::vector<RunRow>& rows) {
    nlohmann::ordered_json j;
    j["fingerprint"] = config::fingerprint(cfg);
    j["config"] = config::canonical_text(cfg, false);
    auto runs = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        nlohmann::ordered_json o;
        o["scenario"] = datagen::to_string(r.cell.scenario);
        o["f_star"] = datagen::to_string(r.cell.true_function);
        o["n"] = r.cell.n;
        o["rep"] = r.cell.rep;
        o["seed"] = cfg.seed + static_cast<std::uint64_t>(r.cell.rep);
        o["method"] = config::to_string(r.method);
        if (r.mse) {
            o["mse"] = *r.mse;
        } else {
            o["mse"] = nullptr;
            o["error"] = r.error;
        }
        if (r.selection) o["selection"] = nlohmann::ordered_json::parse(selection::report_json(*r.selection, -1));
        runs.push_back(std::move(o));
    }
    j["runs"] = std::move(runs);
    auto agg = nlohmann::ordered_json::array();
    for (const auto& a : aggregate(rows)) {
        nlohmann::ordered_json o;
        o["scenario"] = datagen::to_string(a.scenario);
        o["f_star"] = datagen::to_string(a.true_function);
        o["n"] = a.n;
        o["method"] = config::to_string(a.method);
        o["ok"] = a.ok;
        o["failed"] = a.failed;
        o["mean"] = a.ok ? nlohmann::ordered_json(a.mean) : nlohmann::ordered_json(nullptr);
        o["std"] = a.ok ? nlohmann::ordered_json(a.std) : nlohmann::ordered_json(nullptr);
        agg.push_back(std::move(o));
    }
    j["aggregate"] = std::move(agg);
    return j.dump(2) + "\n";
}

void print_aggregate(const std::vector<AggregateRow>& rows, std::ostream& out) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-4s %-7s %6s %-10s %24s %8s\n", "scen", "f_star", "n",
                  "method", "mse (mean ± std)", "ok/all");
    out << line;
    for (const auto& a : rows) {
        const std::string cell = a.ok ? fixed(a.mean, 4) + " ± " + fixed(a.std, 4) : "failed";
        std::snprintf(line, sizeof(line), "%-4s %-7s %6d %-10s %24s %4d/%d\n",
                      datagen::to_string(a.scenario).c_str(),
                      datagen::to_string(a.true_function).c_str(), a.n,
                      config::to_string(a.method).c_str(), cell.c_str(), a.ok, a.ok + a.failed);
        out << line;
    }
}

std::vector<PlotRow> plot_rows(const config::ExperimentConfig& cfg, const Cell& cell) {
    const auto seeds = replication_seeds(cfg.seed, cell.rep);
    const auto data = datagen::generate(scenario_spec(cfg, cell));
    const bool is_mlp = cfg.model.kind == models::ModelSpec::Kind::Mlp;
    const auto mask = is_mlp ? cfg.itc_mask : models::GradMask::Full;

    std::vector<PlotRow> rows;
    for (const auto& kernel : cfg.candidates) {
        numerics::Rng init_rng(seeds.selection.init);
        const auto problem = mmr::MmrProblem::make(data.train, kernel);
        std::optional<mmr::MmrProblem> valid;
        mmr::FitPlan plan;
        plan.init = models::make_model(cfg.model, init_rng);
        if (is_mlp) {
            valid = mmr::MmrProblem::make(data.valid, kernel);
            plan.valid = &*valid;
        }
        const auto fit = mmr::fit_model(problem, plan);
        const auto rep =
            itc::itc(data.train, kernel, fit.model, cfg.alpha, seeds.selection.split, mask);
        rows.push_back(PlotRow{cell.scenario, cell.true_function, cell.n, cell.rep, kernel.label(),
                               rep.itc_value, 0.0, rep.identifiable});
    }
    double top = 0.0;
    for (const auto& r : rows) top = std::max(top, r.itc);
    const double q = numerics::chi2_quantile_1df(1.0 - cfg.alpha);
    const double nan = std::nan("");
    for (auto& r : rows) r.normalized = top > 0.0 ? r.itc / top : nan;
    rows.push_back(PlotRow{cell.scenario, cell.true_function, cell.n, cell.rep, "threshold", q,
                           top > 0.0 ? q / top : nan, false});
    return rows;
}

std::vector<PlotRow> run_plotdata(const config::ExperimentConfig& cfg) {
    cfg.validate();
    const auto all = cells(cfg);
    std::vector<std::vector<PlotRow>> per_cell(all.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < all.size(); i = next++) per_cell[i] = plot_rows(cfg, all[i]);
    };
    const auto jobs = std::min<std::size_t>(static_cast<std::size_t>(cfg.jobs), all.size());
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
    }
    std::vector<PlotRow> rows;
    for (auto& c : per_cell) rows.insert(rows.end(), c.begin(), c.end());
    return rows;
}

void write_plot_csv(const std::vector<PlotRow>& rows, std::ostream& out) {
    out << "scenario,f_star,n,rep,label,itc,normalized,identifiable\n";
    for (const auto& r : rows) {
        out << datagen::to_string(r.scenario) << ',' << datagen::to_string(r.true_function) << ','
            << r.n << ',' << r.rep << ',' << r.label << ',' << fmt(r.itc) << ','
            << fmt(r.normalized) << ',' << (r.identifiable ? "true" : "false") << '\n';
    }
}

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    std::error_code ec;
    if (target.has_parent_path()) {
        fs::create_directories(target.parent_path(), ec);
        if (ec) throw IoError("cannot create directory '" + target.parent_path().string() + "'");
    }
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
        out << content;
        if (!out.flush()) throw IoError("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, target, ec);
    if (ec) throw IoError("cannot rename '" + tmp.string() + "' to '" + path + "'");
}

}  // namespace kmmr::experiment
