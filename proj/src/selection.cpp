#include "kmmr/selection.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "kmmr/error.hpp"

namespace kmmr::selection {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Prepared {
    mmr::MmrProblem problem;
    std::optional<mmr::MmrProblem> valid;
    mmr::FitPlan plan;
};

Prepared prepare(const datagen::Dataset& train, const datagen::Dataset* valid,
                 const kernels::KernelSpec& kernel, const models::ModelSpec& model,
                 const Options& opts) {
    numerics::Rng init_rng(opts.seeds.init);
    Prepared p{mmr::MmrProblem::make(train, kernel), std::nullopt,
               mmr::FitPlan{models::make_model(model, init_rng), nullptr, opts.adam}};
    if (valid && model.kind == models::ModelSpec::Kind::Mlp) {
        p.valid = mmr::MmrProblem::make(*valid, kernel);
    }
    return p;
}

}  // namespace

std::string to_string(Path p) {
    switch (p) {
        case Path::TwoStep: return "two-step";
        case Path::Ratio: return "ratio";
        case Path::KeicFallback: return "keic-fallback";
        case Path::BaselineMedian: return "baseline-median";
        case Path::BaselineSilverman: return "baseline-silverman";
    }
    return {};
}

SelectionSeeds SelectionSeeds::derive(std::uint64_t base) {
    const numerics::Rng root(base);
    return SelectionSeeds{root.substream("itc-split").next_u64(),
                          root.substream("cv-folds").next_u64(),
                          root.substream("init").next_u64()};
}

Decision decide(std::span<const Score> scores) {
    if (scores.empty()) throw ConfigError("selection: empty candidate list");

    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i].identifiable && (!best || scores[i].keic < scores[*best].keic)) best = i;
    }
    if (best) return Decision{*best, Path::TwoStep};

    double best_ratio = kInf;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i].degenerate || !(scores[i].itc > 0.0)) continue;
        const double ratio = scores[i].keic / scores[i].itc;
        if (!best || ratio < best_ratio) {
            best = i;
            best_ratio = ratio;
        }
    }
    if (best) return Decision{*best, Path::Ratio};

    std::size_t idx = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i].keic < scores[idx].keic) idx = i;
    }
    return Decision{idx, Path::KeicFallback};
}

SelectionResult lisc_select(const datagen::Dataset& train, const datagen::Dataset* valid,
                            const std::vector<kernels::KernelSpec>& candidates,
                            const models::ModelSpec& model, const Options& opts) {
    if (candidates.empty()) throw ConfigError("lisc_select: empty candidate list");
    const bool is_mlp = model.kind == models::ModelSpec::Kind::Mlp;
    const models::GradMask mask = is_mlp ? opts.mlp_mask : models::GradMask::Full;

    SelectionResult result;
    result.alpha = opts.alpha;
    result.seeds = opts.seeds;
    std::vector<Score> scores;
    for (const auto& kernel : candidates) {
        Prepared prep = prepare(train, valid, kernel, model, opts);
        if (prep.valid) prep.plan.valid = &*prep.valid;

        CandidateRow row{kernel, std::nullopt, std::nullopt, kInf,
                         mmr::fit_model(prep.problem, prep.plan)};
        if (opts.refit_per_half) {
            const auto halves =
                numerics::split_halves(static_cast<std::size_t>(train.size()), opts.seeds.split);
            const auto half_a = mmr::MmrProblem::make(train.subset(halves.first), kernel);
            const auto fit_a = mmr::fit_model(half_a, prep.plan);
            row.itc = itc::itc_split(train, halves, kernel, fit_a.model, opts.alpha, mask);
        } else {
            row.itc = itc::itc(train, kernel, row.fit.model, opts.alpha, opts.seeds.split, mask);
        }
        row.keic = keic::keic(train, kernel, prep.plan, opts.seeds.fold, &prep.problem.gram);
        if (!row.itc->degenerate && row.itc->itc_value > 0.0) {
            row.ratio = row.keic->keic_value / row.itc->itc_value;
        }
        scores.push_back(Score{row.itc->itc_value, row.itc->identifiable, row.itc->degenerate,
                               row.keic->keic_value});
        result.table.push_back(std::move(row));
    }

    const Decision d = decide(scores);
    result.chosen_index = d.index;
    result.path = d.path;
    result.chosen = result.table[d.index].kernel;
    result.fitted = result.table[d.index].fit.model;
    if (d.path == Path::KeicFallback) {
        result.note = "warning: every candidate had a degenerate ITC; chosen by KEIC alone";
    }
    return result;
}

kernels::KernelSpec baseline_kernel(const datagen::Dataset& train, BaselineRule rule) {
    const double bw = rule == BaselineRule::Median ? kernels::median_heuristic_bandwidth(train.Z)
                                                   : kernels::silverman_bandwidth(train.Z);
    return kernels::KernelSpec::gaussian(bw);
}

SelectionResult baseline_select(const datagen::Dataset& train, const datagen::Dataset* valid,
                                BaselineRule rule, const models::ModelSpec& model,
                                const Options& opts) {
    const kernels::KernelSpec kernel = baseline_kernel(train, rule);
    Prepared prep = prepare(train, valid, kernel, model, opts);
    if (prep.valid) prep.plan.valid = &*prep.valid;

    SelectionResult result;
    result.alpha = opts.alpha;
    result.seeds = opts.seeds;
    result.chosen = kernel;
    result.chosen_index = 0;
    result.path = rule == BaselineRule::Median ? Path::BaselineMedian : Path::BaselineSilverman;
    result.table.push_back(CandidateRow{kernel, std::nullopt, std::nullopt, kInf,
                                        mmr::fit_model(prep.problem, prep.plan)});
    result.fitted = result.table.front().fit.model;
    return result;
}

std::string report_json(const SelectionResult& result, int indent) {
    nlohmann::ordered_json j;
    j["chosen"] = result.chosen.label();
    j["chosen_index"] = result.chosen_index;
    j["path"] = to_string(result.path);
    j["alpha"] = result.alpha;
    j["seeds"] = {{"split", result.seeds.split},
                  {"fold", result.seeds.fold},
                  {"init", result.seeds.init}};
    if (!result.note.empty()) j["note"] = result.note;
    const auto params = models::flatten(result.fitted);
    j["fitted"] = {{"kind", std::holds_alternative<models::PolyModel>(result.fitted) ? "poly" : "mlp"},
                   {"parameters", std::vector<double>(params.values.begin(), params.values.end())}};
    auto rows = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < result.table.size(); ++i) {
        const auto& row = result.table[i];
        nlohmann::ordered_json r;
        r["label"] = row.kernel.label();
        if (row.itc) {
            r["itc"] = row.itc->itc_value;
            r["t_hat"] = row.itc->t_hat;
            r["lambda_hat"] = row.itc->lambda_hat;
            r["threshold"] = row.itc->threshold;
            r["identifiable"] = row.itc->identifiable;
            r["degenerate"] = row.itc->degenerate;
        }
        if (row.keic) {
            r["keic"] = row.keic->keic_value;
            r["risk_cv"] = row.keic->risk_cv;
            r["eff_dim"] = row.keic->eff_dim;
        }
        if (std::isfinite(row.ratio)) {
            r["ratio"] = row.ratio;
        } else {
            r["ratio"] = nullptr;
        }
        r["fit_risk"] = row.fit.risk;
        r["chosen"] = i == result.chosen_index;
        rows.push_back(std::move(r));
    }
    j["candidates"] = std::move(rows);
    return j.dump(indent);
}

void write_candidate_csv(const SelectionResult& result, std::ostream& out) {
    out << "label,itc,identifiable,keic,ratio,chosen\n";
    for (std::size_t i = 0; i < result.table.size(); ++i) {
        const auto& row = result.table[i];
        out << row.kernel.label() << ',';
        out << (row.itc ? numerics::format_double(row.itc->itc_value) : "NA") << ',';
        out << (row.itc ? (row.itc->identifiable ? "true" : "false") : "NA") << ',';
        out << (row.keic ? numerics::format_double(row.keic->keic_value) : "NA") << ',';
        out << (row.itc && row.keic ? numerics::format_double(row.ratio) : "NA") << ',';
        out << (i == result.chosen_index ? "true" : "false") << '\n';
    }
}

double evaluate_mse(const models::Model& fitted, const datagen::Dataset& test,
                    datagen::TrueFunction truth) {
    const Vector pred = models::predict(fitted, test.X);
    double ss = 0.0;
    for (Eigen::Index i = 0; i < test.size(); ++i) {
        const double err = pred[i] * test.y_std + test.y_mean -
                           datagen::true_function_value(truth, test.X[i]);
        ss += err * err;
    }
    return test.size() > 0 ? ss / static_cast<double>(test.size()) : 0.0;
}

}  // namespace kmmr::selection
