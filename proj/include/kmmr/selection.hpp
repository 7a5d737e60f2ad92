#pragma once

// Least identification selection: keep the candidates the ITC declares
// identifiable and take the one with the smallest KEIC; when none is
// identifiable, minimize KEIC / ITC instead. Ties resolve to the earliest
// candidate in the given order.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kmmr/itc.hpp"
#include "kmmr/keic.hpp"

namespace kmmr::selection {

enum class Path {
    TwoStep,
    Ratio,
    // Every candidate had a degenerate ITC; chosen by KEIC alone.
    KeicFallback,
    BaselineMedian,
    BaselineSilverman,
};

[[nodiscard]] std::string to_string(Path p);

enum class BaselineRule { Median, Silverman };

struct SelectionSeeds {
    std::uint64_t split = 0;  // ITC halves
    std::uint64_t fold = 0;   // KEIC cross-validation folds
    std::uint64_t init = 0;   // MLP initialization

    // Labeled substreams "itc-split", "cv-folds", "init" of `base`.
    static SelectionSeeds derive(std::uint64_t base);
};

struct Options {
    double alpha = 0.05;
    SelectionSeeds seeds;
    // ITC gradient mask for MLPs (polynomial models always use all parameters).
    models::GradMask mlp_mask = models::GradMask::OutputLayer;
    // Refit theta on the ITC's half A instead of reusing the full-sample fit.
    bool refit_per_half = false;
    mmr::AdamOptions adam;
};

struct CandidateRow {
    kernels::KernelSpec kernel;
    std::optional<itc::ItcReport> itc;
    std::optional<keic::KeicReport> keic;
    double ratio = 0.0;  // KEIC / ITC; +inf when ITC is zero or degenerate
    mmr::FitResult fit;
};

struct SelectionResult {
    kernels::KernelSpec chosen;
    std::size_t chosen_index = 0;
    Path path = Path::TwoStep;
    std::vector<CandidateRow> table;
    models::Model fitted;
    double alpha = 0.05;
    SelectionSeeds seeds;
    std::string note;
};

// The scores the decision rule looks at, one per candidate.
struct Score {
    double itc = 0.0;
    bool identifiable = false;
    bool degenerate = false;
    double keic = 0.0;
};

struct Decision {
    std::size_t index = 0;
    Path path = Path::TwoStep;
};

// Throws ConfigError on an empty list.
[[nodiscard]] Decision decide(std::span<const Score> scores);

// `valid` is only used by MLP models (early stopping); pass nullptr otherwise.
[[nodiscard]] SelectionResult lisc_select(const datagen::Dataset& train,
                                          const datagen::Dataset* valid,
                                          const std::vector<kernels::KernelSpec>& candidates,
                                          const models::ModelSpec& model, const Options& opts);

[[nodiscard]] kernels::KernelSpec baseline_kernel(const datagen::Dataset& train, BaselineRule rule);

[[nodiscard]] SelectionResult baseline_select(const datagen::Dataset& train,
                                              const datagen::Dataset* valid, BaselineRule rule,
                                              const models::ModelSpec& model, const Options& opts);

// JSON report: chosen label, path, alpha, seeds, fitted parameters and the
// per-candidate table. Infinite ratios are written as null.
[[nodiscard]] std::string report_json(const SelectionResult& result, int indent = 2);

// CSV "label,itc,identifiable,keic,ratio,chosen"; missing scores are "NA".
void write_candidate_csv(const SelectionResult& result, std::ostream& out);

// Mean over the test split of (y_std * f_hat(x) + y_mean - f*(x))^2.
[[nodiscard]] double evaluate_mse(const models::Model& fitted, const datagen::Dataset& test,
                                  datagen::TrueFunction truth);

}  // namespace kmmr::selection
