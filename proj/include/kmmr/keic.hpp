#pragma once

// Kernel effective information criterion
//
//   KEIC = n * R_cv + E_k * ln(n),   E_k = Tr(K) / sqrt(Tr(K^2))
//
// where R_cv is the two-fold cross-validated empirical risk and E_k the
// empirical effective dimension of the full-sample Gram.

#include <cstdint>

#include "kmmr/mmr.hpp"

namespace kmmr::keic {

// Tr(K) / sqrt(sum_ij K_ij^2). Throws DegenerateKernel for a zero matrix.
[[nodiscard]] double effective_dimension(const Matrix& K);
[[nodiscard]] double effective_dimension(const kernels::GramMatrix& gram);

// Fit on one half of a seeded 50/50 split, score on the other half with its
// own Gram, swap, average. Requires n >= 4.
[[nodiscard]] double cv_risk(const datagen::Dataset& data, const kernels::KernelSpec& kernel,
                             const mmr::FitPlan& plan, std::uint64_t fold_seed);

struct KeicReport {
    double risk_cv = 0.0;
    double eff_dim = 0.0;
    double keic_value = 0.0;
    std::size_t n = 0;
};

[[nodiscard]] KeicReport assemble(std::size_t n, double risk_cv, double eff_dim);

// `full_gram` may be passed to avoid recomputing the full-sample Gram.
[[nodiscard]] KeicReport keic(const datagen::Dataset& data, const kernels::KernelSpec& kernel,
                              const mmr::FitPlan& plan, std::uint64_t fold_seed,
                              const kernels::GramMatrix* full_gram = nullptr);

}  // namespace kmmr::keic
