#pragma once

// Empirical kernel maximum moment restriction risk
//
//   R_n(theta) = n^-2 sum_{i,j} phi_theta(x_i, y_i) k(z_i, z_j) phi_theta(x_j, y_j)
//
// (a V-statistic: diagonal terms included) and its minimizers: an exact
// closed-form solve for polynomial models, full-batch Adam for MLPs.

#include "kmmr/datagen.hpp"
#include "kmmr/kernels.hpp"
#include "kmmr/models.hpp"

namespace kmmr::mmr {

struct MmrProblem {
    datagen::Dataset data;
    kernels::GramMatrix gram;

    static MmrProblem make(const datagen::Dataset& data, const kernels::KernelSpec& kernel);
    // Reuse a precomputed Gram; throws DimensionError when sizes disagree.
    static MmrProblem make(const datagen::Dataset& data, kernels::GramMatrix gram);

    [[nodiscard]] Eigen::Index size() const noexcept { return data.size(); }
};

struct FitResult {
    models::Model model;
    double risk = 0.0;  // empirical_risk at `model` on the training problem
    int iterations = 0;
    double grad_norm = 0.0;
    double ridge = 0.0;
    double initial_risk = 0.0;

    [[nodiscard]] Vector theta() const { return models::flatten(model).values; }
};

struct AdamOptions {
    double step = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int max_iterations = 2000;
    int patience = 50;  // early stop after this many non-improving validation checks
};

// (1/n^2) r^T K r.
[[nodiscard]] double empirical_risk(const Matrix& K, const Vector& r);
[[nodiscard]] double empirical_risk(const MmrProblem& problem, const models::Model& model);

// (2/n^2) J^T K r with J the n x c matrix of grad_theta phi rows.
[[nodiscard]] Vector risk_gradient(const MmrProblem& problem, const models::Model& model);

// Solves (B^T K B) c = B^T K y for the polynomial basis B. When the normal
// matrix is numerically singular (min eigenvalue < 1e-12 * max) a ridge
// 1e-10 * trace / (m + 1) is added so unidentified spaces still produce a
// finite estimate. Throws NumericalFailure if the solve fails regardless.
[[nodiscard]] FitResult fit_linear(const MmrProblem& problem, int degree);

// Full-batch Adam from `init`. When `valid` is given, early stopping watches
// its empirical risk and the best-validation parameters are returned;
// otherwise the training risk is watched. Throws NumericalFailure on NaN.
[[nodiscard]] FitResult fit_gradient(const MmrProblem& problem, const models::Model& init,
                                     const MmrProblem* valid, const AdamOptions& opts = {});

// How to fit a model family on an MmrProblem: closed form for PolyModel,
// Adam from `init` for MlpModel (early stopping on `valid` when given; the
// validation problem must use the same kernel as the training problem).
struct FitPlan {
    models::Model init;
    const MmrProblem* valid = nullptr;
    AdamOptions adam;
};

[[nodiscard]] FitResult fit_model(const MmrProblem& problem, const FitPlan& plan);

}  // namespace kmmr::mmr
