#pragma once

// Identification test criterion.
//
// For gradient rows g_i = grad_theta phi(x_i) and Gram K, the pair statistic
// u(s_ij) = g_i k(z_i, z_j) g_j^T averages to the c x c matrix
//
//   F = n^-2 sum_{i,j} u(s_ij) = n^-2 G^T K G.
//
// Full rank of F identifies theta. The test statistic is the squared smallest
// eigenvalue T = lambda_c^2, standardized by
//
//   Lambda = (C (x) C)^T Omega (C (x) C),
//   Omega  = pair covariance of vec(u(s_ij)),
//
// where C is the eigenvector of lambda_c. Since (C (x) C)^T vec(u) = C^T u C,
// Lambda is the population variance over pairs of the scalar
// (C.g_i) k_ij (C.g_j) and Omega is never materialized. T comes from one half
// of a seeded 50/50 split and Lambda from the other:
//
//   ITC = n_A * T / Lambda,   identifiable  <=>  ITC > Q_{1-alpha}(chi2_1).

#include <cstdint>

#include "kmmr/datagen.hpp"
#include "kmmr/kernels.hpp"
#include "kmmr/models.hpp"

namespace kmmr::itc {

struct FMatrix {
    numerics::SymMatrix values;
    kernels::KernelSpec kernel;
    Vector theta;
};

// n^-2 G^T K G.
[[nodiscard]] numerics::SymMatrix f_matrix(const Matrix& grads, const Matrix& K);
[[nodiscard]] FMatrix f_matrix(const datagen::Dataset& data, const kernels::KernelSpec& kernel,
                               const models::Model& model,
                               models::GradMask mask = models::GradMask::Full);

struct TestStatistic {
    double t_hat = 0.0;       // max(lambda_c, 0)^2
    double lambda_min = 0.0;  // raw smallest eigenvalue
    Vector c_hat;             // its unit eigenvector (sign convention of sym_eigen)
};

[[nodiscard]] TestStatistic test_statistic(const numerics::SymMatrix& f);

// Population variance over all ordered pairs of (C.g_i) K_ij (C.g_j).
[[nodiscard]] double lambda_hat(const Matrix& grads, const Matrix& K, const Vector& c_hat);
[[nodiscard]] double lambda_hat(const datagen::Dataset& data_b, const kernels::KernelSpec& kernel,
                                const models::Model& model, const Vector& c_hat,
                                models::GradMask mask = models::GradMask::Full);

struct ItcReport {
    double t_hat = 0.0;
    double lambda_hat = 0.0;
    double itc_value = 0.0;
    double threshold = 0.0;  // Q_{1-alpha}
    std::size_t n_a = 0;
    std::size_t n_b = 0;
    bool identifiable = false;
    double alpha = 0.05;
    // Lambda below 1e-12 * max(T, 1): reported as ITC = 0, not identifiable.
    bool degenerate = false;
};

// Decision from precomputed halves (gradients and Grams for A and B).
[[nodiscard]] ItcReport itc_from_halves(const Matrix& grads_a, const Matrix& K_a,
                                        const Matrix& grads_b, const Matrix& K_b, double alpha);

// Gradient rows for the whole sample; the split is drawn from split_seed.
[[nodiscard]] ItcReport itc_from_gradients(const Matrix& grads, const Matrix& Z,
                                           const kernels::KernelSpec& kernel, double alpha,
                                           std::uint64_t split_seed);

// theta is taken from `model` as given (fit once on the full sample by the
// caller). Requires n >= 4.
[[nodiscard]] ItcReport itc(const datagen::Dataset& data, const kernels::KernelSpec& kernel,
                            const models::Model& model, double alpha, std::uint64_t split_seed,
                            models::GradMask mask = models::GradMask::Full);

// As itc(), with an explicit split and (optionally) a model fit on half A only.
[[nodiscard]] ItcReport itc_split(const datagen::Dataset& data, const numerics::Halves& halves,
                                  const kernels::KernelSpec& kernel, const models::Model& model,
                                  double alpha, models::GradMask mask = models::GradMask::Full);

// ---------------------------------------------------------------------------
// Monte Carlo calibration of the rank test.
//
// Synthetic two-column gradient designs with Z ~ U[-3, 3], eps, eta ~ N(0, 1):
//   RankDeficient: g = (Z + eps, Z + eps + eta). eta is independent of Z, so
//                  F has rank 1 while the sampled C.g = eta/sqrt(2) keeps
//                  Lambda > 0.
//   FullRank:      g = (Z + eps, Z^2 - 3 + eta).
// ---------------------------------------------------------------------------

enum class NullDesign { RankDeficient, FullRank };

struct CalibrationSpec {
    NullDesign design = NullDesign::RankDeficient;
    int n = 2000;
    double alpha = 0.05;
    kernels::KernelSpec kernel = kernels::KernelSpec::gaussian(1.0);
    std::uint64_t seed = 527;
};

struct CalibrationResult {
    int replications = 0;
    int rejections = 0;
    int degenerate = 0;
    double rate = 0.0;
    double mean_itc = 0.0;
};

// Gradient matrix (n x 2) and instruments (n x 1) of one synthetic draw.
struct SyntheticDesign {
    Matrix grads;
    Matrix Z;
};
[[nodiscard]] SyntheticDesign draw_design(NullDesign design, int n, numerics::Rng& rng);

[[nodiscard]] CalibrationResult null_calibration(const CalibrationSpec& spec, int replications);

}  // namespace kmmr::itc
