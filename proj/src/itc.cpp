#include "kmmr/itc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kmmr/error.hpp"

namespace kmmr::itc {

namespace {

Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.row(static_cast<Eigen::Index>(r)) = m.row(static_cast<Eigen::Index>(rows[r]));
    }
    return out;
}

}  // namespace

numerics::SymMatrix f_matrix(const Matrix& grads, const Matrix& K) {
    if (K.rows() != grads.rows() || K.cols() != grads.rows()) {
        throw DimensionError("f_matrix: Gram is " + std::to_string(K.rows()) + "x" +
                             std::to_string(K.cols()) + ", gradients have " +
                             std::to_string(grads.rows()) + " rows");
    }
    const double n = static_cast<double>(grads.rows());
    return numerics::SymMatrix(grads.transpose() * (K * grads) / (n * n));
}

FMatrix f_matrix(const datagen::Dataset& data, const kernels::KernelSpec& kernel,
                 const models::Model& model, models::GradMask mask) {
    const Matrix G = models::gradient_matrix(model, data.X, mask);
    const auto gram = kernels::gram(kernel, data.Z);
    return FMatrix{f_matrix(G, gram.matrix()), kernel, models::flatten(model).values};
}

TestStatistic test_statistic(const numerics::SymMatrix& f) {
    const numerics::EigenPair ep = numerics::sym_eigen(f);
    const Eigen::Index last = ep.values.size() - 1;
    TestStatistic out;
    out.lambda_min = ep.values[last];
    const double clamped = std::max(out.lambda_min, 0.0);
    out.t_hat = clamped * clamped;
    out.c_hat = ep.vectors.col(last);
    return out;
}

double lambda_hat(const Matrix& grads, const Matrix& K, const Vector& c_hat) {
    if (grads.cols() != c_hat.size()) throw DimensionError("lambda_hat: C has wrong length");
    if (K.rows() != grads.rows()) throw DimensionError("lambda_hat: Gram/gradient size mismatch");
    const Vector a = grads * c_hat;
    const Eigen::Index n = a.size();
    const double pairs = static_cast<double>(n) * static_cast<double>(n);
    const double mean = a.dot(K * a) / pairs;
    double ss = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        const double aj = a[j];
        for (Eigen::Index i = 0; i < n; ++i) {
            const double dev = a[i] * K(i, j) * aj - mean;
            ss += dev * dev;
        }
    }
    return ss / pairs;
}

double lambda_hat(const datagen::Dataset& data_b, const kernels::KernelSpec& kernel,
                  const models::Model& model, const Vector& c_hat, models::GradMask mask) {
    const Matrix G = models::gradient_matrix(model, data_b.X, mask);
    return lambda_hat(G, kernels::gram(kernel, data_b.Z).matrix(), c_hat);
}

ItcReport itc_from_halves(const Matrix& grads_a, const Matrix& K_a, const Matrix& grads_b,
                          const Matrix& K_b, double alpha) {
    ItcReport rep;
    rep.alpha = alpha;
    rep.threshold = numerics::chi2_quantile_1df(1.0 - alpha);
    rep.n_a = static_cast<std::size_t>(grads_a.rows());
    rep.n_b = static_cast<std::size_t>(grads_b.rows());

    const TestStatistic ts = test_statistic(f_matrix(grads_a, K_a));
    rep.t_hat = ts.t_hat;
    rep.lambda_hat = lambda_hat(grads_b, K_b, ts.c_hat);
    if (!(rep.lambda_hat >= 1e-12 * std::max(rep.t_hat, 1.0))) {
        rep.degenerate = true;
        rep.itc_value = 0.0;
        rep.identifiable = false;
        return rep;
    }
    rep.itc_value = static_cast<double>(rep.n_a) * rep.t_hat / rep.lambda_hat;
    rep.identifiable = rep.itc_value > rep.threshold;
    return rep;
}

ItcReport itc_from_gradients(const Matrix& grads, const Matrix& Z,
                             const kernels::KernelSpec& kernel, double alpha,
                             std::uint64_t split_seed) {
    if (grads.rows() < 4) throw DimensionError("itc: need at least 4 samples");
    const auto halves = numerics::split_halves(static_cast<std::size_t>(grads.rows()), split_seed);
    return itc_from_halves(take_rows(grads, halves.first),
                           kernels::gram(kernel, Z, halves.first).matrix(),
                           take_rows(grads, halves.second),
                           kernels::gram(kernel, Z, halves.second).matrix(), alpha);
}

ItcReport itc_split(const datagen::Dataset& data, const numerics::Halves& halves,
                    const kernels::KernelSpec& kernel, const models::Model& model, double alpha,
                    models::GradMask mask) {
    const Matrix G = models::gradient_matrix(model, data.X, mask);
    return itc_from_halves(take_rows(G, halves.first),
                           kernels::gram(kernel, data.Z, halves.first).matrix(),
                           take_rows(G, halves.second),
                           kernels::gram(kernel, data.Z, halves.second).matrix(), alpha);
}

ItcReport itc(const datagen::Dataset& data, const kernels::KernelSpec& kernel,
              const models::Model& model, double alpha, std::uint64_t split_seed,
              models::GradMask mask) {
    if (data.size() < 4) throw DimensionError("itc: need at least 4 samples");
    const auto halves = numerics::split_halves(static_cast<std::size_t>(data.size()), split_seed);
    return itc_split(data, halves, kernel, model, alpha, mask);
}

// ---------------------------------------------------------------------------
// Calibration
// ---------------------------------------------------------------------------

SyntheticDesign draw_design(NullDesign design, int n, numerics::Rng& rng) {
    SyntheticDesign out{Matrix(n, 2), Matrix(n, 1)};
    for (int i = 0; i < n; ++i) {
        const double z = rng.uniform(-3.0, 3.0);
        const double eps = rng.normal();
        const double eta = rng.normal();
        out.Z(i, 0) = z;
        out.grads(i, 0) = z + eps;
        out.grads(i, 1) = design == NullDesign::RankDeficient ? z + eps + eta : z * z - 3.0 + eta;
    }
    return out;
}

CalibrationResult null_calibration(const CalibrationSpec& spec, int replications) {
    CalibrationResult out;
    out.replications = replications;
    const numerics::Rng root(spec.seed);
    double itc_sum = 0.0;
    for (int r = 0; r < replications; ++r) {
        numerics::Rng data_rng = root.substream(static_cast<std::uint64_t>(r));
        const SyntheticDesign d = draw_design(spec.design, spec.n, data_rng);
        const std::uint64_t split_seed = data_rng.substream("itc-split").next_u64();
        const ItcReport rep = itc_from_gradients(d.grads, d.Z, spec.kernel, spec.alpha, split_seed);
        if (rep.identifiable) ++out.rejections;
        if (rep.degenerate) ++out.degenerate;
        itc_sum += rep.itc_value;
    }
    if (replications > 0) {
        out.rate = static_cast<double>(out.rejections) / replications;
        out.mean_itc = itc_sum / replications;
    }
    return out;
}

}  // namespace kmmr::itc
