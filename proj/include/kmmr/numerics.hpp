#pragma once

// Dense linear algebra and statistical helpers shared by every other module.
// Matrices are Eigen column-major types; the vec() convention below is the
// row-major one used by the rank-test variance (entry (i, j) of an s x t
// matrix lands at position i*t + j).

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace kmmr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

namespace numerics {

// Dense symmetric matrix. Construction symmetrizes (A + A^T) / 2, so callers
// can hand in products like G^T K G without worrying about round-off skew.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(const Matrix& m);
    explicit SymMatrix(Matrix&& m);

    [[nodiscard]] Eigen::Index dim() const noexcept { return m_.rows(); }
    [[nodiscard]] const Matrix& matrix() const noexcept { return m_; }
    [[nodiscard]] double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

    [[nodiscard]] SymMatrix scaled(double factor) const;

private:
    Matrix m_;
};

struct EigenPair {
    Vector values;   // descending
    Matrix vectors;  // column k pairs with values[k]
};

// Full symmetric eigendecomposition, eigenvalues descending. Each eigenvector
// is signed so its first component with magnitude above 1e-10 is positive.
// Throws NumericalFailure on non-finite input or solver non-convergence.
[[nodiscard]] EigenPair sym_eigen(const SymMatrix& m);

// argmin_c ||(a + ridge*I) c - b||. Exact Cholesky solve when the shifted
// matrix is positive definite, minimum-norm pseudo-inverse solve when it is
// only semidefinite. Throws NumericalFailure when a is indefinite beyond
// -1e-8 * max|lambda|, DimensionError on size mismatch.
[[nodiscard]] Vector solve_spd(const SymMatrix& a, const Vector& b, double ridge);

[[nodiscard]] Vector vec(const Matrix& m);
[[nodiscard]] Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols);

// (u (x) v)[i*c + j] = u[i] * v[j]; pairs with vec() so that
// kron_vec(u, v) . vec(M) == u^T M v.
[[nodiscard]] Vector kron_vec(const Vector& u, const Vector& v);

// CDF of a chi-square variable with one degree of freedom, i.e. of N^2.
[[nodiscard]] double chi2_cdf_1df(double q);

// Inverse of chi2_cdf_1df by bisection to an interval width of 1e-10.
// Throws DomainError unless 0 < p < 1.
[[nodiscard]] double chi2_quantile_1df(double p);

double mean(std::span<const double> xs);
// Sample standard deviation (denominator n - 1).
double sample_std(std::span<const double> xs);

// 64-bit FNV-1a hash.
[[nodiscard]] std::uint64_t fnv1a(std::string_view s);

// Shortest round-trip decimal form ("0.5", "1e-10", "nan").
[[nodiscard]] std::string format_double(double x);
// Strict full-string parse; throws DomainError naming `what` on failure.
[[nodiscard]] double parse_double(std::string_view s, std::string_view what);

// Deterministic random stream.
//
// Engine: std::mt19937_64 (19937-bit state, output sequence fixed by the C++
// standard). All conversions to doubles, normals and bounded integers are
// implemented here rather than through <random> distributions, whose output is
// implementation-defined, so a seed reproduces bit-identical draws across
// standard libraries. Frozen for this version of the library.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    // Independent stream derived from (seed, label) / (seed, index).
    [[nodiscard]] Rng substream(std::string_view label) const;
    [[nodiscard]] Rng substream(std::uint64_t index) const;

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64();
    double uniform();  // [0, 1), 53-bit resolution
    double uniform(double lo, double hi);
    double normal();  // Box-Muller, pairs cached
    double normal(double mean, double sd);
    std::size_t below(std::size_t bound);  // uniform on [0, bound)
    void shuffle(std::span<std::size_t> items);
    std::vector<std::size_t> permutation(std::size_t n);

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Deterministic 50/50 partition of {0..n-1}: the first floor(n/2) entries of
// a seeded permutation form `first`, the rest `second`; both sorted.
struct Halves {
    std::vector<std::size_t> first;
    std::vector<std::size_t> second;
};
[[nodiscard]] Halves split_halves(std::size_t n, std::uint64_t seed);

}  // namespace numerics
}  // namespace kmmr
