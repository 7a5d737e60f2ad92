#include "kmmr/numerics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "kmmr/error.hpp"

namespace kmmr::numerics {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// ---------------------------------------------------------------------------
// SymMatrix
// ---------------------------------------------------------------------------

SymMatrix::SymMatrix(const Matrix& m) : SymMatrix(Matrix(m)) {}

SymMatrix::SymMatrix(Matrix&& m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) {
        throw DimensionError("SymMatrix: matrix is " + std::to_string(m_.rows()) + "x" +
                             std::to_string(m_.cols()));
    }
    const Eigen::Index n = m_.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double avg = 0.5 * (m_(i, j) + m_(j, i));
            m_(i, j) = avg;
            m_(j, i) = avg;
        }
    }
}

SymMatrix SymMatrix::scaled(double factor) const {
    SymMatrix out;
    out.m_ = m_ * factor;
    return out;
}

// ---------------------------------------------------------------------------
// Eigen / solve
// ---------------------------------------------------------------------------

EigenPair sym_eigen(const SymMatrix& m) {
    const Matrix& a = m.matrix();
    if (!a.allFinite()) {
        throw NumericalFailure("sym_eigen: non-finite input");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
    if (solver.info() != Eigen::Success) {
        throw NumericalFailure("sym_eigen: eigensolver did not converge");
    }
    const Eigen::Index n = a.rows();
    EigenPair out{Vector(n), Matrix(n, n)};
    // Eigen returns ascending order.
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index src = n - 1 - k;
        out.values[k] = solver.eigenvalues()[src];
        Vector v = solver.eigenvectors().col(src);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (std::abs(v[i]) > 1e-10) {
                if (v[i] < 0.0) v = -v;
                break;
            }
        }
        out.vectors.col(k) = v;
    }
    return out;
}

Vector solve_spd(const SymMatrix& a, const Vector& b, double ridge) {
    if (a.dim() != b.size()) {
        throw DimensionError("solve_spd: matrix dim " + std::to_string(a.dim()) +
                             " vs rhs " + std::to_string(b.size()));
    }
    if (ridge < 0.0) {
        throw DomainError("solve_spd: negative ridge");
    }
    Matrix shifted = a.matrix();
    shifted.diagonal().array() += ridge;

    const EigenPair ep = sym_eigen(SymMatrix(shifted));
    const double top = ep.values.cwiseAbs().maxCoeff();
    const double bottom = ep.values[ep.values.size() - 1];
    if (bottom < -1e-8 * top) {
        throw NumericalFailure("solve_spd: matrix is indefinite (min eigenvalue " +
                               std::to_string(bottom) + ")");
    }

    Eigen::LLT<Matrix> llt(shifted);
    if (llt.info() == Eigen::Success && bottom > 1e-14 * top) {
        return llt.solve(b);
    }
    // Semidefinite: minimum-norm least squares through the spectrum.
    const double cutoff = std::max(1e-14 * top, std::numeric_limits<double>::min());
    Vector coeff = ep.vectors.transpose() * b;
    for (Eigen::Index k = 0; k < coeff.size(); ++k) {
        coeff[k] = ep.values[k] > cutoff ? coeff[k] / ep.values[k] : 0.0;
    }
    return ep.vectors * coeff;
}

// ---------------------------------------------------------------------------
// vec / kron
// ---------------------------------------------------------------------------

Vector vec(const Matrix& m) {
    Vector out(m.size());
    const Eigen::Index t = m.cols();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < t; ++j) {
            out[i * t + j] = m(i, j);
        }
    }
    return out;
}

Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
    if (rows * cols != v.size()) {
        throw DimensionError("unvec: size mismatch");
    }
    Matrix out(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            out(i, j) = v[i * cols + j];
        }
    }
    return out;
}

Vector kron_vec(const Vector& u, const Vector& v) {
    if (u.size() != v.size()) {
        throw DimensionError("kron_vec: length mismatch " + std::to_string(u.size()) + " vs " +
                             std::to_string(v.size()));
    }
    const Eigen::Index c = u.size();
    Vector out(c * c);
    for (Eigen::Index i = 0; i < c; ++i) {
        for (Eigen::Index j = 0; j < c; ++j) {
            out[i * c + j] = u[i] * v[j];
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// chi-square(1)
// ---------------------------------------------------------------------------

double chi2_cdf_1df(double q) {
    if (q <= 0.0) return 0.0;
    return std::erf(std::sqrt(0.5 * q));
}

double chi2_quantile_1df(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw DomainError("chi2_quantile_1df: probability must lie in (0, 1), got " +
                          std::to_string(p));
    }
    double lo = 0.0;
    double hi = 1.0;
    while (chi2_cdf_1df(hi) < p) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e6) break;  // erf saturates near p = 1 - 1e-16
    }
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        if (chi2_cdf_1df(mid) < p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view s, std::string_view what) {
    double value = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), value);
    if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw DomainError("bad number '" + std::string(s) + "' for " + std::string(what));
    }
    return value;
}

double mean(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_std(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

// ---------------------------------------------------------------------------
// Rng
// ---------------------------------------------------------------------------

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

Rng Rng::substream(std::string_view label) const {
    return Rng(splitmix64(seed_ ^ splitmix64(fnv1a(label))));
}

Rng Rng::substream(std::uint64_t index) const {
    return Rng(splitmix64(seed_ + splitmix64(index + 0x632be59bd9b4e019ULL)));
}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

double Rng::normal(double mean, double sd) { return mean + sd * normal(); }

std::size_t Rng::below(std::size_t bound) {
    if (bound == 0) return 0;
    const std::uint64_t b = bound;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % b;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return static_cast<std::size_t>(x % b);
}

void Rng::shuffle(std::span<std::size_t> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = below(i);
        std::swap(items[i - 1], items[j]);
    }
}

std::vector<std::size_t> Rng::permutation(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    shuffle(idx);
    return idx;
}

Halves split_halves(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    const auto perm = rng.permutation(n);
    const std::size_t half = n / 2;
    Halves out;
    out.first.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(half));
    out.second.assign(perm.begin() + static_cast<std::ptrdiff_t>(half), perm.end());
    std::sort(out.first.begin(), out.first.end());
    std::sort(out.second.begin(), out.second.end());
    return out;
}

}  // namespace kmmr::numerics
