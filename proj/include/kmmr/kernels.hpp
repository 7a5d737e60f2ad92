#pragma once

// Kernel families spanning the candidate instrument spaces, Gram matrices,
// and the two data-driven Gaussian bandwidth baselines.
//
// Only the Gaussian family is integrally strictly positive definite. The
// Linear and Polynomial kernels have finite-dimensional feature maps, which is
// why they can fail to identify models with more parameters than features.

#include <string>
#include <vector>

#include "kmmr/numerics.hpp"

namespace kmmr::kernels {

enum class Family { Linear, Polynomial, Gaussian };

struct KernelSpec {
    Family family = Family::Gaussian;
    int degree = 1;          // Polynomial
    double offset = 0.0;     // Polynomial
    double bandwidth = 1.0;  // Gaussian

    static KernelSpec linear();
    static KernelSpec polynomial(int degree, double offset);
    static KernelSpec gaussian(double bandwidth);

    // Throws ConfigError when parameters are out of range.
    void validate() const;

    // "L", "P<degree>-<offset>", "G-<bandwidth>"; numbers use the shortest
    // round-tripping decimal form ("P2-1", "G-0.5").
    [[nodiscard]] std::string label() const;

    bool operator==(const KernelSpec&) const = default;
};

// Inverse of KernelSpec::label(). Throws ConfigError on malformed input.
[[nodiscard]] KernelSpec parse_kernel_label(const std::string& label);

// Candidate grid {L, P2-1, P2-2, P4-1, P4-2, G-2, G-1, G-0.5, G-0.2, G-0.1};
// this order is also the tie-break order for every selection rule.
[[nodiscard]] std::vector<KernelSpec> default_candidate_grid();

// For d > 1 the Linear/Polynomial product z.z' is the Euclidean inner product.
[[nodiscard]] double eval_kernel(const KernelSpec& spec, const Eigen::Ref<const Vector>& z,
                                 const Eigen::Ref<const Vector>& z2);

struct GramMatrix {
    numerics::SymMatrix values;
    KernelSpec spec;
    std::string sample_id;

    [[nodiscard]] Eigen::Index dim() const noexcept { return values.dim(); }
    [[nodiscard]] const Matrix& matrix() const noexcept { return values.matrix(); }
};

// Z is n x d, one sample per row. Requires n >= 1.
[[nodiscard]] GramMatrix gram(const KernelSpec& spec, const Matrix& Z, std::string sample_id = {});

// Gram restricted to the given rows of Z.
[[nodiscard]] GramMatrix gram(const KernelSpec& spec, const Matrix& Z,
                              const std::vector<std::size_t>& rows, std::string sample_id = {});

// Median of the n(n-1)/2 pairwise Euclidean distances (i < j).
[[nodiscard]] double median_heuristic_bandwidth(const Matrix& Z);

// d == 1: 1.06 * sd * n^(-1/5).
// d > 1:  (4 / (d + 2))^(1 / (d + 4)) * n^(-1 / (d + 4)) * mean per-coordinate sd.
[[nodiscard]] double silverman_bandwidth(const Matrix& Z);

}  // namespace kmmr::kernels
