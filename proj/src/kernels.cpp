#include "kmmr/kernels.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "kmmr/error.hpp"

namespace kmmr::kernels {

namespace {

double parse_number(std::string_view s, const std::string& context) {
    double value = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), value);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw ConfigError("bad number '" + std::string(s) + "' in kernel label '" + context + "'");
    }
    return value;
}

}  // namespace

KernelSpec KernelSpec::linear() { return KernelSpec{Family::Linear, 1, 0.0, 1.0}; }

KernelSpec KernelSpec::polynomial(int degree, double offset) {
    KernelSpec k{Family::Polynomial, degree, offset, 1.0};
    k.validate();
    return k;
}

KernelSpec KernelSpec::gaussian(double bandwidth) {
    KernelSpec k{Family::Gaussian, 1, 0.0, bandwidth};
    k.validate();
    return k;
}

void KernelSpec::validate() const {
    switch (family) {
        case Family::Linear:
            return;
        case Family::Polynomial:
            if (degree < 1) throw ConfigError("polynomial kernel degree must be >= 1");
            if (!(offset >= 0.0) || !std::isfinite(offset)) {
                throw ConfigError("polynomial kernel offset must be finite and >= 0");
            }
            return;
        case Family::Gaussian:
            if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
                throw ConfigError("gaussian bandwidth must be finite and > 0");
            }
            return;
    }
}

std::string KernelSpec::label() const {
    switch (family) {
        case Family::Linear:
            return "L";
        case Family::Polynomial:
            return "P" + std::to_string(degree) + "-" + numerics::format_double(offset);
        case Family::Gaussian:
            return "G-" + numerics::format_double(bandwidth);
    }
    return {};
}

KernelSpec parse_kernel_label(const std::string& label) {
    if (label == "L") return KernelSpec::linear();
    if (label.size() > 2 && label[0] == 'G' && label[1] == '-') {
        return KernelSpec::gaussian(parse_number(std::string_view(label).substr(2), label));
    }
    if (label.size() > 1 && label[0] == 'P') {
        const auto dash = label.find('-', 1);
        if (dash == std::string::npos || dash == 1) {
            throw ConfigError("bad polynomial kernel label '" + label + "'");
        }
        int degree = 0;
        const char* first = label.data() + 1;
        const char* last = label.data() + dash;
        auto res = std::from_chars(first, last, degree);
        if (res.ec != std::errc{} || res.ptr != last) {
            throw ConfigError("bad polynomial degree in kernel label '" + label + "'");
        }
        return KernelSpec::polynomial(degree,
                                      parse_number(std::string_view(label).substr(dash + 1), label));
    }
    throw ConfigError("unknown kernel label '" + label + "' (expected L, P<d>-<p> or G-<p>)");
}

std::vector<KernelSpec> default_candidate_grid() {
    return {KernelSpec::linear(),
            KernelSpec::polynomial(2, 1.0),
            KernelSpec::polynomial(2, 2.0),
            KernelSpec::polynomial(4, 1.0),
            KernelSpec::polynomial(4, 2.0),
            KernelSpec::gaussian(2.0),
            KernelSpec::gaussian(1.0),
            KernelSpec::gaussian(0.5),
            KernelSpec::gaussian(0.2),
            KernelSpec::gaussian(0.1)};
}

double eval_kernel(const KernelSpec& spec, const Eigen::Ref<const Vector>& z,
                   const Eigen::Ref<const Vector>& z2) {
    if (z.size() != z2.size() || z.size() == 0) {
        throw DimensionError("eval_kernel: dimension mismatch " + std::to_string(z.size()) +
                             " vs " + std::to_string(z2.size()));
    }
    switch (spec.family) {
        case Family::Linear:
            return z.dot(z2);
        case Family::Polynomial:
            return std::pow(z.dot(z2) + spec.offset, spec.degree);
        case Family::Gaussian:
            return std::exp(-(z - z2).squaredNorm() / (2.0 * spec.bandwidth * spec.bandwidth));
    }
    return 0.0;
}

GramMatrix gram(const KernelSpec& spec, const Matrix& Z, std::string sample_id) {
    const Eigen::Index n = Z.rows();
    Matrix K(n, n);
    // Rows as contiguous vectors; Z is column-major.
    const Matrix Zt = Z.transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double v = eval_kernel(spec, Zt.col(i), Zt.col(j));
            K(i, j) = v;
            K(j, i) = v;
        }
    }
    return GramMatrix{numerics::SymMatrix(std::move(K)), spec, std::move(sample_id)};
}

GramMatrix gram(const KernelSpec& spec, const Matrix& Z, const std::vector<std::size_t>& rows,
                std::string sample_id) {
    Matrix sub(static_cast<Eigen::Index>(rows.size()), Z.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        sub.row(static_cast<Eigen::Index>(r)) = Z.row(static_cast<Eigen::Index>(rows[r]));
    }
    return gram(spec, sub, std::move(sample_id));
}

double median_heuristic_bandwidth(const Matrix& Z) {
    const Eigen::Index n = Z.rows();
    if (n < 2) throw DegenerateSample("median heuristic needs at least two points");
    std::vector<double> dist;
    dist.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            dist.push_back((Z.row(i) - Z.row(j)).norm());
        }
    }
    const std::size_t m = dist.size();
    const auto mid = dist.begin() + static_cast<std::ptrdiff_t>(m / 2);
    std::nth_element(dist.begin(), mid, dist.end());
    double median = *mid;
    if (m % 2 == 0) {
        const double lower = *std::max_element(dist.begin(), mid);
        median = 0.5 * (lower + median);
    }
    if (!(median > 0.0)) {
        throw DegenerateSample("median heuristic: median pairwise distance is zero");
    }
    return median;
}

double silverman_bandwidth(const Matrix& Z) {
    const Eigen::Index n = Z.rows();
    const Eigen::Index d = Z.cols();
    if (n < 2 || d < 1) throw DegenerateSample("silverman rule needs at least two points");
    double sd_sum = 0.0;
    for (Eigen::Index k = 0; k < d; ++k) {
        const Vector col = Z.col(k);
        const double sd = numerics::sample_std({col.data(), static_cast<std::size_t>(n)});
        if (!(sd > 0.0)) {
            throw DegenerateSample("silverman rule: zero variance in coordinate " +
                                   std::to_string(k));
        }
        sd_sum += sd;
    }
    const double nd = static_cast<double>(n);
    if (d == 1) return 1.06 * sd_sum * std::pow(nd, -0.2);
    const double dd = static_cast<double>(d);
    return std::pow(4.0 / (dd + 2.0), 1.0 / (dd + 4.0)) * std::pow(nd, -1.0 / (dd + 4.0)) *
           (sd_sum / dd);
}

}  // namespace kmmr::kernels
