#include <doctest.h>

#include <cmath>

#include "kmmr/error.hpp"
#include "kmmr/kernels.hpp"
#include "oracles.hpp"

using namespace kmmr;
using kernels::KernelSpec;

namespace {

Vector scalar(double x) { return Vector::Constant(1, x); }

Matrix column(std::initializer_list<double> xs) {
    Matrix Z(static_cast<Eigen::Index>(xs.size()), 1);
    Eigen::Index i = 0;
    for (double x : xs) Z(i++, 0) = x;
    return Z;
}

}  // namespace

TEST_CASE("eval_kernel examples") {
    CHECK(kernels::eval_kernel(KernelSpec::linear(), scalar(3), scalar(-2)) == -6.0);
    CHECK(kernels::eval_kernel(KernelSpec::polynomial(2, 1), scalar(1), scalar(2)) == 9.0);
    for (double p : {0.1, 1.0, 7.0}) {
        CHECK(kernels::eval_kernel(KernelSpec::gaussian(p), scalar(0.3), scalar(0.3)) == 1.0);
    }
}

TEST_CASE("eval_kernel uses the inner product for d > 1 and is symmetric") {
    Vector a(2), b(2);
    a << 1, 2;
    b << 3, -1;
    CHECK(kernels::eval_kernel(KernelSpec::linear(), a, b) == 1.0);
    CHECK(kernels::eval_kernel(KernelSpec::polynomial(2, 1), a, b) == 4.0);
    CHECK(kernels::eval_kernel(KernelSpec::gaussian(1), a, b) ==
          doctest::Approx(std::exp(-(4.0 + 9.0) / 2.0)));
    numerics::Rng rng(1);
    for (const auto& k : kernels::default_candidate_grid()) {
        const Vector x = oracle::random_vector(rng, 3);
        const Vector y = oracle::random_vector(rng, 3);
        CHECK(kernels::eval_kernel(k, x, y) == kernels::eval_kernel(k, y, x));
    }
    CHECK_THROWS_AS((void)kernels::eval_kernel(KernelSpec::linear(), a, scalar(1)), DimensionError);
}

TEST_CASE("gram examples") {
    const auto g = kernels::gram(KernelSpec::linear(), column({1, 2, 3}));
    Matrix expect(3, 3);
    expect << 1, 2, 3, 2, 4, 6, 3, 6, 9;
    CHECK(g.matrix() == expect);

    numerics::Rng rng(2);
    const Matrix Z = oracle::uniform_sample(rng, 40, 3);
    const auto gg = kernels::gram(KernelSpec::gaussian(0.7), Z);
    for (Eigen::Index i = 0; i < 40; ++i) CHECK(gg.matrix()(i, i) == 1.0);
    CHECK(gg.matrix().minCoeff() > 0.0);
    CHECK(gg.matrix().maxCoeff() <= 1.0);

    const Matrix z3 = column({0, 1, 2});
    const auto g1 = kernels::gram(KernelSpec::gaussian(1), z3);
    CHECK(oracle::rel_err(g1.matrix(), oracle::gram(KernelSpec::gaussian(1), z3)) < 1e-12);
}

TEST_CASE("gram matches the elementwise oracle for every grid kernel") {
    numerics::Rng rng(3);
    const Matrix Z = oracle::uniform_sample(rng, 25, 2);
    for (const auto& k : kernels::default_candidate_grid()) {
        CHECK(oracle::rel_err(kernels::gram(k, Z).matrix(), oracle::gram(k, Z)) < 1e-12);
    }
}

TEST_CASE("gram over a row subset") {
    const Matrix Z = column({0, 1, 2, 3});
    const auto sub = kernels::gram(KernelSpec::linear(), Z, {1, 3}, "half");
    CHECK(sub.dim() == 2);
    CHECK(sub.matrix()(0, 1) == 3.0);
    CHECK(sub.sample_id == "half");
}

TEST_CASE("median heuristic") {
    CHECK(kernels::median_heuristic_bandwidth(column({0, 1, 3})) == 2.0);
    CHECK(kernels::median_heuristic_bandwidth(column({0, 2})) == 2.0);
    numerics::Rng rng(4);
    for (int d : {1, 3}) {
        const Matrix Z = oracle::uniform_sample(rng, 301, d);
        CHECK(kernels::median_heuristic_bandwidth(Z) ==
              doctest::Approx(oracle::median_pairwise_distance(Z)).epsilon(1e-14));
        const Matrix Z2 = oracle::uniform_sample(rng, 300, d);
        CHECK(kernels::median_heuristic_bandwidth(Z2) ==
              doctest::Approx(oracle::median_pairwise_distance(Z2)).epsilon(1e-14));
    }
    CHECK_THROWS_AS((void)kernels::median_heuristic_bandwidth(column({1, 1, 1})), DegenerateSample);
}

TEST_CASE("Silverman's rule") {
    numerics::Rng rng(5);
    Matrix Z = oracle::uniform_sample(rng, 100, 1);
    // rescale to sample sd exactly 1
    const double m = Z.mean();
    Z.array() -= m;
    Z /= std::sqrt(Z.squaredNorm() / 99.0);
    CHECK(kernels::silverman_bandwidth(Z) == doctest::Approx(0.4220).epsilon(1e-4));
    CHECK(kernels::silverman_bandwidth(2.0 * Z) == doctest::Approx(0.8440).epsilon(1e-4));
    CHECK(kernels::silverman_bandwidth(Z) ==
          doctest::Approx(1.06 * std::pow(100.0, -0.2)).epsilon(1e-12));

    // d = 2 on three points: per-coordinate sds 1 and 2, so
    // (4/4)^(1/6) * 3^(-1/6) * 1.5
    Matrix Z2(3, 2);
    Z2 << 0, 0, 1, 2, 2, 4;
    CHECK(kernels::silverman_bandwidth(Z2) == doctest::Approx(1.5 * std::pow(3.0, -1.0 / 6.0)));

    CHECK_THROWS_AS((void)kernels::silverman_bandwidth(column({2, 2, 2})), DegenerateSample);
}

TEST_CASE("kernel labels") {
    const auto grid = kernels::default_candidate_grid();
    const std::vector<std::string> labels{"L",   "P2-1", "P2-2",  "P4-1",  "P4-2",
                                          "G-2", "G-1",  "G-0.5", "G-0.2", "G-0.1"};
    REQUIRE(grid.size() == labels.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(grid[i].label() == labels[i]);
        CHECK(kernels::parse_kernel_label(labels[i]) == grid[i]);
    }
    CHECK(grid[0].family == kernels::Family::Linear);
    CHECK(grid[7].bandwidth == 0.5);
    for (const char* bad : {"", "X", "P2", "P0-1", "P2--1", "G-0", "G--1", "G-abc", "L1"}) {
        CHECK_THROWS_AS((void)kernels::parse_kernel_label(bad), ConfigError);
    }
}

TEST_CASE("KernelSpec validation") {
    using kernels::Family;
    CHECK_THROWS_AS((KernelSpec{Family::Gaussian, 1, 0.0, 0.0}.validate()), ConfigError);
    CHECK_THROWS_AS((KernelSpec{Family::Polynomial, 0, 1.0, 1.0}.validate()), ConfigError);
    CHECK_THROWS_AS((KernelSpec{Family::Polynomial, 2, -1.0, 1.0}.validate()), ConfigError);
    CHECK_THROWS_AS((void)KernelSpec::gaussian(-1.0), ConfigError);
    CHECK_NOTHROW(KernelSpec::polynomial(3, 0).validate());
}
