#include <doctest.h>

#include <cmath>

#include "kmmr/error.hpp"
#include "kmmr/mmr.hpp"
#include "oracles.hpp"

using namespace kmmr;
using kernels::KernelSpec;
using models::Model;
using models::PolyModel;

namespace {

datagen::Dataset ls_data(int n, datagen::TrueFunction f = datagen::TrueFunction::Linear,
                         std::uint64_t seed = 527) {
    datagen::ScenarioSpec spec;
    spec.true_function = f;
    spec.n = n;
    spec.seed = seed;
    return datagen::generate(spec).train;
}

datagen::Dataset toy(const Vector& X, const Vector& Y) {
    datagen::Dataset ds;
    ds.X = X;
    ds.Y = Y;
    ds.Z = X;
    return ds;
}

mmr::MmrProblem with_gram(const datagen::Dataset& ds, const Matrix& K) {
    return mmr::MmrProblem::make(ds, kernels::GramMatrix{numerics::SymMatrix(K), KernelSpec::linear(), "toy"});
}

}  // namespace

TEST_CASE("empirical_risk examples") {
    Matrix K(2, 2);
    K << 1, 0.5, 0.5, 1;
    Vector r(2);
    r << 1, -1;
    CHECK(mmr::empirical_risk(K, r) == doctest::Approx(0.25));
    CHECK(mmr::empirical_risk(K, Vector::Zero(2)) == 0.0);
    CHECK_THROWS_AS((void)mmr::empirical_risk(K, Vector::Zero(3)), DimensionError);
}

TEST_CASE("empirical_risk matches the double-loop oracle and is nonnegative") {
    numerics::Rng rng(1);
    for (int rep = 0; rep < 20; ++rep) {
        const int n = 5 + static_cast<int>(rng.below(26));
        const Matrix Z = oracle::uniform_sample(rng, n, 1);
        const Vector r = oracle::random_vector(rng, n);
        for (const auto& k : kernels::default_candidate_grid()) {
            const double got = mmr::empirical_risk(kernels::gram(k, Z).matrix(), r);
            CHECK(oracle::rel_err(got, oracle::risk(oracle::gram(k, Z), r)) < 1e-12);
            CHECK(got >= -1e-12);
        }
    }
}

TEST_CASE("risk is invariant to joint permutation of the sample") {
    const auto ds = ls_data(60);
    const PolyModel m{Vector::LinSpaced(3, 0.1, 0.3)};
    const double base = mmr::empirical_risk(mmr::MmrProblem::make(ds, KernelSpec::gaussian(1)), m);
    numerics::Rng rng(2);
    const auto perm = rng.permutation(60);
    const auto shuffled = ds.subset(perm);
    const double perm_risk =
        mmr::empirical_risk(mmr::MmrProblem::make(shuffled, KernelSpec::gaussian(1)), m);
    CHECK(oracle::rel_err(perm_risk, base) < 1e-12);
}

TEST_CASE("fit_linear reduces to least squares when K = I") {
    Vector X(2), Y(2);
    X << 0.3, -0.8;
    Y << 1, 3;
    const auto fit = mmr::fit_linear(with_gram(toy(X, Y), Matrix::Identity(2, 2)), 0);
    CHECK(fit.model.index() == 0);
    CHECK(std::get<PolyModel>(fit.model).coeffs[0] == doctest::Approx(2.0));
}

TEST_CASE("fit_linear with the linear kernel and a quadratic model is rank deficient") {
    const auto ds = ls_data(200);
    const auto problem = mmr::MmrProblem::make(ds, KernelSpec::linear());
    const auto fit = mmr::fit_linear(problem, 2);
    CHECK(fit.ridge > 0.0);
    CHECK(std::get<PolyModel>(fit.model).coeffs.allFinite());
    // coarse grid over the coefficients: nothing beats the closed form
    double grid_min = std::numeric_limits<double>::infinity();
    for (double a = -2; a <= 2; a += 0.25) {
        for (double b = -2; b <= 2; b += 0.25) {
            for (double c = -1; c <= 1; c += 0.25) {
                Vector t(3);
                t << a, b, c;
                grid_min = std::min(grid_min, mmr::empirical_risk(problem, PolyModel{t}));
            }
        }
    }
    CHECK(fit.risk <= grid_min + 1e-12);
    // the linear kernel only sees one moment, so the minimum is (numerically) zero
    CHECK(fit.risk < 1e-10);
}

TEST_CASE("closed-form fit beats random probes and is stationary") {
    const auto ds = ls_data(150, datagen::TrueFunction::Quad);
    numerics::Rng rng(3);
    for (int degree : {2, 4}) {
        const auto problem = mmr::MmrProblem::make(ds, KernelSpec::gaussian(1));
        const auto fit = mmr::fit_linear(problem, degree);
        CHECK(fit.ridge == 0.0);
        CHECK(std::abs(fit.risk - mmr::empirical_risk(problem, fit.model)) <= 1e-10);
        for (int probe = 0; probe < 50; ++probe) {
            const Vector t = std::get<PolyModel>(fit.model).coeffs + oracle::random_vector(rng, degree + 1);
            CHECK(fit.risk <= mmr::empirical_risk(problem, PolyModel{t}));
        }
        CHECK(mmr::risk_gradient(problem, fit.model).norm() < 1e-8);
    }
}

TEST_CASE("risk_gradient for polynomial models") {
    const auto ds = ls_data(40);
    const auto problem = mmr::MmrProblem::make(ds, KernelSpec::gaussian(0.5));
    numerics::Rng rng(4);
    for (int rep = 0; rep < 20; ++rep) {
        const PolyModel m{oracle::random_vector(rng, 5)};
        const Vector g = mmr::risk_gradient(problem, m);
        const Matrix Phi = models::basis_matrix(4, ds.X);
        const Vector r = models::residuals(m, ds.X, ds.Y);
        const Vector closed = -(2.0 / (40.0 * 40.0)) * Phi.transpose() * (problem.gram.matrix() * r);
        CHECK(oracle::rel_err(g, closed) < 1e-12);
        const Vector fd = oracle::finite_diff(
            [&](const Vector& t) { return mmr::empirical_risk(problem, PolyModel{t}); }, m.coeffs);
        CHECK(oracle::rel_err(g, fd) < 1e-6);
    }

    Vector X(3);
    X << -1, 0.5, 2;
    const auto exact = with_gram(toy(X, X), Matrix::Identity(3, 3));
    Vector c(2);
    c << 0, 1;
    CHECK(mmr::risk_gradient(exact, PolyModel{c}).isZero());
}

TEST_CASE("risk_gradient for MLPs matches finite differences at initialization") {
    const auto ds = ls_data(40);
    const auto problem = mmr::MmrProblem::make(ds, KernelSpec::gaussian(1));
    for (const char* spec : {"mlp:10", "mlp:5,5"}) {
        numerics::Rng rng(5);
        const Model m = models::make_model(models::parse_model_spec(spec), rng);
        const Vector theta = models::flatten(m).values;
        const Vector fd = oracle::finite_diff(
            [&](const Vector& t) { return mmr::empirical_risk(problem, models::unflatten(m, t)); },
            theta);
        CHECK(oracle::rel_err(mmr::risk_gradient(problem, m), fd) < 1e-4);
    }
}

TEST_CASE("fit_gradient descends and fits LS linear data") {
    datagen::ScenarioSpec spec;
    spec.n = 300;
    const auto splits = datagen::generate(spec);
    const auto problem = mmr::MmrProblem::make(splits.train, KernelSpec::gaussian(1));
    const auto valid = mmr::MmrProblem::make(splits.valid, KernelSpec::gaussian(1));
    numerics::Rng rng(6);
    const Model init = models::make_model(models::parse_model_spec("mlp:10"), rng);
    const auto fit = mmr::fit_gradient(problem, init, &valid, mmr::AdamOptions{});
    CHECK(fit.risk <= fit.initial_risk);
    CHECK(fit.iterations > 0);
    CHECK(fit.iterations <= 2000);
    CHECK(std::abs(fit.risk - mmr::empirical_risk(problem, fit.model)) <= 1e-10);

    const auto& test = splits.test;
    const Vector pred = models::predict(fit.model, test.X);
    double mse = 0.0;
    Vector noise(test.size());
    for (Eigen::Index i = 0; i < test.size(); ++i) {
        const double f = test.X[i];
        mse += std::pow(pred[i] * test.y_std + test.y_mean - f, 2);
        noise[i] = test.Y[i] * test.y_std + test.y_mean - f;
    }
    mse /= static_cast<double>(test.size());
    const double noise_var = (noise.array() - noise.mean()).square().mean();
    CHECK(mse < noise_var);
}

TEST_CASE("closed form is at least as good as gradient descent for polynomials") {
    const auto ds = ls_data(100, datagen::TrueFunction::Quad);
    const auto problem = mmr::MmrProblem::make(ds, KernelSpec::gaussian(1));
    const auto closed = mmr::fit_linear(problem, 2);
    const auto gd = mmr::fit_gradient(problem, PolyModel{Vector::Zero(3)}, nullptr, mmr::AdamOptions{});
    CHECK(closed.risk <= gd.risk + 1e-15);
}

TEST_CASE("fit_model dispatches on the model family") {
    const auto ds = ls_data(50);
    const auto problem = mmr::MmrProblem::make(ds, KernelSpec::gaussian(1));
    mmr::FitPlan plan;
    plan.init = PolyModel{Vector::Zero(3)};
    const auto fit = mmr::fit_model(problem, plan);
    CHECK(fit.iterations == 1);
    CHECK(fit.risk == mmr::fit_linear(problem, 2).risk);
}

TEST_CASE("MmrProblem rejects a Gram of the wrong size") {
    const auto ds = ls_data(10);
    CHECK_THROWS_AS((void)with_gram(ds, Matrix::Identity(9, 9)), DimensionError);
}
