#include "kmmr/mmr.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "kmmr/error.hpp"

namespace kmmr::mmr {

MmrProblem MmrProblem::make(const datagen::Dataset& data, const kernels::KernelSpec& kernel) {
    return MmrProblem{data, kernels::gram(kernel, data.Z)};
}

MmrProblem MmrProblem::make(const datagen::Dataset& data, kernels::GramMatrix gram) {
    if (gram.dim() != data.size()) {
        throw DimensionError("MmrProblem: Gram dim " + std::to_string(gram.dim()) +
                             " vs dataset size " + std::to_string(data.size()));
    }
    return MmrProblem{data, std::move(gram)};
}

double empirical_risk(const Matrix& K, const Vector& r) {
    if (K.rows() != r.size()) throw DimensionError("empirical_risk: size mismatch");
    const double n = static_cast<double>(r.size());
    return r.dot(K * r) / (n * n);
}

double empirical_risk(const MmrProblem& problem, const models::Model& model) {
    return empirical_risk(problem.gram.matrix(),
                          models::residuals(model, problem.data.X, problem.data.Y));
}

Vector risk_gradient(const MmrProblem& problem, const models::Model& model) {
    const Vector r = models::residuals(model, problem.data.X, problem.data.Y);
    const Vector w = problem.gram.matrix() * r;
    const double n = static_cast<double>(r.size());
    return (2.0 / (n * n)) * models::residual_vjp(model, problem.data.X, w);
}

FitResult fit_linear(const MmrProblem& problem, int degree) {
    const Matrix B = models::basis_matrix(degree, problem.data.X);
    const Matrix& K = problem.gram.matrix();
    const Matrix KB = K * B;
    const numerics::SymMatrix normal(B.transpose() * KB);
    const Vector rhs = KB.transpose() * problem.data.Y;

    const numerics::EigenPair ep = numerics::sym_eigen(normal);
    const double top = ep.values[0];
    const double bottom = ep.values[ep.values.size() - 1];
    double ridge = 0.0;
    if (!(bottom >= 1e-12 * top)) {
        ridge = 1e-10 * normal.matrix().trace() / static_cast<double>(degree + 1);
    }
    Vector coeffs;
    try {
        coeffs = numerics::solve_spd(normal, rhs, ridge);
    } catch (const NumericalFailure& e) {
        throw NumericalFailure(std::string("fit_linear: ") + e.what());
    }
    if (!coeffs.allFinite()) throw NumericalFailure("fit_linear: non-finite solution");

    FitResult out{models::PolyModel{coeffs}};
    out.risk = empirical_risk(problem, out.model);
    out.grad_norm = risk_gradient(problem, out.model).norm();
    out.ridge = ridge;
    out.iterations = 1;
    out.initial_risk = empirical_risk(problem, models::PolyModel{Vector::Zero(degree + 1)});
    return out;
}

FitResult fit_gradient(const MmrProblem& problem, const models::Model& init,
                       const MmrProblem* valid, const AdamOptions& opts) {
    Vector theta = models::flatten(init).values;
    const Eigen::Index p = theta.size();
    Vector m1 = Vector::Zero(p);
    Vector m2 = Vector::Zero(p);

    auto watch = [&](const models::Model& model) {
        return valid ? empirical_risk(*valid, model) : empirical_risk(problem, model);
    };

    FitResult out{init};
    out.initial_risk = empirical_risk(problem, init);
    double best = watch(init);
    Vector best_theta = theta;
    int stale = 0;
    int it = 0;
    double b1t = 1.0;
    double b2t = 1.0;
    for (; it < opts.max_iterations; ++it) {
        const models::Model current = models::unflatten(init, theta);
        const Vector g = risk_gradient(problem, current);
        if (!g.allFinite()) {
            throw NumericalFailure("fit_gradient: non-finite gradient at iteration " +
                                   std::to_string(it));
        }
        b1t *= opts.beta1;
        b2t *= opts.beta2;
        m1 = opts.beta1 * m1 + (1.0 - opts.beta1) * g;
        m2 = opts.beta2 * m2 + (1.0 - opts.beta2) * g.cwiseProduct(g);
        const Vector mhat = m1 / (1.0 - b1t);
        const Vector vhat = m2 / (1.0 - b2t);
        theta -= (opts.step * mhat.array() / (vhat.array().sqrt() + opts.eps)).matrix();

        const double score = watch(models::unflatten(init, theta));
        if (!std::isfinite(score)) {
            throw NumericalFailure("fit_gradient: loss became NaN at iteration " +
                                   std::to_string(it) + " (last finite " + std::to_string(best) + ")");
        }
        if (score < best) {
            best = score;
            best_theta = theta;
            stale = 0;
        } else if (++stale >= opts.patience) {
            ++it;
            break;
        }
    }
    out.model = models::unflatten(init, best_theta);
    out.risk = empirical_risk(problem, out.model);
    out.grad_norm = risk_gradient(problem, out.model).norm();
    out.iterations = it;
    return out;
}

FitResult fit_model(const MmrProblem& problem, const FitPlan& plan) {
    if (const auto* poly = std::get_if<models::PolyModel>(&plan.init)) {
        return fit_linear(problem, poly->degree());
    }
    return fit_gradient(problem, plan.init, plan.valid, plan.adam);
}

}  // namespace kmmr::mmr
