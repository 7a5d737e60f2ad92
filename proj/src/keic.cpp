#include "kmmr/keic.hpp"

#include <cmath>

#include "kmmr/error.hpp"

namespace kmmr::keic {

double effective_dimension(const Matrix& K) {
    const double sq = K.squaredNorm();
    if (!(sq > 0.0)) throw DegenerateKernel("effective_dimension: zero Gram matrix");
    return K.trace() / std::sqrt(sq);
}

double effective_dimension(const kernels::GramMatrix& gram) {
    return effective_dimension(gram.matrix());
}

double cv_risk(const datagen::Dataset& data, const kernels::KernelSpec& kernel,
               const mmr::FitPlan& plan, std::uint64_t fold_seed) {
    if (data.size() < 4) throw DimensionError("cv_risk: need at least 4 samples");
    const auto folds = numerics::split_halves(static_cast<std::size_t>(data.size()), fold_seed);
    const auto a = mmr::MmrProblem::make(data.subset(folds.first), kernel);
    const auto b = mmr::MmrProblem::make(data.subset(folds.second), kernel);
    const double risk_b = mmr::empirical_risk(b, mmr::fit_model(a, plan).model);
    const double risk_a = mmr::empirical_risk(a, mmr::fit_model(b, plan).model);
    return 0.5 * (risk_a + risk_b);
}

KeicReport assemble(std::size_t n, double risk_cv, double eff_dim) {
    KeicReport rep;
    rep.n = n;
    rep.risk_cv = risk_cv;
    rep.eff_dim = eff_dim;
    rep.keic_value = static_cast<double>(n) * risk_cv + eff_dim * std::log(static_cast<double>(n));
    return rep;
}

KeicReport keic(const datagen::Dataset& data, const kernels::KernelSpec& kernel,
                const mmr::FitPlan& plan, std::uint64_t fold_seed,
                const kernels::GramMatrix* full_gram) {
    const double eff = full_gram ? effective_dimension(*full_gram)
                                 : effective_dimension(kernels::gram(kernel, data.Z));
    return assemble(static_cast<std::size_t>(data.size()), cv_risk(data, kernel, plan, fold_seed),
                    eff);
}

}  // namespace kmmr::keic
