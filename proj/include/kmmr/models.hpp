#pragma once

// Parametric residual models phi_theta(x, y) = y - f(x; theta) for scalar x.
//
//   PolyModel  f(x) = sum_i c_i x^i
//   MlpModel   f(x) = W_out * Phi(x) + b_out, Phi a stack of sigmoid layers
//
// Gradients are analytic: the polynomial basis for PolyModel, manual
// backpropagation for MlpModel.

#include <string>
#include <variant>
#include <vector>

#include "kmmr/numerics.hpp"

namespace kmmr::models {

struct PolyModel {
    Vector coeffs;  // c_0 .. c_m

    [[nodiscard]] int degree() const noexcept { return static_cast<int>(coeffs.size()) - 1; }
};

struct MlpModel {
    // Layer widths including input and output, e.g. {1, 10, 1} or {1, 5, 5, 1}.
    std::vector<int> widths;
    // weights[l] is widths[l+1] x widths[l]; the last entry is the output layer.
    std::vector<Matrix> weights;
    std::vector<Vector> biases;

    [[nodiscard]] int hidden_width() const { return widths[widths.size() - 2]; }
};

using Model = std::variant<PolyModel, MlpModel>;

enum class GradMask {
    Full,
    // Only the output affine layer (W_out, b_out); the hidden stack Phi is held
    // fixed and treated as a basis. Identical to Full for PolyModel.
    OutputLayer,
};

struct ParamSlice {
    std::string name;
    Eigen::Index offset = 0;
    Eigen::Index size = 0;
};

struct ParamLayout {
    std::vector<ParamSlice> slices;

    [[nodiscard]] Eigen::Index size() const;
};

// Flat parameter vector. MLP layout per layer l: W_l row-major, then b_l;
// the output layer comes last, so the output-layer mask is the trailing
// hidden_width + 1 entries.
struct ParamVector {
    Vector values;
    ParamLayout layout;
};

[[nodiscard]] ParamLayout layout_of(const Model& model);
[[nodiscard]] ParamVector flatten(const Model& model);
// Returns a copy of `shape` carrying `values`. Throws DimensionError on size mismatch.
[[nodiscard]] Model unflatten(const Model& shape, const Vector& values);

[[nodiscard]] Eigen::Index param_count(const Model& model);
[[nodiscard]] Eigen::Index param_count(const Model& model, GradMask mask);

[[nodiscard]] double predict(const Model& model, double x);
[[nodiscard]] Vector predict(const Model& model, const Vector& X);

[[nodiscard]] double residual(const Model& model, double x, double y);
[[nodiscard]] Vector residuals(const Model& model, const Vector& X, const Vector& Y);

// grad_theta (y - f(x; theta)) restricted to `mask`.
[[nodiscard]] Vector residual_grad(const Model& model, double x, double y,
                                   GradMask mask = GradMask::Full);

// n x c matrix whose row i is residual_grad(model, X[i], ., mask).
[[nodiscard]] Matrix gradient_matrix(const Model& model, const Vector& X,
                                     GradMask mask = GradMask::Full);

// sum_i w_i * grad_theta phi(x_i) over all parameters, in one backward pass.
[[nodiscard]] Vector residual_vjp(const Model& model, const Vector& X, const Vector& w);

// Row i = (1, x_i, ..., x_i^degree).
[[nodiscard]] Matrix basis_matrix(int degree, const Vector& X);
[[nodiscard]] Matrix basis_matrix(const PolyModel& model, const Vector& X);

// Hidden representation Phi(x), n x hidden_width.
[[nodiscard]] Matrix hidden_features(const MlpModel& model, const Vector& X);

// "poly:<m>" or "mlp:<h1>[,<h2>...]".
struct ModelSpec {
    enum class Kind { Poly, Mlp };
    Kind kind = Kind::Poly;
    int degree = 2;
    std::vector<int> hidden;

    [[nodiscard]] std::string label() const;
    bool operator==(const ModelSpec&) const = default;
};

// Throws ConfigError on malformed text.
[[nodiscard]] ModelSpec parse_model_spec(const std::string& text);

// PolyModel: zero coefficients. MlpModel: weights uniform on [-a, a] with
// a = sqrt(6 / (fan_in + fan_out)), zero biases, drawn layer by layer in
// row-major order from `rng`.
[[nodiscard]] Model make_model(const ModelSpec& spec, numerics::Rng& rng);

}  // namespace kmmr::models
