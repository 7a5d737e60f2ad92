#include "kmmr/models.hpp"

#include <charconv>
#include <cmath>

#include "kmmr/error.hpp"

namespace kmmr::models {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// Activations of every layer for a batch; acts[0] is the 1 x n input row,
// acts[l] for l >= 1 the hidden activations, the last entry the linear output.
std::vector<Matrix> forward(const MlpModel& m, const Vector& X) {
    std::vector<Matrix> acts;
    acts.reserve(m.weights.size() + 1);
    acts.emplace_back(X.transpose());
    const std::size_t layers = m.weights.size();
    for (std::size_t l = 0; l < layers; ++l) {
        Matrix pre = m.weights[l] * acts.back();
        pre.colwise() += m.biases[l];
        if (l + 1 < layers) pre = pre.unaryExpr([](double t) { return sigmoid(t); });
        acts.push_back(std::move(pre));
    }
    return acts;
}

void check_mlp(const MlpModel& m) {
    if (m.widths.size() < 3 || m.widths.front() != 1 || m.widths.back() != 1 ||
        m.weights.size() != m.widths.size() - 1 || m.biases.size() != m.weights.size()) {
        throw DimensionError("MlpModel: inconsistent layer structure");
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Layout
// ---------------------------------------------------------------------------

Eigen::Index ParamLayout::size() const {
    Eigen::Index total = 0;
    for (const auto& s : slices) total += s.size;
    return total;
}

ParamLayout layout_of(const Model& model) {
    return std::visit(
        overloaded{
            [](const PolyModel& p) {
                return ParamLayout{{ParamSlice{"c", 0, p.coeffs.size()}}};
            },
            [](const MlpModel& m) {
                check_mlp(m);
                ParamLayout layout;
                Eigen::Index offset = 0;
                const std::size_t layers = m.weights.size();
                for (std::size_t l = 0; l < layers; ++l) {
                    const std::string tag = l + 1 == layers ? "out" : std::to_string(l + 1);
                    const Eigen::Index wsize = m.weights[l].size();
                    layout.slices.push_back({"W_" + tag, offset, wsize});
                    offset += wsize;
                    layout.slices.push_back({"b_" + tag, offset, m.biases[l].size()});
                    offset += m.biases[l].size();
                }
                return layout;
            },
        },
        model);
}

ParamVector flatten(const Model& model) {
    ParamVector out{Vector(), layout_of(model)};
    out.values.resize(out.layout.size());
    std::visit(overloaded{
                   [&](const PolyModel& p) { out.values = p.coeffs; },
                   [&](const MlpModel& m) {
                       Eigen::Index k = 0;
                       for (std::size_t l = 0; l < m.weights.size(); ++l) {
                           const Matrix& W = m.weights[l];
                           for (Eigen::Index r = 0; r < W.rows(); ++r) {
                               for (Eigen::Index c = 0; c < W.cols(); ++c) out.values[k++] = W(r, c);
                           }
                           for (Eigen::Index r = 0; r < m.biases[l].size(); ++r) {
                               out.values[k++] = m.biases[l][r];
                           }
                       }
                   },
               },
               model);
    return out;
}

Model unflatten(const Model& shape, const Vector& values) {
    if (values.size() != param_count(shape)) {
        throw DimensionError("unflatten: expected " + std::to_string(param_count(shape)) +
                             " parameters, got " + std::to_string(values.size()));
    }
    return std::visit(overloaded{
                          [&](const PolyModel&) -> Model { return PolyModel{values}; },
                          [&](const MlpModel& m) -> Model {
                              MlpModel out = m;
                              Eigen::Index k = 0;
                              for (std::size_t l = 0; l < out.weights.size(); ++l) {
                                  Matrix& W = out.weights[l];
                                  for (Eigen::Index r = 0; r < W.rows(); ++r) {
                                      for (Eigen::Index c = 0; c < W.cols(); ++c) W(r, c) = values[k++];
                                  }
                                  for (Eigen::Index r = 0; r < out.biases[l].size(); ++r) {
                                      out.biases[l][r] = values[k++];
                                  }
                              }
                              return out;
                          },
                      },
                      shape);
}

Eigen::Index param_count(const Model& model) { return layout_of(model).size(); }

Eigen::Index param_count(const Model& model, GradMask mask) {
    if (mask == GradMask::Full) return param_count(model);
    return std::visit(overloaded{
                          [](const PolyModel& p) { return p.coeffs.size(); },
                          [](const MlpModel& m) -> Eigen::Index { return m.hidden_width() + 1; },
                      },
                      model);
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

double predict(const Model& model, double x) {
    Vector X(1);
    X[0] = x;
    return predict(model, X)[0];
}

Vector predict(const Model& model, const Vector& X) {
    return std::visit(overloaded{
                          [&](const PolyModel& p) -> Vector {
                              // Horner
                              Vector out = Vector::Zero(X.size());
                              for (Eigen::Index i = p.coeffs.size() - 1; i >= 0; --i) {
                                  out = (out.array() * X.array() + p.coeffs[i]).matrix();
                              }
                              return out;
                          },
                          [&](const MlpModel& m) -> Vector {
                              check_mlp(m);
                              return forward(m, X).back().row(0).transpose();
                          },
                      },
                      model);
}

double residual(const Model& model, double x, double y) { return y - predict(model, x); }

Vector residuals(const Model& model, const Vector& X, const Vector& Y) {
    if (X.size() != Y.size()) throw DimensionError("residuals: X and Y lengths differ");
    return Y - predict(model, X);
}

Matrix basis_matrix(int degree, const Vector& X) {
    if (degree < 0) throw DimensionError("basis_matrix: negative degree");
    Matrix B(X.size(), degree + 1);
    for (Eigen::Index i = 0; i < X.size(); ++i) {
        double p = 1.0;
        for (int k = 0; k <= degree; ++k) {
            B(i, k) = p;
            p *= X[i];
        }
    }
    return B;
}

Matrix basis_matrix(const PolyModel& model, const Vector& X) {
    return basis_matrix(model.degree(), X);
}

Matrix hidden_features(const MlpModel& model, const Vector& X) {
    check_mlp(model);
    const auto acts = forward(model, X);
    return acts[acts.size() - 2].transpose();
}

Matrix gradient_matrix(const Model& model, const Vector& X, GradMask mask) {
    return std::visit(
        overloaded{
            [&](const PolyModel& p) -> Matrix { return -basis_matrix(p, X); },
            [&](const MlpModel& m) -> Matrix {
                check_mlp(m);
                const auto acts = forward(m, X);
                const std::size_t layers = m.weights.size();
                const Eigen::Index n = X.size();
                const Matrix& top = acts[layers - 1];  // hidden_width x n
                const Eigen::Index h = top.rows();
                if (mask == GradMask::OutputLayer) {
                    Matrix G(n, h + 1);
                    G.leftCols(h) = -top.transpose();
                    G.col(h).setConstant(-1.0);
                    return G;
                }
                const ParamLayout layout = layout_of(model);
                Matrix G(n, layout.size());
                // Per sample backprop of df/dtheta; delta holds df/d(pre-activation).
                for (Eigen::Index i = 0; i < n; ++i) {
                    Vector delta = Vector::Ones(1);
                    for (std::size_t l = layers; l-- > 0;) {
                        const Vector a_in = acts[l].col(i);
                        const ParamSlice& ws = layout.slices[2 * l];
                        const ParamSlice& bs = layout.slices[2 * l + 1];
                        for (Eigen::Index r = 0; r < delta.size(); ++r) {
                            for (Eigen::Index c = 0; c < a_in.size(); ++c) {
                                G(i, ws.offset + r * a_in.size() + c) = -delta[r] * a_in[c];
                            }
                            G(i, bs.offset + r) = -delta[r];
                        }
                        if (l == 0) break;
                        Vector back = m.weights[l].transpose() * delta;
                        delta = back.array() * a_in.array() * (1.0 - a_in.array());
                    }
                }
                return G;
            },
        },
        model);
}

Vector residual_grad(const Model& model, double x, double /*y*/, GradMask mask) {
    Vector X(1);
    X[0] = x;
    return gradient_matrix(model, X, mask).row(0).transpose();
}

Vector residual_vjp(const Model& model, const Vector& X, const Vector& w) {
    if (X.size() != w.size()) throw DimensionError("residual_vjp: X and w lengths differ");
    return std::visit(
        overloaded{
            [&](const PolyModel& p) -> Vector { return -(basis_matrix(p, X).transpose() * w); },
            [&](const MlpModel& m) -> Vector {
                check_mlp(m);
                const auto acts = forward(m, X);
                const ParamLayout layout = layout_of(model);
                Vector out(layout.size());
                const std::size_t layers = m.weights.size();
                // delta: d(sum_i w_i phi_i)/d(pre-activation), one column per sample.
                Matrix delta = -w.transpose();
                for (std::size_t l = layers; l-- > 0;) {
                    const Matrix& a_in = acts[l];
                    const Matrix gW = delta * a_in.transpose();
                    const Vector gb = delta.rowwise().sum();
                    const ParamSlice& ws = layout.slices[2 * l];
                    const ParamSlice& bs = layout.slices[2 * l + 1];
                    for (Eigen::Index r = 0; r < gW.rows(); ++r) {
                        for (Eigen::Index c = 0; c < gW.cols(); ++c) {
                            out[ws.offset + r * gW.cols() + c] = gW(r, c);
                        }
                    }
                    out.segment(bs.offset, bs.size) = gb;
                    if (l == 0) break;
                    Matrix back = m.weights[l].transpose() * delta;
                    delta = back.array() * a_in.array() * (1.0 - a_in.array());
                }
                return out;
            },
        },
        model);
}

// ---------------------------------------------------------------------------
// Specs
// ---------------------------------------------------------------------------

std::string ModelSpec::label() const {
    if (kind == Kind::Poly) return "poly:" + std::to_string(degree);
    std::string out = "mlp:";
    for (std::size_t i = 0; i < hidden.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(hidden[i]);
    }
    return out;
}

ModelSpec parse_model_spec(const std::string& text) {
    auto parse_int = [&](std::string_view s) {
        int v = 0;
        auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || v < 0) {
            throw ConfigError("bad integer '" + std::string(s) + "' in model spec '" + text + "'");
        }
        return v;
    };
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
        throw ConfigError("model spec '" + text + "' must look like poly:<m> or mlp:<h1>[,<h2>]");
    }
    const std::string kind = text.substr(0, colon);
    const std::string_view rest = std::string_view(text).substr(colon + 1);
    ModelSpec spec;
    if (kind == "poly") {
        spec.kind = ModelSpec::Kind::Poly;
        spec.degree = parse_int(rest);
        return spec;
    }
    if (kind == "mlp") {
        spec.kind = ModelSpec::Kind::Mlp;
        std::size_t start = 0;
        while (start <= rest.size()) {
            const auto comma = rest.find(',', start);
            const auto piece = rest.substr(start, comma == std::string_view::npos ? rest.size() - start
                                                                                  : comma - start);
            const int width = parse_int(piece);
            if (width < 1) throw ConfigError("mlp hidden widths must be >= 1");
            spec.hidden.push_back(width);
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        return spec;
    }
    throw ConfigError("unknown model kind '" + kind + "' (expected poly or mlp)");
}

Model make_model(const ModelSpec& spec, numerics::Rng& rng) {
    if (spec.kind == ModelSpec::Kind::Poly) {
        return PolyModel{Vector::Zero(spec.degree + 1)};
    }
    if (spec.hidden.empty()) throw ConfigError("mlp model needs at least one hidden layer");
    MlpModel m;
    m.widths.push_back(1);
    for (int h : spec.hidden) m.widths.push_back(h);
    m.widths.push_back(1);
    for (std::size_t l = 0; l + 1 < m.widths.size(); ++l) {
        const int fan_in = m.widths[l];
        const int fan_out = m.widths[l + 1];
        const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Matrix W(fan_out, fan_in);
        for (int r = 0; r < fan_out; ++r) {
            for (int c = 0; c < fan_in; ++c) W(r, c) = rng.uniform(-a, a);
        }
        m.weights.push_back(std::move(W));
        m.biases.push_back(Vector::Zero(fan_out));
    }
    return m;
}

}  // namespace kmmr::models
