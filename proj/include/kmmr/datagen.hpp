#pragma once

// Simulated IV regression data:
//
//   Z ~ Uniform([-3, 3]^d),  e ~ N(0, 1),  gamma, delta ~ N(0, 0.1^2)
//   X = mean_k g(Z_k) + e + gamma
//   Y = f*(X) + e + delta
//
// e enters both equations and is the confounder. Y is standardized with the
// training split's mean and sample standard deviation; every split carries
// those constants so predictions can be mapped back to the raw scale.

#include <cstdint>
#include <iosfwd>
#include <string>

#include "kmmr/numerics.hpp"

namespace kmmr::datagen {

enum class TrueFunction { Abs, Linear, Quad, Sin };
enum class Scenario { LS, LW, NS };
enum class Split { Train, Valid, Test };

[[nodiscard]] std::string to_string(TrueFunction f);
[[nodiscard]] std::string to_string(Scenario s);
[[nodiscard]] std::string to_string(Split s);
// Throw ConfigError on unknown names.
[[nodiscard]] TrueFunction parse_true_function(const std::string& name);
[[nodiscard]] Scenario parse_scenario(const std::string& name);
[[nodiscard]] Split parse_split(const std::string& name);

[[nodiscard]] double true_function_value(TrueFunction f, double x);
// Name-based overload; throws ConfigError for unknown names.
[[nodiscard]] double true_function_value(const std::string& name, double x);

// Instrument dimension used when none is given: 6 for LW, 1 otherwise.
[[nodiscard]] int default_dimension(Scenario s);

struct ScenarioSpec {
    TrueFunction true_function = TrueFunction::Linear;
    Scenario scenario = Scenario::LS;
    int d = 1;
    int n = 100;
    std::uint64_t seed = 527;
    // Test hook: forces e = gamma = delta = 0 (draws still consumed).
    bool noiseless = false;

    void validate() const;
};

struct Dataset {
    Vector X;
    Vector Y;  // standardized
    Matrix Z;  // n x d
    double y_mean = 0.0;
    double y_std = 1.0;
    Split split = Split::Train;

    [[nodiscard]] Eigen::Index size() const noexcept { return X.size(); }
    [[nodiscard]] Eigen::Index dim() const noexcept { return Z.cols(); }
    [[nodiscard]] Dataset subset(const std::vector<std::size_t>& rows) const;
};

struct DataSplits {
    Dataset train;
    Dataset valid;
    Dataset test;
};

// Each split has spec.n samples drawn from its own labeled substream of
// spec.seed; within a sample the draw order is (Z_1..Z_d, e, gamma, delta).
[[nodiscard]] DataSplits generate(const ScenarioSpec& spec);

// CSV with header "x,y,z1,...,zd,split"; numbers in shortest round-trip form.
void write_csv(const Dataset& ds, std::ostream& out);
// Reads a CSV produced by write_csv. Standardization constants are not part
// of the CSV and must be restored from the metadata record.
[[nodiscard]] Dataset read_csv(std::istream& in);

// Sidecar metadata record (JSON object) for a generated dataset.
[[nodiscard]] std::string metadata_json(const ScenarioSpec& spec, const DataSplits& splits);

}  // namespace kmmr::datagen
