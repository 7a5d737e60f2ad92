#pragma once

// Experiment configuration.
//
// File format: one `key = value` per line, `#` starts a comment, list values
// are comma separated, values may be wrapped in double quotes. Unknown keys
// are rejected. Keys:
//
//   scenario        LS | LW | NS                      (list, default LS)
//   f_star          abs | linear | quad | sin         (list, default linear)
//   model           poly:<deg> | mlp:<w>[,<w>...]     (default poly:2)
//   candidates      kernel labels                     (list, default grid)
//   n               sample size per split             (list, default 500)
//   replications    positive integer                  (default 10)
//   seed            base seed                         (default 527)
//   alpha           significance level in (0, 1)      (default 0.05)
//   output          output directory                  (default out)
//   d               instrument dimension override     (default per scenario)
//   methods         lisc | median | silverman         (list, default all)
//   itc_mask        output | full                     (MLP ITC gradients, default output)
//   refit_per_half  true | false                      (default false)
//   jobs            worker threads                    (default 1)

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kmmr/datagen.hpp"
#include "kmmr/kernels.hpp"
#include "kmmr/models.hpp"

namespace kmmr::config {

enum class Method { Lisc, Median, Silverman };

[[nodiscard]] std::string to_string(Method m);
[[nodiscard]] Method parse_method(const std::string& name);

struct ExperimentConfig {
    std::vector<datagen::Scenario> scenarios{datagen::Scenario::LS};
    std::vector<datagen::TrueFunction> true_functions{datagen::TrueFunction::Linear};
    models::ModelSpec model;
    std::vector<kernels::KernelSpec> candidates = kernels::default_candidate_grid();
    std::vector<int> sizes{500};
    int replications = 10;
    std::uint64_t seed = 527;
    double alpha = 0.05;
    std::string output = "out";
    std::optional<int> d;
    std::vector<Method> methods{Method::Lisc, Method::Median, Method::Silverman};
    models::GradMask itc_mask = models::GradMask::OutputLayer;
    bool refit_per_half = false;
    int jobs = 1;

    // Throws ConfigError on out-of-range values or empty lists.
    void validate() const;
    [[nodiscard]] int dimension(datagen::Scenario s) const;
};

// Parse and assign one key. Throws ConfigError on unknown keys or bad values.
void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value);

// Starts from defaults; does not validate.
[[nodiscard]] ExperimentConfig parse_config(std::istream& in);
// Throws IoError when the file cannot be opened.
[[nodiscard]] ExperimentConfig load_config(const std::string& path);

// Every key in a fixed order; parse_config(canonical_text(c)) reproduces c.
// With runtime = false the output and jobs keys are left out, since they do
// not change any result.
[[nodiscard]] std::string canonical_text(const ExperimentConfig& cfg, bool runtime = true);
// FNV-1a of canonical_text(cfg, false), as 16 hex digits.
[[nodiscard]] std::string fingerprint(const ExperimentConfig& cfg);

}  // namespace kmmr::config
