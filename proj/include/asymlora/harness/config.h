#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "asymlora/gen_bound.h"

namespace asymlora::harness {

enum class ExperimentKind {
  verify_lsq,
  theorem1_sweep,
  grad_check,
  bound,
  toy_asymmetry,
  figure1_toy,
  similarity,
};

const char *to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string &text);

/// Everything an experiment run depends on. Two runs with equal configs
/// produce byte-identical reports.
///
/// Text form: one `key = value` per line, `#` starts a comment, lists are
/// comma separated. `dims` entries are `<d_in>x<d_out>` or a single number
/// for square layers; `tolerances` entries are `name:value`. Unknown keys
/// are rejected.
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::verify_lsq;
  std::vector<LayerShape> dims;
  std::vector<std::int64_t> ranks;
  std::int64_t trials = 1;
  std::uint64_t seed = 1;
  std::int64_t monte_carlo_samples = 200000;
  std::string output_path;
  std::map<std::string, double> tolerances;

  // Task and training knobs.
  std::int64_t delta_rank = -1;  // -1: full rank, 0: zero shift
  std::int64_t input_rank = 0;   // 0: identity/full covariance, else rank-k inputs
  double noise_var = 0.5;
  std::int64_t steps = 500;
  double learning_rate = 0.1;

  void validate() const;
  double tolerance(const std::string &name) const;

  /// Canonical text (fixed key order, 17 significant digits). Excludes
  /// output_path so the same experiment written to two places hashes equal.
  std::string canonical() const;
  /// FNV-1a 64 of canonical(), as 16 lowercase hex digits.
  std::string hash() const;
};

/// Defaults for each experiment; a config file only overrides what it sets.
ExperimentConfig default_config(ExperimentKind kind);

/// Parses config text on top of default_config(kind). An `experiment` key,
/// if present, must name `kind`. Throws ValidationError with the line number.
ExperimentConfig parse_config(const std::string &text, ExperimentKind kind);
ExperimentConfig load_config(const std::string &path, ExperimentKind kind);

} // namespace asymlora::harness
