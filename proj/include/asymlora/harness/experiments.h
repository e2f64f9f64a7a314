#pragma once

#include <vector>

#include "asymlora/gen_bound.h"
#include "asymlora/harness/config.h"
#include "asymlora/harness/report.h"

namespace asymlora::harness {

/// Per-trial records plus per-cell (or per-scenario) summary rows.
struct ExperimentResult {
  std::vector<TrialRecord> records;
  std::vector<TrialRecord> summary;
};

/// Trials of every experiment run on up to `threads` workers. Trial k seeds
/// from derive_seed(config.seed, k) and results are merged in trial order,
/// so the output does not depend on `threads`.
ExperimentResult run_verify_lsq(const ExperimentConfig &config, unsigned threads = 1);
ExperimentResult run_theorem1_sweep(const ExperimentConfig &config,
                                    unsigned threads = 1);
ExperimentResult run_grad_check(const ExperimentConfig &config, unsigned threads = 1);
ExperimentResult run_toy_asymmetry(const ExperimentConfig &config,
                                   unsigned threads = 1);
ExperimentResult run_figure1_toy(const ExperimentConfig &config, unsigned threads = 1);
ExperimentResult run_similarity(const ExperimentConfig &config, unsigned threads = 1);

/// Bounds, parameter counts and matched ranks for all three modes of `spec`
/// (spec.mode only selects the `bound` / `params` headline metrics).
TrialRecord run_bound(const FineTuneSpec &spec);

/// Dispatches on config.experiment; the bound experiment uses config.dims as
/// layers, each entry of config.ranks as a rank, q = 16, sigma = 1 and
/// n = config.monte_carlo_samples.
ExperimentResult run_experiment(const ExperimentConfig &config, unsigned threads = 1);

// Variant labels used by the figure-1 reproduction.
inline constexpr const char *kSameTaskRandomInit = "same-task-random-init";
inline constexpr const char *kDiffTaskFixedInit = "diff-task-fixed-init";
inline constexpr const char *kDiffTaskRandomInit = "diff-task-random-init";

} // namespace asymlora::harness
