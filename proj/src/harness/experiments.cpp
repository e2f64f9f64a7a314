#include "asymlora/harness/experiments.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "asymlora/errors.h"
#include "asymlora/glm.h"
#include "asymlora/harness/checks.h"
#include "asymlora/harness/parallel.h"
#include "asymlora/harness/toy_family.h"
#include "asymlora/lsq_adapter.h"
#include "asymlora/random.h"
#include "asymlora/similarity.h"
#include "asymlora/stiefel.h"

namespace asymlora::harness {

namespace {

struct Cell {
  LayerShape dims;
  std::int64_t r = 0;
};

std::vector<Cell> grid(const ExperimentConfig &config) {
  std::vector<Cell> cells;
  for (const auto &d : config.dims) {
    for (const auto r : config.ranks) {
      if (r > std::min(d.d_in, d.d_out)) {
        throw ValidationError("rank " + std::to_string(r) + " exceeds min(d_in, d_out) for " +
                              std::to_string(d.d_in) + "x" + std::to_string(d.d_out));
      }
      cells.push_back({d, r});
    }
  }
  return cells;
}

TrialRecord make_record(const ExperimentConfig &config, const std::string &variant,
                        std::uint64_t seed, const LayerShape &dims, std::int64_t r) {
  TrialRecord rec;
  rec.experiment = to_string(config.experiment);
  rec.variant = variant;
  rec.config_hash = config.hash();
  rec.seed = seed;
  rec.d_in = dims.d_in;
  rec.d_out = dims.d_out;
  rec.r = r;
  return rec;
}

Matrix shift_for(const ExperimentConfig &config, Index d_out, Index d_in, double scale,
                 std::uint64_t seed) {
  if (config.delta_rank == 0) {
    return Matrix::Zero(d_out, d_in);
  }
  const Index rank = config.delta_rank < 0 ? std::min(d_out, d_in) : config.delta_rank;
  return random_low_rank(d_out, d_in, rank, scale, seed);
}

double mean(const std::vector<double> &xs) {
  double total = 0.0;
  for (const double x : xs) total += x;
  return xs.empty() ? 0.0 : total / static_cast<double>(xs.size());
}

// Stream offsets keep families, task sets and cell-level draws apart from
// the per-trial streams 0, 1, 2, ...
constexpr std::uint64_t kCellStream = 1ULL << 40;
constexpr std::uint64_t kFamilyStream = 1ULL << 41;
constexpr std::uint64_t kTaskStream = 1ULL << 42;
constexpr std::uint64_t kInitStream = 1ULL << 43;

ToyFamilyOptions toy_options(const ExperimentConfig &config) {
  const auto &d = config.dims.front();
  if (d.d_in != d.d_out) {
    throw ValidationError("toy experiments need a square layer (d_in == d_out)");
  }
  ToyFamilyOptions options;
  options.dim = d.d_in;
  options.input_rank = config.input_rank;
  options.delta_rank = config.delta_rank < 0 ? d.d_in : config.delta_rank;
  return options;
}

} // namespace

// ---- verify-lsq ------------------------------------------------------------

ExperimentResult run_verify_lsq(const ExperimentConfig &config, unsigned threads) {
  config.validate();
  const auto cells = grid(config);
  constexpr int kDirections = 50;
  constexpr double kStep = 1e-3;

  auto trial = [&](std::size_t t) {
    const Cell &cell = cells[t % cells.size()];
    const std::uint64_t seed = derive_seed(config.seed, t);
    const Index d_in = cell.dims.d_in;
    const Index d_out = cell.dims.d_out;
    const Index r = cell.r;

    LinearFineTuneTask task = random_task(d_in, d_out, 1, 1.0, config.noise_var,
                                          derive_seed(seed, 0));
    task.delta = shift_for(config, d_out, d_in,
                           2.0 * std::sqrt(static_cast<double>(d_out)),
                           derive_seed(seed, 7));
    const auto q = sample_stiefel(r, d_in, Orientation::row_orthonormal, derive_seed(seed, 1));
    const auto u = sample_stiefel(d_out, r, Orientation::column_orthonormal,
                                  derive_seed(seed, 2));
    const Matrix b_star = solve_freeze_A(task, q);
    const Matrix a_star = solve_freeze_B(task, u);

    TrialRecord rec = make_record(config, "", seed, cell.dims, r);
    const double cf_a = expected_loss_freeze_A(task, q);
    const double mc_a = empirical_loss(task, b_star, q.matrix(),
                                       config.monte_carlo_samples, derive_seed(seed, 3));
    const double cf_b = expected_loss_freeze_B(task, u);
    const double mc_b = empirical_loss(task, u.matrix(), a_star,
                                       config.monte_carlo_samples, derive_seed(seed, 4));
    rec.metrics["closed_form_loss_A"] = cf_a;
    rec.metrics["monte_carlo_loss_A"] = mc_a;
    rec.metrics["rel_error_A"] = std::abs(mc_a - cf_a) / cf_a;
    rec.metrics["closed_form_loss_B"] = cf_b;
    rec.metrics["monte_carlo_loss_B"] = mc_b;
    rec.metrics["rel_error_B"] = std::abs(mc_b - cf_b) / cf_b;

    // Largest loss decrease over random unit perturbations of each optimum.
    Rng rng(derive_seed(seed, 5));
    const double base_a = expected_loss(task, b_star, q.matrix());
    const double base_b = expected_loss(task, u.matrix(), a_star);
    double worst_a = -std::numeric_limits<double>::infinity();
    double worst_b = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < kDirections; ++k) {
      Matrix db = rng.gaussian(d_out, r);
      db /= db.norm();
      Matrix da = rng.gaussian(r, d_in);
      da /= da.norm();
      worst_a = std::max(worst_a, base_a - expected_loss(task, b_star + kStep * db, q.matrix()));
      worst_b = std::max(worst_b, base_b - expected_loss(task, u.matrix(), a_star + kStep * da));
    }
    rec.metrics["max_decrease_A"] = worst_a;
    rec.metrics["max_decrease_B"] = worst_b;
    rec.metrics["trace_residual"] = trace_inequality_residual(task.sigma, task.delta, q);

    // Rank-r input covariance: a frozen random A loses nothing against the
    // best rank-r update with both factors trained.
    LinearFineTuneTask low = task;
    const Matrix f = Rng(derive_seed(seed, 6)).gaussian(d_in, r);
    low.sigma = f * f.transpose();
    low.sigma = 0.5 * (low.sigma + low.sigma.transpose()).eval();
    const double frozen = expected_loss_freeze_A(low, q);
    const double best = optimal_loss_train_both(low, r);
    rec.metrics["lowrank_sigma_loss_A"] = frozen;
    rec.metrics["lowrank_sigma_optimum"] = best;
    rec.metrics["lowrank_sigma_gap"] = std::abs(frozen - best);
    return rec;
  };

  ExperimentResult result;
  result.records = parallel_map(static_cast<std::size_t>(config.trials), threads, trial);

  TrialRecord summary = make_record(config, "summary", config.seed, {0, 0}, 0);
  double max_rel = 0.0, max_dec = -std::numeric_limits<double>::infinity();
  double min_trace = std::numeric_limits<double>::infinity(), max_low = 0.0;
  for (const auto &rec : result.records) {
    max_rel = std::max({max_rel, rec.metrics.at("rel_error_A"), rec.metrics.at("rel_error_B")});
    max_dec = std::max({max_dec, rec.metrics.at("max_decrease_A"), rec.metrics.at("max_decrease_B")});
    min_trace = std::min(min_trace, rec.metrics.at("trace_residual"));
    max_low = std::max(max_low, rec.metrics.at("lowrank_sigma_gap"));
  }
  summary.metrics = {{"max_rel_error", max_rel},
                     {"max_decrease", max_dec},
                     {"min_trace_residual", min_trace},
                     {"max_lowrank_sigma_gap", max_low},
                     {"trials", static_cast<double>(config.trials)}};
  result.summary.push_back(std::move(summary));
  return result;
}

// ---- theorem1-sweep --------------------------------------------------------

ExperimentResult run_theorem1_sweep(const ExperimentConfig &config, unsigned threads) {
  config.validate();
  const auto cells = grid(config);
  const double tol = config.tolerance("gap");

  std::vector<LinearFineTuneTask> tasks;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const Index d_in = cells[c].dims.d_in;
    const Index d_out = cells[c].dims.d_out;
    const std::uint64_t cell_seed = derive_seed(config.seed, kCellStream + c);
    LinearFineTuneTask task;
    Rng rng(derive_seed(cell_seed, 0));
    task.w0 = rng.gaussian(d_out, d_in, 1.0 / std::sqrt(static_cast<double>(d_in)));
    task.b0 = Vector::Zero(d_out);
    task.delta = shift_for(config, d_out, d_in, 1.0, derive_seed(cell_seed, 1));
    if (config.input_rank == 0) {
      task.sigma = Matrix::Identity(d_in, d_in);
    } else {
      if (config.input_rank < cells[c].r || config.input_rank > d_in) {
        throw ValidationError("input_rank must lie in [r, d_in]");
      }
      const Matrix ux = sample_stiefel(d_in, config.input_rank,
                                       Orientation::column_orthonormal,
                                       derive_seed(cell_seed, 2)).matrix();
      task.sigma = ux * ux.transpose();
      task.sigma = 0.5 * (task.sigma + task.sigma.transpose()).eval();
    }
    task.noise_var = config.noise_var;
    tasks.push_back(std::move(task));
  }

  const std::size_t per_cell = static_cast<std::size_t>(config.trials);
  auto trial = [&](std::size_t k) {
    const std::size_t c = k / per_cell;
    const std::uint64_t seed = derive_seed(config.seed, k);
    const auto outcome = asymmetry_trial(tasks[c], cells[c].r, seed);
    TrialRecord rec = make_record(config, "trial", seed, cells[c].dims, cells[c].r);
    rec.metrics = {{"loss_freeze_A", outcome.loss_freeze_A},
                   {"loss_freeze_B", outcome.loss_freeze_B},
                   {"gap", outcome.gap}};
    return rec;
  };

  ExperimentResult result;
  result.records = parallel_map(cells.size() * per_cell, threads, trial);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::vector<double> gaps;
    std::size_t ok = 0;
    for (std::size_t t = 0; t < per_cell; ++t) {
      const double gap = result.records[c * per_cell + t].metrics.at("gap");
      gaps.push_back(gap);
      ok += gap >= -tol ? 1 : 0;
    }
    TrialRecord s = make_record(config, "summary", config.seed, cells[c].dims, cells[c].r);
    s.metrics = {{"fraction_nonnegative", static_cast<double>(ok) / static_cast<double>(per_cell)},
                 {"mean_gap", mean(gaps)},
                 {"min_gap", *std::min_element(gaps.begin(), gaps.end())},
                 {"max_gap", *std::max_element(gaps.begin(), gaps.end())},
                 {"d_over_r", static_cast<double>(std::min(cells[c].dims.d_in, cells[c].dims.d_out)) /
                                  static_cast<double>(cells[c].r)},
                 {"trials", static_cast<double>(per_cell)}};
    result.summary.push_back(std::move(s));
  }
  return result;
}

// ---- grad-check ------------------------------------------------------------

ExperimentResult run_grad_check(const ExperimentConfig &config, unsigned threads) {
  config.validate();
  const auto cells = grid(config);
  constexpr Index kBatch = 8;

  auto trial = [&](std::size_t t) {
    const Cell &cell = cells[t % cells.size()];
    const std::uint64_t seed = derive_seed(config.seed, t);
    const Index d_in = cell.dims.d_in;
    const Index k = cell.dims.d_out;
    const Index r = cell.r;
    TrialRecord rec = make_record(config, "", seed, cell.dims, r);

    struct Family {
      const char *name;
      GlmLoss glm;
    };
    const Family families[] = {
        {"logistic", GlmLoss::logistic(k)},
        {"least_squares", GlmLoss::least_squares(k)},
        {"tanh_least_squares",
         GlmLoss{OutputMap::tanh, Potential::half_squared_norm, k, 0}},
    };
    std::uint64_t stream = 0;
    for (const auto &family : families) {
      Rng rng(derive_seed(seed, stream++));
      const double sd = 1.0 / std::sqrt(static_cast<double>(d_in));
      const Matrix x = rng.gaussian(kBatch, d_in);
      LabeledBatch batch;
      if (family.glm.potential == Potential::log_sum_exp) {
        std::vector<int> labels;
        for (Index i = 0; i < kBatch; ++i) {
          labels.push_back(static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(k)));
        }
        batch = make_classification_batch(x, labels, k);
      } else {
        batch = LabeledBatch{x, rng.gaussian(kBatch, k), false};
      }
      const Matrix w0 = rng.gaussian(k, d_in, sd);
      const Matrix b = rng.gaussian(k, r, 0.5);
      const Matrix a = rng.gaussian(r, d_in, 0.5);
      const auto q = sample_stiefel(r, d_in, Orientation::row_orthonormal, rng.next_u64());
      const auto u = sample_stiefel(k, r, Orientation::column_orthonormal, rng.next_u64());
      const GlmLoss &glm = family.glm;

      const Matrix w = w0 + b * a;
      const Matrix g_w = grad_W(w, batch, glm);
      const Matrix fd_w = finite_difference_gradient(
          [&](const Matrix &m) { return loss(m, batch, glm); }, w);

      const Matrix g_b = grad_B_frozen_A(b, q, w0, batch, glm);
      const Matrix fd_b = finite_difference_gradient(
          [&](const Matrix &m) { return loss(w0 + m * q.matrix(), batch, glm); }, b);
      const Matrix chain_b = grad_W(w0 + b * q.matrix(), batch, glm) * q.matrix().transpose();

      const Matrix g_a = grad_A_frozen_B(a, u, w0, batch, glm);
      const Matrix fd_a = finite_difference_gradient(
          [&](const Matrix &m) { return loss(w0 + u.matrix() * m, batch, glm); }, a);
      const Matrix chain_a = u.matrix().transpose() * grad_W(w0 + u.matrix() * a, batch, glm);

      const std::string p = family.name;
      rec.metrics[p + "_fd_W"] = max_relative_error(g_w, fd_w);
      rec.metrics[p + "_fd_B"] = max_relative_error(g_b, fd_b);
      rec.metrics[p + "_fd_A"] = max_relative_error(g_a, fd_a);
      rec.metrics[p + "_factor_B"] = max_relative_error(g_b, chain_b, 1.0);
      rec.metrics[p + "_factor_A"] = max_relative_error(g_a, chain_a, 1.0);
    }
    return rec;
  };

  ExperimentResult result;
  result.records = parallel_map(static_cast<std::size_t>(config.trials), threads, trial);
  TrialRecord summary = make_record(config, "summary", config.seed, {0, 0}, 0);
  double fd = 0.0, factor = 0.0;
  for (const auto &rec : result.records) {
    for (const auto &[name, value] : rec.metrics) {
      if (name.find("_fd_") != std::string::npos) fd = std::max(fd, value);
      if (name.find("_factor_") != std::string::npos) factor = std::max(factor, value);
    }
  }
  summary.metrics = {{"max_fd_relative_error", fd},
                     {"max_factorization_error", factor},
                     {"trials", static_cast<double>(config.trials)}};
  result.summary.push_back(std::move(summary));
  return result;
}

// ---- toy-asymmetry ---------------------------------------------------------

ExperimentResult run_toy_asymmetry(const ExperimentConfig &config, unsigned threads) {
  config.validate();
  const ToyFamily family(toy_options(config), derive_seed(config.seed, kFamilyStream));
  const Index d = family.options().dim;
  const Index r = config.ranks.front();
  if (2 * r > d) {
    throw ValidationError("toy-asymmetry needs 2r <= dim");
  }
  const GlmLoss glm = family.loss();
  const TrainOptions train_options{config.learning_rate, config.steps};
  const double slack = config.tolerance("train_slack");

  struct Arm {
    const char *name;
    FreezeMode mode;
    Index rank;
  };
  const Arm arms[] = {
      {"freeze_A_r", FreezeMode::freeze_A, r},
      {"freeze_B_r", FreezeMode::freeze_B, r},
      {"train_both_r", FreezeMode::train_both, r},
      {"freeze_A_2r", FreezeMode::freeze_A, 2 * r},
  };

  auto trial = [&](std::size_t t) {
    const std::uint64_t seed = derive_seed(config.seed, t);
    const ToyTask task = family.task(derive_seed(seed, 0));
    TrialRecord rec = make_record(config, "", seed, {d, d}, r);
    const Matrix &w0 = family.pretrained();
    const double n_train = static_cast<double>(task.train.size());
    const double n_test = static_cast<double>(task.test.size());
    rec.metrics["pretrained_train_loss"] = loss(w0, task.train, glm) / n_train;
    rec.metrics["pretrained_test_loss"] = loss(w0, task.test, glm) / n_test;
    std::uint64_t stream = 1;
    for (const auto &arm : arms) {
      AdapterInit init;
      init.mode = arm.mode;
      const AdapterState start = init_adapter(d, d, arm.rank, init, derive_seed(seed, stream++));
      const TrainTrace trace = train(task.train, w0, start, glm, train_options);
      const Matrix w = w0 + trace.adapter.effective_update();
      const double train_loss = trace.losses.back();
      const double test_loss = loss(w, task.test, glm) / n_test;
      const std::string name = arm.name;
      rec.metrics["train_loss_" + name] = train_loss;
      rec.metrics["test_loss_" + name] = test_loss;
      rec.metrics["gap_" + name] = test_loss - train_loss;
    }
    return rec;
  };

  ExperimentResult result;
  result.records = parallel_map(static_cast<std::size_t>(config.trials), threads, trial);

  std::size_t a_le_b = 0, a2_le_ba = 0;
  std::vector<double> gap_a2, gap_ba;
  for (const auto &rec : result.records) {
    const auto &m = rec.metrics;
    a_le_b += m.at("train_loss_freeze_A_r") <= m.at("train_loss_freeze_B_r") ? 1 : 0;
    a2_le_ba += m.at("train_loss_freeze_A_2r") <= (1.0 + slack) * m.at("train_loss_train_both_r") ? 1 : 0;
    gap_a2.push_back(m.at("gap_freeze_A_2r"));
    gap_ba.push_back(m.at("gap_train_both_r"));
  }
  const double n = static_cast<double>(result.records.size());
  TrialRecord summary = make_record(config, "summary", config.seed, {d, d}, r);
  summary.metrics = {{"fraction_freeze_A_le_freeze_B", static_cast<double>(a_le_b) / n},
                     {"fraction_freeze_A_2r_le_train_both", static_cast<double>(a2_le_ba) / n},
                     {"mean_gap_freeze_A_2r", mean(gap_a2)},
                     {"mean_gap_train_both_r", mean(gap_ba)},
                     {"trials", n}};
  result.summary.push_back(std::move(summary));
  return result;
}

// ---- figure1-toy -----------------------------------------------------------

ExperimentResult run_figure1_toy(const ExperimentConfig &config, unsigned threads) {
  config.validate();
  if (config.trials < 2) {
    throw ValidationError("figure1-toy needs at least 2 runs per scenario");
  }
  const ToyFamily family(toy_options(config), derive_seed(config.seed, kFamilyStream));
  const Index d = family.options().dim;
  const Index r = config.ranks.front();
  const GlmLoss glm = family.loss();
  const TrainOptions train_options{config.learning_rate, config.steps};
  const std::size_t runs = static_cast<std::size_t>(config.trials);

  auto task_seed = [&](std::size_t i) { return derive_seed(config.seed, kTaskStream + i); };
  auto init_seed = [&](std::size_t i) { return derive_seed(config.seed, kInitStream + i); };

  // Distinct training runs are (task index, init index); scenario a uses
  // (0, i), b uses (i, 0), c uses (i, i).
  const std::vector<ToyTask> tasks = parallel_map(runs, threads, [&](std::size_t i) {
    return family.task(task_seed(i));
  });

  struct Scenario {
    const char *name;
    std::size_t (*task_of)(std::size_t);
    std::size_t (*init_of)(std::size_t);
  };
  const Scenario scenarios[] = {
      {kSameTaskRandomInit, [](std::size_t) { return std::size_t{0}; },
       [](std::size_t i) { return i; }},
      {kDiffTaskFixedInit, [](std::size_t i) { return i; },
       [](std::size_t) { return std::size_t{0}; }},
      {kDiffTaskRandomInit, [](std::size_t i) { return i; }, [](std::size_t i) { return i; }},
  };
  const InitStyle styles[] = {InitStyle::standard, InitStyle::reversed};

  struct Job {
    InitStyle style;
    std::size_t scenario;
    std::size_t run;
  };
  std::vector<Job> jobs;
  for (const auto style : styles) {
    for (std::size_t s = 0; s < 3; ++s) {
      for (std::size_t i = 0; i < runs; ++i) jobs.push_back({style, s, i});
    }
  }
  const std::vector<AdapterState> learned = parallel_map(jobs.size(), threads, [&](std::size_t j) {
    const Job &job = jobs[j];
    const Scenario &sc = scenarios[job.scenario];
    AdapterInit init;
    init.mode = FreezeMode::train_both;
    init.style = job.style;
    const AdapterState start = init_adapter(d, d, r, init, init_seed(sc.init_of(job.run)));
    const ToyTask &task = tasks[sc.task_of(job.run)];
    return train(task.train, family.pretrained(), start, glm, train_options).adapter;
  });

  ExperimentResult result;
  std::size_t j = 0;
  for (const auto style : styles) {
    const std::string prefix = style == InitStyle::standard ? "standard/" : "reversed/";
    for (std::size_t s = 0; s < 3; ++s) {
      const std::string variant = prefix + scenarios[s].name;
      std::vector<double> sim_a, sim_b;
      for (std::size_t i = 0; i < runs; ++i) {
        for (std::size_t k = i + 1; k < runs; ++k) {
          const AdapterState &x = learned[j + i];
          const AdapterState &y = learned[j + k];
          TrialRecord rec = make_record(config, variant, config.seed, {d, d}, r);
          const double a = cca_similarity(x.a, y.a, Side::row_space);
          const double b = cca_similarity(x.b, y.b, Side::column_space);
          rec.metrics = {{"run_i", static_cast<double>(i)},
                         {"run_j", static_cast<double>(k)},
                         {"sim_A", a},
                         {"sim_B", b}};
          sim_a.push_back(a);
          sim_b.push_back(b);
          result.records.push_back(std::move(rec));
        }
      }
      TrialRecord summary = make_record(config, variant, config.seed, {d, d}, r);
      summary.metrics = {{"mean_sim_A", mean(sim_a)},
                         {"mean_sim_B", mean(sim_b)},
                         {"pairs", static_cast<double>(sim_a.size())}};
      result.summary.push_back(std::move(summary));
      j += runs;
    }
  }
  return result;
}

// ---- similarity ------------------------------------------------------------

ExperimentResult run_similarity(const ExperimentConfig &config, unsigned threads) {
  config.validate();
  const auto cells = grid(config);
  const std::size_t per_cell = static_cast<std::size_t>(config.trials);

  auto trial = [&](std::size_t k) {
    const Cell &cell = cells[k / per_cell];
    const std::uint64_t seed = derive_seed(config.seed, k);
    const Index d = cell.dims.d_out;
    const Index r = cell.r;
    Rng rng(seed);
    const Matrix x = rng.gaussian(d, r);
    const Matrix y = rng.gaussian(d, r);
    const Matrix c = rng.gaussian(r, r);
    TrialRecord rec = make_record(config, "trial", seed, cell.dims, r);
    rec.metrics["sim_independent"] = cca_similarity(x, y, Side::column_space);
    rec.metrics["sim_self"] = cca_similarity(x, x, Side::column_space);
    rec.metrics["sim_column_reparam"] = cca_similarity(x, x * c, Side::column_space);
    const Matrix a = x.transpose();
    rec.metrics["sim_row_reparam"] =
        cca_similarity(a, c.partialPivLu().solve(a), Side::row_space);
    return rec;
  };

  ExperimentResult result;
  result.records = parallel_map(cells.size() * per_cell, threads, trial);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::vector<double> sims;
    double worst = 0.0;
    for (std::size_t t = 0; t < per_cell; ++t) {
      const auto &m = result.records[c * per_cell + t].metrics;
      sims.push_back(m.at("sim_independent"));
      worst = std::max({worst, std::abs(m.at("sim_self") - 1.0),
                        std::abs(m.at("sim_column_reparam") - 1.0),
                        std::abs(m.at("sim_row_reparam") - 1.0)});
    }
    TrialRecord s = make_record(config, "summary", config.seed, cells[c].dims, cells[c].r);
    s.metrics = {{"mean_sim_independent", mean(sims)},
                 {"expected_sim_independent", static_cast<double>(cells[c].r) /
                                                  static_cast<double>(cells[c].dims.d_out)},
                 {"max_invariance_error", worst},
                 {"trials", static_cast<double>(per_cell)}};
    result.summary.push_back(std::move(s));
  }
  return result;
}

// ---- bound -----------------------------------------------------------------

TrialRecord run_bound(const FineTuneSpec &spec) {
  spec.validate();
  TrialRecord rec;
  rec.experiment = "bound";
  rec.variant = to_string(spec.mode);
  rec.d_in = spec.layers.front().d_in;
  rec.d_out = spec.layers.front().d_out;
  rec.r = spec.rank;

  FineTuneSpec s = spec;
  double bounds[3];
  std::int64_t params[3];
  const TuneMode modes[] = {TuneMode::BA, TuneMode::B_only, TuneMode::A_only};
  for (int i = 0; i < 3; ++i) {
    s.mode = modes[i];
    bounds[i] = generalization_bound(s);
    params[i] = trainable_params(s);
  }
  s.mode = TuneMode::BA;
  const int selected = spec.mode == TuneMode::BA ? 0 : spec.mode == TuneMode::B_only ? 1 : 2;
  rec.metrics = {
      {"bound_BA", bounds[0]},
      {"bound_B", bounds[1]},
      {"bound_A", bounds[2]},
      {"params_BA", static_cast<double>(params[0])},
      {"params_B", static_cast<double>(params[1])},
      {"params_A", static_cast<double>(params[2])},
      {"bound", bounds[selected]},
      {"params", static_cast<double>(params[selected])},
      {"matched_rank_B_equal_params",
       static_cast<double>(matched_rank(s, MatchCriterion::equal_params))},
      {"matched_rank_B_equal_bound",
       static_cast<double>(matched_rank(s, MatchCriterion::equal_bound))},
      {"quant_bits", static_cast<double>(spec.quant_bits)},
      {"n_samples", static_cast<double>(spec.n_samples)},
      {"sub_gaussian_sigma", spec.sub_gaussian_sigma},
      {"layers", static_cast<double>(spec.layers.size())},
  };
  if (params[0] > 0) {
    rec.metrics["bound_ratio_B_over_BA"] = bounds[1] / bounds[0];
    rec.metrics["param_ratio_B_over_BA"] =
        static_cast<double>(params[1]) / static_cast<double>(params[0]);
  }
  return rec;
}

ExperimentResult run_experiment(const ExperimentConfig &config, unsigned threads) {
  switch (config.experiment) {
  case ExperimentKind::verify_lsq:
    return run_verify_lsq(config, threads);
  case ExperimentKind::theorem1_sweep:
    return run_theorem1_sweep(config, threads);
  case ExperimentKind::grad_check:
    return run_grad_check(config, threads);
  case ExperimentKind::toy_asymmetry:
    return run_toy_asymmetry(config, threads);
  case ExperimentKind::figure1_toy:
    return run_figure1_toy(config, threads);
  case ExperimentKind::similarity:
    return run_similarity(config, threads);
  case ExperimentKind::bound: {
    config.validate();
    ExperimentResult result;
    for (const auto r : config.ranks) {
      FineTuneSpec spec;
      spec.layers = config.dims;
      spec.rank = r;
      spec.n_samples = config.monte_carlo_samples;
      TrialRecord rec = run_bound(spec);
      rec.config_hash = config.hash();
      rec.seed = config.seed;
      result.records.push_back(std::move(rec));
    }
    return result;
  }
  }
  throw ValidationError("unknown experiment");
}

} // namespace asymlora::harness
