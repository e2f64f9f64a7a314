// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fail.
//
//   acceptance [--threads N]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstdarg>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "asymlora/gen_bound.h"
#include "asymlora/harness/config.h"
#include "asymlora/harness/experiments.h"
#include "asymlora/harness/report.h"
#include "asymlora/lsq_adapter.h"
#include "asymlora/random.h"
#include "asymlora/similarity.h"
#include "asymlora/stiefel.h"

using namespace asymlora;
using namespace asymlora::harness;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const char *name, bool pass, const std::string &detail) {
  std::printf("[%s] %2d %s: %s\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  failures += pass ? 0 : 1;
}

std::string fmt(const char *format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char *format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

class Stopwatch {
public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

double max_metric(const std::vector<TrialRecord> &records, const std::string &name) {
  double worst = -INFINITY;
  for (const auto &r : records) worst = std::max(worst, r.metrics.at(name));
  return worst;
}

const TrialRecord &find_variant(const std::vector<TrialRecord> &rows, const std::string &variant) {
  for (const auto &r : rows) {
    if (r.variant == variant) return r;
  }
  throw std::runtime_error("missing variant " + variant);
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void closed_forms_and_optimality(unsigned threads) {
  const auto config = default_config(ExperimentKind::verify_lsq);
  Stopwatch clock;
  const auto result = run_verify_lsq(config, threads);
  const double elapsed = clock.seconds();
  const double rel = std::max(max_metric(result.records, "rel_error_A"),
                              max_metric(result.records, "rel_error_B"));
  report(1, "closed-form losses match Monte Carlo", rel <= 0.01 && elapsed < 120.0,
         fmt("%lld tasks, max relative error %.3e (limit 1e-2), %.1f s (limit 120 s)",
             static_cast<long long>(result.records.size()), rel, elapsed));
  const double decrease = std::max(max_metric(result.records, "max_decrease_A"),
                                   max_metric(result.records, "max_decrease_B"));
  report(2, "first-order optimality of B* and A*", decrease <= 1e-10,
         fmt("largest loss decrease over 50 directions x %lld tasks: %.3e (limit 1e-10)",
             static_cast<long long>(result.records.size()), decrease));
}

void theorem_one(unsigned threads) {
  const auto config = default_config(ExperimentKind::theorem1_sweep);
  Stopwatch clock;
  const auto result = run_theorem1_sweep(config, threads);
  const double elapsed = clock.seconds();
  std::string cells;
  const TrialRecord *largest = nullptr;
  for (const auto &s : result.summary) {
    cells += fmt(" d=%lld:%.3f", static_cast<long long>(s.d_in), s.metrics.at("fraction_nonnegative"));
    if (!largest || s.d_in > largest->d_in) largest = &s;
  }
  const double fraction = largest->metrics.at("fraction_nonnegative");
  const double mean_gap = largest->metrics.at("mean_gap");
  report(3, "frozen-A beats frozen-B with high probability",
         fraction >= 0.99 && mean_gap > 0.0 && elapsed < 60.0,
         fmt("d=256 r=4: fraction %.3f (need >= 0.99), mean gap %.3e (need > 0), %.1f s; by d:%s",
             fraction, mean_gap, elapsed, cells.c_str()));
}

void asymptotic() {
  const Index d = 512, r = 4;
  const std::uint64_t seed = 404;
  const auto ux = sample_stiefel(d, r, Orientation::column_orthonormal, derive_seed(seed, 0));
  const Matrix delta = random_low_rank(d, d, 8, 1.0, derive_seed(seed, 1));
  const Matrix pg = ux.matrix() * (ux.matrix().transpose() * (delta.transpose() * delta));
  const double full = pg.trace();
  double total = 0.0;
  const int draws = 500;
  for (int k = 0; k < draws; ++k) {
    const Matrix q = sample_stiefel(r, d, Orientation::row_orthonormal, derive_seed(seed, 10 + k)).matrix();
    total += full - (q * pg * q.transpose()).trace();
  }
  const double mc = total / draws;
  const double predicted = asymptotic_gap(ux, delta, r, d, 1.0);
  const double rel = std::abs(mc - predicted) / predicted;
  report(4, "asymmetry-gap expectation", rel <= 0.05,
         fmt("d=512 r=4, 500 frames: Monte Carlo %.6g vs (1 - r/d) Tr = %.6g, relative %.2e (limit 5e-2)",
             mc, predicted, rel));
}

void trace_inequality() {
  const Index d = 32, r = 4;
  double worst = INFINITY;
  int negative = 0;
  for (std::uint64_t k = 0; k < 1000; ++k) {
    const std::uint64_t s = derive_seed(505, k);
    const Matrix sigma = random_covariance(d, 0.1, derive_seed(s, 0));
    const Matrix delta = Rng(derive_seed(s, 1)).gaussian(d, d);
    const auto q = sample_stiefel(r, d, Orientation::row_orthonormal, derive_seed(s, 2));
    const double res = trace_inequality_residual(sigma, delta, q);
    worst = std::min(worst, res);
    negative += res < -1e-9 ? 1 : 0;
  }
  report(5, "trace inequality on random triples", negative == 0,
         fmt("1000 triples d=32 r=4: min residual %.3e, %d below -1e-9", worst, negative));
}

void lowrank_equivalence() {
  const Index d = 16, r = 3;
  double worst = 0.0;
  for (std::uint64_t k = 0; k < 100; ++k) {
    const std::uint64_t s = derive_seed(606, k);
    LinearFineTuneTask task = random_task(d, d, d, 2.0, 0.1, derive_seed(s, 0));
    const Matrix f = Rng(derive_seed(s, 1)).gaussian(d, r);
    task.sigma = f * f.transpose();
    task.sigma = (0.5 * (task.sigma + task.sigma.transpose())).eval();
    const auto u = sample_stiefel(d, r, Orientation::column_orthonormal, derive_seed(s, 2));
    const Matrix b_star = u.matrix();
    const Matrix a_star = solve_freeze_B(task, u);
    const auto q = sample_stiefel(r, d, Orientation::row_orthonormal, derive_seed(s, 3));
    const Matrix b_eq = lowrank_sigma_equivalent_B(b_star, a_star, f, q);
    const Matrix x = f * Rng(derive_seed(s, 4)).gaussian(r, 100);
    worst = std::max(worst, (b_eq * q.matrix() * x - b_star * a_star * x).cwiseAbs().maxCoeff());
  }
  report(6, "rank-r covariance equivalence", worst < 1e-8,
         fmt("100 instances d=16 r=3, 100 in-span inputs each: max deviation %.3e (limit 1e-8)", worst));
}

void gradients(unsigned threads) {
  const auto result = run_grad_check(default_config(ExperimentKind::grad_check), threads);
  const auto &s = result.summary.front().metrics;
  const double fd = s.at("max_fd_relative_error");
  const double factor = s.at("max_factorization_error");
  report(7, "gradients match finite differences", fd <= 1e-5 && factor <= 1e-12,
         fmt("%lld instances x 3 loss families: max FD error %.3e (limit 1e-5), factorization %.3e (limit 1e-12)",
             static_cast<long long>(result.records.size()), fd, factor));
}

void bound_arithmetic() {
  double worst_ratio = 0.0;
  bool params_exact = true;
  bool doubled = true;
  for (const std::int64_t dim : {64, 768, 1024, 4096}) {
    for (const std::int64_t layers : {1, 12, 24}) {
      for (const std::int64_t r : {1, 4, 8, 16}) {
        FineTuneSpec spec;
        spec.layers.assign(static_cast<std::size_t>(layers), LayerShape{dim, dim});
        spec.rank = r;
        spec.n_samples = 10000;
        const double ba = generalization_bound(spec);
        const auto pba = trainable_params(spec);
        spec.mode = TuneMode::B_only;
        worst_ratio = std::max(worst_ratio, std::abs(generalization_bound(spec) / ba - 1.0 / std::sqrt(2.0)));
        params_exact = params_exact && static_cast<double>(trainable_params(spec)) / static_cast<double>(pba) == 0.5;
        spec.mode = TuneMode::BA;
        if (r == 8) {
          doubled = doubled && matched_rank(spec, MatchCriterion::equal_params) == 16 &&
                    matched_rank(spec, MatchCriterion::equal_bound) == 16;
        }
      }
    }
  }
  report(8, "generalization-bound arithmetic", worst_ratio <= 1e-12 && params_exact && doubled,
         fmt("max |ratio - 1/sqrt2| %.2e (limit 1e-12), param ratio exactly 0.5: %s, r 8 -> 16: %s",
             worst_ratio, params_exact ? "yes" : "no", doubled ? "yes" : "no"));
}

void similarity(unsigned threads) {
  const auto result = run_similarity(default_config(ExperimentKind::similarity), threads);
  double self = 0.0, reparam = 0.0;
  for (const auto &rec : result.records) {
    self = std::max(self, std::abs(rec.metrics.at("sim_self") - 1.0));
    reparam = std::max({reparam, std::abs(rec.metrics.at("sim_column_reparam") - 1.0),
                        std::abs(rec.metrics.at("sim_row_reparam") - 1.0)});
  }
  const double mean = result.summary.front().metrics.at("mean_sim_independent");
  const double target = 8.0 / 256.0;
  const double rel = std::abs(mean - target) / target;
  report(9, "CCA similarity metric", self <= 1e-10 && reparam <= 1e-9 && rel <= 0.1,
         fmt("|sim(X,X)-1| %.2e (1e-10), |sim(X,XC)-1| %.2e (1e-9), independent mean %.5f vs %.5f, relative %.3f (0.1)",
             self, reparam, mean, target, rel));
}

void toy_asymmetry(unsigned threads) {
  const auto config = default_config(ExperimentKind::toy_asymmetry);
  Stopwatch clock;
  const auto result = run_toy_asymmetry(config, threads);
  const double elapsed = clock.seconds();
  const auto &s = result.summary.front().metrics;
  const double a_le_b = s.at("fraction_freeze_A_le_freeze_B");
  const double a2_le_ba = s.at("fraction_freeze_A_2r_le_train_both");
  const double gap_a2 = s.at("mean_gap_freeze_A_2r");
  const double gap_ba = s.at("mean_gap_train_both_r");
  report(10, "toy asymmetry ordering",
         a_le_b >= 0.9 && a2_le_ba >= 0.8 && gap_a2 < gap_ba && elapsed < 300.0,
         fmt("A<=B %.2f (0.9), A(2r)<=1.05 BA(r) %.2f (0.8), mean gap A(2r) %.4f < BA(r) %.4f, %.1f s (300 s)",
             a_le_b, a2_le_ba, gap_a2, gap_ba, elapsed));
}

void figure_one(unsigned threads) {
  const auto result = run_figure1_toy(default_config(ExperimentKind::figure1_toy), threads);
  auto mean = [&](const std::string &style, const char *scenario, const char *metric) {
    return find_variant(result.summary, style + "/" + scenario).metrics.at(metric);
  };
  bool ok = true;
  std::string detail;
  for (const std::string style : {"standard", "reversed"}) {
    // Standard init: B tracks the task, A tracks the init. Reversed swaps roles.
    const char *task_side = style == "standard" ? "mean_sim_B" : "mean_sim_A";
    const char *init_side = style == "standard" ? "mean_sim_A" : "mean_sim_B";
    const double same_task = mean(style, kSameTaskRandomInit, task_side);
    const double diff_task = mean(style, kDiffTaskRandomInit, task_side);
    const double fixed_init = mean(style, kDiffTaskFixedInit, init_side);
    const double random_init =
        std::max(mean(style, kSameTaskRandomInit, init_side), mean(style, kDiffTaskRandomInit, init_side));
    ok = ok && same_task > diff_task && fixed_init > random_init;
    detail += fmt("%s: %s same-task %.3f > diff-task %.3f, %s fixed-init %.3f > random-init %.3f; ",
                  style.c_str(), task_side + 9, same_task, diff_task, init_side + 9, fixed_init, random_init);
  }
  report(11, "figure-1 similarity pattern", ok, detail.substr(0, detail.size() - 2));
}

void determinism(unsigned threads) {
  const unsigned other = threads > 1 ? 1 : 4;
  const fs::path dir = fs::temp_directory_path() / "asymlora_acceptance";
  fs::create_directories(dir);
  int compared = 0;
  std::string mismatched;
  for (const auto kind :
       {ExperimentKind::verify_lsq, ExperimentKind::theorem1_sweep, ExperimentKind::grad_check,
        ExperimentKind::bound, ExperimentKind::toy_asymmetry, ExperimentKind::figure1_toy,
        ExperimentKind::similarity}) {
    auto config = default_config(kind);
    if (kind == ExperimentKind::verify_lsq) config.trials = 18;
    if (kind == ExperimentKind::toy_asymmetry) config.trials = 4;
    const auto first = run_experiment(config, threads);
    const auto second = run_experiment(config, other);
    for (const auto format : {ReportFormat::csv, ReportFormat::json}) {
      const std::string ext = format == ReportFormat::csv ? ".csv" : ".json";
      const fs::path a = dir / (std::string(to_string(kind)) + ".a" + ext);
      const fs::path b = dir / (std::string(to_string(kind)) + ".b" + ext);
      emit_report(first.records, a.string(), format);
      emit_report(second.records, b.string(), format);
      ++compared;
      if (slurp(a) != slurp(b) ||
          format_report(first.summary, format) != format_report(second.summary, format)) {
        mismatched += std::string(" ") + to_string(kind) + ext;
      }
    }
  }
  fs::remove_all(dir);
  report(12, "byte-identical reruns", mismatched.empty(),
         fmt("%d report pairs (%u vs %u threads) compared, mismatches:%s", compared, threads, other,
             mismatched.empty() ? " none" : mismatched.c_str()));
}

} // namespace

int main(int argc, char **argv) {
  unsigned threads = 1;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--threads") == 0 && i + 1 < argc) {
      threads = static_cast<unsigned>(std::max(1, std::atoi(argv[++i])));
    } else {
      std::fprintf(stderr, "usage: %s [--threads N]\n", argv[0]);
      return 2;
    }
  }
  struct Step {
    void (*fn)(unsigned);
  };
  const Step steps[] = {
      {closed_forms_and_optimality}, {theorem_one}, {[](unsigned) { asymptotic(); }},
      {[](unsigned) { trace_inequality(); }}, {[](unsigned) { lowrank_equivalence(); }},
      {gradients}, {[](unsigned) { bound_arithmetic(); }}, {similarity},
      {toy_asymmetry}, {figure_one}, {determinism},
  };
  for (const auto &step : steps) {
    try {
      step.fn(threads);
    } catch (const std::exception &e) {
      std::printf("[FAIL] error: %s\n", e.what());
      ++failures;
    }
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
