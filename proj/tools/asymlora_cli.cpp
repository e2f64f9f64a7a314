// asymlora_cli: runs the experiments and the bound calculator.
//
//   asymlora_cli <experiment> [--config PATH] [--seed N] [--out PATH]
//                [--format csv|json] [--threads N]
//   asymlora_cli bound --din D --dout D [--layers L] --rank R [--qbits Q]
//                [--n N] [--sigma S] [--mode BA|B-only|A-only]
//   asymlora_cli similarity --x X.txt --y Y.txt [--side column|row]
//
// Exit status: 0 success, 1 invalid input or I/O failure, 2 numerical failure.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include "asymlora/errors.h"
#include "asymlora/gen_bound.h"
#include "asymlora/harness/config.h"
#include "asymlora/harness/experiments.h"
#include "asymlora/harness/report.h"
#include "asymlora/similarity.h"

namespace fs = std::filesystem;
using namespace asymlora;
using namespace asymlora::harness;

namespace {

constexpr const char *kOutputDirEnv = "ASYMLORA_OUTPUT_DIR";

struct RunFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "csv";
  unsigned threads = 1;
};

struct BoundFlags {
  std::int64_t d_in = 0;
  std::int64_t d_out = 0;
  std::int64_t layers = 1;
  std::int64_t rank = 0;
  std::int64_t qbits = 16;
  std::int64_t n = 1;
  double sigma = 1.0;
  std::string mode = "BA";
};

struct MatrixFlags {
  std::string x_path;
  std::string y_path;
  std::string side = "column";
};

std::string extension(ReportFormat format) {
  return format == ReportFormat::csv ? "csv" : "json";
}

// Whitespace- or comma-separated numbers, one matrix row per line.
Matrix read_matrix(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open matrix file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    for (auto &c : line) {
      if (c == ',') c = ' ';
    }
    std::istringstream fields(line);
    std::vector<double> row;
    std::string field;
    while (fields >> field) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(field, &used));
        if (used != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception &) {
        throw ValidationError(path + ": not a number: " + field);
      }
    }
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw DimensionError(path + ": ragged rows");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError(path + ": empty matrix");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

int run(ExperimentKind kind, const RunFlags &flags) {
  ExperimentConfig config = flags.config_path.empty()
                                ? default_config(kind)
                                : load_config(flags.config_path, kind);
  if (flags.seed) config.seed = *flags.seed;
  const ReportFormat format = parse_report_format(flags.format);

  fs::path out;
  if (!flags.out.empty()) {
    out = flags.out;
  } else if (!config.output_path.empty()) {
    out = config.output_path;
  } else {
    const char *dir = std::getenv(kOutputDirEnv);
    out = fs::path(dir && *dir ? dir : ".") /
          (std::string(to_string(kind)) + "." + extension(format));
  }
  if (out.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(out.parent_path(), ec);
  }

  const ExperimentResult result = run_experiment(config, flags.threads);
  emit_report(result.records, out.string(), format);
  std::cerr << "wrote " << result.records.size() << " records to " << out.string() << "\n";
  if (!result.summary.empty()) {
    fs::path summary = out;
    summary.replace_extension(".summary." + extension(format));
    emit_report(result.summary, summary.string(), format);
    std::cout << format_report(result.summary, ReportFormat::csv);
  } else if (kind == ExperimentKind::bound) {
    std::cout << format_report(result.records, ReportFormat::csv);
  }
  return 0;
}

int run_bound_flags(const BoundFlags &flags) {
  FineTuneSpec spec;
  spec.layers.assign(static_cast<std::size_t>(std::max<std::int64_t>(flags.layers, 0)),
                     LayerShape{flags.d_in, flags.d_out});
  if (spec.layers.empty()) throw ValidationError("--layers must be >= 1");
  spec.rank = flags.rank;
  spec.quant_bits = flags.qbits;
  spec.n_samples = flags.n;
  spec.sub_gaussian_sigma = flags.sigma;
  spec.mode = parse_tune_mode(flags.mode);
  const TrialRecord rec = run_bound(spec);
  std::printf("q = %lld bits\n", static_cast<long long>(spec.quant_bits));
  for (const auto &[name, value] : rec.metrics) {
    std::printf("%s = %.17g\n", name.c_str(), value);
  }
  return 0;
}

int run_similarity_files(const MatrixFlags &flags) {
  if (flags.side != "column" && flags.side != "row") {
    throw ValidationError("--side must be column or row");
  }
  const Side side = flags.side == "column" ? Side::column_space : Side::row_space;
  const Matrix x = read_matrix(flags.x_path);
  const Matrix y = read_matrix(flags.y_path);
  const auto bx = orthonormal_basis(x, side);
  const auto by = orthonormal_basis(y, side);
  std::printf("similarity = %.17g\n", cca_similarity(x, y, side));
  std::printf("effective_rank_x = %lld\neffective_rank_y = %lld\n",
              static_cast<long long>(bx.effective_rank),
              static_cast<long long>(by.effective_rank));
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Low-rank adapter asymmetry experiments"};
  app.require_subcommand(1);

  const ExperimentKind kinds[] = {
      ExperimentKind::verify_lsq,    ExperimentKind::theorem1_sweep,
      ExperimentKind::grad_check,    ExperimentKind::bound,
      ExperimentKind::toy_asymmetry, ExperimentKind::figure1_toy,
      ExperimentKind::similarity,
  };
  RunFlags run_flags;
  BoundFlags bound_flags;
  MatrixFlags matrix_flags;
  std::uint64_t seed_value = 0;
  std::optional<ExperimentKind> chosen;

  for (const auto kind : kinds) {
    auto *sub = app.add_subcommand(to_string(kind));
    sub->add_option("--config", run_flags.config_path, "key = value config file")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", seed_value, "overrides the config seed");
    sub->add_option("--out", run_flags.out, "report path");
    sub->add_option("--format", run_flags.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--threads", run_flags.threads, "worker threads (0: all cores)");
    if (kind == ExperimentKind::bound) {
      sub->add_option("--din", bound_flags.d_in, "layer input dimension");
      sub->add_option("--dout", bound_flags.d_out, "layer output dimension");
      sub->add_option("--layers", bound_flags.layers, "number of identical layers");
      sub->add_option("--rank", bound_flags.rank, "adapter rank");
      sub->add_option("--qbits", bound_flags.qbits, "bits per stored parameter");
      sub->add_option("--n", bound_flags.n, "training samples");
      sub->add_option("--sigma", bound_flags.sigma, "sub-Gaussian constant of the loss");
      sub->add_option("--mode", bound_flags.mode, "BA, B-only or A-only");
    }
    if (kind == ExperimentKind::similarity) {
      auto *x = sub->add_option("--x", matrix_flags.x_path, "first matrix (text)")
                    ->check(CLI::ExistingFile);
      auto *y = sub->add_option("--y", matrix_flags.y_path, "second matrix (text)")
                    ->check(CLI::ExistingFile);
      x->needs(y);
      y->needs(x);
      sub->add_option("--side", matrix_flags.side, "column or row");
    }
    sub->callback([&chosen, kind] { chosen = kind; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    auto *sub = app.get_subcommands().front();
    if (sub->count("--seed") > 0) run_flags.seed = seed_value;
    if (run_flags.threads == 0) {
      run_flags.threads = std::max(1u, std::thread::hardware_concurrency());
    }
    if (*chosen == ExperimentKind::bound && sub->count("--din") > 0) {
      return run_bound_flags(bound_flags);
    }
    if (*chosen == ExperimentKind::similarity && !matrix_flags.x_path.empty()) {
      return run_similarity_files(matrix_flags);
    }
    return run(*chosen, run_flags);
  } catch (const NumericalError &e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
