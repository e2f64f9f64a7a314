#include "asymlora/harness/config.h"

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "asymlora/errors.h"

namespace asymlora::harness {

namespace {

struct KindName {
  ExperimentKind kind;
  const char *name;
};

constexpr KindName kKindNames[] = {
    {ExperimentKind::verify_lsq, "verify-lsq"},
    {ExperimentKind::theorem1_sweep, "theorem1-sweep"},
    {ExperimentKind::grad_check, "grad-check"},
    {ExperimentKind::bound, "bound"},
    {ExperimentKind::toy_asymmetry, "toy-asymmetry"},
    {ExperimentKind::figure1_toy, "figure1-toy"},
    {ExperimentKind::similarity, "similarity"},
};

std::string trim(const std::string &s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string &s, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

std::int64_t parse_int(const std::string &s) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (used != s.size() || s.empty()) {
    throw ValidationError("expected an integer, got '" + s + "'");
  }
  return v;
}

double parse_real(const std::string &s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (used != s.size() || s.empty()) {
    throw ValidationError("expected a number, got '" + s + "'");
  }
  return v;
}

LayerShape parse_shape(const std::string &s) {
  const auto x = s.find('x');
  if (x == std::string::npos) {
    const auto d = parse_int(s);
    return {d, d};
  }
  return {parse_int(trim(s.substr(0, x))), parse_int(trim(s.substr(x + 1)))};
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

} // namespace

const char *to_string(ExperimentKind kind) {
  for (const auto &entry : kKindNames) {
    if (entry.kind == kind) return entry.name;
  }
  return "?";
}

ExperimentKind parse_experiment_kind(const std::string &text) {
  for (const auto &entry : kKindNames) {
    if (text == entry.name) return entry.kind;
  }
  throw ValidationError("unknown experiment '" + text + "'");
}

void ExperimentConfig::validate() const {
  if (dims.empty() || ranks.empty()) {
    throw ValidationError("config: dims and ranks must be non-empty");
  }
  for (const auto &d : dims) {
    if (d.d_in < 1 || d.d_out < 1) {
      throw ValidationError("config: dims must be >= 1");
    }
  }
  for (const auto r : ranks) {
    if (r < 1) throw ValidationError("config: ranks must be >= 1");
  }
  if (trials < 1 || monte_carlo_samples < 1 || steps < 1) {
    throw ValidationError("config: trials, monte_carlo_samples, steps must be >= 1");
  }
  for (const auto &[name, value] : tolerances) {
    if (!(value > 0.0)) {
      throw ValidationError("config: tolerance '" + name + "' must be positive");
    }
  }
  if (delta_rank < -1 || input_rank < 0) {
    throw ValidationError("config: delta_rank >= -1 and input_rank >= 0 required");
  }
  if (!(noise_var >= 0.0) || !(learning_rate > 0.0)) {
    throw ValidationError("config: noise_var >= 0 and learning_rate > 0 required");
  }
}

double ExperimentConfig::tolerance(const std::string &name) const {
  const auto it = tolerances.find(name);
  if (it == tolerances.end()) {
    throw ValidationError("config: missing tolerance '" + name + "'");
  }
  return it->second;
}

std::string ExperimentConfig::canonical() const {
  std::ostringstream out;
  out << "experiment=" << to_string(experiment) << '\n';
  out << "dims=";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    out << (i ? "," : "") << dims[i].d_in << 'x' << dims[i].d_out;
  }
  out << "\nranks=";
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    out << (i ? "," : "") << ranks[i];
  }
  out << "\ntrials=" << trials << "\nseed=" << seed
      << "\nmonte_carlo_samples=" << monte_carlo_samples << "\ntolerances=";
  bool first = true;
  for (const auto &[name, value] : tolerances) {
    out << (first ? "" : ",") << name << ':' << format_real(value);
    first = false;
  }
  out << "\ndelta_rank=" << delta_rank << "\ninput_rank=" << input_rank
      << "\nnoise_var=" << format_real(noise_var) << "\nsteps=" << steps
      << "\nlearning_rate=" << format_real(learning_rate) << '\n';
  return out.str();
}

std::string ExperimentConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.experiment = kind;
  switch (kind) {
  case ExperimentKind::verify_lsq:
    c.dims = {{8, 8}, {16, 16}, {32, 32}};
    c.ranks = {1, 2, 4};
    c.trials = 100;
    c.monte_carlo_samples = 200000;
    c.tolerances = {{"mc_relative", 0.01}, {"optimality", 1e-10},
                    {"trace", 1e-9}, {"lowrank_sigma", 1e-6}};
    break;
  case ExperimentKind::theorem1_sweep:
    c.dims = {{64, 64}, {128, 128}, {256, 256}};
    c.ranks = {4};
    c.trials = 200;
    c.delta_rank = 8;
    c.tolerances = {{"gap", 1e-9}, {"probability", 0.99}};
    break;
  case ExperimentKind::grad_check:
    c.dims = {{6, 4}, {8, 3}};
    c.ranks = {2};
    c.trials = 20;
    c.tolerances = {{"fd_relative", 1e-5}, {"factorization", 1e-12}};
    break;
  case ExperimentKind::bound:
    c.dims = {{1024, 1024}};
    c.ranks = {8};
    c.trials = 1;
    break;
  case ExperimentKind::toy_asymmetry:
    c.dims = {{32, 32}};
    c.ranks = {4};
    c.trials = 50;
    c.delta_rank = 8;
    c.input_rank = 4;
    c.steps = 500;
    c.learning_rate = 0.1;
    c.tolerances = {{"train_slack", 0.05}};
    break;
  case ExperimentKind::figure1_toy:
    c.dims = {{32, 32}};
    c.ranks = {4};
    c.trials = 5;
    c.delta_rank = 8;
    c.input_rank = 4;
    c.steps = 30;
    c.learning_rate = 0.1;
    break;
  case ExperimentKind::similarity:
    c.dims = {{256, 256}};
    c.ranks = {8};
    c.trials = 1000;
    c.tolerances = {{"invariance", 1e-9}};
    break;
  }
  return c;
}

ExperimentConfig parse_config(const std::string &text, ExperimentKind kind) {
  ExperimentConfig c = default_config(kind);
  const std::map<std::string, std::function<void(const std::string &)>> setters = {
      {"experiment",
       [&](const std::string &v) {
         if (parse_experiment_kind(v) != kind) {
           throw ValidationError("config is for '" + v + "', not '" +
                                 to_string(kind) + "'");
         }
       }},
      {"dims",
       [&](const std::string &v) {
         c.dims.clear();
         for (const auto &p : split(v, ',')) c.dims.push_back(parse_shape(p));
       }},
      {"ranks",
       [&](const std::string &v) {
         c.ranks.clear();
         for (const auto &p : split(v, ',')) c.ranks.push_back(parse_int(p));
       }},
      {"trials", [&](const std::string &v) { c.trials = parse_int(v); }},
      {"seed",
       [&](const std::string &v) {
         const auto s = parse_int(v);
         if (s < 0) throw ValidationError("seed must be non-negative");
         c.seed = static_cast<std::uint64_t>(s);
       }},
      {"monte_carlo_samples",
       [&](const std::string &v) { c.monte_carlo_samples = parse_int(v); }},
      {"output_path", [&](const std::string &v) { c.output_path = v; }},
      {"tolerances",
       [&](const std::string &v) {
         for (const auto &p : split(v, ',')) {
           const auto colon = p.find(':');
           if (colon == std::string::npos) {
             throw ValidationError("tolerance entries look like name:value");
           }
           c.tolerances[trim(p.substr(0, colon))] = parse_real(trim(p.substr(colon + 1)));
         }
       }},
      {"delta_rank", [&](const std::string &v) { c.delta_rank = parse_int(v); }},
      {"input_rank", [&](const std::string &v) { c.input_rank = parse_int(v); }},
      {"noise_var", [&](const std::string &v) { c.noise_var = parse_real(v); }},
      {"steps", [&](const std::string &v) { c.steps = parse_int(v); }},
      {"learning_rate", [&](const std::string &v) { c.learning_rate = parse_real(v); }},
  };

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(line_no) +
                            ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto setter = setters.find(key);
    if (setter == setters.end()) {
      throw ValidationError("config line " + std::to_string(line_no) +
                            ": unknown key '" + key + "'");
    }
    try {
      setter->second(value);
    } catch (const ValidationError &e) {
      throw ValidationError("config line " + std::to_string(line_no) + ": " +
                            e.what());
    }
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string &path, ExperimentKind kind) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot read config file '" + path + "'");
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), kind);
}

} // namespace asymlora::harness
