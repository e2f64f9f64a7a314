#include "asymlora/harness/report.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "asymlora/errors.h"

namespace asymlora::harness {

namespace {

const std::vector<std::string> kFixedColumns = {
    "experiment", "variant", "config_hash", "seed", "d_in", "d_out", "r"};

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_field(const std::string &s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) {
    return s;
  }
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> metric_names(const std::vector<TrialRecord> &records) {
  std::set<std::string> names;
  for (const auto &rec : records) {
    for (const auto &[name, value] : rec.metrics) {
      if (!std::isfinite(value)) {
        throw ValidationError("report: metric '" + name + "' of " +
                              rec.experiment + " is not finite");
      }
      for (const auto &fixed : kFixedColumns) {
        if (name == fixed) {
          throw ValidationError("report: metric name '" + name + "' is reserved");
        }
      }
      names.insert(name);
    }
  }
  return {names.begin(), names.end()};
}

std::string to_csv(const std::vector<TrialRecord> &records) {
  const auto names = metric_names(records);
  std::ostringstream out;
  for (std::size_t i = 0; i < kFixedColumns.size(); ++i) {
    out << (i ? "," : "") << kFixedColumns[i];
  }
  for (const auto &name : names) {
    out << ',' << csv_field(name);
  }
  out << '\n';
  for (const auto &rec : records) {
    out << csv_field(rec.experiment) << ',' << csv_field(rec.variant) << ','
        << csv_field(rec.config_hash) << ',' << rec.seed << ',' << rec.d_in << ','
        << rec.d_out << ',' << rec.r;
    for (const auto &name : names) {
      out << ',';
      const auto it = rec.metrics.find(name);
      if (it != rec.metrics.end()) out << format_real(it->second);
    }
    out << '\n';
  }
  return out.str();
}

std::string to_json(const std::vector<TrialRecord> &records) {
  const auto names = metric_names(records);
  nlohmann::json array = nlohmann::json::array();
  for (const auto &rec : records) {
    nlohmann::json obj = nlohmann::json::object();
    obj["experiment"] = rec.experiment;
    obj["variant"] = rec.variant;
    obj["config_hash"] = rec.config_hash;
    obj["seed"] = rec.seed;
    obj["d_in"] = rec.d_in;
    obj["d_out"] = rec.d_out;
    obj["r"] = rec.r;
    for (const auto &name : names) {
      const auto it = rec.metrics.find(name);
      obj[name] = it != rec.metrics.end() ? nlohmann::json(it->second)
                                          : nlohmann::json(nullptr);
    }
    array.push_back(std::move(obj));
  }
  return array.dump(2) + "\n";
}

// Splits one CSV document into rows of fields (RFC 4180 quoting).
std::vector<std::vector<std::string>> split_csv(const std::string &text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n') {
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else if (c != '\r') {
      field += c;
      any = true;
    }
  }
  if (quoted) {
    throw ValidationError("csv: unterminated quoted field");
  }
  if (any) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<TrialRecord> from_csv(const std::string &text) {
  const auto rows = split_csv(text);
  if (rows.empty()) {
    throw ValidationError("csv: missing header row");
  }
  const auto &header = rows.front();
  if (header.size() < kFixedColumns.size() ||
      !std::equal(kFixedColumns.begin(), kFixedColumns.end(), header.begin())) {
    throw ValidationError("csv: unexpected header");
  }
  std::vector<TrialRecord> records;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto &row = rows[i];
    if (row.size() != header.size()) {
      throw ValidationError("csv: row " + std::to_string(i) + " has " +
                            std::to_string(row.size()) + " fields, expected " +
                            std::to_string(header.size()));
    }
    TrialRecord rec;
    rec.experiment = row[0];
    rec.variant = row[1];
    rec.config_hash = row[2];
    rec.seed = std::stoull(row[3]);
    rec.d_in = std::stoll(row[4]);
    rec.d_out = std::stoll(row[5]);
    rec.r = std::stoll(row[6]);
    for (std::size_t k = kFixedColumns.size(); k < row.size(); ++k) {
      if (!row[k].empty()) rec.metrics[header[k]] = std::stod(row[k]);
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<TrialRecord> from_json(const std::string &text) {
  const auto doc = nlohmann::json::parse(text);
  if (!doc.is_array()) {
    throw ValidationError("json: report must be an array");
  }
  std::vector<TrialRecord> records;
  for (const auto &obj : doc) {
    TrialRecord rec;
    for (const auto &[key, value] : obj.items()) {
      if (key == "experiment") rec.experiment = value.get<std::string>();
      else if (key == "variant") rec.variant = value.get<std::string>();
      else if (key == "config_hash") rec.config_hash = value.get<std::string>();
      else if (key == "seed") rec.seed = value.get<std::uint64_t>();
      else if (key == "d_in") rec.d_in = value.get<std::int64_t>();
      else if (key == "d_out") rec.d_out = value.get<std::int64_t>();
      else if (key == "r") rec.r = value.get<std::int64_t>();
      else if (!value.is_null()) rec.metrics[key] = value.get<double>();
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot read report '" + path + "'");
  }
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

} // namespace

ReportFormat parse_report_format(const std::string &text) {
  if (text == "csv") return ReportFormat::csv;
  if (text == "json") return ReportFormat::json;
  throw ValidationError("unknown report format '" + text + "' (csv, json)");
}

std::string format_report(const std::vector<TrialRecord> &records,
                          ReportFormat format) {
  return format == ReportFormat::csv ? to_csv(records) : to_json(records);
}

void emit_report(const std::vector<TrialRecord> &records, const std::string &path,
                 ReportFormat format) {
  const std::string text = format_report(records, format);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open '" + path + "' for writing");
  }
  out << text;
  out.flush();
  if (!out) {
    throw IoError("failed writing '" + path + "'");
  }
}

std::vector<TrialRecord> parse_report(const std::string &text, ReportFormat format) {
  try {
    return format == ReportFormat::csv ? from_csv(text) : from_json(text);
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError(std::string("json: ") + e.what());
  } catch (const std::invalid_argument &e) {
    throw ValidationError(std::string("csv: bad number: ") + e.what());
  } catch (const std::out_of_range &e) {
    throw ValidationError(std::string("csv: number out of range: ") + e.what());
  }
}

std::vector<TrialRecord> read_report(const std::string &path, ReportFormat format) {
  return parse_report(read_file(path), format);
}

} // namespace asymlora::harness
