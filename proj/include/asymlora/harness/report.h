#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace asymlora::harness {

/// One row of an experiment report.
struct TrialRecord {
  std::string experiment;
  std::string variant;  // scenario / arm label, may be empty
  std::string config_hash;
  std::uint64_t seed = 0;
  std::int64_t d_in = 0;
  std::int64_t d_out = 0;
  std::int64_t r = 0;
  std::map<std::string, double> metrics;

  bool operator==(const TrialRecord &) const = default;
};

enum class ReportFormat { csv, json };

ReportFormat parse_report_format(const std::string &text);

/// CSV: header `experiment,variant,config_hash,seed,d_in,d_out,r` followed by
/// the sorted union of metric names; reals use 17 significant digits, a
/// metric missing from a record is an empty cell; RFC 4180 quoting, LF line
/// endings. JSON: an array of flat objects with sorted keys, missing metrics
/// as null. Throws ValidationError on non-finite metrics.
std::string format_report(const std::vector<TrialRecord> &records,
                          ReportFormat format);

/// Writes format_report() to `path`; IoError names the path on failure.
void emit_report(const std::vector<TrialRecord> &records, const std::string &path,
                 ReportFormat format);

std::vector<TrialRecord> parse_report(const std::string &text, ReportFormat format);
std::vector<TrialRecord> read_report(const std::string &path, ReportFormat format);

} // namespace asymlora::harness
