#pragma once

#include "json.hpp"

#include <string>

namespace delaysof {

inline constexpr const char* kToolVersion = "0.1.0";

enum class ReportFormat { Json, Text };

ReportFormat parse_format(const std::string& text);  // throws ContractError

/// Exit code contract of the command line tool.
enum ExitCode : int { kExitCertified = 0, kExitUncertified = 1, kExitInconclusive = 2, kExitUsage = 3 };

struct RunReport {
  nlohmann::ordered_json body;  // everything that is exported
  int exit_code = kExitInconclusive;

  const std::string& status() const;
};

/// JSON: stable key order, doubles printed round-trip exact (17 digits),
/// non-finite values as null. Text: a readable summary built from the JSON.
std::string export_report(const RunReport& report, ReportFormat format);
/// Throws EnvironmentError naming the path on I/O failure.
void write_text_file(const std::string& path, const std::string& contents);

}  // namespace delaysof
