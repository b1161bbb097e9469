#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace heavyclip {

enum class CriterionStatus { Pass, Fail, Skipped };

std::string to_string(CriterionStatus status);

struct CriterionResult {
  int id = 0;
  std::string title;
  CriterionStatus status = CriterionStatus::Fail;
  nlohmann::json measured = nlohmann::json::object();
  std::string detail;
  double seconds = 0.0;
};

enum class VerifyLevel { Fast, Full };

struct VerifyOptions {
  VerifyLevel level = VerifyLevel::Full;
  /// Directory holding LIBSVM files (heart, ...); empty skips data criteria.
  std::string data_dir;
  /// Restrict to these criterion ids; empty runs the level's set.
  std::vector<int> only;
};

/// Ids run at a level: fast covers the exact and deterministic checks.
std::vector<int> criteria_for(VerifyLevel level);

/// Runs one criterion (1..11); exceptions become failures.
CriterionResult run_criterion(int id, const VerifyOptions& options);

std::vector<CriterionResult> verify_suite(const VerifyOptions& options);

nlohmann::json to_json(const CriterionResult& r);

/// "PASS criterion 3: ..." style line.
std::string summary_line(const CriterionResult& r);

/// Locates a dataset file by stem inside `dir` ("heart", "heart_scale", ...).
std::string find_dataset(const std::string& dir, const std::string& name);

}  // namespace heavyclip
