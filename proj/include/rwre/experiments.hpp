#pragma once

// Named experiments driven by a Config; each writes report.json plus CSV
// data into an output directory and returns a PASS / FAIL / DONE status.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rwre/config.hpp"

namespace rwre {

extern const char* const kToolVersion;

struct KeySpec {
  std::string key;
  std::string type;
  std::string fallback;  // empty: required or derived, see help
  std::string help;
};

struct ExperimentInfo {
  std::string name;
  std::string summary;
  std::string theory;
  std::vector<KeySpec> keys;  // experiment-specific; the common keys are shared
};

const std::vector<ExperimentInfo>& experiment_catalog();
const std::vector<KeySpec>& common_keys();

/// Schema and background for one experiment; UnknownExperiment (listing the
/// valid names) otherwise.
std::string describe_experiment(const std::string& name);

struct RunOptions {
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed_override;  // RWRE_SEED
};

struct RunResult {
  enum class Status { Pass, Fail, Done };

  Status status = Status::Done;
  std::string summary;
  nlohmann::json report;
  std::filesystem::path out_dir;

  int exit_code() const { return status == Status::Fail ? 2 : 0; }
};

const char* to_string(RunResult::Status status);

RunResult run_experiment(const Config& config, const RunOptions& options);

}  // namespace rwre
