#pragma once

#include <optional>
#include <string>

namespace dermeval {

struct RunConfig {
  std::string manifest_path;
  std::string out_dir;
  double tau = 0.5;
  double green_threshold = 0.15;
  double red_threshold = 0.50;
  double confidence = 0.95;
  int jobs = 1;

  // saliency
  bool export_pgm = false;
  unsigned rollout_target = 0;

  // evaluate: consume precomputed maps (a cmd_saliency output directory)
  // instead of recomputing from tensors
  std::string maps_dir;

  // triage
  std::string registry_path;           // default: <out>/registry.ndjson
  std::string decision_date;           // fallback when the session tag is not a date
  std::string followup_due_date;       // when set, exports followups.csv

  // metrics
  std::string paired_path;             // optional paired-assessment file
};

void validate_config(const RunConfig& config);

struct CommandResult {
  int cases = 0;
  int failures = 0;

  int exit_code() const { return failures == 0 ? 0 : 1; }
};

CommandResult cmd_saliency(const RunConfig& config);
CommandResult cmd_evaluate(const RunConfig& config);
CommandResult cmd_triage(const RunConfig& config);
CommandResult cmd_metrics(const RunConfig& config);

}  // namespace dermeval
