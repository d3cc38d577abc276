#include <cstdio>
#include <string>

#include "CLI11.hpp"

#include "dermeval/commands.hpp"
#include "dermeval/error.hpp"

namespace {

void add_common_flags(CLI::App* cmd, dermeval::RunConfig& config) {
  cmd->add_option("--manifest", config.manifest_path, "case manifest (JSON array)")
      ->required();
  cmd->add_option("--out", config.out_dir, "output directory")->required();
  cmd->add_option("--tau", config.tau, "binarization threshold on normalized maps");
  cmd->add_option("--green-threshold", config.green_threshold,
                  "upper bound (exclusive) of the green zone");
  cmd->add_option("--red-threshold", config.red_threshold,
                  "lower bound (inclusive) of the red zone");
  cmd->add_option("--confidence", config.confidence, "confidence level for exact CIs");
  cmd->add_option("--jobs", config.jobs, "case-level parallelism degree");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"saliency relevance scoring and risk-zone triage for dermoscopy pipelines"};
  app.require_subcommand(1);

  dermeval::RunConfig config;

  CLI::App* saliency = app.add_subcommand(
      "saliency", "compute per-case saliency maps (rollout / Grad-CAM)");
  add_common_flags(saliency, config);
  saliency->add_flag("--pgm", config.export_pgm, "also export 8-bit P5 graymaps");
  saliency->add_option("--rollout-target", config.rollout_target,
                       "target token row for attention rollout");

  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "score saliency maps against expert annotations (IoU, bands)");
  add_common_flags(evaluate, config);
  evaluate->add_option("--maps", config.maps_dir,
                       "consume maps from a saliency output directory instead of recomputing");
  evaluate->add_option("--rollout-target", config.rollout_target,
                       "target token row for attention rollout");

  CLI::App* triage = app.add_subcommand(
      "triage", "route cases into green/yellow/red zones and update the referral registry");
  add_common_flags(triage, config);
  triage->add_option("--registry", config.registry_path,
                     "referral registry event log (default: <out>/registry.ndjson)");
  triage->add_option("--date", config.decision_date,
                     "decision date (YYYY-MM-DD) for cases whose session tag is not a date");
  triage->add_option("--followup-due", config.followup_due_date,
                     "export follow-ups due on this date (YYYY-MM-DD) to followups.csv");

  CLI::App* metrics = app.add_subcommand(
      "metrics", "confusion matrix, derived metrics and exact confidence intervals");
  add_common_flags(metrics, config);
  metrics->add_option("--paired", config.paired_path,
                      "paired-assessment file for the McNemar test");

  CLI11_PARSE(app, argc, argv);

  try {
    dermeval::CommandResult result;
    if (saliency->parsed()) result = dermeval::cmd_saliency(config);
    else if (evaluate->parsed()) result = dermeval::cmd_evaluate(config);
    else if (triage->parsed()) result = dermeval::cmd_triage(config);
    else result = dermeval::cmd_metrics(config);

    if (result.failures > 0)
      std::fprintf(stderr, "%d of %d case(s) failed; see errors.csv\n", result.failures,
                   result.cases);
    return result.exit_code();
  } catch (const dermeval::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
