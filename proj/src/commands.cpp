#include "dermeval/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "json.hpp"

#include "dermeval/error.hpp"
#include "dermeval/relevance.hpp"
#include "dermeval/report.hpp"
#include "dermeval/saliency.hpp"
#include "dermeval/stats.hpp"
#include "dermeval/tensor_io.hpp"
#include "dermeval/triage.hpp"

namespace fs = std::filesystem;

namespace dermeval {

namespace {

struct CaseError {
  std::string case_id;
  std::string code;
  std::string message;
};

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::IoFailure, "short write to " + path.string());
}

std::string format_probability(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", p);
  return buf;
}

void configure_parallelism(int jobs) {
#ifdef _OPENMP
  // case-level parallelism only; kernels inside a case run on one thread
  omp_set_max_active_levels(1);
  (void)jobs;
#else
  (void)jobs;
#endif
}

CaseError to_case_error(const std::string& case_id, const Error& e) {
  return CaseError{case_id, to_string(e.code()), e.what()};
}

std::string errors_csv(const std::vector<CaseError>& errors) {
  std::string out = csv_row({"case_id", "error", "message"});
  for (const auto& e : errors) out += csv_row({e.case_id, e.code, e.message});
  return out;
}

std::optional<Date> case_decision_date(const CaseManifest& c, const RunConfig& config) {
  try {
    if (!c.session.empty()) return parse_date(c.session);
  } catch (const Error&) {
    // session tag is not a date; fall through
  }
  if (!config.decision_date.empty()) return parse_date(config.decision_date);
  return std::nullopt;
}

Date today_utc() {
  const auto now = std::chrono::floor<std::chrono::days>(std::chrono::system_clock::now());
  const std::chrono::year_month_day ymd(now);
  return Date{int(ymd.year()), unsigned(ymd.month()), unsigned(ymd.day())};
}

}  // namespace

void validate_config(const RunConfig& config) {
  if (config.manifest_path.empty())
    throw Error(ErrorCode::BadConfig, "manifest path is required");
  if (config.out_dir.empty()) throw Error(ErrorCode::BadConfig, "output directory is required");
  if (!(config.tau >= 0.0 && config.tau <= 1.0))
    throw Error(ErrorCode::BadConfig, "tau outside [0,1]");
  if (!(config.green_threshold >= 0.0 && config.green_threshold < config.red_threshold &&
        config.red_threshold <= 1.0))
    throw Error(ErrorCode::BadConfig, "thresholds must satisfy 0 <= green < red <= 1");
  if (!(config.confidence > 0.0 && config.confidence < 1.0))
    throw Error(ErrorCode::BadConfig, "confidence outside (0,1)");
  if (config.jobs < 1) throw Error(ErrorCode::BadConfig, "jobs must be >= 1");
}

// ---------------------------------------------------------------------------
// saliency
// ---------------------------------------------------------------------------

CommandResult cmd_saliency(const RunConfig& config) {
  validate_config(config);
  const auto cases = load_manifest(config.manifest_path);
  fs::create_directories(fs::path(config.out_dir) / "maps");
  configure_parallelism(config.jobs);

  struct Row {
    bool ok = false;
    std::string index_line;
    std::vector<std::string> warnings;
    CaseError error;
  };
  std::vector<Row> rows(cases.size());

  PipelineOptions opt;
  opt.rollout_target = config.rollout_target;

#pragma omp parallel for schedule(dynamic) num_threads(config.jobs)
  for (std::int64_t i = 0; i < std::int64_t(cases.size()); ++i) {
    const CaseManifest& c = cases[i];
    Row& row = rows[i];
    try {
      PipelineResult result = saliency_pipeline(c, opt);
      const std::string map_rel = "maps/" + c.case_id + ".tnsr";
      Tensor stored({result.map.height, result.map.width}, result.map.values);
      write_tensor(stored, (fs::path(config.out_dir) / map_rel).string());
      if (config.export_pgm)
        write_pgm(result.map,
                  (fs::path(config.out_dir) / "maps" / (c.case_id + ".pgm")).string());
      row.index_line = csv_row({c.case_id, c.architecture, to_string(result.map.method),
                                std::to_string(result.map.height),
                                std::to_string(result.map.width), map_rel});
      for (const auto& w : result.warnings) row.warnings.push_back(w);
      row.ok = true;
    } catch (const Error& e) {
      row.error = to_case_error(c.case_id, e);
    } catch (const std::exception& e) {
      row.error = CaseError{c.case_id, "Unexpected", e.what()};
    }
  }

  std::string index = csv_row({"case_id", "architecture", "method", "height", "width", "map"});
  std::string warnings = csv_row({"case_id", "warning"});
  std::vector<CaseError> errors;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].ok) {
      index += rows[i].index_line;
      for (const auto& w : rows[i].warnings) warnings += csv_row({cases[i].case_id, w});
    } else {
      errors.push_back(rows[i].error);
    }
  }
  write_file(fs::path(config.out_dir) / "index.csv", index);
  write_file(fs::path(config.out_dir) / "warnings.csv", warnings);
  write_file(fs::path(config.out_dir) / "errors.csv", errors_csv(errors));
  return CommandResult{int(cases.size()), int(errors.size())};
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

namespace {

SaliencyMap load_stored_map(const fs::path& maps_dir, const CaseManifest& c) {
  const fs::path path = maps_dir / (c.case_id + ".tnsr");
  if (!fs::exists(path))
    throw Error(ErrorCode::MissingInput, c.case_id + ": no stored map " + path.string());
  Tensor t = read_tensor(path.string());
  if (t.rank() != 2)
    throw Error(ErrorCode::ShapeMismatch, c.case_id + ": stored map must be rank 2");
  SaliencyMap map;
  map.height = t.dims[0];
  map.width = t.dims[1];
  map.values = std::move(t.data);
  map.architecture = c.architecture;
  return map;
}

}  // namespace

CommandResult cmd_evaluate(const RunConfig& config) {
  validate_config(config);
  const auto cases = load_manifest(config.manifest_path);
  fs::create_directories(config.out_dir);
  configure_parallelism(config.jobs);

  struct Row {
    bool ok = false;
    RelevanceResult relevance;
    CaseError error;
  };
  std::vector<Row> rows(cases.size());

  PipelineOptions opt;
  opt.rollout_target = config.rollout_target;

#pragma omp parallel for schedule(dynamic) num_threads(config.jobs)
  for (std::int64_t i = 0; i < std::int64_t(cases.size()); ++i) {
    const CaseManifest& c = cases[i];
    Row& row = rows[i];
    try {
      if (!c.annotation_path)
        throw Error(ErrorCode::MissingInput, c.case_id + ": no annotation for relevance");
      SaliencyMap map = config.maps_dir.empty()
                            ? saliency_pipeline(c, opt).map
                            : load_stored_map(config.maps_dir, c);
      AnnotationSet ann = load_annotations(*c.annotation_path);
      if (map.height != ann.image_height || map.width != ann.image_width) {
        Raster raster(map.height, map.width, std::move(map.values));
        Raster scaled = upsample_bilinear(raster, ann.image_height, ann.image_width);
        map.height = scaled.height;
        map.width = scaled.width;
        map.values = std::move(scaled.values);
      }
      BinaryMask model = binarize(map, config.tau);
      BinaryMask expert = rasterize_annotations(ann);
      row.relevance = iou(model, expert);
      row.ok = true;
    } catch (const Error& e) {
      row.error = to_case_error(c.case_id, e);
    } catch (const std::exception& e) {
      row.error = CaseError{c.case_id, "Unexpected", e.what()};
    }
  }

  std::string relevance_csv = csv_row({"case_id", "architecture", "class", "iou", "band"});
  std::vector<IoUObservation> observations;
  std::vector<CaseError> errors;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].ok) {
      errors.push_back(rows[i].error);
      continue;
    }
    const CaseManifest& c = cases[i];
    const RelevanceResult& r = rows[i].relevance;
    const std::string cls = c.nosology_reference ? to_string(*c.nosology_reference) : "";
    relevance_csv += csv_row({c.case_id, c.architecture, cls,
                              r.iou ? fixed2(*r.iou) : std::string(), to_string(r.band)});
    if (r.iou) observations.push_back({c.architecture, cls, *r.iou});
  }

  const auto summaries = aggregate_iou(observations);
  write_file(fs::path(config.out_dir) / "relevance.csv", relevance_csv);
  write_file(fs::path(config.out_dir) / "summary.csv", render_summary_csv(summaries));
  write_file(fs::path(config.out_dir) / "summary.md", render_summary_markdown(summaries));
  write_file(fs::path(config.out_dir) / "errors.csv", errors_csv(errors));
  return CommandResult{int(cases.size()), int(errors.size())};
}

// ---------------------------------------------------------------------------
// triage
// ---------------------------------------------------------------------------

CommandResult cmd_triage(const RunConfig& config) {
  validate_config(config);
  const auto cases = load_manifest(config.manifest_path);
  fs::create_directories(config.out_dir);

  const fs::path registry_path = config.registry_path.empty()
                                     ? fs::path(config.out_dir) / "registry.ndjson"
                                     : fs::path(config.registry_path);

  std::string decisions = csv_row(
      {"case_id", "probability", "zone", "stage2_class", "urgency", "audit", "actions"});
  std::vector<double> probabilities;
  std::vector<CaseError> errors;
  std::vector<std::string> registry_lines;
  Registry registry;

  for (const auto& c : cases) {
    try {
      const Zone zone = route(c.probability, config.green_threshold, config.red_threshold);
      const RoutingDecision decision = zone_action(zone, c.stage2_class);
      probabilities.push_back(c.probability);

      std::string actions;
      for (std::size_t i = 0; i < decision.actions.size(); ++i) {
        if (i) actions += '|';
        actions += decision.actions[i];
      }
      decisions += csv_row({c.case_id, format_probability(c.probability), to_string(zone),
                            c.stage2_class ? to_string(*c.stage2_class) : "",
                            decision.urgency ? to_string(*decision.urgency) : "",
                            decision.audit.value_or(""), actions});

      if (zone != Zone::Green) {
        std::optional<Date> date = case_decision_date(c, config);
        const RegistryEntry entry = make_registry_entry(
            c.case_id, zone, date ? *date : today_utc(), true, decision.urgency);
        registry.register_case(entry);
        registry_lines.push_back(Registry::register_event_line(entry));
      }
    } catch (const Error& e) {
      errors.push_back(to_case_error(c.case_id, e));
    }
  }

  const ZoneDistribution dist =
      zone_distribution(probabilities, config.green_threshold, config.red_threshold);

  write_file(fs::path(config.out_dir) / "decisions.csv", decisions);
  write_file(fs::path(config.out_dir) / "zones.csv", render_zones_csv(dist));
  write_file(fs::path(config.out_dir) / "zones.md", render_zones_markdown(dist));
  write_file(fs::path(config.out_dir) / "errors.csv", errors_csv(errors));

  {
    // append-only event log; single writer by construction
    std::ofstream log(registry_path, std::ios::app);
    if (!log) throw Error(ErrorCode::IoFailure, "cannot open " + registry_path.string());
    for (const auto& line : registry_lines) log << line << "\n";
  }

  if (!config.followup_due_date.empty()) {
    const Date due = parse_date(config.followup_due_date);
    std::ifstream log(registry_path);
    Registry replayed = Registry::replay(log);
    std::string followups = csv_row({"case_id", "zone", "decision_date", "control_date",
                                     "referral_issued", "registrations"});
    for (const auto& entry : replayed.followup_due(due)) {
      followups += csv_row({entry.case_id, to_string(entry.zone),
                            format_date(entry.decision_date), format_date(entry.control_date),
                            entry.referral_issued ? "yes" : "no",
                            std::to_string(entry.registration_count)});
    }
    write_file(fs::path(config.out_dir) / "followups.csv", followups);
  }
  return CommandResult{int(cases.size()), int(errors.size())};
}

// ---------------------------------------------------------------------------
// metrics
// ---------------------------------------------------------------------------

namespace {

PairedAgreement load_paired(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
  if (!doc.is_array())
    throw Error(ErrorCode::ParseError, path + ": paired assessments must be an array");
  PairedAgreement pa;
  try {
    for (const auto& row : doc) {
      const bool baseline = row.at("baseline_correct").get<bool>();
      const bool assisted = row.at("assisted_correct").get<bool>();
      if (assisted && !baseline) ++pa.b;
      else if (baseline && !assisted) ++pa.c;
      else ++pa.n_concordant;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
  return pa;
}

}  // namespace

CommandResult cmd_metrics(const RunConfig& config) {
  validate_config(config);
  const auto cases = load_manifest(config.manifest_path);
  fs::create_directories(config.out_dir);

  std::vector<LabelPair> pairs;
  std::vector<CaseError> errors;
  std::int64_t mel_total = 0, mel_detected = 0;
  std::int64_t bcc_total = 0, bcc_detected = 0;

  for (const auto& c : cases) {
    if (!c.reference_label) {
      errors.push_back(
          CaseError{c.case_id, to_string(ErrorCode::MissingReferenceLabels),
                    "case has no reference label"});
      continue;
    }
    const bool predicted = c.probability >= config.red_threshold;
    const bool reference = *c.reference_label == ReferenceLabel::Malignant;
    pairs.push_back({predicted, reference});
    if (reference && c.nosology_reference) {
      if (*c.nosology_reference == Nosology::MEL) {
        ++mel_total;
        mel_detected += predicted ? 1 : 0;
      } else if (*c.nosology_reference == Nosology::BCC) {
        ++bcc_total;
        bcc_detected += predicted ? 1 : 0;
      }
    }
  }

  const ConfusionMatrix cm = confusion(pairs);
  const DerivedMetrics derived = metrics(cm);

  std::vector<SensitivityCI> cis;
  if (mel_total > 0)
    cis.push_back({"MEL", clopper_pearson(mel_detected, mel_total, config.confidence)});
  if (bcc_total > 0)
    cis.push_back({"BCC", clopper_pearson(bcc_detected, bcc_total, config.confidence)});
  if (cm.tp + cm.fn > 0)
    cis.push_back({"malignant",
                   clopper_pearson(std::int64_t(cm.tp), std::int64_t(cm.tp + cm.fn),
                                   config.confidence)});

  write_file(fs::path(config.out_dir) / "confusion.csv", render_confusion_csv(cm));
  write_file(fs::path(config.out_dir) / "confusion.md", render_confusion_markdown(cm));
  write_file(fs::path(config.out_dir) / "metrics.csv", render_metrics_csv(derived, cm));
  write_file(fs::path(config.out_dir) / "cis.csv", render_cis_csv(cis));

  std::string md = "## Confusion matrix (n=" + std::to_string(cm.total()) + ")\n\n" +
                   render_confusion_markdown(cm) + "\n## Metrics\n\n" +
                   render_metrics_markdown(derived, cm, cis);

  if (!config.paired_path.empty()) {
    const PairedAgreement pa = load_paired(config.paired_path);
    std::string mcnemar = csv_row({"b", "c", "n_concordant", "exact_p", "chisq_statistic",
                                   "chisq_p"});
    char exact_buf[32], stat_buf[32], chi_buf[32];
    const double exact_p = mcnemar_exact(pa);
    const ChiSquareResult chi = mcnemar_chisq(pa);
    std::snprintf(exact_buf, sizeof exact_buf, "%.6g", exact_p);
    std::snprintf(stat_buf, sizeof stat_buf, "%.6g", chi.statistic);
    std::snprintf(chi_buf, sizeof chi_buf, "%.6g", chi.p_value);
    mcnemar += csv_row({std::to_string(pa.b), std::to_string(pa.c),
                        std::to_string(pa.n_concordant), exact_buf, stat_buf, chi_buf});
    write_file(fs::path(config.out_dir) / "mcnemar.csv", mcnemar);
    md += "\n## Paired agreement (McNemar)\n\n| b | c | concordant | exact p | chi-square p "
          "|\n|---|---|---|---|---|\n| " +
          std::to_string(pa.b) + " | " + std::to_string(pa.c) + " | " +
          std::to_string(pa.n_concordant) + " | " + exact_buf + " | " + chi_buf + " |\n";
  }

  write_file(fs::path(config.out_dir) / "metrics.md", md);
  write_file(fs::path(config.out_dir) / "errors.csv", errors_csv(errors));
  return CommandResult{int(cases.size()), int(errors.size())};
}

}  // namespace dermeval
