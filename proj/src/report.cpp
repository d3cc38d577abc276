#include "dermeval/report.hpp"

#include <cmath>
#include <sstream>

namespace dermeval {

std::string percent_from_tenths(std::int64_t tenths) {
  std::ostringstream out;
  if (tenths < 0) {
    out << '-';
    tenths = -tenths;
  }
  out << tenths / 10 << '.' << tenths % 10;
  return out.str();
}

std::string percent1(double fraction) {
  return percent_from_tenths(std::int64_t(std::floor(fraction * 1000.0 + 0.5)));
}

std::string fixed2(double v) {
  std::int64_t hundredths = std::int64_t(std::floor(v * 100.0 + 0.5));
  std::ostringstream out;
  if (hundredths < 0) {
    out << '-';
    hundredths = -hundredths;
  }
  out << hundredths / 100 << '.' << (hundredths / 10) % 10 << hundredths % 10;
  return out.str();
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string quoted = "\"";
  for (char c : field) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

std::string csv_row(const std::vector<std::string>& fields) {
  std::string row;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) row += ',';
    row += csv_escape(fields[i]);
  }
  row += '\n';
  return row;
}

std::string render_confusion_csv(const ConfusionMatrix& cm) {
  std::string out;
  out += csv_row({"", "expert_malignant", "expert_benign", "total"});
  out += csv_row({"system_malignant", std::to_string(cm.tp), std::to_string(cm.fp),
                  std::to_string(cm.tp + cm.fp)});
  out += csv_row({"system_benign", std::to_string(cm.fn), std::to_string(cm.tn),
                  std::to_string(cm.fn + cm.tn)});
  out += csv_row({"total", std::to_string(cm.tp + cm.fn), std::to_string(cm.fp + cm.tn),
                  std::to_string(cm.total())});
  return out;
}

std::string render_confusion_markdown(const ConfusionMatrix& cm) {
  std::ostringstream out;
  out << "| | Expert: malignant | Expert: benign | Total |\n";
  out << "|---|---|---|---|\n";
  out << "| **System: malignant** | TP = " << cm.tp << " | FP = " << cm.fp << " | "
      << cm.tp + cm.fp << " |\n";
  out << "| **System: benign** | FN = " << cm.fn << " | TN = " << cm.tn << " | "
      << cm.fn + cm.tn << " |\n";
  out << "| **Total** | " << cm.tp + cm.fn << " | " << cm.fp + cm.tn << " | "
      << cm.total() << " |\n";
  return out.str();
}

namespace {

std::string rate_percent(const Rate& r) {
  return r.present() ? percent_from_tenths(r.percent_tenths()) : std::string();
}

}  // namespace

std::string render_metrics_csv(const DerivedMetrics& m, const ConfusionMatrix& cm) {
  std::string out;
  out += csv_row({"metric", "value_percent"});
  out += csv_row({"sensitivity", rate_percent(m.sensitivity)});
  out += csv_row({"specificity", rate_percent(m.specificity)});
  out += csv_row({"ppv", rate_percent(m.ppv)});
  out += csv_row({"npv", rate_percent(m.npv)});
  out += csv_row({"accuracy", rate_percent(m.accuracy)});
  const Rate prevalence{std::int64_t(cm.tp + cm.fn), std::int64_t(cm.total())};
  out += csv_row({"prevalence", prevalence.present() ? rate_percent(prevalence) : ""});
  return out;
}

std::string render_cis_csv(const std::vector<SensitivityCI>& cis) {
  std::string out;
  out += csv_row({"group", "successes", "trials", "sensitivity_percent",
                  "ci_lower_percent", "ci_upper_percent"});
  for (const auto& entry : cis) {
    const Rate sens{entry.ci.successes, entry.ci.trials};
    out += csv_row({entry.group, std::to_string(entry.ci.successes),
                    std::to_string(entry.ci.trials), rate_percent(sens),
                    percent1(entry.ci.lower), percent1(entry.ci.upper)});
  }
  return out;
}

std::string render_metrics_markdown(const DerivedMetrics& m, const ConfusionMatrix& cm,
                                    const std::vector<SensitivityCI>& cis) {
  std::ostringstream out;
  out << "| Metric | Value |\n|---|---|\n";
  auto row = [&](const char* name, const Rate& r) {
    out << "| " << name << " | ";
    if (r.present()) out << percent_from_tenths(r.percent_tenths()) << " %";
    else out << "n/a";
    out << " |\n";
  };
  row("Sensitivity", m.sensitivity);
  row("Specificity", m.specificity);
  row("PPV", m.ppv);
  row("NPV", m.npv);
  row("Accuracy", m.accuracy);
  row("Prevalence", Rate{std::int64_t(cm.tp + cm.fn), std::int64_t(cm.total())});
  if (!cis.empty()) {
    out << "\n| Group | Detected | Sensitivity | Exact CI |\n|---|---|---|---|\n";
    for (const auto& entry : cis) {
      const Rate sens{entry.ci.successes, entry.ci.trials};
      out << "| " << entry.group << " | " << entry.ci.successes << "/" << entry.ci.trials
          << " | " << rate_percent(sens) << " % | " << percent1(entry.ci.lower) << " - "
          << percent1(entry.ci.upper) << " % |\n";
    }
  }
  return out.str();
}

std::string render_summary_csv(const std::vector<IoUSummary>& summaries) {
  std::string out;
  out += csv_row({"architecture", "class", "n", "mean_iou", "sd_iou"});
  for (const auto& s : summaries) {
    out += csv_row({s.architecture, s.group, std::to_string(s.n), fixed2(s.mean),
                    s.sd ? fixed2(*s.sd) : std::string()});
  }
  return out;
}

std::string render_summary_markdown(const std::vector<IoUSummary>& summaries) {
  // column set in clinical report order, as present in the data
  std::vector<std::string> columns;
  for (const auto& s : summaries) {
    if (s.group == "all") continue;
    bool known = false;
    for (const auto& c : columns) known = known || c == s.group;
    if (!known) columns.push_back(s.group);
  }

  std::ostringstream out;
  out << "| Architecture |";
  for (const auto& c : columns) out << " " << c << " |";
  out << " Mean |\n|---|";
  for (std::size_t i = 0; i < columns.size() + 1; ++i) out << "---|";
  out << "\n";

  std::string current;
  auto cell = [](const IoUSummary& s) {
    std::string text = fixed2(s.mean);
    if (s.sd) text += " ± " + fixed2(*s.sd);
    return text;
  };
  // summaries arrive grouped by architecture with the "all" row last
  for (std::size_t i = 0; i < summaries.size();) {
    const std::string arch = summaries[i].architecture;
    out << "| " << arch << " |";
    std::size_t j = i;
    for (const auto& c : columns) {
      bool found = false;
      for (j = i; j < summaries.size() && summaries[j].architecture == arch; ++j) {
        if (summaries[j].group == c) {
          out << " " << cell(summaries[j]) << " |";
          found = true;
          break;
        }
      }
      if (!found) out << " — |";
    }
    for (j = i; j < summaries.size() && summaries[j].architecture == arch; ++j) {
      if (summaries[j].group == "all") out << " " << cell(summaries[j]) << " |";
    }
    out << "\n";
    i = j;
  }
  return out.str();
}

std::string render_zones_csv(const ZoneDistribution& dist) {
  std::string out;
  out += csv_row({"zone", "count", "percent"});
  const char* names[3] = {"green", "yellow", "red"};
  for (std::size_t i = 0; i < 3; ++i) {
    out += csv_row({names[i], std::to_string(dist.counts[i]),
                    dist.percent_tenths[i] ? percent_from_tenths(*dist.percent_tenths[i])
                                           : std::string()});
  }
  return out;
}

std::string render_zones_markdown(const ZoneDistribution& dist) {
  std::ostringstream out;
  out << "| Zone | Patients | Share |\n|---|---|---|\n";
  const char* names[3] = {"Green", "Yellow", "Red"};
  for (std::size_t i = 0; i < 3; ++i) {
    out << "| " << names[i] << " | " << dist.counts[i] << " | ";
    if (dist.percent_tenths[i]) out << percent_from_tenths(*dist.percent_tenths[i]) << " %";
    else out << "n/a";
    out << " |\n";
  }
  return out.str();
}

}  // namespace dermeval
