#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dermeval/relevance.hpp"
#include "dermeval/stats.hpp"
#include "dermeval/triage.hpp"

namespace dermeval {

// Report number rendering: percentages at one decimal (half-up), IoU values
// at two decimals (half-up). Fixed so fixture diffs stay byte-stable.

/// "68.8" from 688 tenths.
std::string percent_from_tenths(std::int64_t tenths);
/// Half-up percent of a fraction in [0,1]: 0.6875 -> "68.8".
std::string percent1(double fraction);
/// Half-up two decimals: 0.685 (exact) -> "0.69".
std::string fixed2(double v);

std::string csv_escape(const std::string& field);
std::string csv_row(const std::vector<std::string>& fields);

std::string render_confusion_csv(const ConfusionMatrix& cm);
std::string render_confusion_markdown(const ConfusionMatrix& cm);

struct SensitivityCI {
  std::string group;
  BinomialCI ci;
};

std::string render_metrics_csv(const DerivedMetrics& m, const ConfusionMatrix& cm);
std::string render_cis_csv(const std::vector<SensitivityCI>& cis);
std::string render_metrics_markdown(const DerivedMetrics& m, const ConfusionMatrix& cm,
                                    const std::vector<SensitivityCI>& cis);

std::string render_summary_csv(const std::vector<IoUSummary>& summaries);
std::string render_summary_markdown(const std::vector<IoUSummary>& summaries);

std::string render_zones_csv(const ZoneDistribution& dist);
std::string render_zones_markdown(const ZoneDistribution& dist);

}  // namespace dermeval
