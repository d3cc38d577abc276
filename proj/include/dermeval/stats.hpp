#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace dermeval {

struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
};

struct LabelPair {
  bool predicted_malignant = false;
  bool reference_malignant = false;
};

ConfusionMatrix confusion(const std::vector<LabelPair>& cases);

/// Exact metric ratio. den == 0 encodes "absent" (zero denominator).
struct Rate {
  std::int64_t num = 0;
  std::int64_t den = 0;

  bool present() const { return den > 0; }
  double value() const { return double(num) / double(den); }
  /// Percent in tenths, rounded half-up, computed in integer arithmetic.
  std::int64_t percent_tenths() const { return (2000 * num + den) / (2 * den); }
};

struct DerivedMetrics {
  Rate sensitivity;  // tp / (tp + fn)
  Rate specificity;  // tn / (tn + fp)
  Rate ppv;          // tp / (tp + fp)
  Rate npv;          // tn / (tn + fn)
  Rate accuracy;     // (tp + tn) / total
};

DerivedMetrics metrics(const ConfusionMatrix& cm);

struct BinomialCI {
  std::int64_t successes = 0;
  std::int64_t trials = 0;
  double confidence = 0.95;
  double lower = 0.0;
  double upper = 1.0;
};

/// Exact (Clopper-Pearson) interval, solved by bisection on the binomial
/// tails to 1e-9 absolute.
BinomialCI clopper_pearson(std::int64_t x, std::int64_t n, double confidence = 0.95);

struct PairedAgreement {
  std::uint64_t b = 0;             // correct only with the system
  std::uint64_t c = 0;             // correct only without the system
  std::uint64_t n_concordant = 0;
};

/// Exact two-sided binomial test on the discordant pairs:
/// p = 2 * P(Bin(b+c, 0.5) >= max(b, c)), capped at 1.
double mcnemar_exact(const PairedAgreement& pa);

struct ChiSquareResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Continuity-corrected chi-square variant, reported alongside the exact
/// test for comparison.
ChiSquareResult mcnemar_chisq(const PairedAgreement& pa);

/// sens*prev / (sens*prev + (1-spec)*(1-prev))
double ppv_at_prevalence(double sensitivity, double specificity, double prevalence);

}  // namespace dermeval
