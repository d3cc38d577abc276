#include "dermeval/stats.hpp"

#include <cmath>
#include <cstdint>

#include "dermeval/error.hpp"

namespace dermeval {

ConfusionMatrix confusion(const std::vector<LabelPair>& cases) {
  ConfusionMatrix cm;
  for (const auto& c : cases) {
    if (c.predicted_malignant && c.reference_malignant) ++cm.tp;
    else if (c.predicted_malignant && !c.reference_malignant) ++cm.fp;
    else if (!c.predicted_malignant && c.reference_malignant) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

DerivedMetrics metrics(const ConfusionMatrix& cm) {
  auto rate = [](std::uint64_t num, std::uint64_t den) {
    return Rate{std::int64_t(num), std::int64_t(den)};
  };
  DerivedMetrics m;
  m.sensitivity = rate(cm.tp, cm.tp + cm.fn);
  m.specificity = rate(cm.tn, cm.tn + cm.fp);
  m.ppv = rate(cm.tp, cm.tp + cm.fp);
  m.npv = rate(cm.tn, cm.tn + cm.fn);
  m.accuracy = rate(cm.tp + cm.tn, cm.total());
  return m;
}

namespace {

double log_choose(std::int64_t n, std::int64_t k) {
  return std::lgamma(double(n + 1)) - std::lgamma(double(k + 1)) -
         std::lgamma(double(n - k + 1));
}

// P(Bin(n, p) >= x)
double binomial_tail_ge(std::int64_t n, std::int64_t x, double p) {
  if (x <= 0) return 1.0;
  if (x > n) return 0.0;
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  double sum = 0.0;
  for (std::int64_t k = x; k <= n; ++k)
    sum += std::exp(log_choose(n, k) + double(k) * lp + double(n - k) * lq);
  return sum;
}

// P(Bin(n, p) <= x)
double binomial_tail_le(std::int64_t n, std::int64_t x, double p) {
  if (x >= n) return 1.0;
  if (x < 0) return 0.0;
  if (p <= 0.0) return 1.0;
  if (p >= 1.0) return 0.0;
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  double sum = 0.0;
  for (std::int64_t k = 0; k <= x; ++k)
    sum += std::exp(log_choose(n, k) + double(k) * lp + double(n - k) * lq);
  return sum;
}

constexpr double kBisectTol = 1e-12;

}  // namespace

BinomialCI clopper_pearson(std::int64_t x, std::int64_t n, double confidence) {
  if (n < 1 || x < 0 || x > n)
    throw Error(ErrorCode::InvalidCounts,
                "x = " + std::to_string(x) + ", n = " + std::to_string(n));
  if (!(confidence > 0.0 && confidence < 1.0))
    throw Error(ErrorCode::InvalidCounts, "confidence outside (0,1)");

  const double alpha = 1.0 - confidence;
  BinomialCI ci;
  ci.successes = x;
  ci.trials = n;
  ci.confidence = confidence;

  if (x == 0) {
    ci.lower = 0.0;
  } else {
    // P(Bin(n,p) >= x) increases in p; find where it crosses alpha/2
    double lo = 0.0, hi = 1.0;
    while (hi - lo > kBisectTol) {
      const double mid = 0.5 * (lo + hi);
      if (binomial_tail_ge(n, x, mid) < alpha / 2.0) lo = mid;
      else hi = mid;
    }
    ci.lower = 0.5 * (lo + hi);
  }

  if (x == n) {
    ci.upper = 1.0;
  } else {
    // P(Bin(n,p) <= x) decreases in p
    double lo = 0.0, hi = 1.0;
    while (hi - lo > kBisectTol) {
      const double mid = 0.5 * (lo + hi);
      if (binomial_tail_le(n, x, mid) > alpha / 2.0) lo = mid;
      else hi = mid;
    }
    ci.upper = 0.5 * (lo + hi);
  }
  return ci;
}

double mcnemar_exact(const PairedAgreement& pa) {
  const std::uint64_t n = pa.b + pa.c;
  if (n == 0)
    throw Error(ErrorCode::NoDiscordantPairs, "b = c = 0");
  const std::uint64_t m = pa.b > pa.c ? pa.b : pa.c;

  double tail;
  if (n <= 62) {
    // exact integer binomial sum; fits in 64 bits up to n = 62
    std::uint64_t sum = 0;
    std::uint64_t coeff = 1;  // C(n, 0)
    for (std::uint64_t k = 0; k <= n; ++k) {
      if (k >= m) sum += coeff;
      if (k < n) coeff = coeff * (n - k) / (k + 1);
    }
    tail = double(sum) * std::ldexp(1.0, -int(n));
  } else {
    tail = binomial_tail_ge(std::int64_t(n), std::int64_t(m), 0.5);
  }
  const double p = 2.0 * tail;
  return p > 1.0 ? 1.0 : p;
}

ChiSquareResult mcnemar_chisq(const PairedAgreement& pa) {
  const std::uint64_t n = pa.b + pa.c;
  if (n == 0)
    throw Error(ErrorCode::NoDiscordantPairs, "b = c = 0");
  const double diff = std::abs(double(pa.b) - double(pa.c));
  const double corrected = diff > 1.0 ? diff - 1.0 : 0.0;
  ChiSquareResult r;
  r.statistic = corrected * corrected / double(n);
  // survival of chi-square with one degree of freedom
  r.p_value = std::erfc(std::sqrt(r.statistic / 2.0));
  return r;
}

double ppv_at_prevalence(double sensitivity, double specificity, double prevalence) {
  for (double v : {sensitivity, specificity, prevalence}) {
    if (!(v >= 0.0 && v <= 1.0))
      throw Error(ErrorCode::InvalidCounts, "inputs must lie in [0,1]");
  }
  const double denom =
      sensitivity * prevalence + (1.0 - specificity) * (1.0 - prevalence);
  if (denom <= 0.0)
    throw Error(ErrorCode::DegenerateDenominator,
                "no positive calls at these operating characteristics");
  return sensitivity * prevalence / denom;
}

}  // namespace dermeval
