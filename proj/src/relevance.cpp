#include "dermeval/relevance.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "dermeval/error.hpp"

namespace dermeval {

const char* to_string(Band band) {
  switch (band) {
    case Band::Focused: return "focused";
    case Band::Partial: return "partial";
    case Band::Irrelevant: return "irrelevant";
    case Band::Undefined: return "undefined";
  }
  return "undefined";
}

std::uint64_t BinaryMask::count() const {
  std::uint64_t total = 0;
  const std::int64_t n = std::int64_t(bits.size());
#pragma omp parallel for schedule(static) reduction(+ : total)
  for (std::int64_t i = 0; i < n; ++i) total += bits[i];
  return total;
}

BinaryMask binarize(const SaliencyMap& map, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0))
    throw Error(ErrorCode::TauOutOfRange, "tau = " + std::to_string(tau));
  BinaryMask mask(map.width, map.height);
  const float t = float(tau);
  const std::int64_t n = std::int64_t(map.values.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) mask.bits[i] = map.values[i] > t ? 1 : 0;
  return mask;
}

BinaryMask rasterize_annotations(const AnnotationSet& ann) {
  BinaryMask mask(ann.image_width, ann.image_height);
  for (const auto& box : ann.boxes) {
    const std::int64_t y_end = box.y + box.h;
#pragma omp parallel for schedule(static)
    for (std::int64_t y = box.y; y < y_end; ++y) {
      std::uint8_t* row = mask.bits.data() + std::size_t(y) * mask.width;
      std::fill(row + box.x, row + box.x + box.w, std::uint8_t(1));
    }
  }
  return mask;
}

RelevanceResult iou(const BinaryMask& a, const BinaryMask& b) {
  if (a.width != b.width || a.height != b.height)
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(a.width) + "x" + std::to_string(a.height) + " vs " +
                    std::to_string(b.width) + "x" + std::to_string(b.height));

  std::uint64_t inter = 0, in_a = 0, in_b = 0;
  const std::int64_t n = std::int64_t(a.bits.size());
#pragma omp parallel for schedule(static) reduction(+ : inter, in_a, in_b)
  for (std::int64_t i = 0; i < n; ++i) {
    in_a += a.bits[i];
    in_b += b.bits[i];
    inter += std::uint64_t(a.bits[i]) & b.bits[i];
  }

  RelevanceResult result;
  result.model_area = in_a;
  result.expert_area = in_b;
  result.intersection_area = inter;
  const std::uint64_t uni = in_a + in_b - inter;
  if (uni == 0) {
    result.band = Band::Undefined;
    result.audit_flag = true;  // uninformative, not "irrelevant"
    return result;
  }
  const double value = double(inter) / double(uni);
  result.iou = value;
  result.band = relevance_band(value);
  result.audit_flag = result.band == Band::Irrelevant;
  return result;
}

Band relevance_band(double iou_value) {
  if (iou_value > 0.5) return Band::Focused;
  if (iou_value >= 0.3) return Band::Partial;
  return Band::Irrelevant;
}

namespace {

int class_rank(const std::string& group) {
  if (group == "MEL") return 0;
  if (group == "BCC") return 1;
  if (group == "SCC") return 2;
  if (group == "DN") return 3;
  if (group == "NV") return 4;
  if (group == "other") return 5;
  return 6;
}

IoUSummary summarize(const std::string& arch, const std::string& group,
                     const std::vector<double>& values) {
  IoUSummary s;
  s.architecture = arch;
  s.group = group;
  s.n = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / double(values.size());
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / double(values.size() - 1));
  }
  return s;
}

}  // namespace

std::vector<IoUSummary> aggregate_iou(const std::vector<IoUObservation>& results) {
  std::map<std::string, std::map<std::string, std::vector<double>>> grouped;
  for (const auto& r : results) grouped[r.architecture][r.nosology].push_back(r.iou);

  std::vector<IoUSummary> summaries;
  for (const auto& [arch, by_class] : grouped) {
    std::vector<std::pair<std::string, const std::vector<double>*>> ordered;
    ordered.reserve(by_class.size());
    for (const auto& [group, values] : by_class) ordered.emplace_back(group, &values);
    std::stable_sort(ordered.begin(), ordered.end(), [](const auto& x, const auto& y) {
      const int rx = class_rank(x.first), ry = class_rank(y.first);
      return rx != ry ? rx < ry : x.first < y.first;
    });

    std::vector<double> all;
    for (const auto& [group, values] : ordered) {
      summaries.push_back(summarize(arch, group, *values));
      all.insert(all.end(), values->begin(), values->end());
    }
    summaries.push_back(summarize(arch, "all", all));
  }
  return summaries;
}

}  // namespace dermeval
