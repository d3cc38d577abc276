#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dermeval/saliency.hpp"
#include "dermeval/tensor_io.hpp"

namespace dermeval {

struct BinaryMask {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> bits;  // row-major, 0 or 1

  BinaryMask() = default;
  BinaryMask(std::uint32_t w, std::uint32_t h)
      : width(w), height(h), bits(std::size_t(w) * h, 0) {}

  std::uint8_t at(std::size_t y, std::size_t x) const { return bits[y * width + x]; }
  void set(std::size_t y, std::size_t x, std::uint8_t v) { bits[y * width + x] = v; }
  std::uint64_t count() const;
};

enum class Band { Focused, Partial, Irrelevant, Undefined };

const char* to_string(Band band);

struct RelevanceResult {
  std::optional<double> iou;  // absent iff band == Undefined
  Band band = Band::Undefined;
  std::uint64_t model_area = 0;
  std::uint64_t expert_area = 0;
  std::uint64_t intersection_area = 0;
  bool audit_flag = false;  // set when the result needs manual review
};

/// Bit set iff value > tau (strictly; "exceeds").
BinaryMask binarize(const SaliencyMap& map, double tau = 0.5);

/// Union of all annotation boxes, half-open box semantics.
BinaryMask rasterize_annotations(const AnnotationSet& ann);

/// Exact pixel-count IoU. An empty union yields band Undefined with the
/// audit flag raised instead of a number.
RelevanceResult iou(const BinaryMask& a, const BinaryMask& b);

/// Focused iff iou > 0.5, Partial iff 0.3 <= iou <= 0.5, Irrelevant below.
Band relevance_band(double iou_value);

struct IoUObservation {
  std::string architecture;
  std::string nosology;
  double iou = 0.0;
};

struct IoUSummary {
  std::string architecture;
  std::string group;  // nosology class, or "all" for the per-architecture row
  std::size_t n = 0;
  double mean = 0.0;
  std::optional<double> sd;  // sample SD, absent when n < 2
};

/// Grouped mean and sample SD per (architecture, class) plus one "all" row
/// per architecture (mean over every result of that architecture).
/// Architectures are ordered lexicographically, classes in clinical report
/// order (MEL, BCC, SCC, DN, NV, other).
std::vector<IoUSummary> aggregate_iou(const std::vector<IoUObservation>& results);

}  // namespace dermeval
