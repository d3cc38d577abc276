#pragma once

// Plain serial reference implementations, written loop-by-loop from the
// definitions. They back the test oracles and the benchmark baseline; the
// library must never link against this target.

#include <cstdint>
#include <vector>

#include "dermeval/tensor.hpp"

namespace dermeval::ref {

Tensor head_average(const Tensor& raw_layer);

/// Naive rollout: mixes each layer with the identity and left-multiplies
/// with explicit triple loops.
Tensor attention_rollout(const std::vector<Tensor>& averaged_layers,
                         double residual_weight);

Raster gradcam(const Tensor& activations, const Tensor& gradients);

Raster upsample_bilinear(const Raster& map, std::uint32_t out_h, std::uint32_t out_w);

Raster normalize_minmax(const Raster& map);

struct MaskCounts {
  std::uint64_t a_area = 0;
  std::uint64_t b_area = 0;
  std::uint64_t intersection = 0;
  std::uint64_t union_ = 0;
};

MaskCounts mask_counts(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b);

}  // namespace dermeval::ref
