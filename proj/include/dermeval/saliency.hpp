#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dermeval/tensor.hpp"
#include "dermeval/tensor_io.hpp"

namespace dermeval {

enum class SaliencyMethod { Rollout, GradCam };

const char* to_string(SaliencyMethod m);

/// Normalized per-pixel relevance field in [0,1] at image resolution.
struct SaliencyMap {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<float> values;  // row-major, height x width
  SaliencyMethod method = SaliencyMethod::Rollout;
  std::string architecture;

  float at(std::size_t y, std::size_t x) const { return values[y * width + x]; }
};

/// Elementwise mean over the head axis of a raw (H_heads, T, T) layer.
Tensor head_average(const Tensor& raw_layer);

/// Composes the per-layer matrices M_l = w*I + (1-w)*A_l into M_L * ... * M_1
/// (left factor = deeper layer). w = 0.5 gives the even residual mix.
Tensor attention_rollout(const AttentionStack& stack, double residual_weight = 0.5);

/// Extracts row `target_index` of the rollout matrix as a (grid_h, grid_w)
/// raster. When T == grid_h*grid_w + 1 the target row belongs to a class
/// token outside the grid and its own column is dropped; when T ==
/// grid_h*grid_w the full row is kept (the target's self-weight lands in the
/// grid). Any other T is a GridMismatch.
Raster rollout_to_map(const Tensor& roll, std::uint32_t target_index,
                      std::uint32_t grid_h, std::uint32_t grid_w);

struct GradCamInput {
  Tensor activations;  // (K, H, W)
  Tensor gradients;    // (K, H, W), d y^c / d A^k
  int class_id = -1;
};

/// Channel weights = spatial mean of the gradients; output =
/// ReLU(sum_k alpha_k * A^k), a (H, W) raster.
Raster gradcam(const GradCamInput& input);

/// Corner-aligned bilinear resampling: source coordinate =
/// out * (in-1)/(out-1) when out > 1, the center value when in == 1.
Raster upsample_bilinear(const Raster& map, std::uint32_t out_h, std::uint32_t out_w);

/// (v - min) / (max - min); a constant raster maps to all zeros.
Raster normalize_minmax(const Raster& map);

struct PipelineOptions {
  double residual_weight = 0.5;
  std::uint32_t rollout_target = 0;
};

struct PipelineResult {
  SaliencyMap map;
  std::vector<std::string> warnings;
};

/// Dispatches on the tensors the case provides: an attention stack runs
/// rollout, activations+gradients run Grad-CAM, neither is a MissingInput.
/// The raw map is upsampled to the annotation's image size when an
/// annotation is present, then min-max normalized.
PipelineResult saliency_pipeline(const CaseManifest& c, const PipelineOptions& opt = {});

/// 8-bit grayscale P5 export, values quantized by round(v * 255).
void write_pgm(const SaliencyMap& map, const std::string& path);

}  // namespace dermeval
