#include "dermeval/saliency.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "dermeval/error.hpp"
#include "dermeval/tensor_io.hpp"

namespace dermeval {

const char* to_string(SaliencyMethod m) {
  return m == SaliencyMethod::Rollout ? "rollout" : "gradcam";
}

Tensor head_average(const Tensor& raw_layer) {
  if (raw_layer.rank() != 3)
    throw Error(ErrorCode::ShapeMismatch, "head_average expects (H,T,T)");
  const std::uint32_t heads = raw_layer.dims[0];
  const std::uint32_t t = raw_layer.dims[1];
  if (t != raw_layer.dims[2])
    throw Error(ErrorCode::ShapeMismatch, "attention matrix must be square");
  if (heads < 1) throw Error(ErrorCode::ShapeMismatch, "no heads");

  Tensor out = Tensor::zeros({t, t});
  const std::int64_t cells = std::int64_t(t) * t;
  const float inv = 1.0f / float(heads);
#pragma omp parallel for schedule(static)
  for (std::int64_t c = 0; c < cells; ++c) {
    float sum = 0.0f;
    for (std::uint32_t h = 0; h < heads; ++h)
      sum += raw_layer.data[std::size_t(h) * cells + c];
    out.data[c] = sum * inv;
  }
  return out;
}

Tensor attention_rollout(const AttentionStack& stack, double residual_weight) {
  if (stack.layers.empty()) throw Error(ErrorCode::EmptyStack, "no layers");
  const std::uint32_t t = stack.token_count;
  for (const auto& layer : stack.layers) {
    if (layer.rank() != 2 || layer.dims[0] != t || layer.dims[1] != t)
      throw Error(ErrorCode::ShapeMismatch, "layer shape differs from stack token count");
  }

  const float w = float(residual_weight);
  const float a = 1.0f - w;

  // factor of layer l: w*I + (1-w)*A_l
  auto mix = [&](const Tensor& layer) {
    Tensor m = Tensor::zeros({t, t});
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < std::int64_t(t); ++i) {
      for (std::uint32_t j = 0; j < t; ++j)
        m.at2(i, j) = a * layer.at2(i, j) + (std::uint32_t(i) == j ? w : 0.0f);
    }
    return m;
  };

  // accumulate M_L * ... * M_1: start from the first factor, left-multiply
  // each deeper layer in turn
  Tensor acc = mix(stack.layers[0]);
  for (std::size_t l = 1; l < stack.layers.size(); ++l) {
    Tensor m = mix(stack.layers[l]);
    Tensor next = Tensor::zeros({t, t});
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < std::int64_t(t); ++i) {
      for (std::uint32_t j = 0; j < t; ++j) {
        float sum = 0.0f;
        for (std::uint32_t k = 0; k < t; ++k) sum += m.at2(i, k) * acc.at2(k, j);
        next.at2(i, j) = sum;
      }
    }
    acc = std::move(next);
  }
  return acc;
}

Raster rollout_to_map(const Tensor& roll, std::uint32_t target_index,
                      std::uint32_t grid_h, std::uint32_t grid_w) {
  if (roll.rank() != 2 || roll.dims[0] != roll.dims[1])
    throw Error(ErrorCode::ShapeMismatch, "rollout matrix must be square");
  const std::uint32_t t = roll.dims[0];
  if (target_index >= t)
    throw Error(ErrorCode::GridMismatch, "target index outside token range");

  const std::uint64_t cells = std::uint64_t(grid_h) * grid_w;
  Raster map(grid_h, grid_w);
  if (t == cells + 1) {
    // target row belongs to a class token outside the grid; drop its own column
    std::size_t out = 0;
    for (std::uint32_t j = 0; j < t; ++j) {
      if (j == target_index) continue;
      map.values[out++] = roll.at2(target_index, j);
    }
  } else if (t == cells) {
    for (std::uint32_t j = 0; j < t; ++j) map.values[j] = roll.at2(target_index, j);
  } else {
    throw Error(ErrorCode::GridMismatch,
                std::to_string(t) + " tokens do not fit a " + std::to_string(grid_h) +
                    "x" + std::to_string(grid_w) + " grid");
  }
  return map;
}

Raster gradcam(const GradCamInput& input) {
  const Tensor& acts = input.activations;
  const Tensor& grads = input.gradients;
  if (acts.rank() != 3 || grads.rank() != 3)
    throw Error(ErrorCode::ShapeMismatch, "gradcam expects (K,H,W) tensors");
  if (acts.dims != grads.dims)
    throw Error(ErrorCode::ShapeMismatch, "activations and gradients shapes differ");

  const std::uint32_t k = acts.dims[0];
  const std::uint32_t h = acts.dims[1];
  const std::uint32_t w = acts.dims[2];
  const std::size_t plane = std::size_t(h) * w;
  const float inv_z = 1.0f / float(plane);

  // channel weights: spatial mean of the gradients, one channel per thread
  std::vector<float> alpha(k);
#pragma omp parallel for schedule(static)
  for (std::int64_t c = 0; c < std::int64_t(k); ++c) {
    float sum = 0.0f;
    const float* g = grads.data.data() + std::size_t(c) * plane;
    for (std::size_t i = 0; i < plane; ++i) sum += g[i];
    alpha[c] = sum * inv_z;
  }

  // channels outer, contiguous plane slice per thread: per-pixel accumulation
  // order stays channel-ascending for any thread count
  Raster map(h, w);
#pragma omp parallel
  {
#ifdef _OPENMP
    const std::size_t tid = std::size_t(omp_get_thread_num());
    const std::size_t threads = std::size_t(omp_get_num_threads());
#else
    const std::size_t tid = 0, threads = 1;
#endif
    const std::size_t begin = plane * tid / threads;
    const std::size_t end = plane * (tid + 1) / threads;
    for (std::uint32_t c = 0; c < k; ++c) {
      const float weight = alpha[c];
      const float* a = acts.data.data() + std::size_t(c) * plane;
      for (std::size_t i = begin; i < end; ++i) map.values[i] += weight * a[i];
    }
    for (std::size_t i = begin; i < end; ++i)
      if (map.values[i] < 0.0f) map.values[i] = 0.0f;
  }
  return map;
}

Raster upsample_bilinear(const Raster& map, std::uint32_t out_h, std::uint32_t out_w) {
  if (map.height < 1 || map.width < 1 || out_h < 1 || out_w < 1)
    throw Error(ErrorCode::ShapeMismatch, "degenerate raster size");
  if (out_h == map.height && out_w == map.width) return map;

  const std::uint32_t in_h = map.height;
  const std::uint32_t in_w = map.width;
  const double sy = out_h > 1 ? double(in_h - 1) / double(out_h - 1) : 0.0;
  const double sx = out_w > 1 ? double(in_w - 1) / double(out_w - 1) : 0.0;

  Raster out(out_h, out_w);
#pragma omp parallel for schedule(static)
  for (std::int64_t oy = 0; oy < std::int64_t(out_h); ++oy) {
    const double fy = oy * sy;
    std::uint32_t y0 = std::uint32_t(fy);
    if (y0 >= in_h - 1) y0 = in_h - 1 > 0 ? in_h - 2 : 0;
    const std::uint32_t y1 = std::min(y0 + 1, in_h - 1);
    const double dy = fy - y0;
    for (std::uint32_t ox = 0; ox < out_w; ++ox) {
      const double fx = ox * sx;
      std::uint32_t x0 = std::uint32_t(fx);
      if (x0 >= in_w - 1) x0 = in_w - 1 > 0 ? in_w - 2 : 0;
      const std::uint32_t x1 = std::min(x0 + 1, in_w - 1);
      const double dx = fx - x0;
      const double top = map.at(y0, x0) * (1.0 - dx) + map.at(y0, x1) * dx;
      const double bottom = map.at(y1, x0) * (1.0 - dx) + map.at(y1, x1) * dx;
      out.at(oy, ox) = float(top * (1.0 - dy) + bottom * dy);
    }
  }
  return out;
}

Raster normalize_minmax(const Raster& map) {
  if (map.size() == 0) throw Error(ErrorCode::ShapeMismatch, "empty raster");
  float lo = map.values[0];
  float hi = map.values[0];
  int nonfinite = 0;
  const std::int64_t n = std::int64_t(map.size());
#pragma omp parallel for schedule(static) reduction(min : lo) reduction(max : hi) \
    reduction(| : nonfinite)
  for (std::int64_t i = 0; i < n; ++i) {
    const float v = map.values[i];
    nonfinite |= !std::isfinite(v);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (nonfinite)
    throw Error(ErrorCode::NonFiniteValue, "non-finite raster value");

  Raster out(map.height, map.width);
  if (hi == lo) return out;  // constant field carries no localization signal
  const float scale = 1.0f / (hi - lo);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) out.values[i] = (map.values[i] - lo) * scale;
  return out;
}

namespace {

// Grid for a token count: T = s*s + 1 means a class token outside an s x s
// grid, T = s*s means patch tokens only. Non-square grids must go through
// rollout_to_map directly.
void infer_grid(std::uint32_t t, std::uint32_t& grid_h, std::uint32_t& grid_w,
                bool& has_class_token) {
  auto is_square = [](std::uint32_t v, std::uint32_t& root) {
    std::uint32_t s = std::uint32_t(std::lround(std::sqrt(double(v))));
    for (std::uint32_t c = s > 0 ? s - 1 : 0; c <= s + 1; ++c) {
      if (c * c == v) {
        root = c;
        return true;
      }
    }
    return false;
  };
  std::uint32_t s = 0;
  if (t >= 2 && is_square(t - 1, s) && s >= 1) {
    grid_h = grid_w = s;
    has_class_token = true;
    return;
  }
  if (is_square(t, s) && s >= 1) {
    grid_h = grid_w = s;
    has_class_token = false;
    return;
  }
  throw Error(ErrorCode::GridMismatch,
              "cannot infer a patch grid from " + std::to_string(t) + " tokens");
}

}  // namespace

PipelineResult saliency_pipeline(const CaseManifest& c, const PipelineOptions& opt) {
  PipelineResult result;
  Raster raw;

  if (c.attention_path) {
    Tensor stored = read_tensor(*c.attention_path);
    AttentionStack stack = make_attention_stack(stored, opt.rollout_target);
    result.warnings = stack.warnings;
    Tensor roll = attention_rollout(stack, opt.residual_weight);
    std::uint32_t gh = 0, gw = 0;
    bool cls = false;
    infer_grid(stack.token_count, gh, gw, cls);
    raw = rollout_to_map(roll, stack.target_index, gh, gw);
    result.map.method = SaliencyMethod::Rollout;
  } else if (c.activations_path && c.gradients_path) {
    GradCamInput input;
    input.activations = read_tensor(*c.activations_path);
    input.gradients = read_tensor(*c.gradients_path);
    if (c.stage2_class) input.class_id = int(*c.stage2_class);
    raw = gradcam(input);
    result.map.method = SaliencyMethod::GradCam;
  } else {
    throw Error(ErrorCode::MissingInput,
                c.case_id + ": neither attention nor activations+gradients provided");
  }

  if (c.annotation_path) {
    AnnotationSet ann = load_annotations(*c.annotation_path);
    raw = upsample_bilinear(raw, ann.image_height, ann.image_width);
  }
  Raster normalized = normalize_minmax(raw);

  result.map.width = normalized.width;
  result.map.height = normalized.height;
  result.map.values = std::move(normalized.values);
  result.map.architecture = c.architecture;
  return result;
}

void write_pgm(const SaliencyMap& map, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path + " for writing");
  out << "P5\n" << map.width << " " << map.height << "\n255\n";
  std::vector<unsigned char> row(map.values.size());
  for (std::size_t i = 0; i < map.values.size(); ++i) {
    const double q = std::round(double(map.values[i]) * 255.0);
    row[i] = static_cast<unsigned char>(std::clamp(q, 0.0, 255.0));
  }
  out.write(reinterpret_cast<char*>(row.data()), std::streamsize(row.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "short write to " + path);
}

}  // namespace dermeval
