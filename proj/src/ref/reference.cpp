#include "reference.hpp"

#include <cmath>

namespace dermeval::ref {

Tensor head_average(const Tensor& raw_layer) {
  const std::uint32_t heads = raw_layer.dims[0];
  const std::uint32_t t = raw_layer.dims[1];
  Tensor out = Tensor::zeros({t, t});
  for (std::uint32_t i = 0; i < t; ++i) {
    for (std::uint32_t j = 0; j < t; ++j) {
      float sum = 0.0f;
      for (std::uint32_t h = 0; h < heads; ++h) sum += raw_layer.at3(h, i, j);
      out.at2(i, j) = sum / float(heads);
    }
  }
  return out;
}

Tensor attention_rollout(const std::vector<Tensor>& averaged_layers,
                         double residual_weight) {
  const std::uint32_t t = averaged_layers.front().dims[0];
  const float w = float(residual_weight);

  auto factor = [&](const Tensor& layer) {
    Tensor m = Tensor::zeros({t, t});
    for (std::uint32_t i = 0; i < t; ++i)
      for (std::uint32_t j = 0; j < t; ++j)
        m.at2(i, j) = (1.0f - w) * layer.at2(i, j) + (i == j ? w : 0.0f);
    return m;
  };

  Tensor acc = factor(averaged_layers[0]);
  for (std::size_t l = 1; l < averaged_layers.size(); ++l) {
    Tensor m = factor(averaged_layers[l]);
    Tensor next = Tensor::zeros({t, t});
    for (std::uint32_t i = 0; i < t; ++i)
      for (std::uint32_t j = 0; j < t; ++j)
        for (std::uint32_t k = 0; k < t; ++k)
          next.at2(i, j) += m.at2(i, k) * acc.at2(k, j);
    acc = next;
  }
  return acc;
}

Raster gradcam(const Tensor& activations, const Tensor& gradients) {
  const std::uint32_t k = activations.dims[0];
  const std::uint32_t h = activations.dims[1];
  const std::uint32_t w = activations.dims[2];

  std::vector<float> alpha(k, 0.0f);
  for (std::uint32_t c = 0; c < k; ++c) {
    float sum = 0.0f;
    for (std::uint32_t i = 0; i < h; ++i)
      for (std::uint32_t j = 0; j < w; ++j) sum += gradients.at3(c, i, j);
    alpha[c] = sum / float(h * w);
  }

  Raster out(h, w);
  for (std::uint32_t i = 0; i < h; ++i) {
    for (std::uint32_t j = 0; j < w; ++j) {
      float sum = 0.0f;
      for (std::uint32_t c = 0; c < k; ++c) sum += alpha[c] * activations.at3(c, i, j);
      out.at(i, j) = sum > 0.0f ? sum : 0.0f;
    }
  }
  return out;
}

Raster upsample_bilinear(const Raster& map, std::uint32_t out_h, std::uint32_t out_w) {
  Raster out(out_h, out_w);
  for (std::uint32_t oy = 0; oy < out_h; ++oy) {
    const double fy = out_h > 1 ? double(oy) * (map.height - 1) / (out_h - 1) : 0.0;
    for (std::uint32_t ox = 0; ox < out_w; ++ox) {
      const double fx = out_w > 1 ? double(ox) * (map.width - 1) / (out_w - 1) : 0.0;
      std::uint32_t y0 = std::uint32_t(fy);
      std::uint32_t x0 = std::uint32_t(fx);
      if (y0 + 1 >= map.height) y0 = map.height >= 2 ? map.height - 2 : 0;
      if (x0 + 1 >= map.width) x0 = map.width >= 2 ? map.width - 2 : 0;
      const std::uint32_t y1 = std::min(y0 + 1, map.height - 1);
      const std::uint32_t x1 = std::min(x0 + 1, map.width - 1);
      const double dy = fy - y0;
      const double dx = fx - x0;
      const double v = map.at(y0, x0) * (1 - dx) * (1 - dy) + map.at(y0, x1) * dx * (1 - dy) +
                       map.at(y1, x0) * (1 - dx) * dy + map.at(y1, x1) * dx * dy;
      out.at(oy, ox) = float(v);
    }
  }
  return out;
}

Raster normalize_minmax(const Raster& map) {
  float lo = map.values[0];
  float hi = map.values[0];
  for (float v : map.values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  Raster out(map.height, map.width);
  if (hi == lo) return out;
  for (std::size_t i = 0; i < map.values.size(); ++i)
    out.values[i] = (map.values[i] - lo) / (hi - lo);
  return out;
}

MaskCounts mask_counts(const std::vector<std::uint8_t>& a,
                       const std::vector<std::uint8_t>& b) {
  MaskCounts counts;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i]) ++counts.a_area;
    if (b[i]) ++counts.b_area;
    if (a[i] && b[i]) ++counts.intersection;
    if (a[i] || b[i]) ++counts.union_;
  }
  return counts;
}

}  // namespace dermeval::ref
