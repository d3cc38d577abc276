// Compares the parallel kernels against the serial reference implementation
// on representative sizes and reports timings plus the largest disagreement.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "dermeval/relevance.hpp"
#include "dermeval/saliency.hpp"
#include "dermeval/tensor_io.hpp"
#include "ref/reference.hpp"

using namespace dermeval;

namespace {

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

template <typename F>
double best_of(int reps, F&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const double t0 = now_ms();
    fn();
    best = std::min(best, now_ms() - t0);
  }
  return best;
}

void report(const char* kernel, double serial_ms, double parallel_ms, double max_diff) {
  std::printf("%-22s serial %9.3f ms   parallel %9.3f ms   speedup %5.2fx   max|diff| %.3g\n",
              kernel, serial_ms, parallel_ms, serial_ms / parallel_ms, max_diff);
}

double max_abs_diff(const std::vector<float>& a, const std::vector<float>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(double(a[i]) - double(b[i])));
  return m;
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (built without OpenMP)\n");
#endif
  std::mt19937 rng(7);
  std::uniform_real_distribution<float> uni(0.0f, 1.0f);
  const int reps = 5;

  {  // attention rollout, ViT-B/16 scale
    const std::uint32_t t = 197, layers = 12;
    std::vector<Tensor> stack_layers;
    for (std::uint32_t l = 0; l < layers; ++l) {
      Tensor layer = Tensor::zeros({t, t});
      for (std::uint32_t i = 0; i < t; ++i) {
        float sum = 0.0f;
        for (std::uint32_t j = 0; j < t; ++j) {
          layer.at2(i, j) = uni(rng);
          sum += layer.at2(i, j);
        }
        for (std::uint32_t j = 0; j < t; ++j) layer.at2(i, j) /= sum;
      }
      stack_layers.push_back(layer);
    }
    AttentionStack stack;
    stack.layers = stack_layers;
    stack.token_count = t;

    Tensor serial_out, parallel_out;
    const double s = best_of(reps, [&] { serial_out = ref::attention_rollout(stack_layers, 0.5); });
    const double p = best_of(reps, [&] { parallel_out = attention_rollout(stack, 0.5); });
    report("attention_rollout", s, p, max_abs_diff(serial_out.data, parallel_out.data));
  }

  {  // Grad-CAM, wide final conv block
    const std::uint32_t k = 1280, h = 32, w = 32;
    GradCamInput input;
    input.activations = Tensor::zeros({k, h, w});
    input.gradients = Tensor::zeros({k, h, w});
    for (auto& v : input.activations.data) v = uni(rng) * 2.0f - 0.5f;
    for (auto& v : input.gradients.data) v = uni(rng) - 0.4f;

    Raster serial_out, parallel_out;
    const double s =
        best_of(reps, [&] { serial_out = ref::gradcam(input.activations, input.gradients); });
    const double p = best_of(reps, [&] { parallel_out = gradcam(input); });
    report("gradcam", s, p, max_abs_diff(serial_out.values, parallel_out.values));
  }

  Raster upsampled_serial, upsampled_parallel;
  {  // bilinear upsample to full image resolution
    Raster grid(14, 14);
    for (auto& v : grid.values) v = uni(rng);
    const double s =
        best_of(reps, [&] { upsampled_serial = ref::upsample_bilinear(grid, 1024, 1024); });
    const double p =
        best_of(reps, [&] { upsampled_parallel = upsample_bilinear(grid, 1024, 1024); });
    report("upsample_bilinear", s, p,
           max_abs_diff(upsampled_serial.values, upsampled_parallel.values));
  }

  {  // min-max normalization of the upsampled field
    Raster serial_out, parallel_out;
    const double s =
        best_of(reps, [&] { serial_out = ref::normalize_minmax(upsampled_serial); });
    const double p =
        best_of(reps, [&] { parallel_out = normalize_minmax(upsampled_parallel); });
    report("normalize_minmax", s, p, max_abs_diff(serial_out.values, parallel_out.values));
  }

  {  // mask IoU at image resolution
    const std::uint32_t side = 2048;
    BinaryMask a(side, side), b(side, side);
    for (auto& v : a.bits) v = uni(rng) > 0.5f;
    for (auto& v : b.bits) v = uni(rng) > 0.4f;

    ref::MaskCounts serial_counts{};
    RelevanceResult parallel_out;
    const double s = best_of(reps, [&] { serial_counts = ref::mask_counts(a.bits, b.bits); });
    const double p = best_of(reps, [&] { parallel_out = iou(a, b); });
    const double serial_iou = double(serial_counts.intersection) / double(serial_counts.union_);
    report("mask_iou", s, p, std::abs(serial_iou - parallel_out.iou.value_or(-1.0)));
  }

  return 0;
}
