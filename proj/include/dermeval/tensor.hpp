#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

namespace dermeval {

/// Dense rank-1..4 array of 32-bit reals, row-major.
struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  Tensor() = default;
  Tensor(std::vector<std::uint32_t> d, std::vector<float> values)
      : dims(std::move(d)), data(std::move(values)) {}

  static Tensor zeros(std::vector<std::uint32_t> d);

  std::size_t rank() const { return dims.size(); }
  std::size_t size() const { return data.size(); }

  // row-major accessors for the ranks the pipeline uses
  float& at2(std::size_t i, std::size_t j) { return data[i * dims[1] + j]; }
  float at2(std::size_t i, std::size_t j) const { return data[i * dims[1] + j]; }
  float& at3(std::size_t i, std::size_t j, std::size_t k) {
    return data[(i * dims[1] + j) * dims[2] + k];
  }
  float at3(std::size_t i, std::size_t j, std::size_t k) const {
    return data[(i * dims[1] + j) * dims[2] + k];
  }
  float at4(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
    return data[((i * dims[1] + j) * dims[2] + k) * dims[3] + l];
  }
};

std::size_t element_count(const std::vector<std::uint32_t>& dims);

/// Rectangular scalar field, row-major; intermediate carrier between the
/// saliency kernels and the normalized map.
struct Raster {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<float> values;

  Raster() = default;
  Raster(std::uint32_t h, std::uint32_t w)
      : height(h), width(w), values(std::size_t(h) * w, 0.0f) {}
  Raster(std::uint32_t h, std::uint32_t w, std::vector<float> v)
      : height(h), width(w), values(std::move(v)) {}

  float& at(std::size_t y, std::size_t x) { return values[y * width + x]; }
  float at(std::size_t y, std::size_t x) const { return values[y * width + x]; }
  std::size_t size() const { return values.size(); }
};

}  // namespace dermeval
