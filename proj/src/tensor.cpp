#include "dermeval/tensor.hpp"

namespace dermeval {

std::size_t element_count(const std::vector<std::uint32_t>& dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

Tensor Tensor::zeros(std::vector<std::uint32_t> d) {
  std::size_t n = element_count(d);
  return Tensor(std::move(d), std::vector<float>(n, 0.0f));
}

}  // namespace dermeval
