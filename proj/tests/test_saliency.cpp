#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "dermeval/saliency.hpp"
#include "dermeval/tensor_io.hpp"
#include "ref/reference.hpp"
#include "support/testutil.hpp"

using namespace dermeval;

namespace {

Tensor identity(std::uint32_t t) {
  Tensor m = Tensor::zeros({t, t});
  for (std::uint32_t i = 0; i < t; ++i) m.at2(i, i) = 1.0f;
  return m;
}

Tensor random_row_stochastic(std::mt19937& rng, std::uint32_t t) {
  std::uniform_real_distribution<float> uni(0.01f, 1.0f);
  Tensor m = Tensor::zeros({t, t});
  for (std::uint32_t i = 0; i < t; ++i) {
    float sum = 0.0f;
    for (std::uint32_t j = 0; j < t; ++j) {
      m.at2(i, j) = uni(rng);
      sum += m.at2(i, j);
    }
    for (std::uint32_t j = 0; j < t; ++j) m.at2(i, j) /= sum;
  }
  return m;
}

AttentionStack stack_of(std::vector<Tensor> layers) {
  AttentionStack stack;
  stack.token_count = layers.front().dims[0];
  stack.layers = std::move(layers);
  return stack;
}

}  // namespace

TEST_CASE("head_average") {
  SUBCASE("a single head is returned unchanged") {
    Tensor raw({1, 2, 2}, {0.2f, 0.8f, 0.6f, 0.4f});
    Tensor avg = head_average(raw);
    CHECK(avg.data == std::vector<float>{0.2f, 0.8f, 0.6f, 0.4f});
  }

  SUBCASE("mean of M and 2M is 1.5M") {
    Tensor raw = Tensor::zeros({2, 2, 2});
    const float m[4] = {0.1f, 0.9f, 0.3f, 0.7f};
    for (int i = 0; i < 4; ++i) {
      raw.data[i] = m[i];
      raw.data[4 + i] = 2.0f * m[i];
    }
    Tensor avg = head_average(raw);
    for (int i = 0; i < 4; ++i) CHECK(avg.data[i] == doctest::Approx(1.5f * m[i]));
  }

  SUBCASE("random stack matches the scalar-loop reference") {
    std::mt19937 rng(1);
    std::uniform_real_distribution<float> uni(0.0f, 1.0f);
    Tensor raw = Tensor::zeros({4, 3, 3});
    for (auto& v : raw.data) v = uni(rng);
    Tensor avg = head_average(raw);
    Tensor expected = ref::head_average(raw);
    for (std::size_t i = 0; i < avg.data.size(); ++i)
      CHECK(std::abs(avg.data[i] - (expected.data[i])) <= 1e-7);
  }

  SUBCASE("rank-2 input is rejected") {
    CHECK_THROWS_AS(head_average(identity(3)), Error);
  }
}

TEST_CASE("attention_rollout") {
  SUBCASE("identity layers give the identity for any depth") {
    for (std::size_t depth : {1u, 2u, 4u}) {
      auto stack = stack_of(std::vector<Tensor>(depth, identity(3)));
      Tensor roll = attention_rollout(stack, 0.5);
      for (std::uint32_t i = 0; i < 3; ++i)
        for (std::uint32_t j = 0; j < 3; ++j)
          CHECK(roll.at2(i, j) == (i == j ? 1.0f : 0.0f));
    }
  }

  SUBCASE("two uniform layers, T=4: hand-multiplied product") {
    // each factor is 0.5 I + 0.125 J; the square is 0.25 I + 0.1875 J
    Tensor uniform({4, 4}, std::vector<float>(16, 0.25f));
    auto stack = stack_of({uniform, uniform});
    Tensor roll = attention_rollout(stack, 0.5);
    for (std::uint32_t i = 0; i < 4; ++i)
      for (std::uint32_t j = 0; j < 4; ++j)
        CHECK(roll.at2(i, j) == doctest::Approx(i == j ? 0.4375 : 0.1875).epsilon(1e-6));
  }

  SUBCASE("random stacks match the naive loop oracle") {
    std::mt19937 rng(2);
    auto stack = stack_of({random_row_stochastic(rng, 5), random_row_stochastic(rng, 5),
                           random_row_stochastic(rng, 5)});
    Tensor roll = attention_rollout(stack, 0.5);
    Tensor expected = ref::attention_rollout(stack.layers, 0.5);
    for (std::size_t i = 0; i < roll.data.size(); ++i)
      CHECK(std::abs(roll.data[i] - expected.data[i]) < 1e-6);
  }

  SUBCASE("row-stochastic layers keep the product row-stochastic") {
    std::mt19937 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<Tensor> layers;
      const std::uint32_t t = 2 + rng() % 8;
      const std::size_t depth = 1 + rng() % 4;
      for (std::size_t l = 0; l < depth; ++l) layers.push_back(random_row_stochastic(rng, t));
      Tensor roll = attention_rollout(stack_of(std::move(layers)), 0.5);
      for (std::uint32_t i = 0; i < t; ++i) {
        double sum = 0.0;
        for (std::uint32_t j = 0; j < t; ++j) sum += roll.at2(i, j);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));
      }
    }
  }

  SUBCASE("empty and mismatched stacks are rejected") {
    CHECK_THROWS_AS(attention_rollout(AttentionStack{}, 0.5), Error);
    auto stack = stack_of({identity(3), identity(4)});
    stack.token_count = 3;
    CHECK_THROWS_AS(attention_rollout(stack, 0.5), Error);
  }
}

TEST_CASE("rollout_to_map") {
  SUBCASE("class token at index 0 drops its own column") {
    Tensor roll = Tensor::zeros({5, 5});
    const float row[5] = {0.1f, 0.2f, 0.3f, 0.25f, 0.15f};
    for (int j = 0; j < 5; ++j) roll.at2(0, j) = row[j];
    Raster map = rollout_to_map(roll, 0, 2, 2);
    CHECK(map.values == std::vector<float>{0.2f, 0.3f, 0.25f, 0.15f});
  }

  SUBCASE("without a class token the full row is kept") {
    Tensor roll = Tensor::zeros({4, 4});
    for (int j = 0; j < 4; ++j) roll.at2(0, j) = float(j);
    Raster map = rollout_to_map(roll, 0, 2, 2);
    CHECK(map.values == std::vector<float>{0.0f, 1.0f, 2.0f, 3.0f});
  }

  SUBCASE("grid that does not match the token count") {
    Tensor roll = Tensor::zeros({5, 5});
    try {
      rollout_to_map(roll, 0, 3, 2);
      FAIL("expected GridMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::GridMismatch);
    }
  }
}

TEST_CASE("gradcam") {
  SUBCASE("unit gradients reduce to ReLU of the activations") {
    Tensor acts({1, 2, 2}, {1.0f, -2.0f, 0.5f, 3.0f});
    Tensor grads({1, 2, 2}, {1.0f, 1.0f, 1.0f, 1.0f});
    Raster map = gradcam({acts, grads, 0});
    CHECK(map.values == std::vector<float>{1.0f, 0.0f, 0.5f, 3.0f});
  }

  SUBCASE("negative weights on positive activations are rectified away") {
    Tensor acts({1, 2, 2}, {1.0f, 2.0f, 3.0f, 4.0f});
    Tensor grads({1, 2, 2}, {-1.0f, -1.0f, -1.0f, -1.0f});
    Raster map = gradcam({acts, grads, 0});
    for (float v : map.values) CHECK(v == 0.0f);
  }

  SUBCASE("random inputs match the triple-loop oracle and stay non-negative") {
    std::mt19937 rng(4);
    std::uniform_real_distribution<float> uni(-1.0f, 1.0f);
    Tensor acts = Tensor::zeros({3, 4, 4});
    Tensor grads = Tensor::zeros({3, 4, 4});
    for (auto& v : acts.data) v = uni(rng);
    for (auto& v : grads.data) v = uni(rng);
    Raster map = gradcam({acts, grads, 0});
    Raster expected = ref::gradcam(acts, grads);
    for (std::size_t i = 0; i < map.values.size(); ++i) {
      CHECK(std::abs(map.values[i] - expected.values[i]) < 1e-6);
      CHECK(map.values[i] >= 0.0f);
    }
  }

  SUBCASE("positive homogeneity in the activations") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<float> uni(-1.0f, 1.0f);
    Tensor acts = Tensor::zeros({2, 3, 3});
    Tensor grads = Tensor::zeros({2, 3, 3});
    for (auto& v : acts.data) v = uni(rng);
    for (auto& v : grads.data) v = uni(rng);

    const float s = 2.5f;
    Tensor scaled = acts;
    for (auto& v : scaled.data) v *= s;

    Raster base = gradcam({acts, grads, 0});
    Raster scaled_map = gradcam({scaled, grads, 0});
    for (std::size_t i = 0; i < base.values.size(); ++i) {
      const double expected = double(base.values[i]) * s;
      CHECK(std::abs(scaled_map.values[i] - expected) <=
            1e-6 * std::max(1.0, std::abs(expected)));
    }
  }

  SUBCASE("shape mismatch is rejected") {
    Tensor acts = Tensor::zeros({2, 3, 3});
    Tensor grads = Tensor::zeros({2, 3, 4});
    CHECK_THROWS_AS(gradcam({acts, grads, 0}), Error);
  }
}

TEST_CASE("upsample_bilinear") {
  SUBCASE("constant maps stay constant at any size") {
    Raster map(3, 3, std::vector<float>(9, 0.7f));
    Raster up = upsample_bilinear(map, 7, 5);
    for (float v : up.values) CHECK(v == doctest::Approx(0.7f));
  }

  SUBCASE("hand-computed 2x2 -> 2x3: middle column is the midpoint") {
    Raster map(2, 2, {0.0f, 1.0f, 0.0f, 1.0f});
    Raster up = upsample_bilinear(map, 2, 3);
    for (std::uint32_t y = 0; y < 2; ++y) {
      CHECK(up.at(y, 0) == doctest::Approx(0.0f));
      CHECK(up.at(y, 1) == doctest::Approx(0.5f));
      CHECK(up.at(y, 2) == doctest::Approx(1.0f));
    }
  }

  SUBCASE("identity sizes leave the values untouched") {
    Raster map(2, 3, {0.0f, 1.0f, 2.0f, 3.0f, 4.0f, 5.0f});
    Raster same = upsample_bilinear(map, 2, 3);
    CHECK(same.values == map.values);
  }

  SUBCASE("a 1x1 source broadcasts its center value") {
    Raster map(1, 1, {0.3f});
    Raster up = upsample_bilinear(map, 4, 4);
    for (float v : up.values) CHECK(v == doctest::Approx(0.3f));
  }

  SUBCASE("output stays within the input bounds") {
    std::mt19937 rng(6);
    std::uniform_real_distribution<float> uni(-2.0f, 2.0f);
    for (int trial = 0; trial < 20; ++trial) {
      const std::uint32_t h = 1 + rng() % 6, w = 1 + rng() % 6;
      Raster map(h, w);
      float lo = 1e9f, hi = -1e9f;
      for (auto& v : map.values) {
        v = uni(rng);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      Raster up = upsample_bilinear(map, 1 + rng() % 32, 1 + rng() % 32);
      for (float v : up.values) {
        CHECK(v >= lo - 1e-7f);
        CHECK(v <= hi + 1e-7f);
      }
    }
  }

  SUBCASE("agrees with the serial reference") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<float> uni(0.0f, 1.0f);
    Raster map(5, 4);
    for (auto& v : map.values) v = uni(rng);
    Raster up = upsample_bilinear(map, 17, 13);
    Raster expected = ref::upsample_bilinear(map, 17, 13);
    for (std::size_t i = 0; i < up.values.size(); ++i)
      CHECK(std::abs(up.values[i] - expected.values[i]) < 1e-5);
  }
}

TEST_CASE("normalize_minmax") {
  SUBCASE("affine map to the unit interval") {
    Raster map(1, 3, {2.0f, 4.0f, 6.0f});
    Raster norm = normalize_minmax(map);
    CHECK(norm.values == std::vector<float>{0.0f, 0.5f, 1.0f});
  }

  SUBCASE("constant maps become all zeros") {
    Raster map(2, 2, std::vector<float>(4, 3.7f));
    Raster norm = normalize_minmax(map);
    for (float v : norm.values) CHECK(v == 0.0f);
  }

  SUBCASE("idempotent on non-constant maps") {
    std::mt19937 rng(8);
    std::uniform_real_distribution<float> uni(0.0f, 1.0f);
    Raster map(4, 4);
    for (auto& v : map.values) v = uni(rng);
    Raster once = normalize_minmax(map);
    Raster twice = normalize_minmax(once);
    CHECK(once.values == twice.values);
  }

  SUBCASE("non-finite values are rejected") {
    Raster map(1, 2, {0.0f, std::numeric_limits<float>::infinity()});
    try {
      normalize_minmax(map);
      FAIL("expected NonFiniteValue");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NonFiniteValue);
    }
  }
}

TEST_CASE("saliency_pipeline dispatch") {
  auto dir = testutil::scratch_dir("pipeline");
  testutil::write_text(dir / "ann.json",
                       R"({"width":8,"height":8,
                          "boxes":[{"x":1,"y":1,"w":4,"h":4,"label":"net"}]})");

  // rollout branch: L=1 raw stack with 2 heads, T=5 (2x2 grid + class token)
  {
    Tensor raw = Tensor::zeros({1, 2, 5, 5});
    for (std::uint32_t h = 0; h < 2; ++h)
      for (std::uint32_t i = 0; i < 5; ++i)
        for (std::uint32_t j = 0; j < 5; ++j) raw.data[(h * 5 + i) * 5 + j] = 0.2f;
    write_tensor(raw, (dir / "attn.tnsr").string());
  }
  // gradcam branch
  {
    Tensor acts({1, 2, 2}, {0.0f, 1.0f, 2.0f, 3.0f});
    Tensor grads({1, 2, 2}, {1.0f, 1.0f, 1.0f, 1.0f});
    write_tensor(acts, (dir / "acts.tnsr").string());
    write_tensor(grads, (dir / "grads.tnsr").string());
  }

  CaseManifest base;
  base.case_id = "p1";
  base.probability = 0.1;
  base.annotation_path = (dir / "ann.json").string();

  SUBCASE("attention input runs rollout") {
    CaseManifest c = base;
    c.attention_path = (dir / "attn.tnsr").string();
    auto result = saliency_pipeline(c);
    CHECK(result.map.method == SaliencyMethod::Rollout);
    CHECK(result.map.width == 8);
    CHECK(result.map.height == 8);
  }

  SUBCASE("activation+gradient input runs gradcam") {
    CaseManifest c = base;
    c.activations_path = (dir / "acts.tnsr").string();
    c.gradients_path = (dir / "grads.tnsr").string();
    auto result = saliency_pipeline(c);
    CHECK(result.map.method == SaliencyMethod::GradCam);
    CHECK(result.map.width == 8);
    // normalized output covers [0,1]
    float lo = 2.0f, hi = -1.0f;
    for (float v : result.map.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    CHECK(lo == 0.0f);
    CHECK(hi == 1.0f);
  }

  SUBCASE("neither tensor set is a MissingInput") {
    try {
      saliency_pipeline(base);
      FAIL("expected MissingInput");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MissingInput);
    }
  }
}

TEST_CASE("pgm export quantizes with round(v*255)") {
  auto dir = testutil::scratch_dir("pgm");
  SaliencyMap map;
  map.width = 2;
  map.height = 1;
  map.values = {0.0f, 1.0f};
  write_pgm(map, (dir / "m.pgm").string());
  const std::string bytes = testutil::slurp(dir / "m.pgm");
  CHECK(bytes == std::string("P5\n2 1\n255\n") + '\x00' + '\xFF');
}
