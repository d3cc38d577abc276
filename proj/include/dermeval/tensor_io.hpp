#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dermeval/error.hpp"
#include "dermeval/tensor.hpp"

namespace dermeval {

// ---------------------------------------------------------------------------
// Tensor binary format: "TNSR" | u32 rank (1..4) | rank x u32 dims |
// row-major IEEE-754 float32 payload, everything little-endian.
// ---------------------------------------------------------------------------

Tensor read_tensor(const std::string& path);
void write_tensor(const Tensor& t, const std::string& path);

// ---------------------------------------------------------------------------
// Expert annotations
// ---------------------------------------------------------------------------

/// Bounding rectangle of one dermoscopic structure, half-open:
/// [x, x+w) x [y, y+h) in image pixel coordinates.
struct Box {
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::int64_t w = 0;
  std::int64_t h = 0;
  std::string label;
};

struct AnnotationSet {
  std::uint32_t image_width = 0;
  std::uint32_t image_height = 0;
  std::vector<Box> boxes;
};

AnnotationSet load_annotations(const std::string& path);
void write_annotations(const AnnotationSet& ann, const std::string& path);

// ---------------------------------------------------------------------------
// Case manifests
// ---------------------------------------------------------------------------

enum class ReferenceLabel { Malignant, Benign };
enum class Nosology { MEL, BCC, SCC, DN, NV, Other };
enum class Stage2Class { MEL, SCC, BCC };

const char* to_string(ReferenceLabel label);
const char* to_string(Nosology n);
const char* to_string(Stage2Class c);

struct CaseManifest {
  std::string case_id;
  std::optional<ReferenceLabel> reference_label;
  std::optional<Nosology> nosology_reference;
  double probability = 0.0;
  std::optional<Stage2Class> stage2_class;
  // Paths are resolved against the manifest's directory on load.
  std::optional<std::string> attention_path;
  std::optional<std::string> activations_path;
  std::optional<std::string> gradients_path;
  std::optional<std::string> annotation_path;
  std::string architecture;
  std::string session;
};

/// Parses a manifest and enforces the per-case invariants. Violations are
/// collected across the whole document and raised together, each tagged with
/// its case_id; nothing is accepted partially.
std::vector<CaseManifest> load_manifest(const std::string& path);

// ---------------------------------------------------------------------------
// Attention stacks
// ---------------------------------------------------------------------------

/// Ordered per-layer attention, already head-averaged to T x T matrices.
struct AttentionStack {
  std::vector<Tensor> layers;  // each rank-2, T x T
  std::uint32_t token_count = 0;
  std::uint32_t target_index = 0;
  std::vector<std::string> warnings;  // row-sum deviations beyond tolerance
};

/// Builds a stack from a single stored tensor: rank-4 (L, H, T, T) raw or
/// rank-3 (L, T, T) pre-averaged. Raw layers are head-averaged here. Rows
/// must be non-negative; a row sum deviating from 1 by more than 1e-4 is
/// recorded as a warning, not an error.
AttentionStack make_attention_stack(const Tensor& stored, std::uint32_t target_index);

}  // namespace dermeval
