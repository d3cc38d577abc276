#include "dermeval/tensor_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "dermeval/saliency.hpp"

namespace dermeval {

namespace {

constexpr char kMagic[4] = {'T', 'N', 'S', 'R'};
constexpr std::uint32_t kMaxRank = 4;

std::uint32_t decode_u32le(const unsigned char* b) {
  return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
         std::uint32_t(b[3]) << 24;
}

void encode_u32le(std::uint32_t v, unsigned char* b) {
  b[0] = v & 0xff;
  b[1] = (v >> 8) & 0xff;
  b[2] = (v >> 16) & 0xff;
  b[3] = (v >> 24) & 0xff;
}

std::uint32_t read_u32le(std::istream& in, const std::string& path) {
  unsigned char buf[4];
  if (!in.read(reinterpret_cast<char*>(buf), 4))
    throw Error(ErrorCode::TruncatedPayload, "unexpected end of header in " + path);
  return decode_u32le(buf);
}

}  // namespace

Tensor read_tensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path);

  char magic[4];
  if (!in.read(magic, 4))
    throw Error(ErrorCode::TruncatedPayload, "file shorter than magic in " + path);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw Error(ErrorCode::BadMagic, "not a TNSR file: " + path);

  std::uint32_t rank = read_u32le(in, path);
  if (rank == 0 || rank > kMaxRank)
    throw Error(ErrorCode::RankOutOfRange,
                "rank " + std::to_string(rank) + " in " + path);

  std::vector<std::uint32_t> dims(rank);
  for (auto& d : dims) {
    d = read_u32le(in, path);
    if (d == 0)
      throw Error(ErrorCode::InvalidDimension, "zero-sized dimension in " + path);
  }

  std::size_t n = element_count(dims);
  std::vector<float> data(n);
  std::vector<unsigned char> raw(n * 4);
  if (!in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size())))
    throw Error(ErrorCode::TruncatedPayload,
                "payload shorter than " + std::to_string(n) + " values in " + path);
  // reject trailing bytes: the format is exactly header + payload
  if (in.peek() != std::ifstream::traits_type::eof())
    throw Error(ErrorCode::TruncatedPayload, "trailing bytes after payload in " + path);

  for (std::size_t i = 0; i < n; ++i)
    data[i] = std::bit_cast<float>(decode_u32le(raw.data() + i * 4));

  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(data[i]))
      throw Error(ErrorCode::NonFiniteValue,
                  "non-finite value at index " + std::to_string(i) + " in " + path);
  }
  return Tensor(std::move(dims), std::move(data));
}

void write_tensor(const Tensor& t, const std::string& path) {
  if (t.rank() == 0 || t.rank() > kMaxRank)
    throw Error(ErrorCode::RankOutOfRange, "rank " + std::to_string(t.rank()));
  if (t.data.size() != element_count(t.dims))
    throw Error(ErrorCode::InvalidDimension, "data length does not match dims");

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path + " for writing");

  out.write(kMagic, 4);
  unsigned char buf[4];
  encode_u32le(std::uint32_t(t.rank()), buf);
  out.write(reinterpret_cast<char*>(buf), 4);
  for (auto d : t.dims) {
    encode_u32le(d, buf);
    out.write(reinterpret_cast<char*>(buf), 4);
  }
  std::vector<unsigned char> raw(t.data.size() * 4);
  for (std::size_t i = 0; i < t.data.size(); ++i)
    encode_u32le(std::bit_cast<std::uint32_t>(t.data[i]), raw.data() + i * 4);
  out.write(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "short write to " + path);
}

// ---------------------------------------------------------------------------
// Annotations
// ---------------------------------------------------------------------------

AnnotationSet load_annotations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path);

  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }

  AnnotationSet ann;
  try {
    std::int64_t w = doc.at("width").get<std::int64_t>();
    std::int64_t h = doc.at("height").get<std::int64_t>();
    if (w <= 0 || h <= 0)
      throw Error(ErrorCode::ParseError, path + ": non-positive image size");
    ann.image_width = std::uint32_t(w);
    ann.image_height = std::uint32_t(h);
    for (const auto& jb : doc.at("boxes")) {
      Box b;
      b.x = jb.at("x").get<std::int64_t>();
      b.y = jb.at("y").get<std::int64_t>();
      b.w = jb.at("w").get<std::int64_t>();
      b.h = jb.at("h").get<std::int64_t>();
      b.label = jb.value("label", std::string());
      ann.boxes.push_back(std::move(b));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }

  for (const auto& b : ann.boxes) {
    if (b.w < 1 || b.h < 1)
      throw Error(ErrorCode::BoxOutOfBounds,
                  path + ": degenerate box " + std::to_string(b.w) + "x" +
                      std::to_string(b.h));
    if (b.x < 0 || b.y < 0 || b.x + b.w > std::int64_t(ann.image_width) ||
        b.y + b.h > std::int64_t(ann.image_height))
      throw Error(ErrorCode::BoxOutOfBounds,
                  path + ": box (" + std::to_string(b.x) + "," + std::to_string(b.y) +
                      "," + std::to_string(b.w) + "," + std::to_string(b.h) +
                      ") exceeds " + std::to_string(ann.image_width) + "x" +
                      std::to_string(ann.image_height));
  }
  return ann;
}

void write_annotations(const AnnotationSet& ann, const std::string& path) {
  nlohmann::json doc;
  doc["width"] = ann.image_width;
  doc["height"] = ann.image_height;
  doc["boxes"] = nlohmann::json::array();
  for (const auto& b : ann.boxes)
    doc["boxes"].push_back({{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}, {"label", b.label}});
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path + " for writing");
  out << doc.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Manifests
// ---------------------------------------------------------------------------

const char* to_string(ReferenceLabel label) {
  return label == ReferenceLabel::Malignant ? "malignant" : "benign";
}

const char* to_string(Nosology n) {
  switch (n) {
    case Nosology::MEL: return "MEL";
    case Nosology::BCC: return "BCC";
    case Nosology::SCC: return "SCC";
    case Nosology::DN: return "DN";
    case Nosology::NV: return "NV";
    case Nosology::Other: return "other";
  }
  return "other";
}

const char* to_string(Stage2Class c) {
  switch (c) {
    case Stage2Class::MEL: return "MEL";
    case Stage2Class::SCC: return "SCC";
    case Stage2Class::BCC: return "BCC";
  }
  return "MEL";
}

namespace {

std::optional<ReferenceLabel> parse_reference_label(const std::string& s,
                                                    std::vector<std::string>& problems,
                                                    const std::string& case_id) {
  if (s == "malignant") return ReferenceLabel::Malignant;
  if (s == "benign") return ReferenceLabel::Benign;
  problems.push_back(case_id + ": reference_label '" + s + "'");
  return std::nullopt;
}

std::optional<Nosology> parse_nosology(const std::string& s,
                                       std::vector<std::string>& problems,
                                       const std::string& case_id) {
  if (s == "MEL") return Nosology::MEL;
  if (s == "BCC") return Nosology::BCC;
  if (s == "SCC") return Nosology::SCC;
  if (s == "DN") return Nosology::DN;
  if (s == "NV") return Nosology::NV;
  if (s == "other") return Nosology::Other;
  problems.push_back(case_id + ": nosology_reference '" + s + "'");
  return std::nullopt;
}

std::optional<Stage2Class> parse_stage2(const std::string& s,
                                        std::vector<std::string>& problems,
                                        const std::string& case_id) {
  if (s == "MEL") return Stage2Class::MEL;
  if (s == "SCC") return Stage2Class::SCC;
  if (s == "BCC") return Stage2Class::BCC;
  problems.push_back(case_id + ": stage2_class '" + s + "'");
  return std::nullopt;
}

std::optional<std::string> resolved_path(const nlohmann::json& obj, const char* key,
                                         const std::filesystem::path& base) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  std::filesystem::path p = it->get<std::string>();
  if (p.is_relative()) p = base / p;
  return p.string();
}

}  // namespace

std::vector<CaseManifest> load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path);

  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
  if (!doc.is_array())
    throw Error(ErrorCode::ParseError, path + ": manifest must be a JSON array");

  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  std::vector<CaseManifest> cases;
  std::vector<std::string> problems;

  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& obj = doc[i];
    CaseManifest c;
    try {
      c.case_id = obj.value("case_id", std::string());
      if (c.case_id.empty()) {
        problems.push_back("case #" + std::to_string(i) + ": missing case_id");
        continue;
      }
      if (obj.contains("reference_label") && !obj["reference_label"].is_null())
        c.reference_label =
            parse_reference_label(obj["reference_label"].get<std::string>(), problems, c.case_id);
      if (obj.contains("nosology_reference") && !obj["nosology_reference"].is_null())
        c.nosology_reference =
            parse_nosology(obj["nosology_reference"].get<std::string>(), problems, c.case_id);
      if (!obj.contains("probability") || !obj["probability"].is_number()) {
        problems.push_back(c.case_id + ": missing probability");
        continue;
      }
      c.probability = obj["probability"].get<double>();
      if (obj.contains("stage2_class") && !obj["stage2_class"].is_null())
        c.stage2_class = parse_stage2(obj["stage2_class"].get<std::string>(), problems, c.case_id);
      c.attention_path = resolved_path(obj, "attention_path", base);
      c.activations_path = resolved_path(obj, "activations_path", base);
      c.gradients_path = resolved_path(obj, "gradients_path", base);
      c.annotation_path = resolved_path(obj, "annotation_path", base);
      c.architecture = obj.value("architecture", std::string());
      c.session = obj.value("session", std::string());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, path + ": case #" + std::to_string(i) + ": " + e.what());
    }

    if (!(c.probability >= 0.0 && c.probability <= 1.0))
      problems.push_back(c.case_id + ": probability " + std::to_string(c.probability) +
                         " outside [0,1]");
    else if (c.stage2_class && c.probability < 0.50)
      problems.push_back(c.case_id + ": stage2_class set but probability " +
                         std::to_string(c.probability) + " < 0.50");
    cases.push_back(std::move(c));
  }

  if (!problems.empty()) {
    std::ostringstream msg;
    msg << path << ": " << problems.size() << " invalid case(s):";
    for (const auto& p : problems) msg << " [" << p << "]";
    throw Error(ErrorCode::InvariantViolation, msg.str());
  }
  return cases;
}

// ---------------------------------------------------------------------------
// Attention stacks
// ---------------------------------------------------------------------------

AttentionStack make_attention_stack(const Tensor& stored, std::uint32_t target_index) {
  if (stored.rank() != 3 && stored.rank() != 4)
    throw Error(ErrorCode::ShapeMismatch,
                "attention tensor must be (L,T,T) or (L,H,T,T), got rank " +
                    std::to_string(stored.rank()));

  const bool raw = stored.rank() == 4;
  const std::uint32_t layer_count = stored.dims[0];
  const std::uint32_t t = raw ? stored.dims[2] : stored.dims[1];
  const std::uint32_t t2 = raw ? stored.dims[3] : stored.dims[2];
  if (t != t2)
    throw Error(ErrorCode::ShapeMismatch, "attention matrices must be square");
  if (layer_count == 0) throw Error(ErrorCode::EmptyStack, "attention stack has no layers");
  if (target_index >= t)
    throw Error(ErrorCode::GridMismatch,
                "target index " + std::to_string(target_index) + " outside " +
                    std::to_string(t) + " tokens");

  AttentionStack stack;
  stack.token_count = t;
  stack.target_index = target_index;

  const std::uint32_t heads = raw ? stored.dims[1] : 1;
  const std::size_t layer_stride = std::size_t(heads) * t * t;

  for (std::uint32_t l = 0; l < layer_count; ++l) {
    // validate rows of the stored form: non-negative, sums near 1
    for (std::uint32_t h = 0; h < heads; ++h) {
      for (std::uint32_t i = 0; i < t; ++i) {
        const float* row =
            stored.data.data() + std::size_t(l) * layer_stride + (std::size_t(h) * t + i) * t;
        double sum = 0.0;
        for (std::uint32_t j = 0; j < t; ++j) {
          if (row[j] < 0.0f)
            throw Error(ErrorCode::InvariantViolation,
                        "negative attention weight in layer " + std::to_string(l));
          sum += row[j];
        }
        if (std::abs(sum - 1.0) > 1e-4) {
          stack.warnings.push_back("layer " + std::to_string(l) +
                                   (raw ? " head " + std::to_string(h) : std::string()) +
                                   " row " + std::to_string(i) + " sums to " +
                                   std::to_string(sum));
        }
      }
    }

    if (raw) {
      Tensor layer({heads, t, t},
                   std::vector<float>(stored.data.begin() + std::size_t(l) * layer_stride,
                                      stored.data.begin() + std::size_t(l + 1) * layer_stride));
      stack.layers.push_back(head_average(layer));
    } else {
      stack.layers.emplace_back(
          std::vector<std::uint32_t>{t, t},
          std::vector<float>(stored.data.begin() + std::size_t(l) * layer_stride,
                             stored.data.begin() + std::size_t(l + 1) * layer_stride));
    }
  }
  return stack;
}

}  // namespace dermeval
