// Writes the deterministic synthetic datasets used by the integration and
// acceptance suites: a 176-case screening manifest with the published zone
// and confusion structure, a 180-lesion IoU set evaluated under four
// architectures, and a small demo set with real tensors for the saliency
// pipeline. Output is bit-stable: no clocks, no global RNG.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dermeval/error.hpp"
#include "dermeval/tensor.hpp"
#include "dermeval/tensor_io.hpp"

namespace fs = std::filesystem;
using dermeval::Tensor;

namespace {

struct Lcg {
  std::uint64_t state;
  explicit Lcg(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    state = state * 6364136223846793005ull + 1442695040888963407ull;
    return state >> 33;
  }
  double uniform() { return double(next() % 1000000) / 1000000.0; }
};

void write_json(const fs::path& path, const nlohmann::json& doc) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw dermeval::Error(dermeval::ErrorCode::IoFailure, path.string());
  out << doc.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// validation176: four screening sessions, 176 cases
// ---------------------------------------------------------------------------

struct CaseSpec {
  std::string nosology;      // MEL/BCC/DN/NV/other
  std::string reference;     // malignant/benign
  std::string stage2;        // empty when below the cascade threshold
  double probability;
};

void gen_validation(const fs::path& dir) {
  fs::create_directories(dir);

  struct SessionPlan {
    std::string date;
    int green_nv;
    int yellow_dn;
    int yellow_nv;
    // red-zone composition
    std::vector<CaseSpec> red;
  };

  auto tp = [](const char* nos, double p) {
    return CaseSpec{nos, "malignant", nos, p};
  };
  auto fp = [](const char* nos, const char* stage2, double p) {
    return CaseSpec{nos, "benign", stage2, p};
  };

  int counter = 0;
  auto green_p = [&] { return double(10 + (counter * 97) % 139) / 1000.0; };
  auto yellow_p = [&] { return double(150 + (counter * 83) % 349) / 1000.0; };
  auto red_p = [&] { return double(500 + (counter * 73) % 470) / 1000.0; };

  // false positives: seborrhoeic keratoses and dysplastic naevi read as MEL,
  // crusted haemangiomas as SCC
  std::vector<SessionPlan> sessions;
  sessions.push_back({"2025-06-07", 27, 4, 4,
                      {fp("other", "MEL", 0.500), fp("other", "MEL", 0), fp("DN", "MEL", 0),
                       fp("DN", "MEL", 0), fp("other", "SCC", 0)}});
  sessions.push_back({"2025-10-17", 29, 2, 6,
                      {tp("BCC", 0.76), fp("other", "MEL", 0), fp("other", "MEL", 0),
                       fp("DN", "MEL", 0), fp("DN", "MEL", 0), fp("other", "SCC", 0)}});
  sessions.push_back({"2025-12-26", 36, 0, 7,
                      {tp("MEL", 0.83), tp("MEL", 0.88), fp("other", "MEL", 0),
                       fp("other", "MEL", 0), fp("other", "MEL", 0), fp("DN", "MEL", 0),
                       fp("other", "SCC", 0)}});
  sessions.push_back({"2026-04-24", 29, 0, 7,
                      {tp("MEL", 0.71), tp("BCC", 0.66), fp("other", "MEL", 0),
                       fp("other", "MEL", 0), fp("DN", "MEL", 0), fp("other", "SCC", 0),
                       fp("other", "SCC", 0)}});

  nlohmann::json manifest = nlohmann::json::array();
  std::vector<std::string> green_ids, yellow_ids, red_ids;
  bool first_yellow = true;

  int session_no = 6;
  for (const auto& plan : sessions) {
    int case_no = 0;
    auto add_case = [&](const CaseSpec& spec, const std::string& zone) {
      char id[32];
      std::snprintf(id, sizeof id, "S%d-%03d", session_no, ++case_no);
      nlohmann::json j;
      j["case_id"] = id;
      j["reference_label"] = spec.reference;
      j["nosology_reference"] = spec.nosology;
      j["probability"] = spec.probability;
      if (!spec.stage2.empty()) j["stage2_class"] = spec.stage2;
      j["architecture"] = "ViT-B/16";
      j["session"] = plan.date;
      manifest.push_back(j);
      if (zone == "green") green_ids.push_back(id);
      else if (zone == "yellow") yellow_ids.push_back(id);
      else red_ids.push_back(id);
      ++counter;
    };

    for (int i = 0; i < plan.green_nv; ++i)
      add_case({"NV", "benign", "", green_p()}, "green");
    for (int i = 0; i < plan.yellow_dn; ++i) {
      double p = first_yellow ? 0.150 : yellow_p();
      first_yellow = false;
      add_case({"DN", "benign", "", p}, "yellow");
    }
    for (int i = 0; i < plan.yellow_nv; ++i)
      add_case({"NV", "benign", "", yellow_p()}, "yellow");
    for (CaseSpec spec : plan.red) {
      if (spec.probability == 0) spec.probability = red_p();
      add_case(spec, "red");
    }
    ++session_no;
  }
  write_json(dir / "manifest.json", manifest);

  // paired GP assessments: 22 cases improve with the system (mostly yellow
  // zone), 2 degrade, 123 are correct both ways and 29 wrong both ways
  nlohmann::json paired = nlohmann::json::array();
  auto emit = [&](const std::string& id, bool baseline, bool assisted) {
    paired.push_back({{"case_id", id},
                      {"baseline_correct", baseline},
                      {"assisted_correct", assisted}});
  };
  for (std::size_t i = 0; i < yellow_ids.size(); ++i)
    emit(yellow_ids[i], i >= 22, true);
  for (std::size_t i = 0; i < red_ids.size(); ++i)
    emit(red_ids[i], i >= 20, i >= 20);
  for (std::size_t i = 0; i < green_ids.size(); ++i) {
    if (i < 2) emit(green_ids[i], true, false);
    else if (i < 11) emit(green_ids[i], false, false);
    else emit(green_ids[i], true, true);
  }
  write_json(dir / "paired_assessments.json", paired);
}

// ---------------------------------------------------------------------------
// iou180: 180 annotated lesions x 4 architectures
// ---------------------------------------------------------------------------

// n integer IoU values (hundredths) with the exact sum `target`, spread
// symmetrically so the group has a plausible SD
std::vector<int> distribute(int n, long long target, int salt) {
  const int base = int(target / n);
  const int rem = int(target - (long long)base * n);
  std::vector<int> values(n, base);
  for (int i = 0; i < rem; ++i) values[i] += 1;
  for (int i = 0; i < n / 2; ++i) {
    const int delta = (i * 17 + salt * 7) % 11 + 2;
    int& a = values[i];
    int& b = values[n - 1 - i];
    if (a + delta <= 97 && b - delta >= 3) {
      a += delta;
      b -= delta;
    }
  }
  return values;
}

void gen_iou180(const fs::path& dir) {
  fs::create_directories(dir / "annotations");
  fs::create_directories(dir / "maps");

  const char* structure_labels[6] = {"reticular_network", "globules",    "pseudopods",
                                     "blue_white_veil",   "vascular",    "pseudopodial"};
  struct ClassBlock {
    const char* nosology;
    int n;
  };
  const ClassBlock classes[4] = {{"MEL", 18}, {"BCC", 15}, {"DN", 16}, {"NV", 131}};

  struct Arch {
    const char* key;
    const char* tag;
    // hundredth sums per class, chosen so the overall mean over 180 lands
    // exactly on the reported per-architecture value
    long long sums[4];
  };
  const Arch archs[4] = {
      {"vit", "ViT-B/16", {18 * 74, 15 * 71, 16 * 68, 8935}},
      {"swin", "Swin-T", {18 * 69, 15 * 67, 16 * 63, 8265}},
      {"convnext", "ConvNeXt-B", {18 * 58, 15 * 56, 16 * 52, 6824}},
      {"effnetv2", "EfficientNetV2", {18 * 55, 15 * 54, 16 * 50, 6580}},
  };

  const int img_w = 120, img_h = 8;
  const int box_x = 10, box_y = 3, box_w = 100, box_h = 1;

  // annotations, one per lesion
  int lesion = 0;
  for (const auto& block : classes) {
    for (int i = 0; i < block.n; ++i, ++lesion) {
      dermeval::AnnotationSet ann;
      ann.image_width = img_w;
      ann.image_height = img_h;
      ann.boxes.push_back({box_x, box_y, box_w, box_h, structure_labels[lesion % 6]});
      char name[32];
      std::snprintf(name, sizeof name, "L%03d.json", lesion + 1);
      dermeval::write_annotations(ann, (dir / "annotations" / name).string());
    }
  }

  nlohmann::json manifest = nlohmann::json::array();
  for (int a = 0; a < 4; ++a) {
    lesion = 0;
    for (int g = 0; g < 4; ++g) {
      const auto values = distribute(classes[g].n, archs[a].sums[g], a * 4 + g);
      for (int i = 0; i < classes[g].n; ++i, ++lesion) {
        char case_id[32], ann_name[32];
        std::snprintf(case_id, sizeof case_id, "L%03d-%s", lesion + 1, archs[a].key);
        std::snprintf(ann_name, sizeof ann_name, "annotations/L%03d.json", lesion + 1);

        // model mask nested inside the expert box: IoU = k/100 exactly
        const int k = values[i];
        Tensor map = Tensor::zeros({std::uint32_t(img_h), std::uint32_t(img_w)});
        for (int x = 0; x < k; ++x)
          map.data[std::size_t(box_y) * img_w + box_x + x] = 1.0f;
        dermeval::write_tensor(map, (dir / "maps" / (std::string(case_id) + ".tnsr")).string());

        const std::string nosology = classes[g].nosology;
        nlohmann::json j;
        j["case_id"] = case_id;
        j["nosology_reference"] = nosology;
        if (nosology == "MEL" || nosology == "BCC") {
          j["reference_label"] = "malignant";
          j["probability"] = 0.55 + double((lesion * 13) % 40) / 100.0;
          j["stage2_class"] = nosology;
        } else {
          j["reference_label"] = "benign";
          j["probability"] = (nosology == "DN" ? 0.16 : 0.01) +
                             double((lesion * 13) % 30) / 100.0;
        }
        j["annotation_path"] = ann_name;
        j["architecture"] = archs[a].tag;
        j["session"] = "annotation-subset";
        manifest.push_back(j);
      }
    }
  }
  write_json(dir / "manifest.json", manifest);
}

// ---------------------------------------------------------------------------
// demo: small cases with real tensors for the saliency pipeline
// ---------------------------------------------------------------------------

Tensor row_stochastic_stack(Lcg& rng, std::uint32_t layers, std::uint32_t heads,
                            std::uint32_t tokens) {
  std::vector<std::uint32_t> dims;
  if (heads > 0) dims = {layers, heads, tokens, tokens};
  else dims = {layers, tokens, tokens};
  Tensor t = Tensor::zeros(dims);
  const std::uint32_t h = heads > 0 ? heads : 1;
  std::size_t idx = 0;
  for (std::uint32_t l = 0; l < layers * h; ++l) {
    for (std::uint32_t i = 0; i < tokens; ++i) {
      double sum = 0.0;
      std::vector<double> row(tokens);
      for (auto& v : row) {
        v = 0.05 + rng.uniform();
        sum += v;
      }
      for (std::uint32_t j = 0; j < tokens; ++j) t.data[idx++] = float(row[j] / sum);
    }
  }
  return t;
}

void gen_demo(const fs::path& dir) {
  fs::create_directories(dir / "tensors");
  fs::create_directories(dir / "annotations");
  Lcg rng(20250607);

  dermeval::AnnotationSet ann;
  ann.image_width = 16;
  ann.image_height = 16;
  ann.boxes.push_back({2, 2, 6, 6, "reticular_network"});
  ann.boxes.push_back({8, 8, 5, 4, "globules"});
  dermeval::write_annotations(ann, (dir / "annotations" / "lesion.json").string());

  // ViT-style: raw heads, class token (T = 2*2 + 1)
  dermeval::write_tensor(row_stochastic_stack(rng, 2, 2, 5),
                         (dir / "tensors" / "vit_attention.tnsr").string());
  // Swin-style: pre-averaged, patch tokens only (T = 2*2)
  dermeval::write_tensor(row_stochastic_stack(rng, 3, 0, 4),
                         (dir / "tensors" / "swin_attention.tnsr").string());
  // pre-averaged stack whose rows do not sum to 1: exercised as a warning
  {
    Tensor t = Tensor::zeros({1, 4, 4});
    for (auto& v : t.data) v = 0.225f;  // rows sum to 0.9
    dermeval::write_tensor(t, (dir / "tensors" / "unnormalized_attention.tnsr").string());
  }
  // ConvNeXt-style activations and gradients
  {
    Tensor acts = Tensor::zeros({3, 4, 4});
    Tensor grads = Tensor::zeros({3, 4, 4});
    for (auto& v : acts.data) v = float(rng.uniform() * 2.0 - 0.5);
    for (auto& v : grads.data) v = float(rng.uniform() - 0.3);
    dermeval::write_tensor(acts, (dir / "tensors" / "conv_activations.tnsr").string());
    dermeval::write_tensor(grads, (dir / "tensors" / "conv_gradients.tnsr").string());
  }

  nlohmann::json manifest = nlohmann::json::array();
  auto base_case = [](const char* id, const char* arch) {
    nlohmann::json j;
    j["case_id"] = id;
    j["reference_label"] = "benign";
    j["nosology_reference"] = "NV";
    j["probability"] = 0.12;
    j["annotation_path"] = "annotations/lesion.json";
    j["architecture"] = arch;
    j["session"] = "2025-06-07";
    return j;
  };
  {
    auto j = base_case("demo-vit", "ViT-B/16");
    j["attention_path"] = "tensors/vit_attention.tnsr";
    manifest.push_back(j);
  }
  {
    auto j = base_case("demo-swin", "Swin-T");
    j["attention_path"] = "tensors/swin_attention.tnsr";
    manifest.push_back(j);
  }
  {
    auto j = base_case("demo-warn", "Swin-T");
    j["attention_path"] = "tensors/unnormalized_attention.tnsr";
    manifest.push_back(j);
  }
  {
    auto j = base_case("demo-convnext", "ConvNeXt-B");
    j["activations_path"] = "tensors/conv_activations.tnsr";
    j["gradients_path"] = "tensors/conv_gradients.tnsr";
    manifest.push_back(j);
  }
  {
    // broken on purpose: the tensor file does not exist
    auto j = base_case("demo-broken", "ViT-B/16");
    j["attention_path"] = "tensors/missing.tnsr";
    manifest.push_back(j);
  }
  write_json(dir / "manifest.json", manifest);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: %s <output-dir>\n", argv[0]);
    return 2;
  }
  try {
    const fs::path root = argv[1];
    gen_validation(root / "validation176");
    gen_iou180(root / "iou180");
    gen_demo(root / "demo");
    std::printf("fixtures written to %s\n", root.string().c_str());
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
