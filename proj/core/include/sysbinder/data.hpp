#pragma once

#include <torch/torch.h>

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sysbinder::data {

struct ObjectRecord {
  int id = 0;  // 1-based; equals the palette index in the mask PNG
  std::map<std::string, std::string> factors;
  double center_x = 0.0;
  double center_y = 0.0;
};

struct SceneRecord {
  int id = 0;
  torch::Tensor image;  // float32 [3,H,W] in [0,1]
  torch::Tensor masks;  // int64 [H,W]; 0 = background, i = object id
  std::vector<ObjectRecord> objects;
};

struct DatasetSpec {
  int64_t num_scenes = 6000;
  double train_fraction = 5000.0 / 6000.0;
  double val_fraction = 500.0 / 6000.0;
  int64_t image_size = 64;
  int min_objects = 2;
  int max_objects = 4;
  std::vector<std::string> colors = {"red", "yellow", "green", "cyan", "blue", "magenta"};
  std::vector<std::string> shapes = {"circle", "square", "triangle"};
  std::vector<std::string> sizes = {"medium"};
  int position_grid = 3;   // quantization of object centers into grid-cell labels
  double visibility_threshold = 0.2;
  int max_placement_retries = 100;
  uint64_t rng_seed = 7;

  int64_t split_count(const std::string& split) const;
  void validate() const;
};

struct Manifest {
  int version = 1;
  uint64_t seed = 0;
  int64_t image_size = 0;
  std::map<std::string, int64_t> splits;                          // split -> scene count
  std::map<std::string, std::vector<std::string>> factor_values;  // factor -> vocabulary
  double visibility_threshold = 0.0;

  static Manifest load(const std::string& root_dir);
  void save(const std::string& root_dir) const;
};

struct GenerationError : std::runtime_error {
  int scene_index;
  GenerationError(int scene, const std::string& what)
      : std::runtime_error(what), scene_index(scene) {}
};

// Renders every scene of every split under out_dir:
//   <out>/<split>/images/NNNNN.png
//   <out>/<split>/masks/NNNNN.png   (palette index = object id, 0 = background)
//   <out>/<split>/factors.jsonl
//   <out>/manifest.json
// Deterministic given spec.rng_seed (independent RNG stream per scene).
Manifest generate_dataset(const DatasetSpec& spec, const std::string& out_dir);

// Renders a single scene in memory; exposed for tests and tooling.
SceneRecord generate_scene(const DatasetSpec& spec, const std::string& split, int index);

// Read access to a generated (or externally provided) dataset directory.
class SplitLoader {
 public:
  SplitLoader(const std::string& root_dir, const std::string& split);

  size_t size() const { return static_cast<size_t>(count_); }
  SceneRecord load(size_t index) const;
  std::vector<size_t> shuffled_indices(uint64_t seed) const;
  const Manifest& manifest() const { return manifest_; }

  // Fast path for training: all images as one uint8 tensor [N,3,H,W].
  torch::Tensor load_images_u8() const;

 private:
  std::string root_;
  std::string split_;
  int64_t count_ = 0;
  Manifest manifest_;
  std::vector<std::vector<ObjectRecord>> objects_;  // per scene, from factors.jsonl
};

// RGB value of a named sprite color (also used by the hue-swap oracle).
std::array<uint8_t, 3> color_rgb(const std::string& name);

}  // namespace sysbinder::data
