#include "sysbinder/data.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "sysbinder/png_io.hpp"

namespace sysbinder::data {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr uint8_t kBackgroundGray = 64;  // 0.25 in [0,1]

const std::map<std::string, std::array<uint8_t, 3>>& color_table() {
  static const std::map<std::string, std::array<uint8_t, 3>> table = {
      {"red", {220, 30, 30}},    {"yellow", {220, 220, 30}}, {"green", {30, 220, 30}},
      {"cyan", {30, 220, 220}},  {"blue", {30, 30, 220}},    {"magenta", {220, 30, 220}},
  };
  return table;
}

double size_radius(const std::string& name) {
  if (name == "small") return 8.0;
  if (name == "medium") return 11.0;
  if (name == "large") return 14.0;
  throw std::invalid_argument("unknown size name: " + name);
}

// SplitMix64; decorrelates per-scene streams from a single dataset seed.
uint64_t mix_seed(uint64_t a, uint64_t b) {
  uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

uint64_t split_offset(const std::string& split) {
  if (split == "train") return 0;
  if (split == "val") return 1u << 24;
  if (split == "test") return 2u << 24;
  throw std::invalid_argument("unknown split: " + split);
}

struct Sprite {
  std::string color, shape, size;
  double x = 0, y = 0;
  double radius = 0;

  bool contains(double px, double py) const {
    double dx = px - x, dy = py - y;
    if (shape == "circle") return dx * dx + dy * dy <= radius * radius;
    if (shape == "square") {
      double h = radius * 0.86;
      return std::abs(dx) <= h && std::abs(dy) <= h;
    }
    // Equilateral triangle (tip up) with circumradius `radius`.
    double v0x = 0, v0y = -radius;
    double v1x = radius * 0.8660254, v1y = radius * 0.5;
    double v2x = -v1x, v2y = v1y;
    auto side = [&](double ax, double ay, double bx, double by) {
      return (bx - ax) * (dy - ay) - (by - ay) * (dx - ax);
    };
    double s0 = side(v0x, v0y, v1x, v1y);
    double s1 = side(v1x, v1y, v2x, v2y);
    double s2 = side(v2x, v2y, v0x, v0y);
    return (s0 >= 0 && s1 >= 0 && s2 >= 0) || (s0 <= 0 && s1 <= 0 && s2 <= 0);
  }
};

std::string position_label(double x, double y, int64_t image_size, int grid) {
  int col = std::min<int>(grid - 1, static_cast<int>(x / (static_cast<double>(image_size) / grid)));
  int row = std::min<int>(grid - 1, static_cast<int>(y / (static_cast<double>(image_size) / grid)));
  return "r" + std::to_string(row) + "c" + std::to_string(col);
}

std::string scene_filename(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%05d.png", index);
  return buf;
}

// Viewer palette for mask PNGs; index 0 (background) is black.
std::vector<std::array<uint8_t, 3>> mask_palette(int n_objects) {
  static const std::array<std::array<uint8_t, 3>, 8> base = {{{0, 0, 0},
                                                              {230, 80, 80},
                                                              {80, 230, 80},
                                                              {80, 80, 230},
                                                              {230, 230, 80},
                                                              {80, 230, 230},
                                                              {230, 80, 230},
                                                              {160, 160, 160}}};
  std::vector<std::array<uint8_t, 3>> pal;
  for (int i = 0; i <= n_objects; ++i) pal.push_back(base[i % base.size()]);
  return pal;
}

}  // namespace

std::array<uint8_t, 3> color_rgb(const std::string& name) {
  auto it = color_table().find(name);
  if (it == color_table().end()) throw std::invalid_argument("unknown color name: " + name);
  return it->second;
}

int64_t DatasetSpec::split_count(const std::string& split) const {
  int64_t train = std::llround(train_fraction * static_cast<double>(num_scenes));
  int64_t val = std::llround(val_fraction * static_cast<double>(num_scenes));
  if (split == "train") return train;
  if (split == "val") return val;
  if (split == "test") return num_scenes - train - val;
  throw std::invalid_argument("unknown split: " + split);
}

void DatasetSpec::validate() const {
  if (colors.empty() || shapes.empty() || sizes.empty())
    throw std::invalid_argument("factor palettes must be non-empty");
  if (min_objects < 1 || max_objects < min_objects)
    throw std::invalid_argument("bad objects_per_scene range");
  if (visibility_threshold <= 0 || visibility_threshold > 1)
    throw std::invalid_argument("visibility_threshold must be in (0,1]");
  if (split_count("train") < 0 || split_count("val") < 0 || split_count("test") < 0)
    throw std::invalid_argument("split fractions exceed num_scenes");
  for (const auto& c : colors) color_rgb(c);
  for (const auto& s : sizes) size_radius(s);
}

SceneRecord generate_scene(const DatasetSpec& spec, const std::string& split, int index) {
  const int64_t hw = spec.image_size;
  std::mt19937_64 rng(mix_seed(spec.rng_seed, split_offset(split) + static_cast<uint64_t>(index)));

  auto pick = [&rng](const std::vector<std::string>& v) {
    std::uniform_int_distribution<size_t> d(0, v.size() - 1);
    return v[d(rng)];
  };

  std::uniform_int_distribution<int> count_dist(spec.min_objects, spec.max_objects);
  const int n_objects = count_dist(rng);

  std::vector<Sprite> sprites;
  torch::Tensor owner;
  std::vector<int64_t> full_area;
  bool placed = false;
  for (int attempt = 0; attempt <= spec.max_placement_retries && !placed; ++attempt) {
    sprites.clear();
    for (int i = 0; i < n_objects; ++i) {
      Sprite s;
      s.color = pick(spec.colors);
      s.shape = pick(spec.shapes);
      s.size = pick(spec.sizes);
      s.radius = size_radius(s.size);
      // Sample the grid cell uniformly, then the continuous center within the
      // cell intersected with the in-frame margin, so cell labels stay balanced.
      double margin = s.radius + 1.0;
      double cell = static_cast<double>(hw) / spec.position_grid;
      std::uniform_int_distribution<int> cell_dist(0, spec.position_grid - 1);
      int cx_cell = cell_dist(rng), cy_cell = cell_dist(rng);
      auto span = [&](int c) {
        double lo = std::max(c * cell, margin);
        double hi = std::min((c + 1) * cell, static_cast<double>(hw) - margin);
        return std::pair<double, double>(lo, hi);
      };
      auto [x_lo, x_hi] = span(cx_cell);
      auto [y_lo, y_hi] = span(cy_cell);
      if (x_lo >= x_hi || y_lo >= y_hi) {
        --i;  // cell too small for this sprite size; resample
        continue;
      }
      std::uniform_real_distribution<double> dx(x_lo, x_hi), dy(y_lo, y_hi);
      s.x = dx(rng);
      s.y = dy(rng);
      sprites.push_back(s);
    }

    // Paint owners back-to-front: later sprites occlude earlier ones.
    owner = torch::zeros({hw, hw}, torch::kInt64);
    auto own = owner.accessor<int64_t, 2>();
    full_area.assign(n_objects, 0);
    std::vector<int64_t> visible(n_objects, 0);
    for (int i = 0; i < n_objects; ++i) {
      const Sprite& s = sprites[i];
      int y0 = std::max<int>(0, static_cast<int>(s.y - s.radius - 1));
      int y1 = std::min<int>(hw - 1, static_cast<int>(s.y + s.radius + 1));
      int x0 = std::max<int>(0, static_cast<int>(s.x - s.radius - 1));
      int x1 = std::min<int>(hw - 1, static_cast<int>(s.x + s.radius + 1));
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
          if (s.contains(x + 0.5, y + 0.5)) {
            ++full_area[i];
            own[y][x] = i + 1;
          }
    }
    for (int y = 0; y < hw; ++y)
      for (int x = 0; x < hw; ++x)
        if (own[y][x] > 0) ++visible[own[y][x] - 1];

    placed = true;
    for (int i = 0; i < n_objects; ++i) {
      if (full_area[i] == 0 ||
          static_cast<double>(visible[i]) < spec.visibility_threshold * static_cast<double>(full_area[i]))
        placed = false;
    }
  }
  if (!placed)
    throw GenerationError(index, "scene " + std::to_string(index) + " (" + split +
                                     "): no placement satisfies the visibility threshold after " +
                                     std::to_string(spec.max_placement_retries) + " retries");

  SceneRecord rec;
  rec.id = index;
  rec.masks = owner;
  rec.image = torch::empty({3, hw, hw}, torch::kFloat32);
  auto img = rec.image.accessor<float, 3>();
  auto own = owner.accessor<int64_t, 2>();
  for (int y = 0; y < hw; ++y)
    for (int x = 0; x < hw; ++x) {
      std::array<uint8_t, 3> rgb = {kBackgroundGray, kBackgroundGray, kBackgroundGray};
      if (own[y][x] > 0) rgb = color_rgb(sprites[own[y][x] - 1].color);
      for (int c = 0; c < 3; ++c) img[c][y][x] = static_cast<float>(rgb[c]) / 255.0f;
    }

  for (int i = 0; i < n_objects; ++i) {
    ObjectRecord obj;
    obj.id = i + 1;
    obj.center_x = sprites[i].x;
    obj.center_y = sprites[i].y;
    obj.factors["color"] = sprites[i].color;
    obj.factors["shape"] = sprites[i].shape;
    obj.factors["size"] = sprites[i].size;
    obj.factors["position"] = position_label(sprites[i].x, sprites[i].y, hw, spec.position_grid);
    rec.objects.push_back(std::move(obj));
  }
  return rec;
}

void Manifest::save(const std::string& root_dir) const {
  json j;
  j["version"] = version;
  j["seed"] = seed;
  j["image_size"] = image_size;
  j["splits"] = splits;
  j["factors"] = factor_values;
  j["visibility_threshold"] = visibility_threshold;
  std::ofstream out(fs::path(root_dir) / "manifest.json");
  if (!out) throw std::runtime_error("cannot write manifest under " + root_dir);
  out << j.dump(2) << "\n";
}

Manifest Manifest::load(const std::string& root_dir) {
  fs::path path = fs::path(root_dir) / "manifest.json";
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing manifest: " + path.string());
  json j = json::parse(in);
  Manifest m;
  m.version = j.at("version").get<int>();
  m.seed = j.at("seed").get<uint64_t>();
  m.image_size = j.at("image_size").get<int64_t>();
  m.splits = j.at("splits").get<std::map<std::string, int64_t>>();
  m.factor_values = j.at("factors").get<std::map<std::string, std::vector<std::string>>>();
  m.visibility_threshold = j.value("visibility_threshold", 0.0);
  return m;
}

Manifest generate_dataset(const DatasetSpec& spec, const std::string& out_dir) {
  spec.validate();

  Manifest manifest;
  manifest.seed = spec.rng_seed;
  manifest.image_size = spec.image_size;
  manifest.visibility_threshold = spec.visibility_threshold;
  manifest.factor_values["color"] = spec.colors;
  manifest.factor_values["shape"] = spec.shapes;
  manifest.factor_values["size"] = spec.sizes;
  for (int r = 0; r < spec.position_grid; ++r)
    for (int c = 0; c < spec.position_grid; ++c)
      manifest.factor_values["position"].push_back("r" + std::to_string(r) + "c" + std::to_string(c));

  for (const std::string split : {"train", "val", "test"}) {
    const int64_t count = spec.split_count(split);
    manifest.splits[split] = count;
    fs::create_directories(fs::path(out_dir) / split / "images");
    fs::create_directories(fs::path(out_dir) / split / "masks");
    std::ofstream factors_out(fs::path(out_dir) / split / "factors.jsonl");
    if (!factors_out) throw std::runtime_error("cannot write factors.jsonl under " + out_dir);

    for (int64_t i = 0; i < count; ++i) {
      SceneRecord rec = generate_scene(spec, split, static_cast<int>(i));

      png::Rgb8Image img;
      img.height = img.width = static_cast<int>(spec.image_size);
      img.pixels.resize(static_cast<size_t>(img.height) * img.width * 3);
      auto acc = rec.image.accessor<float, 3>();
      for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
          for (int c = 0; c < 3; ++c)
            img.at(y, x, c) = static_cast<uint8_t>(std::lround(acc[c][y][x] * 255.0f));
      png::write_rgb8((fs::path(out_dir) / split / "images" / scene_filename(rec.id)).string(), img);

      png::IndexedImage mask;
      mask.height = mask.width = static_cast<int>(spec.image_size);
      mask.indices.resize(static_cast<size_t>(mask.height) * mask.width);
      mask.palette = mask_palette(static_cast<int>(rec.objects.size()));
      auto own = rec.masks.accessor<int64_t, 2>();
      for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
          mask.at(y, x) = static_cast<uint8_t>(own[y][x]);
      png::write_indexed8((fs::path(out_dir) / split / "masks" / scene_filename(rec.id)).string(), mask);

      json line;
      line["scene"] = rec.id;
      line["objects"] = json::array();
      for (const auto& obj : rec.objects) {
        json o;
        o["id"] = obj.id;
        o["factors"] = obj.factors;
        o["center"] = {obj.center_x, obj.center_y};
        line["objects"].push_back(o);
      }
      factors_out << line.dump() << "\n";
    }
  }

  manifest.save(out_dir);
  return manifest;
}

SplitLoader::SplitLoader(const std::string& root_dir, const std::string& split)
    : root_(root_dir), split_(split), manifest_(Manifest::load(root_dir)) {
  auto it = manifest_.splits.find(split);
  if (it == manifest_.splits.end())
    throw std::runtime_error("split '" + split + "' not present in " + root_dir + "/manifest.json");
  count_ = it->second;

  fs::path factors_path = fs::path(root_) / split_ / "factors.jsonl";
  std::ifstream in(factors_path);
  if (!in) throw std::runtime_error("missing factor metadata: " + factors_path.string());
  std::string line;
  objects_.resize(static_cast<size_t>(count_));
  int64_t seen = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    int64_t scene = j.at("scene").get<int64_t>();
    if (scene < 0 || scene >= count_)
      throw std::runtime_error("factors.jsonl scene id out of range in " + factors_path.string());
    std::vector<ObjectRecord> objs;
    for (const auto& o : j.at("objects")) {
      ObjectRecord rec;
      rec.id = o.at("id").get<int>();
      rec.factors = o.at("factors").get<std::map<std::string, std::string>>();
      if (o.contains("center")) {
        rec.center_x = o["center"][0].get<double>();
        rec.center_y = o["center"][1].get<double>();
      }
      objs.push_back(std::move(rec));
    }
    objects_[static_cast<size_t>(scene)] = std::move(objs);
    ++seen;
  }
  if (seen != count_)
    throw std::runtime_error("factors.jsonl lists " + std::to_string(seen) + " scenes, manifest says " +
                             std::to_string(count_) + ": " + factors_path.string());
}

SceneRecord SplitLoader::load(size_t index) const {
  if (index >= static_cast<size_t>(count_)) throw std::out_of_range("scene index out of range");
  fs::path img_path = fs::path(root_) / split_ / "images" / scene_filename(static_cast<int>(index));
  fs::path mask_path = fs::path(root_) / split_ / "masks" / scene_filename(static_cast<int>(index));
  if (!fs::exists(img_path)) throw std::runtime_error("missing image file: " + img_path.string());
  if (!fs::exists(mask_path)) throw std::runtime_error("missing mask file: " + mask_path.string());

  png::Rgb8Image img = png::read_rgb8(img_path.string());
  png::IndexedImage mask = png::read_indexed8(mask_path.string());

  SceneRecord rec;
  rec.id = static_cast<int>(index);
  rec.image = torch::empty({3, img.height, img.width}, torch::kFloat32);
  auto acc = rec.image.accessor<float, 3>();
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) acc[c][y][x] = static_cast<float>(img.at(y, x, c)) / 255.0f;

  rec.masks = torch::zeros({mask.height, mask.width}, torch::kInt64);
  auto own = rec.masks.accessor<int64_t, 2>();
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) own[y][x] = mask.at(y, x);

  rec.objects = objects_[index];
  return rec;
}

std::vector<size_t> SplitLoader::shuffled_indices(uint64_t seed) const {
  std::vector<size_t> idx(static_cast<size_t>(count_));
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

torch::Tensor SplitLoader::load_images_u8() const {
  const int64_t hw = manifest_.image_size;
  torch::Tensor out = torch::empty({count_, 3, hw, hw}, torch::kUInt8);
  for (int64_t i = 0; i < count_; ++i) {
    fs::path img_path = fs::path(root_) / split_ / "images" / scene_filename(static_cast<int>(i));
    if (!fs::exists(img_path)) throw std::runtime_error("missing image file: " + img_path.string());
    png::Rgb8Image img = png::read_rgb8(img_path.string());
    auto acc = out.accessor<uint8_t, 4>();
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        for (int c = 0; c < 3; ++c) acc[i][c][y][x] = img.at(y, x, c);
  }
  return out;
}

}  // namespace sysbinder::data
