#include "sysbinder/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace sysbinder {

namespace {

struct Field {
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

int64_t to_int(const std::string& v) {
  size_t pos = 0;
  int64_t out = std::stoll(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("not an integer: " + v);
  return out;
}

double to_double(const std::string& v) {
  size_t pos = 0;
  double out = std::stod(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("not a number: " + v);
  return out;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("not a boolean: " + v);
}

std::string from_double(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

const std::map<std::string, Field>& field_table() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    auto add_int = [&t](const std::string& k, int64_t ExperimentConfig::*p) {
      t[k] = {[p](const ExperimentConfig& c) { return std::to_string(c.*p); },
              [p](ExperimentConfig& c, const std::string& v) { c.*p = to_int(v); }};
    };
    auto add_double = [&t](const std::string& k, double ExperimentConfig::*p) {
      t[k] = {[p](const ExperimentConfig& c) { return from_double(c.*p); },
              [p](ExperimentConfig& c, const std::string& v) { c.*p = to_double(v); }};
    };
    auto add_bool = [&t](const std::string& k, bool ExperimentConfig::*p) {
      t[k] = {[p](const ExperimentConfig& c) { return std::string(c.*p ? "true" : "false"); },
              [p](ExperimentConfig& c, const std::string& v) { c.*p = to_bool(v); }};
    };
    auto add_string = [&t](const std::string& k, std::string ExperimentConfig::*p) {
      t[k] = {[p](const ExperimentConfig& c) { return c.*p; },
              [p](ExperimentConfig& c, const std::string& v) { c.*p = v; }};
    };

    add_int("seed", &ExperimentConfig::seed);
    add_int("batch_size", &ExperimentConfig::batch_size);
    add_int("training_steps", &ExperimentConfig::training_steps);
    add_int("image_size", &ExperimentConfig::image_size);
    add_int("image_channels", &ExperimentConfig::image_channels);
    add_string("frontend", &ExperimentConfig::frontend);
    add_int("frontend_mlp_hidden", &ExperimentConfig::frontend_mlp_hidden);
    add_int("num_slots", &ExperimentConfig::num_slots);
    add_int("num_blocks", &ExperimentConfig::num_blocks);
    add_int("block_size", &ExperimentConfig::block_size);
    add_int("num_prototypes", &ExperimentConfig::num_prototypes);
    add_int("num_iterations", &ExperimentConfig::num_iterations);
    add_bool("share_rnn_params", &ExperimentConfig::share_rnn_params);
    add_bool("use_rnn", &ExperimentConfig::use_rnn);
    add_bool("use_bottleneck", &ExperimentConfig::use_bottleneck);
    add_bool("share_concept_memory", &ExperimentConfig::share_concept_memory);
    add_int("patch_size", &ExperimentConfig::patch_size);
    add_int("vocab_size", &ExperimentConfig::vocab_size);
    add_int("dvae_hidden", &ExperimentConfig::dvae_hidden);
    add_double("temperature_start", &ExperimentConfig::temperature_start);
    add_double("temperature_end", &ExperimentConfig::temperature_end);
    add_int("temperature_decay_steps", &ExperimentConfig::temperature_decay_steps);
    add_int("num_decoder_blocks", &ExperimentConfig::num_decoder_blocks);
    add_int("num_decoder_heads", &ExperimentConfig::num_decoder_heads);
    add_int("decoder_hidden_size", &ExperimentConfig::decoder_hidden_size);
    add_double("dropout", &ExperimentConfig::dropout);
    add_int("coupler_heads", &ExperimentConfig::coupler_heads);
    add_bool("use_block_coupler", &ExperimentConfig::use_block_coupler);
    add_double("lr_dvae", &ExperimentConfig::lr_dvae);
    add_double("lr_sysbinder", &ExperimentConfig::lr_sysbinder);
    add_double("lr_decoder", &ExperimentConfig::lr_decoder);
    add_int("warmup_steps", &ExperimentConfig::warmup_steps);
    add_int("lr_half_life", &ExperimentConfig::lr_half_life);
    add_double("grad_clip", &ExperimentConfig::grad_clip);
    add_int("log_every", &ExperimentConfig::log_every);
    add_int("checkpoint_every", &ExperimentConfig::checkpoint_every);
    add_double("iou_threshold", &ExperimentConfig::iou_threshold);
    add_int("probe_trees", &ExperimentConfig::probe_trees);
    add_int("probe_depth", &ExperimentConfig::probe_depth);
    add_double("probe_learning_rate", &ExperimentConfig::probe_learning_rate);
    add_int("probe_min_samples", &ExperimentConfig::probe_min_samples);
    add_int("probe_seed", &ExperimentConfig::probe_seed);
    add_double("probe_eval_fraction", &ExperimentConfig::probe_eval_fraction);
    return t;
  }();
  return table;
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

int64_t frontend_total_stride(const std::string& preset) {
  if (preset == "desk64") return 4;
  if (preset == "clevr_easy") return 2;
  if (preset == "clevr_tex") return 4;
  throw std::invalid_argument("unknown frontend preset: " + preset);
}

}  // namespace

int64_t ExperimentConfig::feature_grid() const {
  int64_t stride = frontend_total_stride(frontend);
  if (image_size % stride != 0)
    throw std::invalid_argument("image_size " + std::to_string(image_size) +
                                " not divisible by frontend stride " + std::to_string(stride));
  return image_size / stride;
}

int64_t ExperimentConfig::feature_dim() const {
  if (frontend == "desk64") return 64;
  return 192;
}

int64_t ExperimentConfig::tokens_per_image() const {
  if (image_size % patch_size != 0)
    throw std::invalid_argument("image_size not divisible by patch_size");
  int64_t g = image_size / patch_size;
  return g * g;
}

void ExperimentConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("config: " + what);
  };
  require(num_slots >= 1, "num_slots must be >= 1");
  require(num_blocks >= 1, "num_blocks must be >= 1");
  require(block_size >= 1, "block_size must be >= 1");
  require(num_prototypes >= 1, "num_prototypes must be >= 1");
  require(num_iterations >= 1, "num_iterations must be >= 1");
  require(vocab_size >= 2, "vocab_size must be >= 2");
  require(temperature_start >= temperature_end && temperature_end > 0,
          "need temperature_start >= temperature_end > 0");
  require(lr_dvae > 0 && lr_sysbinder > 0 && lr_decoder > 0, "learning rates must be > 0");
  require(warmup_steps <= training_steps, "warmup_steps must be <= training_steps");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(decoder_hidden_size % num_decoder_heads == 0,
          "decoder_hidden_size must be divisible by num_decoder_heads");
  require(block_size % coupler_heads == 0, "block_size must be divisible by coupler_heads");
  feature_grid();
  tokens_per_image();
}

ExperimentConfig parse_config(std::istream& in, const std::string& origin) {
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    auto& table = field_table();
    auto it = table.find(key);
    if (it == table.end())
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    try {
      it->second.set(cfg, value);
    } catch (const std::exception& e) {
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  return parse_config(in, path);
}

std::string config_to_string(const ExperimentConfig& cfg) {
  std::ostringstream os;
  for (const auto& [key, field] : field_table()) os << key << " = " << field.get(cfg) << "\n";
  return os.str();
}

void save_config(const ExperimentConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config file: " + path);
  out << config_to_string(cfg);
}

ExperimentConfig desk_config() { return ExperimentConfig{}; }

ExperimentConfig clevr_easy_config() {
  ExperimentConfig cfg;
  cfg.frontend = "clevr_easy";
  cfg.image_size = 128;
  cfg.batch_size = 40;
  cfg.training_steps = 200000;
  cfg.num_slots = 4;
  cfg.num_blocks = 8;
  cfg.block_size = 256;
  cfg.num_prototypes = 64;
  cfg.num_iterations = 3;
  cfg.patch_size = 4;
  cfg.vocab_size = 4096;
  cfg.temperature_decay_steps = 30000;
  cfg.num_decoder_blocks = 8;
  cfg.num_decoder_heads = 4;
  cfg.decoder_hidden_size = 192;
  cfg.warmup_steps = 30000;
  cfg.lr_half_life = 250000;
  return cfg;
}

ExperimentConfig clevr_tex_config() {
  ExperimentConfig cfg = clevr_easy_config();
  cfg.frontend = "clevr_tex";
  cfg.training_steps = 400000;
  cfg.num_slots = 6;
  cfg.num_blocks = 8;
  cfg.num_decoder_heads = 8;
  return cfg;
}

}  // namespace sysbinder
