#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

namespace sysbinder {

// One flat bag of experiment knobs. Key names in the config file mirror the
// hyperparameter names used throughout the model (batch_size, block_size,
// num_prototypes, ...). Defaults are the desk-scale 64x64 setup; the
// `clevr_easy` / `clevr_tex` presets switch to the full-scale values.
struct ExperimentConfig {
  // general
  int64_t seed = 1;
  int64_t batch_size = 24;
  int64_t training_steps = 30000;
  int64_t image_size = 64;
  int64_t image_channels = 3;

  // backbone encoder. Presets: "desk64", "clevr_easy", "clevr_tex".
  std::string frontend = "desk64";
  int64_t frontend_mlp_hidden = 192;

  // sysbinder
  int64_t num_slots = 5;
  int64_t num_blocks = 4;
  int64_t block_size = 32;
  int64_t num_prototypes = 16;
  int64_t num_iterations = 3;
  bool share_rnn_params = false;
  bool use_rnn = true;
  bool use_bottleneck = true;
  bool share_concept_memory = false;

  // dVAE tokenizer
  int64_t patch_size = 8;
  int64_t vocab_size = 256;
  int64_t dvae_hidden = 64;
  double temperature_start = 1.0;
  double temperature_end = 0.1;
  int64_t temperature_decay_steps = 3000;

  // transformer decoder
  int64_t num_decoder_blocks = 4;
  int64_t num_decoder_heads = 4;
  int64_t decoder_hidden_size = 128;
  double dropout = 0.1;
  int64_t coupler_heads = 4;
  bool use_block_coupler = true;

  // optimization
  double lr_dvae = 3e-4;
  double lr_sysbinder = 1e-4;
  double lr_decoder = 3e-4;
  int64_t warmup_steps = 3000;
  int64_t lr_half_life = 25000;
  double grad_clip = 1.0;
  int64_t log_every = 25;
  int64_t checkpoint_every = 2000;

  // evaluation
  double iou_threshold = 0.25;
  int64_t probe_trees = 100;
  int64_t probe_depth = 6;
  double probe_learning_rate = 0.1;
  int64_t probe_min_samples = 50;
  int64_t probe_seed = 0;
  double probe_eval_fraction = 0.2;

  // Feature-grid side length of the backbone output (image_size / stride).
  int64_t feature_grid() const;
  int64_t feature_dim() const;
  int64_t slot_size() const { return num_blocks * block_size; }
  int64_t tokens_per_image() const;

  void validate() const;
};

// Flat `key = value` format, '#' comments. Unknown keys are an error.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(std::istream& in, const std::string& origin = "<stream>");
void save_config(const ExperimentConfig& cfg, const std::string& path);
std::string config_to_string(const ExperimentConfig& cfg);

// Named presets for the full-scale setups (Table-1-style values).
ExperimentConfig desk_config();
ExperimentConfig clevr_easy_config();
ExperimentConfig clevr_tex_config();

}  // namespace sysbinder
