#pragma once

#include <torch/torch.h>

#include <string>
#include <vector>

namespace sysbinder {

struct ConvLayerSpec {
  int64_t kernel = 5;
  int64_t stride = 1;
  int64_t padding = 2;
  int64_t out_channels = 64;
  bool relu = true;
};

struct FrontendConfig {
  int64_t image_size = 64;
  int64_t in_channels = 3;
  std::vector<ConvLayerSpec> conv;
  int64_t mlp_hidden = 192;

  int64_t feature_dim() const { return conv.back().out_channels; }
  int64_t total_stride() const;
  int64_t grid_size() const;  // throws if image_size is not divisible by the stride
  int64_t num_features() const { return grid_size() * grid_size(); }

  // Presets: "desk64" (3 small convs, D=64), "clevr_easy" / "clevr_tex"
  // (the 512-channel stacks with D=192).
  static FrontendConfig preset(const std::string& name, int64_t image_size, int64_t mlp_hidden = 192);
};

// Channels of the 4-dim coordinate grid are (x, y, 1-x, 1-y), with x and y
// linearly spaced over [0,1]. Shape [H,W,4].
torch::Tensor make_positional_grid(int64_t height, int64_t width,
                                   torch::Dtype dtype = torch::kFloat32);

// CNN backbone -> +positional encoding -> LayerNorm -> 2-layer MLP, flattened
// to a feature set of shape [B, L, D].
class ImageEncoderImpl : public torch::nn::Module {
 public:
  explicit ImageEncoderImpl(FrontendConfig config);

  torch::Tensor forward(torch::Tensor image);  // [B,C,H,W] or [C,H,W] -> [B,L,D] / [L,D]

  const FrontendConfig& config() const { return config_; }

 private:
  FrontendConfig config_;
  torch::nn::ModuleList convs_;
  torch::nn::Linear pos_proj_{nullptr};
  torch::nn::LayerNorm norm_{nullptr};
  torch::nn::Linear mlp_fc1_{nullptr}, mlp_fc2_{nullptr};
  torch::Tensor pos_grid_;  // buffer [1,4,h,w]
};
TORCH_MODULE(ImageEncoder);

}  // namespace sysbinder
