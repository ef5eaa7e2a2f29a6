#include "sysbinder/frontend.hpp"

#include <stdexcept>

namespace sysbinder {

int64_t FrontendConfig::total_stride() const {
  int64_t s = 1;
  for (const auto& layer : conv) s *= layer.stride;
  return s;
}

int64_t FrontendConfig::grid_size() const {
  int64_t s = total_stride();
  if (image_size % s != 0)
    throw std::invalid_argument("image size " + std::to_string(image_size) +
                                " not divisible by total conv stride " + std::to_string(s));
  return image_size / s;
}

FrontendConfig FrontendConfig::preset(const std::string& name, int64_t image_size, int64_t mlp_hidden) {
  FrontendConfig cfg;
  cfg.image_size = image_size;
  cfg.mlp_hidden = mlp_hidden;
  if (name == "desk64") {
    cfg.conv = {{3, 2, 1, 64, true}, {3, 2, 1, 64, true}, {3, 1, 1, 64, false}};
  } else if (name == "clevr_easy") {
    cfg.conv = {{5, 2, 2, 512, true}, {5, 1, 2, 512, true}, {5, 1, 2, 512, true}, {5, 1, 2, 192, false}};
  } else if (name == "clevr_tex") {
    cfg.conv = {{5, 2, 2, 512, true},
                {5, 1, 2, 512, true},
                {5, 2, 2, 512, true},
                {5, 1, 2, 512, true},
                {5, 1, 2, 192, false}};
  } else {
    throw std::invalid_argument("unknown frontend preset: " + name);
  }
  return cfg;
}

torch::Tensor make_positional_grid(int64_t height, int64_t width, torch::Dtype dtype) {
  if (height < 1 || width < 1) throw std::invalid_argument("grid dims must be >= 1");
  auto opts = torch::TensorOptions().dtype(dtype);
  torch::Tensor ys = height > 1 ? torch::linspace(0.0, 1.0, height, opts) : torch::zeros({1}, opts);
  torch::Tensor xs = width > 1 ? torch::linspace(0.0, 1.0, width, opts) : torch::zeros({1}, opts);
  torch::Tensor y = ys.view({height, 1}).expand({height, width});
  torch::Tensor x = xs.view({1, width}).expand({height, width});
  return torch::stack({x, y, 1.0 - x, 1.0 - y}, /*dim=*/2);
}

ImageEncoderImpl::ImageEncoderImpl(FrontendConfig config) : config_(std::move(config)) {
  if (config_.conv.empty()) throw std::invalid_argument("frontend needs at least one conv layer");
  int64_t in_ch = config_.in_channels;
  for (size_t i = 0; i < config_.conv.size(); ++i) {
    const auto& spec = config_.conv[i];
    auto conv = torch::nn::Conv2d(
        torch::nn::Conv2dOptions(in_ch, spec.out_channels, spec.kernel).stride(spec.stride).padding(spec.padding));
    convs_->push_back(conv);
    register_module("conv" + std::to_string(i), conv);
    in_ch = spec.out_channels;
  }
  const int64_t d = config_.feature_dim();
  const int64_t g = config_.grid_size();
  pos_proj_ = register_module("pos_proj", torch::nn::Linear(4, d));
  norm_ = register_module("norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({d})));
  mlp_fc1_ = register_module("mlp_fc1", torch::nn::Linear(d, config_.mlp_hidden));
  mlp_fc2_ = register_module("mlp_fc2", torch::nn::Linear(config_.mlp_hidden, d));
  pos_grid_ = register_buffer("pos_grid", make_positional_grid(g, g).view({1, g, g, 4}));
}

torch::Tensor ImageEncoderImpl::forward(torch::Tensor image) {
  const bool single = image.dim() == 3;
  if (single) image = image.unsqueeze(0);
  TORCH_CHECK(image.dim() == 4, "expected [B,C,H,W] image tensor");
  TORCH_CHECK(image.size(2) == config_.image_size && image.size(3) == config_.image_size,
              "image size does not match frontend config");

  torch::Tensor h = image;
  for (size_t i = 0; i < config_.conv.size(); ++i) {
    h = convs_[i]->as<torch::nn::Conv2d>()->forward(h);
    if (config_.conv[i].relu) h = torch::relu(h);
  }
  // [B,D,h,w] -> [B,h,w,D], add projected coordinate grid
  h = h.permute({0, 2, 3, 1});
  h = h + pos_proj_(pos_grid_.to(h.dtype()));
  const int64_t b = h.size(0);
  h = h.reshape({b, -1, config_.feature_dim()});
  h = norm_(h);
  h = mlp_fc2_(torch::relu(mlp_fc1_(h)));
  return single ? h.squeeze(0) : h;
}

}  // namespace sysbinder
