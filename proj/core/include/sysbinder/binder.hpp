#pragma once

#include <torch/torch.h>

#include <stdexcept>

namespace sysbinder {

struct BinderConfig {
  int64_t num_slots = 5;       // N
  int64_t num_blocks = 4;      // M
  int64_t block_size = 32;     // d
  int64_t num_prototypes = 16; // K per concept memory
  int64_t num_iterations = 3;  // T
  int64_t input_dim = 64;      // D of the feature set
  bool share_rnn_params = false;
  bool use_rnn = true;
  bool use_bottleneck = true;
  bool share_concept_memory = false;

  int64_t slot_size() const { return num_blocks * block_size; }
  void validate() const;
};

// Raised when a slot row of the attention matrix sums to exactly zero before
// input-axis renormalization (possible with masked inputs, not with softmax).
struct DegenerateAttentionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Slot-axis attention [.., N, L] after the slot-axis softmax but before
// input-axis renormalization, plus the aggregated readout [.., N, M*d].
struct AttentionMaps {
  torch::Tensor slot_attention;
  torch::Tensor readout;
};

struct BindResult {
  torch::Tensor slots;                 // [B,N,M*d]
  AttentionMaps attention;             // final iteration
  torch::Tensor prototype_attention;   // [B,N,M,K] final iteration; undefined if bottleneck off
};

// M banks of K prototype vectors, parameterized as a shared 4-layer MLP
// applied to learned seed vectors.
class ConceptMemoryImpl : public torch::nn::Module {
 public:
  ConceptMemoryImpl(int64_t num_blocks, int64_t num_prototypes, int64_t block_size, bool shared_bank);

  // Recomputes the prototype banks from the seeds; shape [M,K,d].
  torch::Tensor prototypes() const;

  torch::Tensor seeds() const { return seeds_; }
  int64_t num_blocks() const { return num_blocks_; }

 private:
  int64_t num_blocks_, num_prototypes_, block_size_;
  bool shared_bank_;
  torch::Tensor seeds_;  // [M,K,d] ([1,K,d] when shared)
  torch::nn::Linear fc1_{nullptr}, fc2_{nullptr}, fc3_{nullptr}, fc4_{nullptr};
};
TORCH_MODULE(ConceptMemory);

// Learned Gaussian over initial slots; sigma kept in log-space.
class SlotInitializerImpl : public torch::nn::Module {
 public:
  explicit SlotInitializerImpl(int64_t slot_size);

  // [B,N,M*d]; mu + sigma * eta with eta i.i.d. standard normal per slot.
  torch::Tensor sample(int64_t batch, int64_t num_slots, torch::Generator& gen) const;
  torch::Tensor sample(int64_t batch, int64_t num_slots, uint64_t rng_seed) const;

  torch::Tensor mu, log_sigma;
};
TORCH_MODULE(SlotInitializer);

// The binding layer: Gaussian slot init, then T alternating iterations of
// spatial binding (competitive slot attention over the input set) and factor
// binding (per-block recurrent refinement + prototype-attention bottleneck).
class SysBinderImpl : public torch::nn::Module {
 public:
  explicit SysBinderImpl(BinderConfig config);

  // E: [B,L,D] or [L,D]. Deterministic given the seed / generator state.
  BindResult bind(torch::Tensor features, uint64_t rng_seed) const;
  BindResult bind(torch::Tensor features, torch::Generator& gen) const;
  // Runs the iterations from caller-provided initial slots (raw features;
  // the input LayerNorm is applied inside).
  BindResult bind_from(torch::Tensor features, torch::Tensor initial_slots) const;

  // One competitive-attention step. `features_norm` must already carry the
  // per-bind input LayerNorm. Returns the pre-renormalization attention and
  // the readout.
  AttentionMaps spatial_binding_step(torch::Tensor slots, torch::Tensor features_norm) const;

  // One modular block update; returns refined slots and, when the bottleneck
  // is enabled, the [B,N,M,K] prototype-attention weights.
  std::pair<torch::Tensor, torch::Tensor> factor_binding_step(torch::Tensor slots,
                                                              torch::Tensor readout,
                                                              torch::Tensor prototypes) const;

  const BinderConfig& config() const { return config_; }
  SlotInitializer initializer() { return initializer_; }
  ConceptMemory memory() { return memory_; }

 private:
  BindResult run(torch::Tensor features, torch::Tensor slots, bool squeeze) const;

  BinderConfig config_;
  SlotInitializer initializer_{nullptr};
  ConceptMemory memory_{nullptr};
  torch::nn::LayerNorm norm_input_{nullptr}, norm_slots_{nullptr};
  torch::nn::Linear q_proj_{nullptr}, k_proj_{nullptr}, v_proj_{nullptr};
  torch::nn::ModuleList grus_, mlps_, mlp_norms_;
};
TORCH_MODULE(SysBinder);

// Softmax over the slot axis (dim 1 of [B,N,L]) whose normalizer is summed in
// value-sorted order, so the result is bitwise equivariant under slot
// permutation.
torch::Tensor softmax_over_slots(torch::Tensor logits);

}  // namespace sysbinder
