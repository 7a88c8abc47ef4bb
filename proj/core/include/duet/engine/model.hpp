#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "duet/common/bytes.hpp"
#include "duet/common/random.hpp"
#include "duet/gadgets/recipe.hpp"
#include "duet/ring/modarith.hpp"

namespace duet::engine {

enum class LayerKind : std::uint8_t { Dense = 1, Conv = 2, AvgPool = 3 };
// Identity is a test-only passthrough; the other values match gadget kinds.
enum class Activation : std::uint8_t { Identity = 0, Relu = 1, Sigmoid = 2, Tanh = 3, Maxpool = 5, Argmax = 6 };

const char* to_string(LayerKind k);
std::string to_string(Activation a, unsigned arity);

struct ConvShape {
  unsigned in_c = 1, in_h = 1, in_w = 1;
  unsigned out_c = 1, k_h = 1, k_w = 1;
  unsigned stride = 1, pad = 0;

  unsigned out_h() const { return (in_h + 2 * pad - k_h) / stride + 1; }
  unsigned out_w() const { return (in_w + 2 * pad - k_w) / stride + 1; }
};

// Non-overlapping k x k average windows over a (c, h, w) input.
struct PoolShape {
  unsigned c = 1, h = 1, w = 1, k = 1;
};

struct Layer {
  LayerKind kind = LayerKind::Dense;
  std::size_t n = 0;  // input length
  std::size_t m = 0;  // output length of the linear part
  ConvShape conv;
  PoolShape pool;
  Activation act = Activation::Identity;
  unsigned act_arity = 1;    // maxpool window; argmax uses m
  std::vector<u64> weights;  // dense: n x m row-major; conv: out_c x in_c x k_h x k_w
  std::vector<u64> bias;     // dense: m; conv: out_c; scale 2 * fp_scale

  bool uses_triple() const { return kind != LayerKind::AvgPool; }
  std::size_t out_dim() const;
  // Gadget instances and their arity for this layer's activation.
  std::size_t gadget_count() const;
  unsigned gadget_arity() const;
};

// Layer list with fixed-point weights in Z_p. Serialized as a text header
// followed by binary weight blocks.
struct ModelManifest {
  u64 p = 0;
  unsigned fp_scale = 12;
  std::size_t input_dim = 0;
  std::vector<Layer> layers;

  // Checks shape composition and, unless shares, the weight magnitudes.
  void validate(bool weights_are_shares = false) const;
  std::size_t output_dim() const;

  std::string header_text() const;
  Bytes serialize() const;
  static ModelManifest deserialize(std::span<const std::uint8_t> bytes);
  void save(const std::string& path) const;
  static ModelManifest load(const std::string& path);
};

// Lowered n x m matrix: conv via im2col placement, avgpool as the public
// averaging map with weight round(2^f / k^2).
std::vector<u64> lowered_matrix(const Layer& l, const Modulus& p, unsigned fp_scale);
std::vector<u64> lowered_bias(const Layer& l);

// Direct convolution over field elements, for checking the lowering.
std::vector<u64> conv_direct(const Layer& l, std::span<const u64> x, const Modulus& p);

// Plaintext activation on a layer's pre-activation vector.
std::vector<u64> apply_activation(Activation a, unsigned arity, std::span<const u64> z, const Modulus& p,
                                  unsigned fp_scale);

struct ReferenceResult {
  std::vector<u64> logits;  // last layer's pre-activation values
  std::vector<u64> output;
};
ReferenceResult reference_infer(const ModelManifest& m, std::span<const u64> x, bool truncate = true);

// Field elements opened per direction by one layer's activation.
std::size_t activation_reveals(const Layer& l);
// Closed-form online payload between the servers, in field elements per
// direction: the masked input for each multiply plus activation reveals.
std::size_t online_elements(const Layer& l);
std::size_t online_elements(const ModelManifest& m);

// Desk-scale sample architectures with random weights: "mfnn" (dense
// 64-32-32-10, ReLU), "ifnn" (dense 64-32-10, Tanh), "mcnn" (5x5 conv on
// 12x12, ReLU, 2x2 average pool, dense 64-10), "relu-layer" (one dense
// 64-32 ReLU layer).
ModelManifest sample_model(const std::string& arch, u64 p, unsigned fp_scale, Rng& rng);
std::vector<std::string> sample_architectures();
// Uniform inputs in [-1, 1] at scale fp_scale.
std::vector<u64> sample_input(const ModelManifest& m, Rng& rng, double range = 1.0);

// Multi-hot 1-based label from an argmax output vector.
std::vector<std::uint32_t> label_of(std::span<const u64> argmax_output);

}  // namespace duet::engine
