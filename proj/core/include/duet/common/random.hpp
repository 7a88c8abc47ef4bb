#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace duet {

using Block = std::array<std::uint8_t, 16>;

Block block_xor(const Block& a, const Block& b);
Block block_from_u64(std::uint64_t lo, std::uint64_t hi = 0);
std::uint64_t block_lo(const Block& b);
std::uint64_t block_hi(const Block& b);
// 128-bit little-endian value reduced modulo m (bias below 2^-64 for m < 2^64).
std::uint64_t block_mod(const Block& b, std::uint64_t m);

// AES-128 in ECB mode over a fixed key (OpenSSL EVP).
class Aes128 {
 public:
  explicit Aes128(const Block& key);
  ~Aes128();
  Aes128(const Aes128&) = delete;
  Aes128& operator=(const Aes128&) = delete;
  Aes128(Aes128&&) noexcept;
  Aes128& operator=(Aes128&&) noexcept;

  void encrypt(std::span<const Block> in, std::span<Block> out) const;
  Block encrypt(const Block& in) const;

 private:
  void* ctx_ = nullptr;
};

// Deterministic AES-CTR generator. All protocol randomness flows through
// this type so that a fixed seed reproduces a run byte for byte.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);
  explicit Rng(const Block& key);

  Block next_block();
  std::uint64_t next_u64();
  bool next_bit();
  // Uniform in [0, bound).
  std::uint64_t uniform(std::uint64_t bound);
  void fill(std::span<std::uint8_t> out);
  std::vector<std::uint64_t> uniform_vec(std::size_t n, std::uint64_t bound);
  // Independent child generator; does not disturb this stream's outputs
  // beyond one block.
  Rng fork();

 private:
  Aes128 aes_;
  std::uint64_t counter_ = 0;
  Block buf_{};
  int used_ = 16;
};

// Counter-mode PRF keyed by a 128-bit seed. Output for (epoch, counter) is
// AES_seed(counter || epoch).
class Prf {
 public:
  explicit Prf(const Block& seed);
  Block eval(std::uint64_t epoch, std::uint64_t counter) const;
  std::uint64_t eval_mod(std::uint64_t epoch, std::uint64_t counter, std::uint64_t m) const;

 private:
  Aes128 aes_;
};

}  // namespace duet
