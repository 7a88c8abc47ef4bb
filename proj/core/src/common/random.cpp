#include "duet/common/random.hpp"

#include <openssl/evp.h>

#include <cstring>
#include <utility>

#include "duet/common/error.hpp"

namespace duet {

Block block_xor(const Block& a, const Block& b) {
  Block r;
  for (int i = 0; i < 16; ++i) r[i] = a[i] ^ b[i];
  return r;
}

Block block_from_u64(std::uint64_t lo, std::uint64_t hi) {
  Block b;
  std::memcpy(b.data(), &lo, 8);
  std::memcpy(b.data() + 8, &hi, 8);
  return b;
}

std::uint64_t block_lo(const Block& b) {
  std::uint64_t v;
  std::memcpy(&v, b.data(), 8);
  return v;
}

std::uint64_t block_hi(const Block& b) {
  std::uint64_t v;
  std::memcpy(&v, b.data() + 8, 8);
  return v;
}

std::uint64_t block_mod(const Block& b, std::uint64_t m) {
  unsigned __int128 v = (static_cast<unsigned __int128>(block_hi(b)) << 64) | block_lo(b);
  return static_cast<std::uint64_t>(v % m);
}

Aes128::Aes128(const Block& key) {
  auto* ctx = EVP_CIPHER_CTX_new();
  if (!ctx) throw Error("EVP_CIPHER_CTX_new failed");
  if (EVP_EncryptInit_ex(ctx, EVP_aes_128_ecb(), nullptr, key.data(), nullptr) != 1) {
    EVP_CIPHER_CTX_free(ctx);
    throw Error("AES key setup failed");
  }
  EVP_CIPHER_CTX_set_padding(ctx, 0);
  ctx_ = ctx;
}

Aes128::~Aes128() {
  if (ctx_) EVP_CIPHER_CTX_free(static_cast<EVP_CIPHER_CTX*>(ctx_));
}

Aes128::Aes128(Aes128&& o) noexcept : ctx_(std::exchange(o.ctx_, nullptr)) {}

Aes128& Aes128::operator=(Aes128&& o) noexcept {
  if (this != &o) {
    if (ctx_) EVP_CIPHER_CTX_free(static_cast<EVP_CIPHER_CTX*>(ctx_));
    ctx_ = std::exchange(o.ctx_, nullptr);
  }
  return *this;
}

void Aes128::encrypt(std::span<const Block> in, std::span<Block> out) const {
  if (in.size() != out.size()) throw DimensionError("AES input/output size mismatch");
  if (in.empty()) return;
  int len = 0;
  auto* ctx = static_cast<EVP_CIPHER_CTX*>(ctx_);
  if (EVP_EncryptUpdate(ctx, out.data()->data(), &len, in.data()->data(),
                        static_cast<int>(in.size() * 16)) != 1) {
    throw Error("AES encryption failed");
  }
}

Block Aes128::encrypt(const Block& in) const {
  Block out;
  encrypt(std::span<const Block>(&in, 1), std::span<Block>(&out, 1));
  return out;
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream) : aes_(block_from_u64(seed, stream ^ 0x6475657452ULL)) {}

Rng::Rng(const Block& key) : aes_(key) {}

Block Rng::next_block() {
  Block in = block_from_u64(counter_++, 0);
  return aes_.encrypt(in);
}

std::uint64_t Rng::next_u64() {
  if (used_ > 8) {
    buf_ = next_block();
    used_ = 0;
  }
  std::uint64_t v;
  std::memcpy(&v, buf_.data() + used_, 8);
  used_ += 8;
  return v;
}

bool Rng::next_bit() { return next_u64() & 1; }

std::uint64_t Rng::uniform(std::uint64_t bound) {
  if (bound == 0) throw ParameterError("uniform bound must be positive");
  return block_mod(next_block(), bound);
}

void Rng::fill(std::span<std::uint8_t> out) {
  std::size_t i = 0;
  while (i < out.size()) {
    Block b = next_block();
    std::size_t n = std::min<std::size_t>(16, out.size() - i);
    std::memcpy(out.data() + i, b.data(), n);
    i += n;
  }
}

std::vector<std::uint64_t> Rng::uniform_vec(std::size_t n, std::uint64_t bound) {
  std::vector<std::uint64_t> v(n);
  for (auto& x : v) x = uniform(bound);
  return v;
}

Rng Rng::fork() { return Rng(next_block()); }

Prf::Prf(const Block& seed) : aes_(seed) {}

Block Prf::eval(std::uint64_t epoch, std::uint64_t counter) const {
  return aes_.encrypt(block_from_u64(counter, epoch));
}

std::uint64_t Prf::eval_mod(std::uint64_t epoch, std::uint64_t counter, std::uint64_t m) const {
  return block_mod(eval(epoch, counter), m);
}

}  // namespace duet
