#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "duet/common/random.hpp"
#include "duet/ring/modarith.hpp"

namespace duet::fss {

// A tree seed is three 128-bit blocks. Each block is expanded on its own by
// fixed-key AES (MMO mode, block index in the tweak); the bit outputs of the
// three blocks are XORed and the group-word outputs are summed mod p. A
// seed therefore never has to be assembled in one place to be expanded.
constexpr std::size_t kSeedBlocks = 3;
using Seed = std::array<Block, kSeedBlocks>;

Seed seed_xor(const Seed& a, const Seed& b);
bool seed_is_zero(const Seed& s);

// Bytes of bit output per node expansion: two child seeds and two control bits.
constexpr std::size_t kNodeBitBytes = 2 * kSeedBlocks * 16 + 1;
constexpr std::size_t kNodeBitBlocks = (kNodeBitBytes + 15) / 16;

enum class PrgDomain : std::uint8_t { NodeBits = 1, NodeWords = 2, Convert = 3 };

// g_j(x): fills out with AES_K(x ^ T_k) ^ (x ^ T_k) for k = 0..out.size()-1,
// where T_k encodes (j, domain, k).
void prg_expand_block(unsigned j, const Block& x, PrgDomain domain, std::span<Block> out, std::uint64_t offset = 0);

// Bit-string expansion of one block and of a whole seed (XOR of blocks).
std::vector<std::uint8_t> prg_block_bits(unsigned j, const Block& x, std::size_t out_bytes);
std::vector<std::uint8_t> prg_seed_bits(const Seed& s, std::size_t out_bytes);

// Group words of one block: count values in Z_p, reduced from 128-bit outputs.
void prg_block_words(unsigned j, const Block& x, PrgDomain domain, const Modulus& p, std::size_t offset,
                     std::span<u64> out);

struct NodeBits {
  Seed s[2];
  bool t[2];
};

// Parses kNodeBitBytes of (XOR-combined) expansion output.
NodeBits parse_node_bits(std::span<const std::uint8_t> bytes);
// Raw node-bit expansion of a single block (kNodeBitBytes bytes).
std::array<std::uint8_t, kNodeBitBytes> node_bits_block(unsigned j, const Block& x);
NodeBits expand_node_bits(const Seed& s);

// Node value words for child `dir`, L words: sum over blocks mod p.
void node_words_block(unsigned j, const Block& x, const Modulus& p, unsigned dir, std::span<u64> out);
std::vector<u64> expand_node_words(const Seed& s, const Modulus& p, unsigned dir, std::size_t L);
// Leaf conversion of a seed into L group words.
void convert_block(unsigned j, const Block& x, const Modulus& p, std::span<u64> out);
std::vector<u64> convert_seed(const Seed& s, const Modulus& p, std::size_t L);

// Per-thread count of single-block expansion calls, for cost accounting.
std::uint64_t prg_block_calls();
void reset_prg_block_calls();

}  // namespace duet::fss
