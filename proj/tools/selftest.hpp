#pragma once

#include <cstdint>
#include <ostream>

#include "duet/ring/params.hpp"

namespace duet::cli {

// Runs each oracle suite at desk scale and prints one
// "selftest.<suite>=pass|fail" line per suite. Returns the failure count.
int run_selftest(const ProtocolParams& params, std::uint64_t seed, std::ostream& out);

}  // namespace duet::cli
