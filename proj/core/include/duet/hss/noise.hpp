#pragma once

#include "duet/hss/lpr.hpp"

namespace duet::hss {

// Exact infinity norm of c0 + c1*s - floor(q/p)*lift(m), via big-integer CRT.
// Diagnostic only; requires the secret key.
double measure_noise(const SecretKey& sk, const Ciphertext& ct, const RingPoly& m);

// Largest fresh-sum noise bound accepted before a ciphertext is refused:
// q / (p * N * 2^noise_margin).
double noise_budget(const RingContext& ctx);

}  // namespace duet::hss
