#include "duet/hss/noise.hpp"

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>

namespace duet::hss {

using boost::multiprecision::cpp_int;

double measure_noise(const SecretKey& sk, const Ciphertext& ct, const RingPoly& m) {
  const auto& ctx = ct.c0.context();
  RingPoly v = ct.c0 + ct.c1 * sk.s;
  v.to_coeff();
  RingPoly mq = lift_centered(m);
  const std::size_t L = ctx->q_limbs();
  cpp_int q = 1;
  for (std::size_t i = 0; i < L; ++i) q *= ctx->q(i).value();
  cpp_int delta = q / ctx->p().value();
  std::vector<cpp_int> qhat(L);
  for (std::size_t i = 0; i < L; ++i) qhat[i] = q / ctx->q(i).value();
  double worst = 0;
  for (std::size_t j = 0; j < ctx->degree(); ++j) {
    cpp_int t = 0, mm = 0;
    for (std::size_t i = 0; i < L; ++i) {
      const Modulus& qi = ctx->q(i);
      t += qhat[i] * qi.mul(v.limb(i)[j], ctx->punctured_inv(i));
      mm += qhat[i] * qi.mul(mq.limb(i)[j], ctx->punctured_inv(i));
    }
    t %= q;
    mm %= q;
    if (mm > q / 2) mm -= q;
    cpp_int e = (t - delta * mm) % q;
    if (e < 0) e += q;
    if (e > q / 2) e = q - e;
    worst = std::max(worst, e.convert_to<double>());
  }
  return worst;
}

double noise_budget(const RingContext& ctx) {
  const auto& pp = ctx.params();
  return std::ldexp(1.0, static_cast<int>(pp.log2_q() - std::log2(static_cast<double>(pp.p)) -
                                         std::log2(static_cast<double>(pp.N)) - pp.noise_margin));
}

}  // namespace duet::hss
