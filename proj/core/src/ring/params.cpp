#include "duet/ring/params.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "duet/common/error.hpp"

namespace duet {

namespace {

constexpr unsigned kQPrimeBits = 61;
constexpr std::size_t kMaxQPrimes = 4;

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

u64 parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    u64 r = std::stoull(v, &pos, 0);
    if (pos != v.size()) throw ParameterError("bad integer");
    return r;
  } catch (const std::exception&) {
    throw ParameterError("parameter " + key + ": not an integer: " + v);
  }
}

}  // namespace

ProtocolParams ProtocolParams::generate(std::size_t N, unsigned p_min_bits, unsigned fp_scale,
                                        unsigned noise_margin, bool insecure) {
  if (N < 2 || !std::has_single_bit(N)) throw ParameterError("N must be a power of two");
  ProtocolParams pp;
  pp.N = N;
  pp.fp_scale = fp_scale;
  pp.noise_margin = noise_margin;
  pp.insecure = insecure;
  pp.p = next_prime_congruent_one(1ULL << p_min_bits, 2 * N);
  double need = noise_margin + std::log2(static_cast<double>(N)) + 2 * std::log2(static_cast<double>(pp.p));
  double have = 0;
  u64 below = 1ULL << kQPrimeBits;
  while (have < need) {
    if (pp.q_primes.size() == kMaxQPrimes) throw ParameterError("parameters need more than 4 q primes");
    u64 q = prev_prime_congruent_one(below, 2 * N);
    pp.q_primes.push_back(q);
    have += std::log2(static_cast<double>(q));
    below = q;
  }
  if (pp.q_primes.size() < 2) {
    pp.q_primes.push_back(prev_prime_congruent_one(below, 2 * N));
  }
  pp.validate();
  return pp;
}

ProtocolParams ProtocolParams::production() { return generate(8192, 51, 12); }
ProtocolParams ProtocolParams::standard_test() { return generate(2048, 51, 12); }
ProtocolParams ProtocolParams::insecure_toy() { return generate(256, 29, 8, 30, true); }

void ProtocolParams::validate() const {
  if (lambda != 128) throw ParameterError("lambda must be 128");
  if (N < 2 || !std::has_single_bit(N)) throw ParameterError("N must be a power of two");
  if (!is_prime(p)) throw ParameterError("p is not prime");
  if ((p - 1) % (2 * N) != 0) throw ParameterError("p is not 1 mod 2N");
  if (p >= (1ULL << 62)) throw ParameterError("p too large");
  if (q_primes.size() < 2 || q_primes.size() > kMaxQPrimes) throw ParameterError("q needs 2 to 4 primes");
  for (std::size_t i = 0; i < q_primes.size(); ++i) {
    u64 q = q_primes[i];
    if (!is_prime(q) || (q - 1) % (2 * N) != 0) throw ParameterError("q prime is not NTT friendly");
    if (q >= (1ULL << 62)) throw ParameterError("q prime too large");
    if (q == p) throw ParameterError("q prime equals p");
    for (std::size_t j = 0; j < i; ++j) {
      if (q_primes[j] == q) throw ParameterError("duplicate q prime");
    }
  }
  double need = noise_margin + std::log2(static_cast<double>(N)) + 2 * std::log2(static_cast<double>(p));
  if (log2_q() < need) throw ParameterError("q too small for the noise margin");
  if (fp_scale == 0 || 2 * fp_scale + 4 >= domain_bits()) throw ParameterError("fp_scale too large for p");
}

double ProtocolParams::log2_q() const {
  double s = 0;
  for (u64 q : q_primes) s += std::log2(static_cast<double>(q));
  return s;
}

unsigned ProtocolParams::domain_bits() const { return ceil_log2(p); }

u64 ProtocolParams::magnitude_bound() const { return p / 4 - 1; }

u64 ProtocolParams::fingerprint() const {
  // FNV-1a over the canonical text form.
  u64 h = 1469598103934665603ULL;
  for (unsigned char c : to_text()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string ProtocolParams::to_text() const {
  std::ostringstream os;
  os << "p=" << p << "\n";
  os << "N=" << N << "\n";
  os << "q_primes=";
  for (std::size_t i = 0; i < q_primes.size(); ++i) os << (i ? "," : "") << q_primes[i];
  os << "\n";
  os << "lambda=" << lambda << "\n";
  os << "fp_scale=" << fp_scale << "\n";
  os << "noise_margin=" << noise_margin << "\n";
  os << "insecure=" << (insecure ? 1 : 0) << "\n";
  return os.str();
}

ProtocolParams ProtocolParams::from_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ParameterError("malformed parameter line: " + line);
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  auto need = [&](const char* k) -> const std::string& {
    auto it = kv.find(k);
    if (it == kv.end()) throw ParameterError(std::string("missing parameter ") + k);
    return it->second;
  };
  ProtocolParams pp;
  pp.p = parse_u64("p", need("p"));
  pp.N = parse_u64("N", need("N"));
  std::string qs = need("q_primes");
  std::stringstream ss(qs);
  std::string item;
  while (std::getline(ss, item, ',')) pp.q_primes.push_back(parse_u64("q_primes", trim(item)));
  pp.lambda = static_cast<unsigned>(parse_u64("lambda", need("lambda")));
  pp.fp_scale = static_cast<unsigned>(parse_u64("fp_scale", need("fp_scale")));
  if (kv.count("noise_margin")) pp.noise_margin = static_cast<unsigned>(parse_u64("noise_margin", kv["noise_margin"]));
  if (kv.count("insecure")) pp.insecure = parse_u64("insecure", kv["insecure"]) != 0;
  pp.validate();
  return pp;
}

ProtocolParams ProtocolParams::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open parameter file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

void ProtocolParams::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ParameterError("cannot write parameter file " + path);
  out << to_text();
}

}  // namespace duet
