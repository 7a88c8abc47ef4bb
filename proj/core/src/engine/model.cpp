#include "duet/engine/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "duet/common/error.hpp"
#include "duet/gadgets/spline.hpp"
#include "duet/ring/fixed_point.hpp"
#include "duet/ring/poly.hpp"

namespace duet::engine {

namespace {

constexpr const char* kMagic = "duet-model v1";

Activation parse_activation(const std::string& tok, unsigned& arity) {
  arity = 1;
  if (tok == "identity") return Activation::Identity;
  if (tok == "relu") return Activation::Relu;
  if (tok == "sigmoid") return Activation::Sigmoid;
  if (tok == "tanh") return Activation::Tanh;
  if (tok == "argmax") return Activation::Argmax;
  if (tok.rfind("maxpool:", 0) == 0) {
    arity = static_cast<unsigned>(std::stoul(tok.substr(8)));
    return Activation::Maxpool;
  }
  throw FormatError("unknown activation '" + tok + "'");
}

std::int64_t signed_of(u64 v, const Modulus& p) { return p.to_signed(v); }

}  // namespace

const char* to_string(LayerKind k) {
  switch (k) {
    case LayerKind::Dense: return "dense";
    case LayerKind::Conv: return "conv";
    case LayerKind::AvgPool: return "avgpool";
  }
  return "?";
}

std::string to_string(Activation a, unsigned arity) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Tanh: return "tanh";
    case Activation::Maxpool: return "maxpool:" + std::to_string(arity);
    case Activation::Argmax: return "argmax";
  }
  return "?";
}

std::size_t Layer::out_dim() const {
  if (act == Activation::Maxpool) return m / act_arity;
  return m;
}

std::size_t Layer::gadget_count() const {
  switch (act) {
    case Activation::Identity: return 0;
    case Activation::Relu:
    case Activation::Sigmoid:
    case Activation::Tanh: return m;
    case Activation::Maxpool: return m / act_arity;
    case Activation::Argmax: return 1;
  }
  return 0;
}

unsigned Layer::gadget_arity() const {
  if (act == Activation::Maxpool) return act_arity;
  if (act == Activation::Argmax) return static_cast<unsigned>(m);
  return 1;
}

void ModelManifest::validate(bool weights_are_shares) const {
  if (p < 3 || (p & 1) == 0) throw ParameterError("model modulus must be an odd prime");
  if (layers.empty()) throw DimensionError("model has no layers");
  Modulus mod(p);
  const u64 bound = p / 4 - 1;
  std::size_t dim = input_dim;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Layer& l = layers[i];
    const std::string where = "layer " + std::to_string(i) + ": ";
    if (l.n != dim) throw DimensionError(where + "input length " + std::to_string(l.n) + " != " + std::to_string(dim));
    if (l.m == 0) throw DimensionError(where + "empty output");
    switch (l.kind) {
      case LayerKind::Dense:
        if (l.weights.size() != l.n * l.m || l.bias.size() != l.m) throw DimensionError(where + "dense weight shape");
        break;
      case LayerKind::Conv: {
        const auto& c = l.conv;
        if (c.k_h > c.in_h + 2 * c.pad || c.k_w > c.in_w + 2 * c.pad || c.stride == 0)
          throw DimensionError(where + "conv kernel larger than input");
        if (l.n != std::size_t{c.in_c} * c.in_h * c.in_w ||
            l.m != std::size_t{c.out_c} * c.out_h() * c.out_w())
          throw DimensionError(where + "conv shape mismatch");
        if (l.weights.size() != std::size_t{c.out_c} * c.in_c * c.k_h * c.k_w || l.bias.size() != c.out_c)
          throw DimensionError(where + "conv weight shape");
        break;
      }
      case LayerKind::AvgPool: {
        const auto& q = l.pool;
        if (q.k == 0 || q.h % q.k || q.w % q.k) throw DimensionError(where + "pool window must tile the input");
        if (l.n != std::size_t{q.c} * q.h * q.w || l.m != std::size_t{q.c} * (q.h / q.k) * (q.w / q.k))
          throw DimensionError(where + "pool shape mismatch");
        if (!l.weights.empty() || !l.bias.empty()) throw DimensionError(where + "pool has no weights");
        break;
      }
    }
    if (l.act == Activation::Maxpool && (l.act_arity < 2 || l.m % l.act_arity))
      throw DimensionError(where + "maxpool arity must divide the layer width");
    if (l.act == Activation::Argmax && i + 1 != layers.size())
      throw DimensionError(where + "argmax must be the last layer");
    for (auto w : l.weights) {
      if (w >= p) throw RangeError(where + "weight not reduced mod p");
      if (!weights_are_shares && static_cast<u64>(std::llabs(signed_of(w, mod))) > bound)
        throw RangeError(where + "weight exceeds magnitude bound");
    }
    for (auto w : l.bias)
      if (w >= p) throw RangeError(where + "bias not reduced mod p");
    dim = l.out_dim();
  }
}

std::size_t ModelManifest::output_dim() const { return layers.empty() ? input_dim : layers.back().out_dim(); }

std::string ModelManifest::header_text() const {
  std::ostringstream os;
  os << kMagic << "\n";
  os << "modulus " << p << "\n";
  os << "fp_scale " << fp_scale << "\n";
  os << "input " << input_dim << "\n";
  for (const auto& l : layers) {
    const std::string act = to_string(l.act, l.act_arity);
    switch (l.kind) {
      case LayerKind::Dense: os << "dense " << l.n << " " << l.m << " " << act << "\n"; break;
      case LayerKind::Conv: {
        const auto& c = l.conv;
        os << "conv " << c.in_c << " " << c.in_h << " " << c.in_w << " " << c.out_c << " " << c.k_h << " " << c.k_w
           << " " << c.stride << " " << c.pad << " " << act << "\n";
        break;
      }
      case LayerKind::AvgPool: {
        const auto& q = l.pool;
        os << "avgpool " << q.c << " " << q.h << " " << q.w << " " << q.k << " " << act << "\n";
        break;
      }
    }
  }
  os << "weights\n";
  return os.str();
}

Bytes ModelManifest::serialize() const {
  std::string head = header_text();
  ByteWriter w;
  w.raw({reinterpret_cast<const std::uint8_t*>(head.data()), head.size()});
  for (const auto& l : layers) {
    if (l.kind == LayerKind::AvgPool) continue;
    write_field_vector(w, l.weights);
    write_field_vector(w, l.bias);
  }
  return std::move(w).take();
}

ModelManifest ModelManifest::deserialize(std::span<const std::uint8_t> bytes) {
  const std::string all(bytes.begin(), bytes.end());
  const std::string marker = "\nweights\n";
  auto pos = all.find(marker);
  if (pos == std::string::npos) throw FormatError("model manifest: missing weights marker");
  std::istringstream is(all.substr(0, pos));
  std::string line;
  if (!std::getline(is, line) || line != kMagic) throw FormatError("model manifest: bad magic line");

  ModelManifest m;
  std::size_t dim = 0;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    auto fail = [&] { throw FormatError("model manifest: bad line '" + line + "'"); };
    if (key == "modulus") {
      if (!(ls >> m.p)) fail();
    } else if (key == "fp_scale") {
      if (!(ls >> m.fp_scale)) fail();
    } else if (key == "input") {
      if (!(ls >> m.input_dim)) fail();
      dim = m.input_dim;
    } else {
      Layer l;
      std::string act;
      if (key == "dense") {
        l.kind = LayerKind::Dense;
        if (!(ls >> l.n >> l.m >> act)) fail();
      } else if (key == "conv") {
        l.kind = LayerKind::Conv;
        auto& c = l.conv;
        if (!(ls >> c.in_c >> c.in_h >> c.in_w >> c.out_c >> c.k_h >> c.k_w >> c.stride >> c.pad >> act)) fail();
        if (c.stride == 0 || c.k_h > c.in_h + 2 * c.pad || c.k_w > c.in_w + 2 * c.pad) fail();
        l.n = std::size_t{c.in_c} * c.in_h * c.in_w;
        l.m = std::size_t{c.out_c} * c.out_h() * c.out_w();
      } else if (key == "avgpool") {
        l.kind = LayerKind::AvgPool;
        auto& q = l.pool;
        if (!(ls >> q.c >> q.h >> q.w >> q.k >> act)) fail();
        if (q.k == 0) fail();
        l.n = std::size_t{q.c} * q.h * q.w;
        l.m = std::size_t{q.c} * (q.h / q.k) * (q.w / q.k);
      } else {
        fail();
      }
      l.act = parse_activation(act, l.act_arity);
      if (l.act == Activation::Argmax) l.act_arity = static_cast<unsigned>(l.m);
      m.layers.push_back(std::move(l));
      dim = m.layers.back().out_dim();
    }
  }
  (void)dim;
  if (m.p == 0) throw FormatError("model manifest: missing modulus");
  Modulus mod(m.p);
  ByteReader r(bytes.subspan(pos + marker.size()));
  for (auto& l : m.layers) {
    if (l.kind == LayerKind::AvgPool) continue;
    l.weights = read_field_vector(r, mod);
    l.bias = read_field_vector(r, mod);
  }
  r.expect_done();
  return m;
}

void ModelManifest::save(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  auto b = serialize();
  f.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

ModelManifest ModelManifest::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot read " + path);
  Bytes b((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return deserialize(b);
}

std::vector<u64> lowered_matrix(const Layer& l, const Modulus& p, unsigned fp_scale) {
  switch (l.kind) {
    case LayerKind::Dense: return l.weights;
    case LayerKind::Conv: {
      const auto& c = l.conv;
      const unsigned oh = c.out_h(), ow = c.out_w();
      std::vector<u64> y(l.n * l.m, 0);
      for (unsigned co = 0; co < c.out_c; ++co)
        for (unsigned i = 0; i < oh; ++i)
          for (unsigned j = 0; j < ow; ++j) {
            const std::size_t col = (std::size_t{co} * oh + i) * ow + j;
            for (unsigned ci = 0; ci < c.in_c; ++ci)
              for (unsigned ky = 0; ky < c.k_h; ++ky)
                for (unsigned kx = 0; kx < c.k_w; ++kx) {
                  const long yy = long(i) * c.stride - long(c.pad) + ky;
                  const long xx = long(j) * c.stride - long(c.pad) + kx;
                  if (yy < 0 || xx < 0 || yy >= long(c.in_h) || xx >= long(c.in_w)) continue;
                  const std::size_t row = (std::size_t{ci} * c.in_h + std::size_t(yy)) * c.in_w + std::size_t(xx);
                  const std::size_t k = ((std::size_t{co} * c.in_c + ci) * c.k_h + ky) * c.k_w + kx;
                  y[row * l.m + col] = l.weights[k];
                }
          }
      return y;
    }
    case LayerKind::AvgPool: {
      const auto& q = l.pool;
      const unsigned oh = q.h / q.k, ow = q.w / q.k;
      const double w = std::ldexp(1.0, static_cast<int>(fp_scale)) / double(q.k * q.k);
      const u64 a = p.reduce(static_cast<u64>(std::llround(w)));
      std::vector<u64> y(l.n * l.m, 0);
      for (unsigned ch = 0; ch < q.c; ++ch)
        for (unsigned i = 0; i < q.h; ++i)
          for (unsigned j = 0; j < q.w; ++j) {
            const std::size_t row = (std::size_t{ch} * q.h + i) * q.w + j;
            const std::size_t col = (std::size_t{ch} * oh + i / q.k) * ow + j / q.k;
            y[row * l.m + col] = a;
          }
      return y;
    }
  }
  return {};
}

std::vector<u64> lowered_bias(const Layer& l) {
  switch (l.kind) {
    case LayerKind::Dense: return l.bias;
    case LayerKind::Conv: {
      const std::size_t per = std::size_t{l.conv.out_h()} * l.conv.out_w();
      std::vector<u64> b(l.m);
      for (std::size_t i = 0; i < l.m; ++i) b[i] = l.bias[i / per];
      return b;
    }
    case LayerKind::AvgPool: return std::vector<u64>(l.m, 0);
  }
  return {};
}

std::vector<u64> conv_direct(const Layer& l, std::span<const u64> x, const Modulus& p) {
  const auto& c = l.conv;
  const unsigned oh = c.out_h(), ow = c.out_w();
  std::vector<u64> out(l.m, 0);
  for (unsigned co = 0; co < c.out_c; ++co)
    for (unsigned i = 0; i < oh; ++i)
      for (unsigned j = 0; j < ow; ++j) {
        u64 acc = l.bias[co];
        for (unsigned ci = 0; ci < c.in_c; ++ci)
          for (unsigned ky = 0; ky < c.k_h; ++ky)
            for (unsigned kx = 0; kx < c.k_w; ++kx) {
              const long yy = long(i) * c.stride - long(c.pad) + ky;
              const long xx = long(j) * c.stride - long(c.pad) + kx;
              if (yy < 0 || xx < 0 || yy >= long(c.in_h) || xx >= long(c.in_w)) continue;
              const u64 xv = x[(std::size_t{ci} * c.in_h + std::size_t(yy)) * c.in_w + std::size_t(xx)];
              const u64 wv = l.weights[((std::size_t{co} * c.in_c + ci) * c.k_h + ky) * c.k_w + kx];
              acc = p.add(acc, p.mul(xv, wv));
            }
        out[(std::size_t{co} * oh + i) * ow + j] = acc;
      }
  return out;
}

std::vector<u64> apply_activation(Activation a, unsigned arity, std::span<const u64> z, const Modulus& p,
                                  unsigned fp_scale) {
  auto greater = [&](u64 x, u64 y) { return p.to_signed(x) > p.to_signed(y); };
  switch (a) {
    case Activation::Identity: return {z.begin(), z.end()};
    case Activation::Relu: {
      std::vector<u64> out(z.size());
      for (std::size_t i = 0; i < z.size(); ++i) out[i] = p.to_signed(z[i]) > 0 ? z[i] : 0;
      return out;
    }
    case Activation::Sigmoid:
    case Activation::Tanh: {
      auto f = a == Activation::Sigmoid ? gadgets::SplineFunction::Sigmoid : gadgets::SplineFunction::Tanh;
      std::vector<u64> out(z.size());
      for (std::size_t i = 0; i < z.size(); ++i) out[i] = gadgets::spline_fixed(f, z[i], p, fp_scale);
      return out;
    }
    case Activation::Maxpool: {
      std::vector<u64> out(z.size() / arity);
      for (std::size_t g = 0; g < out.size(); ++g) {
        u64 best = z[g * arity];
        for (unsigned k = 1; k < arity; ++k)
          if (greater(z[g * arity + k], best)) best = z[g * arity + k];
        out[g] = best;
      }
      return out;
    }
    case Activation::Argmax: {
      u64 best = z[0];
      for (auto v : z)
        if (greater(v, best)) best = v;
      std::vector<u64> out(z.size(), 0);
      for (std::size_t i = 0; i < z.size(); ++i)
        if (z[i] == best) out[i] = i + 1;
      return out;
    }
  }
  return {};
}

ReferenceResult reference_infer(const ModelManifest& m, std::span<const u64> x, bool truncate) {
  if (x.size() != m.input_dim) throw DimensionError("input length does not match the model");
  const Modulus p(m.p);
  ReferenceResult res;
  std::vector<u64> cur(x.begin(), x.end());
  for (const auto& l : m.layers) {
    auto y = lowered_matrix(l, p, m.fp_scale);
    auto z = lowered_bias(l);
    for (std::size_t r = 0; r < l.n; ++r) {
      if (cur[r] == 0) continue;
      const u64* row = y.data() + r * l.m;
      for (std::size_t c = 0; c < l.m; ++c) z[c] = p.add(z[c], p.mul(cur[r], row[c]));
    }
    if (truncate)
      for (auto& v : z) v = truncate_public(v, m.fp_scale, p);
    res.logits = z;
    cur = apply_activation(l.act, l.act_arity, z, p, m.fp_scale);
  }
  res.output = std::move(cur);
  return res;
}

std::size_t activation_reveals(const Layer& l) {
  switch (l.act) {
    case Activation::Identity: return 0;
    case Activation::Relu:
    case Activation::Sigmoid:
    case Activation::Tanh: return l.m;
    // k - 1 pairwise comparisons per window, each opening 2 + 4 values.
    case Activation::Maxpool: return l.gadget_count() * 6 * (l.act_arity - 1);
    case Activation::Argmax: return 6 * (l.m - 1) + l.m;
  }
  return 0;
}

std::size_t online_elements(const Layer& l) { return (l.uses_triple() ? l.n : 0) + activation_reveals(l); }

std::size_t online_elements(const ModelManifest& m) {
  std::size_t s = 0;
  for (const auto& l : m.layers) s += online_elements(l);
  return s;
}

namespace {

Layer dense_layer(std::size_t n, std::size_t m, Activation act, const FixedPoint& fp, Rng& rng) {
  Layer l;
  l.kind = LayerKind::Dense;
  l.n = n;
  l.m = m;
  l.act = act;
  if (act == Activation::Argmax) l.act_arity = static_cast<unsigned>(m);
  const double scale = std::sqrt(6.0 / double(n));
  auto unif = [&] { return (double(rng.uniform(1u << 20)) / double(1u << 20) * 2.0 - 1.0); };
  l.weights.resize(n * m);
  for (auto& w : l.weights) w = fp.encode(unif() * scale);
  l.bias.resize(m);
  for (auto& b : l.bias) b = fp.encode_scaled(unif() * 0.05, 2 * fp.frac_bits());
  return l;
}

}  // namespace

std::vector<std::string> sample_architectures() { return {"mfnn", "ifnn", "mcnn", "relu-layer"}; }

ModelManifest sample_model(const std::string& arch, u64 p, unsigned fp_scale, Rng& rng) {
  const Modulus mod(p);
  const FixedPoint fp(mod, fp_scale);
  ModelManifest m;
  m.p = p;
  m.fp_scale = fp_scale;
  if (arch == "mfnn") {
    m.input_dim = 64;
    m.layers.push_back(dense_layer(64, 32, Activation::Relu, fp, rng));
    m.layers.push_back(dense_layer(32, 32, Activation::Relu, fp, rng));
    m.layers.push_back(dense_layer(32, 10, Activation::Argmax, fp, rng));
  } else if (arch == "ifnn") {
    m.input_dim = 64;
    m.layers.push_back(dense_layer(64, 32, Activation::Tanh, fp, rng));
    m.layers.push_back(dense_layer(32, 10, Activation::Argmax, fp, rng));
  } else if (arch == "mcnn") {
    m.input_dim = 144;
    Layer c;
    c.kind = LayerKind::Conv;
    c.conv = ConvShape{1, 12, 12, 4, 5, 5, 1, 0};
    c.n = 144;
    c.m = std::size_t{4} * 8 * 8;
    c.act = Activation::Relu;
    auto unif = [&] { return (double(rng.uniform(1u << 20)) / double(1u << 20) * 2.0 - 1.0); };
    c.weights.resize(4 * 25);
    for (auto& w : c.weights) w = fp.encode(unif() * 0.2);
    c.bias.resize(4);
    for (auto& b : c.bias) b = fp.encode_scaled(unif() * 0.1, 2 * fp_scale);
    m.layers.push_back(std::move(c));
    Layer pool;
    pool.kind = LayerKind::AvgPool;
    pool.pool = PoolShape{4, 8, 8, 2};
    pool.n = 256;
    pool.m = 64;
    m.layers.push_back(std::move(pool));
    m.layers.push_back(dense_layer(64, 10, Activation::Argmax, fp, rng));
  } else if (arch == "relu-layer") {
    m.input_dim = 64;
    m.layers.push_back(dense_layer(64, 32, Activation::Relu, fp, rng));
  } else {
    throw ParameterError("unknown architecture '" + arch + "'");
  }
  m.validate();
  return m;
}

std::vector<u64> sample_input(const ModelManifest& m, Rng& rng, double range) {
  const FixedPoint fp(Modulus(m.p), m.fp_scale);
  std::vector<u64> x(m.input_dim);
  for (auto& v : x) v = fp.encode((double(rng.uniform(1u << 20)) / double(1u << 20) * 2.0 - 1.0) * range);
  return x;
}

std::vector<std::uint32_t> label_of(std::span<const u64> argmax_output) {
  std::vector<std::uint32_t> out;
  for (auto v : argmax_output)
    if (v != 0) out.push_back(static_cast<std::uint32_t>(v));
  return out;
}

}  // namespace duet::engine
