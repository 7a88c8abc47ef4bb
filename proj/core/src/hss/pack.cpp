#include "duet/hss/pack.hpp"

#include <algorithm>

#include "duet/common/error.hpp"

namespace duet::hss {

namespace {

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

std::vector<SubJob> split_jobs(std::span<const TripleJob> jobs, std::size_t N) {
  std::vector<SubJob> out;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    if (jobs[j].n == 0 || jobs[j].m == 0) throw DimensionError("triple dimensions must be positive");
    for (std::size_t r = 0; r < jobs[j].n; r += N) {
      out.push_back({j, r, std::min(N, jobs[j].n - r), jobs[j].m, 0});
    }
  }
  return out;
}

void finish_poly(PackPlan& plan, APoly& poly) {
  std::size_t bp = 0;
  for (const auto& seg : poly.segments) {
    const SubJob& sj = plan.subjobs[seg.subjob];
    bp = std::max(bp, ceil_div(sj.m, sj.copies));
  }
  poly.b_polys = bp;
  plan.polys.push_back(std::move(poly));
}

PackPlan build(std::span<const TripleJob> jobs, std::size_t N, std::size_t seg_len) {
  PackPlan plan;
  plan.N = N;
  plan.jobs.assign(jobs.begin(), jobs.end());
  plan.subjobs = split_jobs(jobs, N);
  plan.seg_len = seg_len;
  plan.segs_per_poly = N / seg_len;
  const std::size_t k = plan.segs_per_poly;
  for (std::size_t first = 0; first < plan.subjobs.size(); first += k) {
    const std::size_t last = std::min(plan.subjobs.size(), first + k);
    APoly poly;
    for (std::size_t s = first; s < last; ++s) {
      poly.segments.push_back({s, 0});
      plan.subjobs[s].copies = 1;
    }
    // Spare segments reduce the number of B polynomials this A needs.
    for (std::size_t spare = last - first; spare < k; ++spare) {
      std::size_t best = first;
      for (std::size_t s = first; s < last; ++s) {
        const auto& a = plan.subjobs[s];
        const auto& b = plan.subjobs[best];
        if (ceil_div(a.m, a.copies) > ceil_div(b.m, b.copies)) best = s;
      }
      auto& sj = plan.subjobs[best];
      if (sj.copies >= sj.m) break;
      poly.segments.push_back({best, sj.copies});
      sj.copies += 1;
    }
    finish_poly(plan, poly);
  }
  return plan;
}

}  // namespace

std::size_t PackPlan::mults() const {
  std::size_t t = 0;
  for (const auto& p : polys) t += p.b_polys;
  return t;
}

std::vector<u64> PackPlan::a_slots(std::size_t g, std::span<const std::vector<u64>> a) const {
  std::vector<u64> v(N, 0);
  const APoly& poly = polys.at(g);
  for (std::size_t t = 0; t < poly.segments.size(); ++t) {
    const SubJob& sj = subjobs[poly.segments[t].subjob];
    const auto& aj = a[sj.job];
    if (aj.size() != jobs[sj.job].n) throw DimensionError("triple vector length mismatch");
    for (std::size_t r = 0; r < sj.rows; ++r) v[t * seg_len + r] = aj[sj.row_begin + r];
  }
  return v;
}

std::vector<u64> PackPlan::b_slots(std::size_t g, std::size_t l, std::span<const std::vector<u64>> B) const {
  std::vector<u64> v(N, 0);
  const APoly& poly = polys.at(g);
  for (std::size_t t = 0; t < poly.segments.size(); ++t) {
    const Segment& seg = poly.segments[t];
    const SubJob& sj = subjobs[seg.subjob];
    const std::size_t col = l * sj.copies + seg.copy;
    if (col >= sj.m) continue;
    const auto& bj = B[sj.job];
    if (bj.size() != jobs[sj.job].n * sj.m) throw DimensionError("triple matrix size mismatch");
    for (std::size_t r = 0; r < sj.rows; ++r) v[t * seg_len + r] = bj[(sj.row_begin + r) * sj.m + col];
  }
  return v;
}

void PackPlan::accumulate(std::size_t g, std::size_t l, std::span<const u64> slots,
                          std::vector<std::vector<u64>>& c, const Modulus& p) const {
  const APoly& poly = polys.at(g);
  for (std::size_t t = 0; t < poly.segments.size(); ++t) {
    const Segment& seg = poly.segments[t];
    const SubJob& sj = subjobs[seg.subjob];
    const std::size_t col = l * sj.copies + seg.copy;
    if (col >= sj.m) continue;
    u64 sum = 0;
    for (std::size_t r = 0; r < sj.rows; ++r) sum = p.add(sum, slots[t * seg_len + r]);
    auto& cj = c[sj.job];
    cj[col] = p.add(cj[col], sum);
  }
}

PackPlan plan_packed(std::span<const TripleJob> jobs, std::size_t N) {
  std::size_t h = 0;
  for (const auto& j : jobs) h = std::max(h, std::min(j.n, N));
  if (h == 0) throw DimensionError("no triple jobs");
  return build(jobs, N, h);
}

PackPlan plan_unpacked(std::span<const TripleJob> jobs, std::size_t N) {
  if (jobs.empty()) throw DimensionError("no triple jobs");
  return build(jobs, N, N);
}

}  // namespace duet::hss
