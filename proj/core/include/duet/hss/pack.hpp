#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "duet/ring/modarith.hpp"

namespace duet::hss {

// A triple request: a in Z_p^n, B in Z_p^{n x m} (row-major), c = a * B.
struct TripleJob {
  std::size_t n = 0;
  std::size_t m = 0;
};

// A block of at most N consecutive rows of one job.
struct SubJob {
  std::size_t job = 0;
  std::size_t row_begin = 0;
  std::size_t rows = 0;
  std::size_t m = 0;
  std::size_t copies = 0;  // segments holding this sub-job
};

// Slot segment [index * seg_len, (index+1) * seg_len) of an A polynomial.
struct Segment {
  std::size_t subjob = 0;
  std::size_t copy = 0;
};

struct APoly {
  std::vector<Segment> segments;
  std::size_t b_polys = 0;  // ceil(m / copies), maximised over its sub-jobs
};

// Public packing layout, fixed when a model is loaded. Each A polynomial
// carries one encrypted vector per inference; B polynomial l of an A
// polynomial puts column (l * copies + copy) of a sub-job's rows into that
// sub-job's copy-th segment.
struct PackPlan {
  std::size_t N = 0;
  std::size_t seg_len = 0;
  std::size_t segs_per_poly = 0;
  std::vector<TripleJob> jobs;
  std::vector<SubJob> subjobs;
  std::vector<APoly> polys;

  std::size_t ciphertexts() const { return polys.size(); }
  std::size_t mults() const;

  // Slot vector of A polynomial g from per-job vectors a_j.
  std::vector<u64> a_slots(std::size_t g, std::span<const std::vector<u64>> a) const;
  // Slot vector of B polynomial l of A polynomial g from row-major B_j.
  std::vector<u64> b_slots(std::size_t g, std::size_t l, std::span<const std::vector<u64>> B) const;
  // Adds the segment sums of one product's slots into the per-job outputs.
  void accumulate(std::size_t g, std::size_t l, std::span<const u64> slots, std::vector<std::vector<u64>>& c,
                  const Modulus& p) const;
};

// Packed layout: uniform segments of the largest sub-job height, first-fit
// one segment per sub-job, spare segments replicate the sub-job whose
// column count per copy is largest.
PackPlan plan_packed(std::span<const TripleJob> jobs, std::size_t N);
// One sub-job per polynomial, no replication.
PackPlan plan_unpacked(std::span<const TripleJob> jobs, std::size_t N);

}  // namespace duet::hss
