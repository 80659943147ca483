#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>
#include <vector>

#include "isodimer/gibbs.hpp"
#include "isodimer/kernel.hpp"

namespace isodimer {

struct SamplerDiagnostics {
  double max_probability_sum_dev = 0.0;  // max |sum of conditional probs - 1|
  double min_probability = 0.0;          // most negative conditional prob seen
};

// Draws a perfect matching of the region exactly from its Boltzmann measure
// with critical weights. White vertices are processed in a fixed row-major
// order; each is matched to an adjacent black vertex with the conditional
// probabilities Re(K(w,b) K^-1_cond(b,w)), and the conditioned kernel is
// advanced by a rank-one Schur-complement update after every forced edge.
// The processing order does not affect the law; it pins the random-number
// consumption so that a fixed RngStream reproduces the same matching.
inline DimerConfiguration sample_matching(const FiniteKernel& kernel, RngStream& rng,
                                          SamplerDiagnostics* diag = nullptr) {
  const DualRegion& region = kernel.region();
  const IsoradialGraph& g = *region.g;
  const int n = kernel.size();

  // Whites sorted by position, row-major (y, then x).
  std::vector<int> order(region.whites.begin(), region.whites.end());
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const Complex pa = g.faces[a].center, pb = g.faces[b].center;
    if (pa.imag() != pb.imag()) return pa.imag() < pb.imag();
    if (pa.real() != pb.real()) return pa.real() < pb.real();
    return a < b;
  });

  // Working copy of K^-1 with columns permuted into processing order.
  Eigen::MatrixXcd C(n, n);
  for (int j = 0; j < n; ++j) C.col(j) = kernel.inverse_matrix().col(kernel.white_index(order[j]));

  // Pending rank-one Schur updates are accumulated in panels U (columns) and
  // V (rows) and flushed through one matrix product every `kPanel` steps.
  // The effective kernel is always C - U V restricted to the pending count.
  constexpr int kPanel = 40;
  Eigen::MatrixXcd U(n, kPanel);
  Eigen::MatrixXcd V = Eigen::MatrixXcd::Zero(kPanel, n);
  int pending = 0;

  std::vector<char> black_used(n, 0);
  DimerConfiguration result;
  result.edges.reserve(n);

  auto effective_entry = [&](int row, int col) {
    Complex c = C(row, col);
    if (pending > 0) c -= (U.row(row).head(pending) * V.col(col).head(pending))(0, 0);
    return c;
  };

  for (int j = 0; j < n; ++j) {
    const int w = order[j];
    double total = 0.0;
    int candidates[8];
    double probs[8];
    Complex kern_val[8];
    int m = 0;
    for (int de : g.dual_adj[w]) {
      if (!region.contains_dual_edge(de)) continue;
      const int b = g.dual_edges[de].black;
      const int bi = kernel.black_index(b);
      if (black_used[bi]) continue;
      const Complex cbw = effective_entry(bi, j);
      double p = (kernel.dirac().K_wb(de) * cbw).real();
      if (diag && p < diag->min_probability) diag->min_probability = p;
      if (p < 0) {
        if (p < -1e-9) throw NumericalError("sample_matching: negative conditional probability");
        p = 0;
      }
      if (m == 8) throw ValidationError("sample_matching: dual degree exceeds 8");
      candidates[m] = de;
      probs[m] = p;
      kern_val[m] = cbw;
      ++m;
    }
    for (int i = 0; i < m; ++i) total += probs[i];
    if (diag) {
      diag->max_probability_sum_dev = std::max(diag->max_probability_sum_dev,
                                               std::abs(total - 1.0));
    }
    if (m == 0 || total < 1e-5) {
      throw NumericalError("sample_matching: no available partner (conditioning collapsed)");
    }
    double u = rng.next_double() * total;
    int pick = m - 1;
    for (int i = 0; i < m; ++i) {
      u -= probs[i];
      if (u <= 0) {
        pick = i;
        break;
      }
    }
    const int de = candidates[pick];
    const int bsel = kernel.black_index(g.dual_edges[de].black);
    result.edges.push_back(de);

    if (j + 1 < n) {
      const Complex pivot = kern_val[pick];
      if (std::abs(pivot) < 1e-14) {
        throw NumericalError("sample_matching: vanishing pivot in kernel update");
      }
      const int rest = n - j - 1;
      // New pending pair: u = effective column j, v = effective row bsel
      // over the remaining columns, divided by the pivot.
      U.col(pending) = C.col(j);
      V.row(pending).segment(j + 1, rest) = C.row(bsel).segment(j + 1, rest);
      if (pending > 0) {
        U.col(pending).noalias() -=
            U.leftCols(pending) * V.block(0, j, pending, 1);
        V.row(pending).segment(j + 1, rest).noalias() -=
            U.row(bsel).head(pending) * V.block(0, j + 1, pending, rest);
      }
      V.row(pending).head(j + 1).setZero();
      V.row(pending).segment(j + 1, rest) /= pivot;
      ++pending;
      if (pending == kPanel) {
        C.block(0, j + 1, n, rest).noalias() -= U * V.block(0, j + 1, kPanel, rest);
        pending = 0;
      }
    }
    black_used[bsel] = 1;
  }

  std::sort(result.edges.begin(), result.edges.end());
  if (!is_perfect_matching(region, result)) {
    throw NumericalError("sample_matching: produced configuration is not a perfect matching");
  }
  return result;
}

// Stage-one sampler for quadri-tilings: a lozenge tiling of a triangular-
// lattice region, i.e. a matching of its honeycomb dual reinterpreted as
// 60-degree rhombi.
inline LozengeTiling sample_lozenge_tiling(const FiniteKernel& kernel, RngStream& rng) {
  const DimerConfiguration m = sample_matching(kernel, rng);
  return LozengeTiling::from_matching(*kernel.region().g, kernel.region(), m);
}

// ---------------------------------------------------------------------------
// Monte Carlo harness
// ---------------------------------------------------------------------------

struct McEstimate {
  double mean = 0.0;
  double se = 0.0;  // batch-means standard error
  int n = 0;
  int batches = 0;
};

// Batch-means estimate: the samples are split into `nbatches` consecutive
// batches; the SE is the empirical sd of batch means over sqrt(nbatches).
inline McEstimate batch_means(const std::vector<double>& xs, int nbatches = 20) {
  McEstimate e;
  e.n = static_cast<int>(xs.size());
  if (xs.empty()) return e;
  nbatches = std::min<int>(nbatches, e.n);
  e.batches = nbatches;
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / e.n;
  e.mean = mean;
  double var = 0.0;
  const int base = e.n / nbatches;
  int used = 0;
  for (int b = 0; b < nbatches; ++b) {
    const int len = base + (b < e.n % nbatches ? 1 : 0);
    double bm = 0;
    for (int i = 0; i < len; ++i) bm += xs[used + i];
    bm /= len;
    var += (bm - mean) * (bm - mean);
    used += len;
  }
  var /= nbatches > 1 ? (nbatches - 1) : 1;
  e.se = std::sqrt(var / nbatches);
  return e;
}

// Runs fn(sample_index, rng) for indices [0, n) across `threads` workers.
// Each index gets its own stream derived from (seed, index), so results are
// independent of the number of threads.
template <class Fn>
void run_streams(int n, std::uint64_t seed, int threads, Fn&& fn) {
  threads = std::max(1, threads);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      RngStream rng = RngStream::make(seed, static_cast<std::uint64_t>(i));
      fn(i, rng);
    }
  };
  if (threads == 1) {
    worker();
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

inline int default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace isodimer
