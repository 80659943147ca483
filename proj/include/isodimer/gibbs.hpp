#pragma once

#include <Eigen/Dense>
#include <Eigen/LU>

#include <algorithm>
#include <string>
#include <vector>

#include "isodimer/kernel.hpp"

namespace isodimer {

// A cylinder event: the set of dimer configurations containing all the listed
// dual edges. Edges sharing a vertex are permitted as queries; such cylinders
// have probability zero.
struct CylinderEvent {
  std::vector<int> edges;  // dual edge ids, pairwise distinct
};

// Uniform view over the two inverse-kernel backends. Local statistics carry
// the name of the backend that produced them: "exact" is the whole-plane
// Gibbs measure via the local integral, "finite" the Boltzmann measure of a
// finite region via the dense inverse.
class KernelRef {
 public:
  KernelRef(const ExactKernel& k) : exact_(&k) {}          // NOLINT(google-explicit-constructor)
  KernelRef(const FiniteKernel& k) : finite_(&k) {}        // NOLINT(google-explicit-constructor)

  Complex inverse(int b_face, int w_face) const {
    return exact_ ? exact_->inverse(b_face, w_face) : finite_->inverse(b_face, w_face);
  }
  const DiracOperator& dirac() const { return exact_ ? exact_->dirac() : finite_->dirac(); }
  const IsoradialGraph& graph() const { return *dirac().g; }
  std::string backend() const { return exact_ ? "exact" : "finite"; }

 private:
  const ExactKernel* exact_ = nullptr;
  const FiniteKernel* finite_ = nullptr;
};

// Probability that a dual edge is occupied: Re(K(w,b) K^-1(b,w)), which
// equals theta/pi for the whole-plane measure.
inline double edge_probability(const KernelRef& kernel, int dual_edge) {
  const auto& d = kernel.graph().dual_edges[dual_edge];
  return (kernel.dirac().K_wb(dual_edge) * kernel.inverse(d.black, d.white)).real();
}

struct LocalStatistic {
  double value = 0.0;        // real part of the product-determinant
  double imag_residue = 0.0; // |imaginary part|, reported, not clamped
  std::string backend;
};

// Probability of a cylinder event: prod_i K(w_i, b_i) * det K^-1(b_i, w_j).
inline LocalStatistic local_statistic(const KernelRef& kernel, const CylinderEvent& ev) {
  const int k = static_cast<int>(ev.edges.size());
  if (k == 0) return {1.0, 0.0, kernel.backend()};
  if (k > 64) throw ValidationError("local_statistic: more than 64 edges");
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      if (ev.edges[i] == ev.edges[j]) {
        throw ValidationError("local_statistic: edges must be distinct");
      }
    }
  }
  const auto& g = kernel.graph();
  Complex prefactor = 1.0;
  Eigen::MatrixXcd M(k, k);
  for (int i = 0; i < k; ++i) {
    const auto& di = g.dual_edges[ev.edges[i]];
    prefactor *= kernel.dirac().K_wb(ev.edges[i]);
    for (int j = 0; j < k; ++j) {
      const auto& dj = g.dual_edges[ev.edges[j]];
      M(i, j) = kernel.inverse(di.black, dj.white);
    }
  }
  const Complex v = prefactor * M.determinant();
  return {v.real(), std::abs(v.imag()), kernel.backend()};
}

// Truncated correlation E[prod_i (1_{e_i} - mu(e_i))] of k >= 2 distinct
// edges, computed from the determinant with zeroed diagonal. The optional
// orientation signs delta_i multiply the result by (-1)^{sum delta}; they
// are the side markers of path edges in height-increment sums.
inline double truncated_correlation(const KernelRef& kernel, const CylinderEvent& ev,
                                    const std::vector<int>& deltas = {}) {
  const int k = static_cast<int>(ev.edges.size());
  if (k < 2) throw ValidationError("truncated_correlation: need at least two edges");
  if (!deltas.empty() && static_cast<int>(deltas.size()) != k) {
    throw ValidationError("truncated_correlation: one sign per edge");
  }
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      if (ev.edges[i] == ev.edges[j]) {
        throw ValidationError("truncated_correlation: edges must be distinct");
      }
    }
  }
  const auto& g = kernel.graph();
  Complex prefactor = 1.0;
  Eigen::MatrixXcd M(k, k);
  for (int i = 0; i < k; ++i) {
    const auto& di = g.dual_edges[ev.edges[i]];
    prefactor *= kernel.dirac().K_wb(ev.edges[i]);
    for (int j = 0; j < k; ++j) {
      if (i == j) {
        M(i, j) = 0.0;
        continue;
      }
      const auto& dj = g.dual_edges[ev.edges[j]];
      M(i, j) = kernel.inverse(di.black, dj.white);
    }
  }
  int sign = 1;
  for (int d : deltas) {
    if (d != 0) sign = -sign;
  }
  return sign * (prefactor * M.determinant()).real();
}

// ---------------------------------------------------------------------------
// Brute-force enumeration
// ---------------------------------------------------------------------------

// Exhaustive table of the Boltzmann measure of a finite region: every perfect
// matching with its weight prod nu(e), the partition function and per-
// configuration probabilities.
struct BoltzmannTable {
  const DualRegion* region = nullptr;
  std::vector<DimerConfiguration> matchings;
  std::vector<double> weights;
  double partition_function = 0.0;

  double probability(size_t i) const { return weights[i] / partition_function; }

  // Total probability of configurations containing all the given edges.
  double cylinder_probability(const std::vector<int>& edges) const {
    double p = 0;
    for (size_t i = 0; i < matchings.size(); ++i) {
      bool all = true;
      for (int e : edges) {
        if (!std::binary_search(matchings[i].edges.begin(), matchings[i].edges.end(), e)) {
          all = false;
          break;
        }
      }
      if (all) p += weights[i];
    }
    return p / partition_function;
  }

  int index_of(const DimerConfiguration& m) const {
    for (size_t i = 0; i < matchings.size(); ++i) {
      if (matchings[i] == m) return static_cast<int>(i);
    }
    return -1;
  }
};

// Enumerates all perfect matchings of the region by branching on the lowest
// uncovered face. Throws if more than `budget` matchings exist. The empty
// region yields the empty matching with Z = 1.
inline BoltzmannTable brute_force_measure(const DualRegion& region,
                                          std::size_t budget = 1000000) {
  BoltzmannTable table;
  table.region = &region;
  const auto& g = *region.g;
  const int n = region.size();
  std::vector<char> covered(n, 0);
  std::vector<int> chosen;
  double weight = 1.0;

  // Region dual edges at each region face.
  std::vector<std::vector<int>> incident(n);
  for (int de : region.dual_edges) {
    const auto& d = g.dual_edges[de];
    incident[region.face_index[d.white]].push_back(de);
    incident[region.face_index[d.black]].push_back(de);
  }

  auto emit = [&]() {
    if (table.matchings.size() >= budget) {
      throw NumericalError("brute_force_measure: enumeration budget exceeded");
    }
    DimerConfiguration m;
    m.edges = chosen;
    std::sort(m.edges.begin(), m.edges.end());
    table.matchings.push_back(std::move(m));
    table.weights.push_back(weight);
    table.partition_function += weight;
  };

  auto recurse = [&](auto&& self, int lowest) -> void {
    while (lowest < n && covered[lowest]) ++lowest;
    if (lowest == n) {
      emit();
      return;
    }
    for (int de : incident[lowest]) {
      const auto& d = g.dual_edges[de];
      const int wi = region.face_index[d.white];
      const int bi = region.face_index[d.black];
      const int other = wi == lowest ? bi : wi;
      if (covered[other]) continue;
      covered[lowest] = covered[other] = 1;
      chosen.push_back(de);
      const double nu = g.critical_weight(de);
      weight *= nu;
      self(self, lowest + 1);
      weight /= nu;
      chosen.pop_back();
      covered[lowest] = covered[other] = 0;
    }
  };
  recurse(recurse, 0);
  return table;
}

}  // namespace isodimer
