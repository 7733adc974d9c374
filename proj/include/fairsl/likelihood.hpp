#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fairsl/grounding.hpp"

namespace fairsl {

/// Pseudo-log-likelihood of an HL-MRF: sum over target atoms of
/// log p(y_i | y_rest), where each conditional is the one-dimensional density
/// proportional to exp(-energy) over [0,1] with every other atom held fixed.
/// The normalizers are integrated piecewise with Gauss-Legendre quadrature
/// between hinge breakpoints, so the result is exact up to quadrature error.
///
/// Holds a view of the potentials; weights are read at call time, so callers
/// may update them between calls.
class PseudoLikelihood {
 public:
  PseudoLikelihood(std::span<const GroundPotential> potentials, std::size_t n_targets);

  double log_likelihood(const Assignment& y) const;

  /// Pseudo-likelihood over the endpoints {0, 1}, one term per target atom:
  /// log q_i if y_i >= 1/2 else log(1 - q_i), where q_i is the
  /// conditional probability of y_i = 1 against y_i = 0 with the rest fixed.
  /// Terms are at most 0; an atom no potential touches gets log 1/2.
  /// The other atoms are held at `context` (e.g. a MAP prediction).
  Eigen::VectorXd two_point_terms(const Assignment& y, const Assignment& context) const;

  /// Gradient of log_likelihood with respect to each clause weight:
  /// sum_i E_{p(t|rest)}[phi_c,i(t)] - phi_c,i(y_i), with phi_c,i the summed
  /// potentials of clause c that touch atom i.
  std::vector<double> clause_gradient(const Assignment& y, std::size_t n_clauses) const;

 private:
  struct Incidence {
    int potential;
    double coefficient;
  };

  template <typename Visit>
  void for_each_conditional(const Assignment& y, Visit&& visit) const;

  std::span<const GroundPotential> potentials_;
  std::vector<std::vector<Incidence>> incidence_;
};

}  // namespace fairsl
