#include "fairsl/likelihood.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "fairsl/error.hpp"

namespace fairsl {

namespace {

// 8-point Gauss-Legendre rule on [-1, 1].
constexpr std::array<double, 8> kNodes = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                          -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                          0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kWeights = {0.1012285362903763, 0.2223810344533745, 0.3137066378865891,
                                            0.3626837833783620, 0.3626837833783620, 0.3137066378865891,
                                            0.2223810344533745, 0.1012285362903763};
constexpr double kMaxPanel = 0.125;

struct Piece {
  int potential;
  double slope;   // coefficient of the atom
  double offset;  // rest of the linear form at the current assignment
  double weight;
  int exponent;
  int clause;

  double phi(double t) const {
    double l = std::max(0.0, slope * t + offset);
    return exponent == 2 ? l * l : l;
  }
};

// Quadrature nodes over [0,1] honouring the hinge breakpoints of `pieces`.
void build_nodes(const std::vector<Piece>& pieces, std::vector<double>& t, std::vector<double>& w) {
  std::vector<double> cuts = {0.0, 1.0};
  for (const auto& p : pieces) {
    double b = -p.offset / p.slope;
    if (b > 0.0 && b < 1.0) cuts.push_back(b);
  }
  std::sort(cuts.begin(), cuts.end());
  t.clear();
  w.clear();
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    double a = cuts[s], b = cuts[s + 1];
    if (b - a <= 0.0) continue;
    int panels = std::max(1, static_cast<int>(std::ceil((b - a) / kMaxPanel)));
    double h = (b - a) / panels;
    for (int k = 0; k < panels; ++k) {
      double lo = a + k * h;
      for (std::size_t q = 0; q < kNodes.size(); ++q) {
        t.push_back(lo + 0.5 * h * (kNodes[q] + 1.0));
        w.push_back(0.5 * h * kWeights[q]);
      }
    }
  }
}

}  // namespace

PseudoLikelihood::PseudoLikelihood(std::span<const GroundPotential> potentials, std::size_t n_targets)
    : potentials_(potentials), incidence_(n_targets) {
  for (std::size_t p = 0; p < potentials.size(); ++p)
    for (const auto& [index, coef] : potentials[p].coefficients) {
      if (index < 0 || static_cast<std::size_t>(index) >= n_targets)
        throw Error("potential refers to target " + std::to_string(index) + " outside the assignment");
      incidence_[static_cast<std::size_t>(index)].push_back({static_cast<int>(p), coef});
    }
}

template <typename Visit>
void PseudoLikelihood::for_each_conditional(const Assignment& y, Visit&& visit) const {
  if (y.size() != static_cast<Eigen::Index>(incidence_.size())) throw Error("assignment has the wrong size");
  std::vector<double> full(potentials_.size());
  for (std::size_t p = 0; p < potentials_.size(); ++p)
    full[p] = linear_value(potentials_[p].coefficients, potentials_[p].constant, y);

  std::vector<Piece> pieces;
  std::vector<double> t, w, energy;
  for (std::size_t i = 0; i < incidence_.size(); ++i) {
    pieces.clear();
    for (const auto& inc : incidence_[i]) {
      const auto& gp = potentials_[static_cast<std::size_t>(inc.potential)];
      pieces.push_back({inc.potential, inc.coefficient, full[static_cast<std::size_t>(inc.potential)] -
                                                            inc.coefficient * y[static_cast<Eigen::Index>(i)],
                        gp.weight, gp.exponent, gp.clause});
    }
    if (pieces.empty()) continue;
    build_nodes(pieces, t, w);
    energy.resize(t.size());
    double e_min = std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < t.size(); ++q) {
      double e = 0.0;
      for (const auto& p : pieces) e += p.weight * p.phi(t[q]);
      energy[q] = e;
      e_min = std::min(e_min, e);
    }
    for (std::size_t q = 0; q < t.size(); ++q) w[q] *= std::exp(-(energy[q] - e_min));
    double z = 0.0;
    for (double wq : w) z += wq;
    visit(static_cast<Eigen::Index>(i), pieces, t, w, z, e_min);
  }
}

double PseudoLikelihood::log_likelihood(const Assignment& y) const {
  double total = 0.0;
  for_each_conditional(y, [&](Eigen::Index i, const std::vector<Piece>& pieces, const std::vector<double>&,
                              const std::vector<double>&, double z, double e_min) {
    double e = 0.0;
    for (const auto& p : pieces) e += p.weight * p.phi(y[i]);
    total += -e + e_min - std::log(z);
  });
  return total;
}

Eigen::VectorXd PseudoLikelihood::two_point_terms(const Assignment& y, const Assignment& context) const {
  const auto n = static_cast<Eigen::Index>(incidence_.size());
  if (y.size() != n || context.size() != n) throw Error("assignment has the wrong size");
  std::vector<double> full(potentials_.size());
  for (std::size_t p = 0; p < potentials_.size(); ++p)
    full[p] = linear_value(potentials_[p].coefficients, potentials_[p].constant, context);
  Eigen::VectorXd out(n);
  for (std::size_t i = 0; i < incidence_.size(); ++i) {
    const double yi = y[static_cast<Eigen::Index>(i)] >= 0.5 ? 1.0 : 0.0;
    const auto ci = context[static_cast<Eigen::Index>(i)];
    double e0 = 0.0, e1 = 0.0;
    for (const auto& inc : incidence_[i]) {
      const auto& gp = potentials_[static_cast<std::size_t>(inc.potential)];
      Piece p{inc.potential, inc.coefficient, full[static_cast<std::size_t>(inc.potential)] - inc.coefficient * ci,
              gp.weight, gp.exponent, gp.clause};
      e0 += p.weight * p.phi(0.0);
      e1 += p.weight * p.phi(1.0);
    }
    // log q = -log(1 + exp(e1 - e0)), log(1 - q) = -log(1 + exp(e0 - e1)).
    auto log1pexp = [](double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); };
    out[static_cast<Eigen::Index>(i)] = -(yi * log1pexp(e1 - e0) + (1.0 - yi) * log1pexp(e0 - e1));
  }
  return out;
}

std::vector<double> PseudoLikelihood::clause_gradient(const Assignment& y, std::size_t n_clauses) const {
  std::vector<double> grad(n_clauses, 0.0);
  for_each_conditional(y, [&](Eigen::Index i, const std::vector<Piece>& pieces, const std::vector<double>& t,
                              const std::vector<double>& w, double z, double) {
    for (const auto& p : pieces) {
      if (p.clause < 0 || static_cast<std::size_t>(p.clause) >= n_clauses)
        throw Error("potential clause index outside the rule set");
      double expected = 0.0;
      for (std::size_t q = 0; q < t.size(); ++q) expected += w[q] * p.phi(t[q]);
      grad[static_cast<std::size_t>(p.clause)] += expected / z - p.phi(y[i]);
    }
  });
  return grad;
}

}  // namespace fairsl
