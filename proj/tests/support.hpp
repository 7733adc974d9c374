#pragma once

// Random instance generators and independent oracles shared by the tests.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fairsl/fairness.hpp"
#include "fairsl/grounding.hpp"
#include "fairsl/inference.hpp"
#include "fairsl/relational.hpp"

namespace testsupport {

using fairsl::Assignment;
using fairsl::GroundPotential;
using fairsl::LinearConstraint;

/// Predicates of the paper-review data, in generator order.
inline fairsl::Schema paper_schema(bool with_high_quality = true) {
  using fairsl::PredicateKind;
  fairsl::Schema s{
      {"submits", 2, PredicateKind::observed, {"author", "paper"}},
      {"student", 1, PredicateKind::observed, {"author"}},
      {"acceptable", 1, PredicateKind::observed, {"paper"}},
      {"reviews", 2, PredicateKind::observed, {"reviewer", "paper"}},
      {"positiveReviews", 2, PredicateKind::target, {"reviewer", "paper"}},
      {"positiveSummary", 1, PredicateKind::target, {"paper"}},
  };
  if (with_high_quality) s.push_back({"highQuality", 1, PredicateKind::observed, {"paper"}});
  return s;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

struct Instance {
  std::size_t n = 0;
  std::vector<GroundPotential> potentials;
  std::vector<LinearConstraint> constraints;
};

inline GroundPotential random_potential(std::mt19937_64& rng, std::size_t n) {
  GroundPotential p;
  for (std::size_t i = 0; i < n; ++i)
    if (uniform(rng, 0, 1) < 0.7) p.coefficients.emplace_back(static_cast<int>(i), uniform(rng, -1, 1));
  if (p.coefficients.empty()) p.coefficients.emplace_back(uniform_int(rng, 0, static_cast<int>(n) - 1), 1.0);
  p.constant = uniform(rng, -1, 1);
  p.exponent = uniform(rng, 0, 1) < 0.5 ? 1 : 2;
  p.weight = uniform(rng, 0, 2);
  return p;
}

/// Constraint satisfied with some slack by a random point of the box.
inline LinearConstraint random_constraint(std::mt19937_64& rng, std::size_t n) {
  LinearConstraint c;
  Assignment y0(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    y0[static_cast<Eigen::Index>(i)] = uniform(rng, 0, 1);
    double a = uniform(rng, -1, 1);
    if (std::abs(a) > 0.05) c.coefficients.emplace_back(static_cast<int>(i), a);
  }
  if (c.coefficients.empty()) c.coefficients.emplace_back(0, 1.0);
  double lhs = fairsl::linear_value(c.coefficients, 0.0, y0);
  c.sense = uniform(rng, 0, 1) < 0.5 ? fairsl::Sense::less_equal : fairsl::Sense::greater_equal;
  double slack = uniform(rng, 0.05, 0.5);
  c.bound = c.sense == fairsl::Sense::less_equal ? lhs + slack : lhs - slack;
  c.label = "random";
  return c;
}

inline Instance random_instance(std::mt19937_64& rng, std::size_t max_targets = 3, int max_potentials = 5,
                                int max_constraints = 2) {
  Instance inst;
  inst.n = static_cast<std::size_t>(uniform_int(rng, 1, static_cast<int>(max_targets)));
  int np = uniform_int(rng, 1, max_potentials);
  int nc = uniform_int(rng, 0, max_constraints);
  for (int k = 0; k < np; ++k) inst.potentials.push_back(random_potential(rng, inst.n));
  for (int k = 0; k < nc; ++k) inst.constraints.push_back(random_constraint(rng, inst.n));
  return inst;
}

/// Adds w * ((y_i - c)^2) as two squared hinges per target, making the
/// energy strictly convex.
inline void add_anchor(Instance& inst, std::mt19937_64& rng, double weight) {
  for (std::size_t i = 0; i < inst.n; ++i) {
    double c = uniform(rng, 0.1, 0.9);
    GroundPotential up{{{static_cast<int>(i), 1.0}}, -c, 2, weight, -1};
    GroundPotential down{{{static_cast<int>(i), -1.0}}, c, 2, weight, -1};
    inst.potentials.push_back(up);
    inst.potentials.push_back(down);
  }
}

/// Bound on how far the grid optimum can sit above the continuous optimum:
/// energy Lipschitz constant (max-norm) times the grid spacing.
inline double discretization_bound(const Instance& inst, double resolution) {
  double lip = 0.0;
  for (const auto& p : inst.potentials) {
    double l1 = 0.0, reach = std::abs(p.constant);
    for (const auto& t : p.coefficients) {
      l1 += std::abs(t.second);
      reach += std::abs(t.second);
    }
    lip += p.weight * l1 * (p.exponent == 2 ? 2.0 * reach : 1.0);
  }
  return lip * resolution;
}

// Independent metric oracle: explicit confusion counts per group.
struct Confusion {
  double tp = 0, fp = 0, tn = 0, fn = 0;
  double n() const { return tp + fp + tn + fn; }
  double positives_pred() const { return tp + fp; }
};

inline Confusion confusion(const std::vector<double>& pred, const std::vector<double>& truth, double thr) {
  Confusion c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    bool yhat = !(pred[i] < thr);
    bool y = !(truth[i] < thr);
    if (yhat && y) c.tp++;
    else if (yhat && !y) c.fp++;
    else if (!yhat && y) c.fn++;
    else c.tn++;
  }
  return c;
}

/// AUC-ROC as the Mann-Whitney statistic with average ranks.
inline double rank_auc(const std::vector<double>& s, const std::vector<int>& y) {
  std::vector<std::pair<double, int>> v;
  for (std::size_t i = 0; i < s.size(); ++i) v.emplace_back(s[i], y[i]);
  std::sort(v.begin(), v.end(), [](auto& a, auto& b) { return a.first < b.first; });
  double rank_sum = 0, pos = 0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    while (j < v.size() && v[j].first == v[i].first) ++j;
    double avg = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t k = i; k < j; ++k)
      if (v[k].second) {
        rank_sum += avg;
        pos += 1;
      }
    i = j;
  }
  double neg = static_cast<double>(v.size()) - pos;
  return (rank_sum - pos * (pos + 1) / 2) / (pos * neg);
}

}  // namespace testsupport
