#include "fairsl/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fairsl/error.hpp"

namespace fairsl {

double constraint_violation(const LinearConstraint& constraint, const Assignment& y) {
  double lhs = linear_value(constraint.coefficients, 0.0, y);
  return constraint.sense == Sense::less_equal ? lhs - constraint.bound : constraint.bound - lhs;
}

void validate(const AdmmParams& params) {
  if (!(params.step_size > 0.0)) throw Error("ADMM step size must be positive");
  if (!(params.primal_tol > 0.0) || !(params.dual_tol > 0.0)) throw Error("ADMM tolerances must be positive");
  if (params.max_iterations < 1) throw Error("ADMM max_iterations must be >= 1");
  if (!(params.initial_value >= 0.0 && params.initial_value <= 1.0))
    throw Error("ADMM initial_value must lie in [0,1]");
}

namespace {

double norm2(const SparseCoefficients& a) {
  double s = 0.0;
  for (const auto& t : a) s += t.second * t.second;
  return std::sqrt(s);
}

void check_indices(const SparseCoefficients& a, std::size_t n) {
  for (const auto& t : a)
    if (t.first < 0 || static_cast<std::size_t>(t.first) >= n)
      throw Error("coefficient refers to target " + std::to_string(t.first) + " outside " + std::to_string(n));
}

// Rejects constraints that no point of [0,1]^n satisfies.
void precheck_feasibility(std::span<const LinearConstraint> constraints) {
  for (const auto& c : constraints) {
    double lo = 0.0, hi = 0.0;
    for (const auto& t : c.coefficients) {
      lo += std::min(0.0, t.second);
      hi += std::max(0.0, t.second);
    }
    double slack = 1e-9 * (1.0 + std::abs(c.bound));
    if (c.sense == Sense::less_equal && lo > c.bound + slack)
      throw InfeasibleError("constraint '" + c.label + "' cannot be satisfied in [0,1]^n");
    if (c.sense == Sense::greater_equal && hi < c.bound - slack)
      throw InfeasibleError("constraint '" + c.label + "' cannot be satisfied in [0,1]^n");
  }
}

struct Agent {
  int begin = 0;
  int end = 0;
  double constant = 0.0;  // potential offset, or -bound for a constraint (a.x - bound <= 0)
  double weight = 0.0;
  double sq_norm = 0.0;
  int exponent = 1;
  bool constraint = false;
};

}  // namespace

InferenceResult map_inference(std::span<const GroundPotential> potentials,
                              std::span<const LinearConstraint> constraints, std::size_t n_targets,
                              const AdmmParams& params, const Assignment* start) {
  validate(params);
  for (const auto& p : potentials) {
    if (!(p.weight >= 0.0)) throw Error("potential weight must be >= 0");
    check_indices(p.coefficients, n_targets);
  }
  for (const auto& c : constraints) {
    if (c.coefficients.empty()) throw Error("constraint '" + c.label + "' has no coefficients");
    check_indices(c.coefficients, n_targets);
  }
  precheck_feasibility(constraints);

  const auto n = static_cast<Eigen::Index>(n_targets);
  Assignment z = Assignment::Constant(n, params.initial_value);
  if (start) {
    if (start->size() != n) throw Error("warm start has the wrong size");
    z = start->cwiseMax(0.0).cwiseMin(1.0);
  }

  std::vector<Agent> agents;
  std::vector<int> var;
  std::vector<double> coef;
  auto add_agent = [&](const SparseCoefficients& a, Agent agent) {
    agent.begin = static_cast<int>(var.size());
    for (const auto& t : a) {
      var.push_back(t.first);
      coef.push_back(t.second);
      agent.sq_norm += t.second * t.second;
    }
    agent.end = static_cast<int>(var.size());
    agents.push_back(agent);
  };
  for (const auto& p : potentials) {
    if (p.coefficients.empty() || p.weight == 0.0) continue;  // constant in y
    add_agent(p.coefficients, Agent{0, 0, p.constant, p.weight, 0.0, p.exponent, false});
  }
  for (const auto& c : constraints) {
    SparseCoefficients a = c.coefficients;
    double bound = c.bound;
    if (c.sense == Sense::greater_equal) {
      for (auto& t : a) t.second = -t.second;
      bound = -bound;
    }
    add_agent(a, Agent{0, 0, -bound, 0.0, 0.0, 1, true});
  }

  const std::size_t m = var.size();
  std::vector<double> x(m), u(m, 0.0), v(m);
  std::vector<int> count(n_targets, 0);
  for (std::size_t j = 0; j < m; ++j) {
    x[j] = z[var[j]];
    ++count[static_cast<std::size_t>(var[j])];
  }
  const double rho = params.step_size;
  Eigen::VectorXd sum(n);

  InferenceResult result;
  auto& diag = result.diagnostics;
  for (int iter = 1; iter <= params.max_iterations; ++iter) {
    for (const auto& ag : agents) {
      double l = ag.constant;
      for (int j = ag.begin; j < ag.end; ++j) {
        v[j] = z[var[j]] - u[j];
        l += coef[j] * v[j];
      }
      if (l <= 0.0) {
        for (int j = ag.begin; j < ag.end; ++j) x[j] = v[j];
        continue;
      }
      double step;  // x = v - step * a
      if (ag.constraint) {
        step = l / ag.sq_norm;
      } else if (ag.exponent == 1) {
        step = ag.weight / rho;
        if (l - step * ag.sq_norm < 0.0) step = l / ag.sq_norm;
      } else {
        double s = l / (1.0 + 2.0 * ag.weight * ag.sq_norm / rho);
        step = 2.0 * ag.weight * s / rho;
      }
      for (int j = ag.begin; j < ag.end; ++j) x[j] = v[j] - step * coef[j];
    }

    sum.setZero();
    for (std::size_t j = 0; j < m; ++j) sum[var[j]] += x[j] + u[j];
    double dual = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (count[static_cast<std::size_t>(i)] == 0) continue;
      double zi = std::clamp(sum[i] / count[static_cast<std::size_t>(i)], 0.0, 1.0);
      dual = std::max(dual, std::abs(zi - z[i]));
      z[i] = zi;
    }
    double primal = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      double r = x[j] - z[var[j]];
      u[j] += r;
      primal = std::max(primal, std::abs(r));
    }
    diag.iterations = iter;
    diag.primal_residual = primal;
    diag.dual_residual = rho * dual;
    if (diag.primal_residual <= params.primal_tol && diag.dual_residual <= params.dual_tol) {
      diag.converged = true;
      break;
    }
  }

  for (const auto& c : constraints) {
    double viol = constraint_violation(c, z) / norm2(c.coefficients);
    diag.max_constraint_violation = std::max(diag.max_constraint_violation, viol);
  }
  // A system that is jointly infeasible never settles and keeps a large violation.
  if (!diag.converged && diag.max_constraint_violation > 1e-2)
    throw InfeasibleError("constraint system appears infeasible: violation " +
                          std::to_string(diag.max_constraint_violation) + " after " +
                          std::to_string(diag.iterations) + " iterations");
  result.assignment = std::move(z);
  result.energy = total_energy(potentials, result.assignment);
  return result;
}

BruteForceResult brute_force_map(std::span<const GroundPotential> potentials,
                                 std::span<const LinearConstraint> constraints, std::size_t n_targets,
                                 double resolution) {
  if (n_targets > 4) throw Error("brute_force_map supports at most 4 targets");
  if (!(resolution > 0.0 && resolution <= 1.0)) throw Error("resolution must lie in (0,1]");
  for (const auto& p : potentials) check_indices(p.coefficients, n_targets);
  for (const auto& c : constraints) check_indices(c.coefficients, n_targets);
  const long steps = std::lround(1.0 / resolution);
  const auto n = static_cast<Eigen::Index>(n_targets);

  std::vector<long> k(n_targets, 0);
  Assignment y = Assignment::Zero(n);
  BruteForceResult best;
  best.energy = std::numeric_limits<double>::infinity();
  while (true) {
    for (Eigen::Index i = 0; i < n; ++i) y[i] = static_cast<double>(k[static_cast<std::size_t>(i)]) / steps;
    bool feasible = std::all_of(constraints.begin(), constraints.end(), [&](const LinearConstraint& c) {
      return constraint_violation(c, y) <= 1e-9 * (1.0 + std::abs(c.bound));
    });
    if (feasible) {
      double e = total_energy(potentials, y);
      if (e < best.energy - 1e-12) {
        best.energy = e;
        best.assignment = y;
      }
    }
    // Odometer with the last coordinate varying fastest keeps lexicographic order.
    Eigen::Index i = n - 1;
    while (i >= 0 && k[static_cast<std::size_t>(i)] == steps) {
      k[static_cast<std::size_t>(i)] = 0;
      --i;
    }
    if (i < 0) break;
    ++k[static_cast<std::size_t>(i)];
  }
  if (!std::isfinite(best.energy)) throw InfeasibleError("no feasible grid point");
  return best;
}

}  // namespace fairsl
