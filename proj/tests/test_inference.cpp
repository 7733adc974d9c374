#include <doctest.h>

#include <random>

#include "fairsl/error.hpp"
#include "fairsl/inference.hpp"
#include "fairsl/likelihood.hpp"
#include "fairsl/weight_learning.hpp"
#include "support.hpp"

using namespace fairsl;
using namespace testsupport;

namespace {

GroundPotential hinge(SparseCoefficients c, double constant, double weight, int exponent = 1, int clause = 0) {
  return GroundPotential{std::move(c), constant, exponent, weight, clause};
}

AdmmParams tight() {
  AdmmParams p;
  p.primal_tol = p.dual_tol = 1e-7;
  return p;
}

}  // namespace

TEST_CASE("map_inference examples") {
  std::vector<GroundPotential> pots{hinge({{0, -1.0}}, 0.8, 2.0), hinge({{0, 1.0}}, 0.0, 1.0)};
  auto r = map_inference(pots, {}, 1, tight());
  CHECK(r.diagnostics.converged);
  CHECK(r.assignment[0] == doctest::Approx(0.8).epsilon(1e-4));
  auto oracle = brute_force_map(pots, {}, 1, 1e-3);
  CHECK(oracle.assignment[0] == doctest::Approx(0.8).epsilon(1e-9));

  std::vector<LinearConstraint> cap{{{{0, 1.0}}, Sense::less_equal, 0.5, "cap"}};
  auto rc = map_inference(pots, cap, 1, tight());
  CHECK(rc.assignment[0] == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(brute_force_map(pots, cap, 1, 1e-3).assignment[0] == doctest::Approx(0.5));

  auto empty = map_inference({}, {}, 3, AdmmParams{});
  CHECK(empty.energy == 0.0);
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(empty.assignment[i] == 0.5);
}

TEST_CASE("brute_force_map examples") {
  std::vector<GroundPotential> one{hinge({{0, -1.0}}, 0.8, 1.0)};
  auto r = brute_force_map(one, {}, 1, 0.1);
  CHECK(r.assignment[0] == doctest::Approx(0.8));
  CHECK(r.energy == doctest::Approx(0.0).epsilon(1e-12));

  std::vector<LinearConstraint> impossible{{{{0, 1.0}}, Sense::greater_equal, 2.0, "x"}};
  CHECK_THROWS_AS(brute_force_map(one, impossible, 1, 0.1), InfeasibleError);

  std::vector<GroundPotential> diff{hinge({{0, 1.0}, {1, -1.0}}, 0.0, 1.0)};
  auto d = brute_force_map(diff, {}, 2, 0.5);
  CHECK(d.assignment[0] == 0.0);
  CHECK(d.assignment[1] == 0.0);

  CHECK_THROWS_AS(brute_force_map({}, {}, 5, 0.5), Error);
}

TEST_CASE("infeasible single constraint is rejected") {
  std::vector<LinearConstraint> cons{{{{0, 1.0}, {1, 1.0}}, Sense::greater_equal, 2.5, "sum"}};
  CHECK_THROWS_AS(map_inference({}, cons, 2, AdmmParams{}), InfeasibleError);
}

TEST_CASE("jointly infeasible constraints are rejected") {
  std::vector<LinearConstraint> cons{{{{0, 1.0}}, Sense::greater_equal, 0.7, "lo"},
                                     {{{0, 1.0}}, Sense::less_equal, 0.3, "hi"}};
  AdmmParams p;
  p.max_iterations = 2000;
  CHECK_THROWS_AS(map_inference({}, cons, 1, p), InfeasibleError);
}

TEST_CASE("ADMM agrees with the grid oracle and satisfies constraints") {
  std::mt19937_64 rng(9);
  for (int k = 0; k < 40; ++k) {
    Instance inst = random_instance(rng);
    auto a = map_inference(inst.potentials, inst.constraints, inst.n, AdmmParams{});
    auto o = brute_force_map(inst.potentials, inst.constraints, inst.n, 0.02);
    CHECK(a.energy <= o.energy + 1e-2);
    CHECK(a.energy >= o.energy - 1e-2 - discretization_bound(inst, 0.02));
    for (Eigen::Index i = 0; i < a.assignment.size(); ++i) {
      CHECK(a.assignment[i] >= 0.0);
      CHECK(a.assignment[i] <= 1.0);
    }
    if (a.diagnostics.converged)
      for (const auto& c : inst.constraints) CHECK(constraint_violation(c, a.assignment) <= 1e-4);
    CHECK(a.energy == doctest::Approx(total_energy(inst.potentials, a.assignment)));
  }
}

TEST_CASE("warm start reaches the same optimum") {
  std::mt19937_64 rng(10);
  Instance inst = random_instance(rng, 3, 5, 0);
  add_anchor(inst, rng, 0.5);
  auto cold = map_inference(inst.potentials, {}, inst.n, tight());
  Assignment start = Assignment::Constant(static_cast<Eigen::Index>(inst.n), 0.9);
  auto warm = map_inference(inst.potentials, {}, inst.n, tight(), &start);
  CHECK((cold.assignment - warm.assignment).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("AdmmParams validation") {
  AdmmParams p;
  p.step_size = 0;
  CHECK_THROWS_AS(validate(p), Error);
  p = {};
  p.initial_value = 1.5;
  CHECK_THROWS_AS(validate(p), Error);
  p = {};
  p.max_iterations = 0;
  CHECK_THROWS_AS(validate(p), Error);
}

// ---------------------------------------------------------------- likelihood

namespace {

// Log-normalizer of exp(-E(t)) on [0,1] with the other atoms fixed, by a fine
// composite Simpson rule.
double simpson_log_z(const std::vector<GroundPotential>& pots, Assignment y, int i) {
  const int n = 20000;
  double sum = 0.0;
  for (int k = 0; k <= n; ++k) {
    y[i] = static_cast<double>(k) / n;
    double w = (k == 0 || k == n) ? 1 : (k % 2 ? 4 : 2);
    sum += w * std::exp(-total_energy(pots, y));
  }
  return std::log(sum / (3.0 * n));
}

double oracle_pll(const std::vector<GroundPotential>& pots, const Assignment& y) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    total += -total_energy(pots, y) - simpson_log_z(pots, y, static_cast<int>(i));
  return total;
}

}  // namespace

TEST_CASE("pseudo-likelihood matches numeric integration") {
  std::mt19937_64 rng(31);
  for (int k = 0; k < 15; ++k) {
    Instance inst = random_instance(rng, 3, 5, 0);
    for (auto& p : inst.potentials) p.weight *= 2;
    Assignment y(static_cast<Eigen::Index>(inst.n));
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = uniform(rng, 0, 1);
    PseudoLikelihood pl(inst.potentials, inst.n);
    CHECK(pl.log_likelihood(y) == doctest::Approx(oracle_pll(inst.potentials, y)).epsilon(1e-6));
  }
}

TEST_CASE("two-point terms match endpoint energies") {
  std::mt19937_64 rng(33);
  for (int k = 0; k < 30; ++k) {
    Instance inst = random_instance(rng, 3, 5, 0);
    const auto n = static_cast<Eigen::Index>(inst.n);
    Assignment y(n), ctx(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      y[i] = uniform(rng, 0, 1);
      ctx[i] = uniform(rng, 0, 1);
    }
    PseudoLikelihood pl(inst.potentials, inst.n);
    Eigen::VectorXd terms = pl.two_point_terms(y, ctx);
    for (Eigen::Index i = 0; i < n; ++i) {
      Assignment z = ctx;
      z[i] = 0.0;
      double e0 = total_energy(inst.potentials, z);
      z[i] = 1.0;
      double e1 = total_energy(inst.potentials, z);
      double q = 1.0 / (1.0 + std::exp(e1 - e0));
      double expected = y[i] >= 0.5 ? std::log(q) : std::log(1.0 - q);
      CHECK(terms[i] == doctest::Approx(expected).epsilon(1e-12));
      CHECK(terms[i] <= 0.0);
    }
  }
  // An atom no potential touches is a coin flip.
  const std::vector<GroundPotential> none;
  PseudoLikelihood empty(none, 2);
  Assignment y(2);
  y << 0.0, 1.0;
  Eigen::VectorXd t = empty.two_point_terms(y, y);
  CHECK(t[0] == doctest::Approx(std::log(0.5)));
  CHECK(t[1] == doctest::Approx(std::log(0.5)));
}

TEST_CASE("pseudo-likelihood gradient matches finite differences") {
  std::mt19937_64 rng(32);
  for (int k = 0; k < 15; ++k) {
    Instance inst = random_instance(rng, 3, 6, 0);
    const std::size_t n_clauses = 3;
    for (auto& p : inst.potentials) p.clause = uniform_int(rng, 0, 2);
    Assignment y(static_cast<Eigen::Index>(inst.n));
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = uniform(rng, 0, 1);
    std::vector<double> weights{uniform(rng, 0.1, 2), uniform(rng, 0.1, 2), uniform(rng, 0.1, 2)};
    auto set = [&](std::vector<GroundPotential>& pots, const std::vector<double>& w) {
      for (auto& p : pots) p.weight = w[static_cast<std::size_t>(p.clause)];
    };
    set(inst.potentials, weights);
    PseudoLikelihood pl(inst.potentials, inst.n);
    auto grad = pl.clause_gradient(y, n_clauses);
    for (std::size_t c = 0; c < n_clauses; ++c) {
      const double h = 1e-5;
      auto wp = weights, wm = weights;
      wp[c] += h;
      wm[c] -= h;
      set(inst.potentials, wp);
      double up = pl.log_likelihood(y);
      set(inst.potentials, wm);
      double down = pl.log_likelihood(y);
      set(inst.potentials, weights);
      CHECK(grad[c] == doctest::Approx((up - down) / (2 * h)).epsilon(1e-5));
    }
  }
}

TEST_CASE("pseudo-likelihood gradient is defined at zero weight") {
  std::vector<GroundPotential> pots{hinge({{0, -1.0}}, 1.0, 0.0)};
  PseudoLikelihood pl(pots, 1);
  Assignment y = Assignment::Ones(1);
  auto g = pl.clause_gradient(y, 1);
  // E[1 - t] under the uniform density is 1/2; phi(truth) = 0.
  CHECK(g[0] == doctest::Approx(0.5));
}

// ---------------------------------------------------------------- weight learning

namespace {

struct TinyData {
  Database db;
  Assignment truth;
};

// b(x_i) observed in {0,1}; h(x_i) target with truth given by `relation`.
TinyData tiny(std::mt19937_64& rng, int n, bool same) {
  Schema s{{"b", 1, PredicateKind::observed, {"x"}}, {"h", 1, PredicateKind::target, {"x"}}};
  TinyData d{Database(s), Assignment()};
  std::vector<double> t;
  for (int i = 0; i < n; ++i) {
    std::string c = "c" + std::to_string(i);
    double b = uniform(rng, 0, 1) < 0.5 ? 1.0 : 0.0;
    d.db.set_observed("b", {c}, b);
    d.db.add_target("h", {c});
    t.push_back(same ? b : 1.0 - b);
  }
  d.truth = Eigen::Map<Assignment>(t.data(), static_cast<Eigen::Index>(t.size()));
  return d;
}

}  // namespace

TEST_CASE("learn_weights examples") {
  std::mt19937_64 rng(41);
  Schema s{{"b", 1, PredicateKind::observed, {"x"}}, {"h", 1, PredicateKind::target, {"x"}}};
  auto rules = parse_ruleset("1.0 : b(X) -> h(X)", s);

  auto match = tiny(rng, 20, true);
  WeightLearningParams none;
  none.iterations = 0;
  CHECK(learn_weights(rules, match.db, match.truth, none) == rules);
  CHECK(learn_weights(rules, match.db, match.truth).clauses[0].weight > 1.0);

  auto anti = tiny(rng, 20, false);
  CHECK(learn_weights(rules, anti.db, anti.truth).clauses[0].weight == 0.0);

  WeightLearningParams frozen;
  frozen.rate = 0.0;
  CHECK(learn_weights(rules, anti.db, anti.truth, frozen) == rules);
  frozen.method = WeightMethod::perceptron;
  CHECK(learn_weights(rules, anti.db, anti.truth, frozen) == rules);
}

TEST_CASE("matching rule outweighs the mismatching rule") {
  Schema s{{"b", 1, PredicateKind::observed, {"x"}}, {"h", 1, PredicateKind::target, {"x"}}};
  auto rules = parse_ruleset("1.0 : b(X) -> h(X)\n1.0 : b(X) -> !h(X)", s);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed);
    auto d = tiny(rng, 30, true);
    auto learned = learn_weights(rules, d.db, d.truth);
    CHECK(learned.clauses[0].weight > learned.clauses[1].weight);
  }
}

TEST_CASE("weights stay nonnegative under both methods") {
  std::mt19937_64 rng(43);
  for (auto method : {WeightMethod::pseudo_likelihood, WeightMethod::perceptron}) {
    for (int k = 0; k < 10; ++k) {
      Instance inst = random_instance(rng, 3, 6, 0);
      for (auto& p : inst.potentials) p.clause = uniform_int(rng, 0, 1);
      Assignment truth(static_cast<Eigen::Index>(inst.n));
      for (Eigen::Index i = 0; i < truth.size(); ++i) truth[i] = uniform(rng, 0, 1);
      WeightLearningParams params;
      params.method = method;
      params.rate = 1.0;
      auto w = learn_clause_weights(inst.potentials, {1.0, 1.0}, truth, inst.n, params);
      for (double v : w) CHECK(v >= 0.0);
      for (const auto& p : inst.potentials) CHECK(p.weight == w[static_cast<std::size_t>(p.clause)]);
    }
  }
}

TEST_CASE("truth is checked") {
  CHECK_THROWS_AS(check_truth(Assignment::Zero(2), 3), Error);
  Assignment bad(2);
  bad << 0.5, 1.5;
  CHECK_THROWS_AS(check_truth(bad, 2), Error);
  bad << 0.5, std::nan("");
  CHECK_THROWS_AS(check_truth(bad, 2), Error);
  WeightLearningParams p;
  p.iterations = -1;
  CHECK_THROWS_AS(validate(p), Error);
}
