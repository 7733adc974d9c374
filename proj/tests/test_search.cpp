#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <map>
#include <random>

#include "fairsl/error.hpp"
#include "fairsl/reward.hpp"
#include "fairsl/search.hpp"
#include "support.hpp"

using namespace fairsl;
using namespace testsupport;

namespace {

Token tok(const Schema& s, const std::string& name, bool negated = false) {
  return Token{predicate_index(s, name), negated};
}

Action add(const Schema& s, const std::string& name, bool negated = false) {
  return Action{ActionKind::add_literal, tok(s, name, negated)};
}

bool has(const std::vector<Action>& actions, ActionKind kind) {
  return std::any_of(actions.begin(), actions.end(), [&](const Action& a) { return a.kind == kind; });
}

Schema compas_schema() {
  return {{"priorFelonHistory", 1, PredicateKind::observed, {"user"}},
          {"oldAge", 1, PredicateKind::observed, {"user"}},
          {"africanAmerican", 1, PredicateKind::observed, {"user"}},
          {"user", 1, PredicateKind::observed, {"user"}},
          {"recidivism", 1, PredicateKind::target, {"user"}}};
}

SignalSets compas_signals() {
  SignalSets s;
  s.positive = parse_signal_list("priorFelonHistory, recidivism");
  s.negative = parse_signal_list("oldAge,!recidivism");
  return s;
}

}  // namespace

TEST_CASE("action indexing round trips") {
  auto s = paper_schema();
  CHECK(num_actions(s) == 2 * static_cast<int>(s.size()) + 2);
  for (int i = 0; i < num_actions(s); ++i) CHECK(action_index(action_from_index(i, s), s) == i);
  CHECK(action_from_index(2 * static_cast<int>(s.size()), s).kind == ActionKind::end_clause);
  CHECK(action_from_index(2 * static_cast<int>(s.size()) + 1, s).kind == ActionKind::end_episode);
  CHECK_THROWS_AS(action_from_index(num_actions(s), s), Error);
}

TEST_CASE("valid_actions examples") {
  auto s = paper_schema();
  SearchLimits limits;
  SearchState empty;
  auto a0 = valid_actions(empty, s, limits);
  CHECK(a0.size() == 2 * s.size());
  CHECK_FALSE(has(a0, ActionKind::end_clause));
  CHECK_FALSE(has(a0, ActionKind::end_episode));

  auto s1 = env_step(empty, add(s, "highQuality"), s, limits);
  auto a1 = valid_actions(s1, s, limits);
  CHECK_FALSE(has(a1, ActionKind::end_clause));
  CHECK(std::find(a1.begin(), a1.end(), add(s, "highQuality")) == a1.end());
  // A unary predicate cannot return with either sign: it would name the same atom.
  CHECK(std::find(a1.begin(), a1.end(), add(s, "highQuality", true)) == a1.end());
  CHECK(a1.size() == 2 * s.size() - 2);

  auto s2 = env_step(s1, add(s, "positiveReviews"), s, limits);
  auto a2 = valid_actions(s2, s, limits);
  CHECK(has(a2, ActionKind::end_clause));
  CHECK(std::find(a2.begin(), a2.end(), add(s, "positiveReviews", true)) != a2.end());
  auto s3 = env_step(s2, Action{ActionKind::end_clause, {}}, s, limits);
  auto a3 = valid_actions(s3, s, limits);
  CHECK(has(a3, ActionKind::end_episode));

  // The same clause cannot be completed twice.
  auto again = env_step(env_step(s3, add(s, "highQuality"), s, limits), add(s, "positiveReviews"), s, limits);
  CHECK_FALSE(has(valid_actions(again, s, limits), ActionKind::end_clause));
}

TEST_CASE("random walks never reach a dead end") {
  std::mt19937_64 rng(21);
  const Schema toy = {{"a", 1, PredicateKind::observed, {"x"}}, {"t", 1, PredicateKind::target, {"x"}}};
  for (const Schema& s : {paper_schema(), toy})
    for (int length : {2, 3, 4})
      for (int k = 0; k < 200; ++k) {
        SearchLimits limits{length, 3};
        SearchState st;
        while (!st.done) {
          auto valid = valid_actions(st, s, limits);
          REQUIRE_FALSE(valid.empty());
          const auto& a = valid[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(valid.size()) - 1))];
          if (a.kind == ActionKind::end_episode) CHECK_FALSE(st.completed.empty());
          st = env_step(st, a, s, limits);
        }
        for (const auto& c : st.completed) {
          std::map<std::string, int> unary;
          for (const auto& l : c.body)
            if (l.args.size() == 1) ++unary[l.predicate];
          if (c.head.args.size() == 1) ++unary[c.head.predicate];
          for (const auto& [name, count] : unary) CHECK(count == 1);
        }
      }
}

TEST_CASE("last slot only offers targets completing a new clause") {
  auto s = paper_schema();
  SearchLimits limits{3, 10};
  SearchState st;
  st = env_step(st, add(s, "reviews"), s, limits);
  st = env_step(st, add(s, "acceptable"), s, limits);
  for (const auto& a : valid_actions(st, s, limits)) {
    REQUIRE(a.kind == ActionKind::add_literal);
    CHECK(s[static_cast<std::size_t>(a.token.predicate)].is_target());
  }
}

TEST_CASE("env_step examples") {
  auto s = paper_schema();
  SearchLimits limits;
  SearchState st = env_step({}, add(s, "highQuality"), s, limits);
  CHECK(st.current == std::vector<Token>{tok(s, "highQuality")});
  st = env_step(st, add(s, "positiveReviews"), s, limits);
  st = env_step(st, Action{ActionKind::end_clause, {}}, s, limits);
  REQUIRE(st.completed.size() == 1);
  const Clause& c = st.completed[0];
  CHECK(format_literal(c.body[0]) == "highQuality(P)");
  CHECK(format_literal(c.head) == "positiveReviews(R,P)");
  CHECK(st.current.empty());

  auto done = env_step(st, Action{ActionKind::end_episode, {}}, s, limits);
  CHECK(done.done);
  CHECK(done.completed == st.completed);
  CHECK_THROWS_AS(env_step(done, add(s, "reviews"), s, limits), Error);
  CHECK_THROWS_AS(env_step(SearchState{}, Action{ActionKind::end_clause, {}}, s, limits), Error);
}

TEST_CASE("repeated binary predicate gets a fresh variable") {
  auto s = paper_schema();
  Clause c = tokens_to_clause({tok(s, "positiveReviews"), tok(s, "reviews"), tok(s, "positiveReviews")}, s);
  CHECK(format_literal(c.body[0]) == "positiveReviews(R,P)");
  CHECK(format_literal(c.head) == "positiveReviews(R2,P)");
  CHECK_NOTHROW(validate_clause(c, s));
}

TEST_CASE("dist examples") {
  auto s = compas_schema();
  auto signals = compas_signals();
  auto rules = parse_ruleset(
      "1 : oldAge(U) -> !recidivism(U)\n"
      "1 : africanAmerican(U) -> recidivism(U)\n"
      "1 : user(U) -> !recidivism(U)\n"
      "1 : priorFelonHistory(U) & !oldAge(U) -> recidivism(U)\n",
      s);
  CHECK(dist(rules.clauses[0], signals) == 0);
  CHECK(dist(rules.clauses[1], signals) == 1);
  CHECK(dist(rules.clauses[2], signals) == 1);
  CHECK(dist(rules.clauses[3], signals) == 0);
}

namespace {

// Direct reading of the four right-reason templates.
int template_oracle(const std::vector<SignedName>& body, SignedName head, const SignalSets& sig) {
  auto in = [](const std::set<SignedName>& set, const SignedName& x) { return set.count(x) > 0; };
  auto negate = [](SignedName x) {
    x.second = !x.second;
    return x;
  };
  if (std::find(body.begin(), body.end(), head) != body.end()) return 1;
  for (int side = 0; side < 2; ++side) {
    const auto& same = side == 0 ? sig.positive : sig.negative;
    const auto& other = side == 0 ? sig.negative : sig.positive;
    if (!in(same, head)) continue;
    std::vector<SignedName> outside;
    for (const auto& b : body)
      if (!in(same, b)) outside.push_back(b);
    if (outside.empty()) return 0;
    if (outside.size() == 1 && in(other, negate(outside[0]))) return 0;
  }
  return 1;
}

}  // namespace

TEST_CASE("dist agrees with a brute-force template checker") {
  Schema s{{"a", 1, PredicateKind::observed, {"x"}},
           {"b", 1, PredicateKind::observed, {"x"}},
           {"c", 1, PredicateKind::target, {"x"}},
           {"d", 1, PredicateKind::target, {"x"}}};
  std::vector<SignedName> all;
  for (const auto& p : s) {
    all.emplace_back(p.name, false);
    all.emplace_back(p.name, true);
  }
  std::mt19937_64 rng(17);
  int compared = 0;
  for (int trial = 0; trial < 40; ++trial) {
    SignalSets sig;
    for (const auto& x : all) {
      if (uniform(rng, 0, 1) < 0.4) sig.positive.insert(x);
      if (uniform(rng, 0, 1) < 0.4) sig.negative.insert(x);
    }
    // Every clause with 1 or 2 body literals and a target head.
    for (const auto& h : all) {
      if (!find_predicate(s, h.first)->is_target()) continue;
      for (std::size_t i = 0; i < all.size(); ++i)
        for (std::size_t j = i; j <= all.size(); ++j) {
          std::vector<SignedName> body{all[i]};
          if (j < all.size() && j != i) body.push_back(all[j]);
          else if (j != all.size()) continue;
          Clause c;
          c.head = Literal{h.first, {Term::variable("X")}, h.second};
          for (const auto& b : body) c.body.push_back(Literal{b.first, {Term::variable("X")}, b.second});
          CHECK(dist(c, sig) == template_oracle(body, h, sig));
          ++compared;
        }
    }
  }
  CHECK(compared > 1000);
}

TEST_CASE("interpretability prior example") {
  auto s = compas_schema();
  auto rules = parse_ruleset(
      "1 : oldAge(U) -> !recidivism(U)\n"
      "2 : africanAmerican(U) & user(U) & oldAge(U) -> recidivism(U)\n",
      s);
  ObjectiveConfig cfg;
  cfg.alpha_len = 0.1;
  cfg.alpha_num = 0.05;
  cfg.alpha_sem = 0.2;
  CHECK(interpretability_prior(rules, cfg, compas_signals()) == doctest::Approx(0.8));
  CHECK(interpretability_prior(rules, ObjectiveConfig{}, compas_signals()) == 0.0);
  auto compliant = parse_ruleset("5 : oldAge(U) -> !recidivism(U)", s);
  ObjectiveConfig sem_only;
  sem_only.alpha_sem = 1.0;
  CHECK(interpretability_prior(compliant, sem_only, compas_signals()) == 0.0);
  CHECK_THROWS_AS(interpretability_prior(RuleSet{{}, s}, cfg, compas_signals()), Error);
}

TEST_CASE("featurize_state") {
  auto s = paper_schema();
  SearchLimits limits;
  const auto P = static_cast<Eigen::Index>(s.size());
  auto f0 = featurize_state({}, s, limits);
  CHECK(f0.size() == 4 * P + 2);
  CHECK(f0.isZero());

  SearchState one = env_step({}, add(s, "reviews", true), s, limits);
  auto f1 = featurize_state(one, s, limits);
  CHECK(f1.segment(2 * P, 2 * P).sum() == 1.0);
  CHECK(f1[2 * P + action_index(add(s, "reviews", true), s)] == 1.0);

  auto build = [&](std::vector<std::pair<std::string, std::string>> clauses) {
    SearchState st;
    for (const auto& [b, h] : clauses) {
      st = env_step(st, add(s, b), s, limits);
      st = env_step(st, add(s, h), s, limits);
      st = env_step(st, Action{ActionKind::end_clause, {}}, s, limits);
    }
    return st;
  };
  auto ab = build({{"reviews", "positiveSummary"}, {"acceptable", "positiveSummary"}});
  auto ba = build({{"acceptable", "positiveSummary"}, {"reviews", "positiveSummary"}});
  CHECK(featurize_state(ab, s, limits) == featurize_state(ba, s, limits));
}

TEST_CASE("search and objective config validation") {
  SearchConfig c;
  c.episodes = 0;
  CHECK_THROWS_AS(validate(c), Error);
  c = {};
  c.workers = 0;
  CHECK_THROWS_AS(validate(c), Error);
  ObjectiveConfig o;
  o.gamma = 0.9;
  CHECK_THROWS_AS(validate(o), Error);
  o = {};
  o.alpha_odds = -1;
  CHECK_THROWS_AS(validate(o), Error);
}

namespace {

Schema toy_schema() {
  return {{"a", 1, PredicateKind::observed, {"x"}}, {"t", 1, PredicateKind::target, {"x"}}};
}

// Only `a(X) -> t(X)` earns a positive reward.
double toy_reward(const std::vector<Clause>& clauses) {
  double r = -0.1 * static_cast<double>(clauses.size());
  for (const auto& c : clauses)
    if (c.body.size() == 1 && c.body[0].predicate == "a" && !c.body[0].negated && c.head.predicate == "t" &&
        !c.head.negated)
      r += 1.0;
  return r;
}

bool has_target_clause(const std::vector<Clause>& clauses) {
  return toy_reward(clauses) > 0;
}

}  // namespace

TEST_CASE("train is deterministic with one worker") {
  auto s = toy_schema();
  SearchConfig cfg;
  cfg.workers = 1;
  cfg.episodes = 50;
  cfg.seed = 5;
  auto a = train(s, toy_reward, cfg);
  auto b = train(s, toy_reward, cfg);
  CHECK(a.rewards == b.rewards);
  CHECK(a.best.clauses == b.best.clauses);
  CHECK(a.best.episode == b.best.episode);

  cfg.episodes = 1;
  auto one = train(s, toy_reward, cfg);
  REQUIRE(one.candidates.size() == 1);
  CHECK(one.best.clauses == one.candidates[0].clauses);
}

TEST_CASE("toy environment finds the rewarded clause") {
  auto s = toy_schema();
  int found = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SearchConfig cfg;
    cfg.workers = 1;
    cfg.episodes = 200;
    cfg.seed = seed;
    cfg.learning_rate = 0.05;
    auto r = train(s, toy_reward, cfg);
    found += has_target_clause(r.best.clauses) ? 1 : 0;
    // The rewarded clause shows up more often once the policy has learned.
    int early = 0, late = 0;
    for (std::size_t i = 0; i < r.rewards.size(); ++i)
      (i < 100 ? early : late) += r.rewards[i] > 0 ? 1 : 0;
    CHECK(late > early);
  }
  CHECK(found >= 4);
}

TEST_CASE("candidates respect caps and failed episodes are dropped") {
  auto s = paper_schema();
  SearchConfig cfg;
  cfg.workers = 3;
  cfg.episodes = 60;
  cfg.limits = {3, 2};
  cfg.seed = 9;
  std::atomic<int> calls{0};
  RewardFunction reward = [&](const std::vector<Clause>& clauses) {
    int k = ++calls;
    if (k % 4 == 0) return -std::numeric_limits<double>::infinity();
    return -static_cast<double>(clauses.size());
  };
  auto r = train(s, reward, cfg);
  CHECK(r.rewards.size() == 60);
  CHECK(r.candidates.size() < 60);
  for (const auto& c : r.candidates) {
    CHECK(std::isfinite(c.reward));
    CHECK(c.clauses.size() >= 1);
    CHECK(c.clauses.size() <= 2);
    for (const auto& cl : c.clauses) {
      CHECK(clause_length(cl) <= 3);
      CHECK_NOTHROW(validate_clause(cl, s));
    }
    CHECK(c.reward <= r.best.reward);
  }
}

TEST_CASE("linear policy masks invalid actions") {
  LinearPolicy pi(4, 6);
  Eigen::VectorXd f = Eigen::VectorXd::Ones(4);
  auto p = pi.probabilities(f, {1, 3});
  CHECK(p.sum() == doctest::Approx(1.0));
  CHECK(p[0] == 0.0);
  CHECK(p[2] == 0.0);
  CHECK(p[1] == doctest::Approx(0.5));
  std::vector<LinearPolicy::Step> steps{{f, {1, 3}, 3}};
  std::vector<LinearPolicy::Step> worse{{f, {1, 3}, 1}};
  for (int k = 0; k < 50; ++k) {
    pi.update(steps, 1.0, 0.1, 0.0);
    pi.update(worse, -1.0, 0.1, 0.0);
  }
  CHECK(pi.probabilities(f, {1, 3})[3] > 0.5);
}

TEST_CASE("clause_set_key ignores clause order") {
  auto s = paper_schema();
  auto rs = parse_ruleset("1 : reviews(R,P) -> positiveSummary(P)\n1 : acceptable(P) -> positiveSummary(P)", s);
  std::vector<Clause> rev{rs.clauses[1], rs.clauses[0]};
  CHECK(clause_set_key(rs.clauses) == clause_set_key(rev));
}

// ---------------------------------------------------------------- reward

namespace {

Dataset tiny_dataset() {
  Schema s{{"b", 1, PredicateKind::observed, {"x"}}, {"h", 1, PredicateKind::target, {"x"}}};
  Dataset d{Database(s), Assignment(), "h"};
  std::mt19937_64 rng(4);
  std::vector<double> t;
  for (int i = 0; i < 16; ++i) {
    std::string c = "c" + std::to_string(i);
    double b = i % 2 ? 1.0 : 0.0;
    if (uniform(rng, 0, 1) < 0.2) b = 1 - b;
    d.db.set_observed("b", {c}, b);
    d.db.add_target("h", {c});
    d.db.set_group(c, i < 8 ? GroupLabel::protected_group : GroupLabel::unprotected_group);
    t.push_back(b);
  }
  d.truth = Eigen::Map<Assignment>(t.data(), static_cast<Eigen::Index>(t.size()));
  return d;
}

}  // namespace

TEST_CASE("matching clause set outscores a contradicted one") {
  Dataset d = tiny_dataset();
  ObjectiveConfig o;
  o.delta = 1.0;
  auto match = parse_ruleset("1 : b(X) -> h(X)", d.db.schema());
  auto contra = parse_ruleset("1 : b(X) -> !h(X)", d.db.schema());
  auto rm = score_candidate(match, d, o, {}, {});
  auto rc = score_candidate(contra, d, o, {}, {});
  CHECK_FALSE(rm.failed);
  CHECK_FALSE(rc.failed);
  CHECK(combine_reward(rm, o) > combine_reward(rc, o));

  auto reward = make_reward_function(d, o, {}, {});
  CHECK(reward(match.clauses) == combine_reward(rm, o));
  CHECK(reward(match.clauses) == reward(match.clauses));

  ObjectiveConfig energy = o;
  energy.likelihood = LikelihoodTerm::energy;
  energy.weight_mode = WeightMode::final_only;
  auto e = score_candidate(match, d, energy, {}, {});
  auto pots = ground_ruleset(match, d.db);
  CHECK(e.likelihood == doctest::Approx(-total_energy(pots, d.truth)));
}

TEST_CASE("reward is linear in alpha_odds") {
  Dataset d = tiny_dataset();
  auto rules = parse_ruleset("1 : b(X) -> h(X)", d.db.schema());
  ObjectiveConfig o;
  auto b = score_candidate(rules, d, o, {}, {});
  ObjectiveConfig half = o;
  half.alpha_odds = 0.5;
  CHECK(combine_reward(b, o) - combine_reward(b, half) == doctest::Approx(0.5 * b.odds).epsilon(1e-12));
  b.odds = 0.2;
  CHECK(combine_reward(b, o) - combine_reward(b, half) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(b.report.rd.has_value());

  ObjectiveConfig rec = o;
  rec.mode = ObjectiveMode::recommender;
  rec.alpha_over = 2.0;
  RewardBreakdown r;
  r.likelihood = -1.0;
  r.over = 0.25;
  r.prior = 100.0;
  CHECK(combine_reward(r, rec) == doctest::Approx(-1.5));
  r.failed = true;
  CHECK(combine_reward(r, rec) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("empty clause set is an error") {
  Dataset d = tiny_dataset();
  CHECK_THROWS_AS(score_candidate(RuleSet{{}, d.db.schema()}, d, ObjectiveConfig{}, {}, {}), Error);
}

TEST_CASE("constrained predictions of a scored candidate respect delta") {
  Dataset d = tiny_dataset();
  auto rules = parse_ruleset("1 : b(X) -> h(X)\n1 : b(X) -> !h(X)", d.db.schema());
  ObjectiveConfig o;
  o.delta = 0.1;
  auto b = score_candidate(rules, d, o, {}, {});
  REQUIRE_FALSE(b.failed);
  if (b.diagnostics.converged) {
    auto groups = group_spec(d.db, "h");
    CHECK(std::abs(risk_difference(b.predictions, groups, std::nullopt)) <= 0.1 + 1e-4);
  }
}
