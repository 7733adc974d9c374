#include "fairsl/search.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "fairsl/datagen.hpp"
#include "fairsl/error.hpp"

namespace fairsl {

int num_actions(const Schema& schema) { return 2 * static_cast<int>(schema.size()) + 2; }

int action_index(const Action& action, const Schema& schema) {
  const int literals = 2 * static_cast<int>(schema.size());
  switch (action.kind) {
    case ActionKind::add_literal: return 2 * action.token.predicate + (action.token.negated ? 1 : 0);
    case ActionKind::end_clause: return literals;
    case ActionKind::end_episode: return literals + 1;
  }
  return -1;
}

Action action_from_index(int index, const Schema& schema) {
  const int literals = 2 * static_cast<int>(schema.size());
  if (index < 0 || index >= literals + 2) throw Error("action index out of range");
  if (index == literals) return {ActionKind::end_clause, {}};
  if (index == literals + 1) return {ActionKind::end_episode, {}};
  return {ActionKind::add_literal, {index / 2, index % 2 == 1}};
}

namespace {

std::string sort_base(const Predicate& pred, int position) {
  if (pred.sorts.empty()) return "X";
  const std::string& sort = pred.sorts[static_cast<std::size_t>(position)];
  std::string base(1, static_cast<char>(std::toupper(static_cast<unsigned char>(sort[0]))));
  if (!std::isupper(static_cast<unsigned char>(base[0]))) base = "V";
  return base;
}

bool is_target_token(const Token& t, const Schema& schema) {
  return schema.at(static_cast<std::size_t>(t.predicate)).is_target();
}

bool duplicate_clause(const SearchState& state, const std::vector<Token>& tokens, const Schema& schema) {
  if (std::find(state.completed_tokens.begin(), state.completed_tokens.end(), tokens) != state.completed_tokens.end())
    return true;
  const std::string key = structure_key(tokens_to_clause(tokens, schema));
  return std::any_of(state.completed.begin(), state.completed.end(),
                     [&](const Clause& c) { return structure_key(c) == key; });
}

}  // namespace

Clause tokens_to_clause(const std::vector<Token>& tokens, const Schema& schema) {
  if (tokens.size() < 2) throw Error("a clause needs a body literal and a head");
  std::map<std::string, std::string> sort_var;
  std::set<std::string> used;
  auto fresh = [&](const std::string& base, int start) {
    std::string name = start == 1 ? base : base + std::to_string(start);
    for (int n = start; used.count(name); ++n) name = base + std::to_string(n + 1);
    used.insert(name);
    return name;
  };
  std::map<int, int> seen;
  std::vector<Literal> literals;
  for (const Token& t : tokens) {
    const Predicate& pred = schema.at(static_cast<std::size_t>(t.predicate));
    const bool repeat = seen[t.predicate]++ > 0;
    Literal lit{pred.name, {}, t.negated};
    for (int k = 0; k < pred.arity; ++k) {
      std::string sort = pred.sort_of(k);
      if (repeat && k == 0 && pred.arity > 1) {
        lit.args.push_back(Term::variable(fresh(sort_base(pred, k), 2)));
        continue;
      }
      auto it = sort_var.find(sort);
      if (it == sort_var.end()) it = sort_var.emplace(sort, fresh(sort_base(pred, k), 1)).first;
      lit.args.push_back(Term::variable(it->second));
    }
    literals.push_back(std::move(lit));
  }
  Clause c;
  c.head = std::move(literals.back());
  literals.pop_back();
  c.body = std::move(literals);
  return c;
}

std::vector<Action> valid_actions(const SearchState& state, const Schema& schema, const SearchLimits& limits) {
  std::vector<Action> out;
  if (state.done) return out;
  const auto len = static_cast<int>(state.current.size());
  const bool full = static_cast<int>(state.completed.size()) >= limits.max_clauses;
  // A repeated unary predicate reuses its variable, so either sign names the same atom.
  auto addable = [&](const std::vector<Token>& tokens, Token t) {
    auto has = [&](Token u) { return std::find(tokens.begin(), tokens.end(), u) != tokens.end(); };
    return !has(t) && !(schema[static_cast<std::size_t>(t.predicate)].arity == 1 && has(Token{t.predicate, !t.negated}));
  };
  // Whether the clause can still end with a head within the length cap.
  std::function<bool(std::vector<Token>&)> completable = [&](std::vector<Token>& tokens) {
    if (tokens.size() >= 2 && is_target_token(tokens.back(), schema)) return true;
    if (static_cast<int>(tokens.size()) >= limits.max_clause_length) return false;
    for (int q = 0; q < static_cast<int>(schema.size()); ++q)
      for (bool n : {false, true}) {
        Token u{q, n};
        if (!addable(tokens, u)) continue;
        tokens.push_back(u);
        bool ok = completable(tokens);
        tokens.pop_back();
        if (ok) return true;
      }
    return false;
  };
  if (!full && len < limits.max_clause_length) {
    for (int p = 0; p < static_cast<int>(schema.size()); ++p)
      for (bool negated : {false, true}) {
        Token t{p, negated};
        if (!addable(state.current, t)) continue;
        auto tokens = state.current;
        tokens.push_back(t);
        if (!completable(tokens)) continue;
        if (len == limits.max_clause_length - 1) {
          // Last slot: only a head that completes a new clause.
          if (!is_target_token(t, schema)) continue;
          auto tokens = state.current;
          tokens.push_back(t);
          if (duplicate_clause(state, tokens, schema)) continue;
        }
        out.push_back({ActionKind::add_literal, t});
      }
  }
  if (len >= 2 && is_target_token(state.current.back(), schema) && !duplicate_clause(state, state.current, schema))
    out.push_back({ActionKind::end_clause, {}});
  if ((len == 0 && !state.completed.empty()) || out.empty()) out.push_back({ActionKind::end_episode, {}});
  return out;
}

SearchState env_step(const SearchState& state, const Action& action, const Schema& schema,
                     const SearchLimits& limits) {
  auto valid = valid_actions(state, schema, limits);
  if (std::find(valid.begin(), valid.end(), action) == valid.end()) throw Error("action not valid in this state");
  SearchState next = state;
  ++next.step;
  switch (action.kind) {
    case ActionKind::add_literal: next.current.push_back(action.token); break;
    case ActionKind::end_clause:
      next.completed.push_back(tokens_to_clause(next.current, schema));
      next.completed_tokens.push_back(std::move(next.current));
      next.current.clear();
      break;
    case ActionKind::end_episode:
      next.current.clear();
      next.done = true;
      break;
  }
  return next;
}

std::set<SignedName> parse_signal_list(std::string_view text) {
  std::set<SignedName> out;
  std::string item;
  std::istringstream in{std::string(text)};
  while (std::getline(in, item, ',')) {
    auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    item = item.substr(b, item.find_last_not_of(" \t") - b + 1);
    bool negated = item[0] == '!';
    std::string name = negated ? item.substr(1) : item;
    if (name.empty()) throw Error("empty signal predicate");
    out.emplace(name, negated);
  }
  return out;
}

int dist(const Clause& clause, const SignalSets& signals) {
  auto sig = [](const Literal& l) { return SignedName{l.predicate, l.negated}; };
  auto flip = [](SignedName s) {
    s.second = !s.second;
    return s;
  };
  const SignedName head = sig(clause.head);
  std::vector<SignedName> body;
  for (const auto& l : clause.body) body.push_back(sig(l));
  const bool head_in_body = std::find(body.begin(), body.end(), head) != body.end();

  // body within `same` except optionally one literal whose negation is in `other`.
  auto matches = [&](const std::set<SignedName>& same, const std::set<SignedName>& other) {
    if (!same.count(head) || head_in_body) return false;
    std::size_t outside = 0;
    for (const auto& b : body) outside += same.count(b) ? 0 : 1;
    if (outside == 0) return true;
    for (std::size_t j = 0; j < body.size(); ++j) {
      if (!other.count(flip(body[j]))) continue;
      bool rest = true;
      for (std::size_t i = 0; i < body.size() && rest; ++i)
        if (i != j && !same.count(body[i])) rest = false;
      if (rest) return true;
    }
    return false;
  };
  return matches(signals.positive, signals.negative) || matches(signals.negative, signals.positive) ? 0 : 1;
}

void validate(const ObjectiveConfig& config) {
  for (double a : {config.alpha_len, config.alpha_num, config.alpha_sem, config.alpha_odds, config.alpha_over})
    if (!(a >= 0.0)) throw Error("objective weights must be >= 0");
  if (!(config.delta >= 0.0 && config.delta <= 1.0)) throw Error("delta must lie in [0,1]");
  if (config.gamma != 1.0) throw Error("gamma is fixed at 1");
}

double interpretability_prior(const RuleSet& rules, const ObjectiveConfig& config, const SignalSets& signals) {
  if (rules.clauses.empty()) throw Error("interpretability prior of an empty rule set");
  double length = 0.0, semantic = 0.0;
  for (const auto& c : rules.clauses) {
    length += clause_length(c);
    if (!signals.empty()) semantic += dist(c, signals) * c.weight;
  }
  const double n = static_cast<double>(rules.clauses.size());
  return config.alpha_len * length / n + config.alpha_num * n + config.alpha_sem * semantic;
}

Eigen::VectorXd featurize_state(const SearchState& state, const Schema& schema, const SearchLimits& limits) {
  const Eigen::Index tokens = 2 * static_cast<Eigen::Index>(schema.size());
  Eigen::VectorXd f = Eigen::VectorXd::Zero(2 * tokens + 2);
  for (const auto& clause : state.completed_tokens)
    for (const Token& t : clause) f[2 * t.predicate + (t.negated ? 1 : 0)] += 1.0;
  for (const Token& t : state.current) f[tokens + 2 * t.predicate + (t.negated ? 1 : 0)] = 1.0;
  f[2 * tokens] = static_cast<double>(state.completed.size()) / limits.max_clauses;
  f[2 * tokens + 1] = static_cast<double>(state.current.size()) / limits.max_clause_length;
  return f;
}

void validate(const SearchConfig& config) {
  if (config.workers < 1) throw Error("workers must be >= 1");
  if (config.episodes < 1) throw Error("episodes must be >= 1");
  if (!(config.learning_rate >= 0.0) || !(config.entropy_coef >= 0.0))
    throw Error("learning rate and entropy coefficient must be >= 0");
  if (config.limits.max_clause_length < 2) throw Error("max_clause_length must be >= 2");
  if (config.limits.max_clauses < 1) throw Error("max_clauses must be >= 1");
}

LinearPolicy::LinearPolicy(int n_features, int n_actions)
    : actor_(Eigen::MatrixXd::Zero(n_actions, n_features)),
      actor_bias_(Eigen::VectorXd::Zero(n_actions)),
      critic_(Eigen::VectorXd::Zero(n_features)) {}

Eigen::VectorXd LinearPolicy::probabilities(const Eigen::VectorXd& features, const std::vector<int>& valid) const {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(actor_.rows());
  if (valid.empty()) return p;
  double top = -std::numeric_limits<double>::infinity();
  for (int a : valid) {
    p[a] = actor_.row(a).dot(features) + actor_bias_[a];
    top = std::max(top, p[a]);
  }
  double z = 0.0;
  for (int a : valid) z += (p[a] = std::exp(p[a] - top));
  for (int a : valid) p[a] /= z;
  return p;
}

double LinearPolicy::value(const Eigen::VectorXd& features) const { return critic_.dot(features) + critic_bias_; }

void LinearPolicy::update(const std::vector<Step>& steps, double reward, double learning_rate,
                          double entropy_coef) {
  reward_count_ += 1.0;
  double d = reward - reward_mean_;
  reward_mean_ += d / reward_count_;
  reward_m2_ += d * (reward - reward_mean_);
  double sd = reward_count_ > 1.0 ? std::sqrt(reward_m2_ / reward_count_) : 1.0;
  if (sd < 1e-8) sd = 1.0;
  const double target = (reward - reward_mean_) / sd;

  Eigen::MatrixXd g_actor = Eigen::MatrixXd::Zero(actor_.rows(), actor_.cols());
  Eigen::VectorXd g_bias = Eigen::VectorXd::Zero(actor_.rows());
  Eigen::VectorXd g_critic = Eigen::VectorXd::Zero(critic_.size());
  double g_critic_bias = 0.0;
  for (const auto& s : steps) {
    Eigen::VectorXd pi = probabilities(s.features, s.valid);
    const double advantage = target - value(s.features);
    double entropy = 0.0;
    for (int a : s.valid)
      if (pi[a] > 0.0) entropy -= pi[a] * std::log(pi[a]);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(actor_.rows());
    for (int a : s.valid) {
      double log_p = pi[a] > 0.0 ? std::log(pi[a]) : 0.0;
      g[a] = advantage * ((a == s.action ? 1.0 : 0.0) - pi[a]) - entropy_coef * pi[a] * (log_p + entropy);
    }
    g_actor.noalias() += g * s.features.transpose();
    g_bias += g;
    // Normalized LMS step keeps the critic stable whatever the feature scale.
    const double scaled = advantage / (1.0 + s.features.squaredNorm());
    g_critic += scaled * s.features;
    g_critic_bias += scaled;
  }
  const double step = learning_rate / static_cast<double>(std::max<std::size_t>(1, steps.size()));
  actor_ += step * g_actor;
  actor_bias_ += step * g_bias;
  critic_ += step * g_critic;
  critic_bias_ += step * g_critic_bias;
}

std::string clause_set_key(const std::vector<Clause>& clauses) {
  std::vector<std::string> keys;
  for (const auto& c : clauses) keys.push_back(structure_key(c));
  std::sort(keys.begin(), keys.end());
  std::string out;
  for (const auto& k : keys) out += k + "\n";
  return out;
}

SearchResult train(const Schema& schema, const RewardFunction& reward, const SearchConfig& config) {
  validate(config);
  validate_schema(schema);
  const int n_actions = num_actions(schema);
  const int n_features = 4 * static_cast<int>(schema.size()) + 2;

  LinearPolicy shared(n_features, n_actions);
  SearchResult result;
  result.rewards.assign(static_cast<std::size_t>(config.episodes), -std::numeric_limits<double>::infinity());
  std::mutex mu;
  std::atomic<int> next{0};

  auto worker = [&](int w) {
    std::mt19937_64 rng(config.seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(w));
    for (int episode = next++; episode < config.episodes; episode = next++) {
      LinearPolicy policy = [&] {
        std::lock_guard lock(mu);
        return shared;
      }();
      SearchState state;
      std::vector<LinearPolicy::Step> steps;
      while (!state.done) {
        LinearPolicy::Step step;
        step.features = featurize_state(state, schema, config.limits);
        for (const auto& a : valid_actions(state, schema, config.limits))
          step.valid.push_back(action_index(a, schema));
        Eigen::VectorXd pi = policy.probabilities(step.features, step.valid);
        double u = uniform01(rng), acc = 0.0;
        step.action = step.valid.back();
        for (int a : step.valid) {
          acc += pi[a];
          if (u < acc) {
            step.action = a;
            break;
          }
        }
        state = env_step(state, action_from_index(step.action, schema), schema, config.limits);
        steps.push_back(std::move(step));
      }
      double r = -std::numeric_limits<double>::infinity();
      if (!state.completed.empty()) {
        try {
          r = reward(state.completed);
        } catch (const Error&) {
        }
      }
      std::lock_guard lock(mu);
      result.rewards[static_cast<std::size_t>(episode)] = r;
      if (std::isfinite(r)) {
        result.candidates.push_back({state.completed, r, episode});
        shared.update(steps, r, config.learning_rate, config.entropy_coef);
      }
    }
  };

  if (config.workers == 1) {
    worker(0);
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < config.workers; ++w) threads.emplace_back(worker, w);
    for (auto& t : threads) t.join();
  }

  result.best.reward = -std::numeric_limits<double>::infinity();
  for (const auto& c : result.candidates)
    if (c.reward > result.best.reward || (c.reward == result.best.reward && c.episode < result.best.episode))
      result.best = c;
  return result;
}

}  // namespace fairsl
