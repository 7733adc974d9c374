#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <limits>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fairsl/relational.hpp"

namespace fairsl {

/// A predicate with a sign, the unit the agent adds to a clause.
struct Token {
  int predicate = 0;
  bool negated = false;

  friend auto operator<=>(const Token&, const Token&) = default;
};

struct SearchLimits {
  int max_clause_length = 4;
  int max_clauses = 10;
};

struct SearchState {
  std::vector<Clause> completed;
  std::vector<std::vector<Token>> completed_tokens;
  std::vector<Token> current;
  int step = 0;
  bool done = false;
};

enum class ActionKind { add_literal, end_clause, end_episode };

struct Action {
  ActionKind kind = ActionKind::add_literal;
  Token token;

  friend bool operator==(const Action&, const Action&) = default;
};

/// Actions are numbered 2*p + negated for literals, then end_clause, then
/// end_episode.
int num_actions(const Schema& schema);
int action_index(const Action& action, const Schema& schema);
Action action_from_index(int index, const Schema& schema);

/// Turns a token sequence into a clause: the last token is the head, the rest
/// the body. Each argument gets the variable of its sort; the second
/// occurrence of a predicate gets a fresh variable in its first position.
Clause tokens_to_clause(const std::vector<Token>& tokens, const Schema& schema);

/// Legal moves. Literals may be added while a signed predicate is not yet in
/// the current clause and the length cap allows it; one short of the cap only
/// target predicates that complete a new clause are offered. end_clause needs
/// two tokens, a target last and a clause not already completed. end_episode
/// needs an empty current clause and at least one completed clause, or is the
/// only move when nothing else is legal.
std::vector<Action> valid_actions(const SearchState& state, const Schema& schema, const SearchLimits& limits);

/// Applies a legal action. Throws Error for an illegal one.
SearchState env_step(const SearchState& state, const Action& action, const Schema& schema,
                     const SearchLimits& limits);

/// Signed predicate names used by the semantic prior.
using SignedName = std::pair<std::string, bool>;

struct SignalSets {
  std::set<SignedName> positive;
  std::set<SignedName> negative;

  bool empty() const { return positive.empty() && negative.empty(); }
};

/// Parses a comma-separated list such as `oldAge,!priorFelony`.
std::set<SignedName> parse_signal_list(std::string_view text);

/// 0 when the clause follows one of the right-reason templates, else 1.
int dist(const Clause& clause, const SignalSets& signals);

enum class ObjectiveMode { relational, recommender };
enum class LikelihoodTerm { two_point, pseudo, energy };
enum class OddsFold { train, validation };
enum class WeightMode { per_candidate, final_only };

struct ObjectiveConfig {
  double alpha_len = 0.0;
  double alpha_num = 0.0;
  double alpha_sem = 0.0;
  double alpha_odds = 0.0;
  double alpha_over = 0.0;
  double delta = 0.1;
  double gamma = 1.0;
  ObjectiveMode mode = ObjectiveMode::relational;
  LikelihoodTerm likelihood = LikelihoodTerm::two_point;
  OddsFold odds_fold = OddsFold::train;
  WeightMode weight_mode = WeightMode::per_candidate;
};

void validate(const ObjectiveConfig& config);

/// alpha_len * mean length + alpha_num * |C| + alpha_sem * sum Dist(c) * weight.
/// The semantic term is skipped when both signal sets are empty.
double interpretability_prior(const RuleSet& rules, const ObjectiveConfig& config, const SignalSets& signals);

/// [completed signed-predicate counts | current indicators | |C|/max, |cur|/max].
Eigen::VectorXd featurize_state(const SearchState& state, const Schema& schema, const SearchLimits& limits);

struct SearchConfig {
  int workers = 4;
  int episodes = 200;
  double learning_rate = 0.01;
  double entropy_coef = 0.01;
  std::uint64_t seed = 0;
  SearchLimits limits;
};

void validate(const SearchConfig& config);

/// Scores a finished clause set; -infinity marks a failed candidate. Called
/// concurrently from several workers.
using RewardFunction = std::function<double(const std::vector<Clause>&)>;

struct Candidate {
  std::vector<Clause> clauses;
  double reward = 0.0;
  int episode = 0;
};

struct SearchResult {
  Candidate best;
  /// Every finite-reward episode, in completion order.
  std::vector<Candidate> candidates;
  /// Reward of episode i (-infinity when discarded), indexed by episode.
  std::vector<double> rewards;
};

/// Linear actor-critic over featurize_state with masked softmax logits and a
/// linear value head. Rewards are standardized with running statistics before
/// forming the advantage; the return of every step is the terminal reward.
class LinearPolicy {
 public:
  LinearPolicy(int n_features, int n_actions);

  /// Action probabilities, zero outside `valid`.
  Eigen::VectorXd probabilities(const Eigen::VectorXd& features, const std::vector<int>& valid) const;
  double value(const Eigen::VectorXd& features) const;

  struct Step {
    Eigen::VectorXd features;
    std::vector<int> valid;
    int action = 0;
  };
  /// One actor-critic update from an episode with terminal reward `reward`.
  void update(const std::vector<Step>& steps, double reward, double learning_rate, double entropy_coef);

 private:
  Eigen::MatrixXd actor_;
  Eigen::VectorXd actor_bias_;
  Eigen::VectorXd critic_;
  double critic_bias_ = 0.0;
  double reward_count_ = 0.0;
  double reward_mean_ = 0.0;
  double reward_m2_ = 0.0;
};

/// Runs `config.workers` threads sharing one policy and one candidate list and
/// returns the best-reward clause set. With one worker the run is a pure
/// function of the seed.
SearchResult train(const Schema& schema, const RewardFunction& reward, const SearchConfig& config);

/// Canonical text of a clause set, independent of clause and body order.
std::string clause_set_key(const std::vector<Clause>& clauses);

}  // namespace fairsl
