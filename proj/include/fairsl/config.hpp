#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "fairsl/inference.hpp"
#include "fairsl/search.hpp"
#include "fairsl/weight_learning.hpp"

namespace fairsl {

struct ExperimentConfig {
  ObjectiveConfig objective;
  AdmmParams admm;
  SearchConfig search;
  WeightLearningParams weights;  // weights.admm mirrors admm
  SignalSets signals;
};

/// Parses `key = value` lines; `#` starts a comment. Keys:
///
///   objective  alpha_len alpha_num alpha_sem alpha_odds alpha_over delta gamma
///              mode (relational|recommender) likelihood (pseudo|energy)
///              odds_fold (train|validation) weight_mode (per_candidate|final_only)
///   admm       step_size primal_tol dual_tol max_iterations initial_value
///   search     workers episodes learning_rate entropy_coef seed
///              max_clause_length max_clauses
///   weights    weight_iterations weight_rate weight_method (pseudo_likelihood|perceptron)
///   signals    positive_signals negative_signals (comma-separated, `!` negates)
///
/// Unknown or repeated keys and malformed values raise ParseError.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& file);

}  // namespace fairsl
