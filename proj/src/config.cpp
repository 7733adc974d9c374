#include "fairsl/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "fairsl/error.hpp"

namespace fairsl {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  return std::string(s.substr(b, s.find_last_not_of(" \t\r") - b + 1));
}

double to_double(const std::string& v) {
  double out = 0.0;
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size()) throw Error("expected a number, got '" + v + "'");
  return out;
}

template <typename Int>
Int to_int(const std::string& v) {
  Int out = 0;
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size()) throw Error("expected an integer, got '" + v + "'");
  return out;
}

template <typename Enum>
Enum to_enum(const std::string& v, std::initializer_list<std::pair<const char*, Enum>> options) {
  std::string allowed;
  for (const auto& [name, value] : options) {
    if (v == name) return value;
    allowed += std::string(allowed.empty() ? "" : "|") + name;
  }
  throw Error("expected " + allowed + ", got '" + v + "'");
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  auto& o = cfg.objective;
  auto& a = cfg.admm;
  auto& s = cfg.search;
  auto& w = cfg.weights;
  using Setter = std::function<void(const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"alpha_len", [&](const std::string& v) { o.alpha_len = to_double(v); }},
      {"alpha_num", [&](const std::string& v) { o.alpha_num = to_double(v); }},
      {"alpha_sem", [&](const std::string& v) { o.alpha_sem = to_double(v); }},
      {"alpha_odds", [&](const std::string& v) { o.alpha_odds = to_double(v); }},
      {"alpha_over", [&](const std::string& v) { o.alpha_over = to_double(v); }},
      {"delta", [&](const std::string& v) { o.delta = to_double(v); }},
      {"gamma", [&](const std::string& v) { o.gamma = to_double(v); }},
      {"mode",
       [&](const std::string& v) {
         o.mode = to_enum<ObjectiveMode>(v, {{"relational", ObjectiveMode::relational},
                                             {"recommender", ObjectiveMode::recommender}});
       }},
      {"likelihood",
       [&](const std::string& v) {
         o.likelihood = to_enum<LikelihoodTerm>(v, {{"two_point", LikelihoodTerm::two_point},
                                                    {"pseudo", LikelihoodTerm::pseudo},
                                                    {"energy", LikelihoodTerm::energy}});
       }},
      {"odds_fold",
       [&](const std::string& v) {
         o.odds_fold = to_enum<OddsFold>(v, {{"train", OddsFold::train}, {"validation", OddsFold::validation}});
       }},
      {"weight_mode",
       [&](const std::string& v) {
         o.weight_mode = to_enum<WeightMode>(v, {{"per_candidate", WeightMode::per_candidate},
                                                 {"final_only", WeightMode::final_only}});
       }},
      {"step_size", [&](const std::string& v) { a.step_size = to_double(v); }},
      {"primal_tol", [&](const std::string& v) { a.primal_tol = to_double(v); }},
      {"dual_tol", [&](const std::string& v) { a.dual_tol = to_double(v); }},
      {"max_iterations", [&](const std::string& v) { a.max_iterations = to_int<int>(v); }},
      {"initial_value", [&](const std::string& v) { a.initial_value = to_double(v); }},
      {"workers", [&](const std::string& v) { s.workers = to_int<int>(v); }},
      {"episodes", [&](const std::string& v) { s.episodes = to_int<int>(v); }},
      {"learning_rate", [&](const std::string& v) { s.learning_rate = to_double(v); }},
      {"entropy_coef", [&](const std::string& v) { s.entropy_coef = to_double(v); }},
      {"seed", [&](const std::string& v) { s.seed = to_int<std::uint64_t>(v); }},
      {"max_clause_length", [&](const std::string& v) { s.limits.max_clause_length = to_int<int>(v); }},
      {"max_clauses", [&](const std::string& v) { s.limits.max_clauses = to_int<int>(v); }},
      {"weight_iterations", [&](const std::string& v) { w.iterations = to_int<int>(v); }},
      {"weight_rate", [&](const std::string& v) { w.rate = to_double(v); }},
      {"weight_method",
       [&](const std::string& v) {
         w.method = to_enum<WeightMethod>(v, {{"pseudo_likelihood", WeightMethod::pseudo_likelihood},
                                              {"perceptron", WeightMethod::perceptron}});
       }},
      {"positive_signals", [&](const std::string& v) { cfg.signals.positive = parse_signal_list(v); }},
      {"negative_signals", [&](const std::string& v) { cfg.signals.negative = parse_signal_list(v); }},
  };

  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  for (std::size_t line = 1; std::getline(in, raw); ++line) {
    std::string body = trim(raw.substr(0, raw.find('#')));
    if (body.empty()) continue;
    auto eq = body.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", line, 1);
    std::string key = trim(body.substr(0, eq));
    std::string value = trim(body.substr(eq + 1));
    const std::size_t value_col = raw.find(value.empty() ? "=" : value) + 1;
    auto it = setters.find(key);
    if (it == setters.end()) throw ParseError("unknown key '" + key + "'", line, raw.find(key) + 1);
    if (!seen.insert(key).second) throw ParseError("repeated key '" + key + "'", line, raw.find(key) + 1);
    try {
      it->second(value);
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(key + ": " + e.what(), line, value_col);
    }
  }
  w.admm = a;
  validate(o);
  validate(a);
  validate(s);
  validate(w);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error("cannot open config " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace fairsl
