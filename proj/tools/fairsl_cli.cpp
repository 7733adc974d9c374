#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fairsl/config.hpp"
#include "fairsl/datagen.hpp"
#include "fairsl/error.hpp"
#include "fairsl/evaluation.hpp"
#include "fairsl/fairness.hpp"
#include "fairsl/pipeline.hpp"
#include "fairsl/reward.hpp"
#include "fairsl/search.hpp"
#include "fairsl/weight_learning.hpp"

namespace fs = std::filesystem;
using namespace fairsl;

namespace {

std::string read_text(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw Error("cannot open " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file);
  if (!out) throw Error("cannot write " + file.string());
  out << text;
}

void print_diagnostics(std::ostream& out, const InferenceDiagnostics& d) {
  out << "iterations=" << d.iterations << '\n'
      << "primal_residual=" << d.primal_residual << '\n'
      << "dual_residual=" << d.dual_residual << '\n'
      << "converged=" << (d.converged ? "true" : "false") << '\n'
      << "max_constraint_violation=" << d.max_constraint_violation << '\n';
}

struct GenArgs {
  fs::path out;
  GenParams params;
  bool hide_high_quality = false;
};

int run_gen_data(const GenArgs& args) {
  GenParams params = args.params;
  params.emit_high_quality = !args.hide_high_quality;
  auto sample = generate_paper_review(params);
  write_dataset(sample.data, args.out, manifest_entries(params));
  std::cout << "wrote " << sample.data.db.num_targets() << " target atoms to " << args.out.string() << '\n';
  return 0;
}

struct LearnArgs {
  fs::path data, config, out, history, validation;
};

int run_learn(const LearnArgs& args) {
  Dataset data = load_dataset(args.data);
  ExperimentConfig cfg = load_config(args.config);
  std::optional<Dataset> validation;
  if (!args.validation.empty()) validation = load_dataset(args.validation);
  if (cfg.objective.odds_fold == OddsFold::validation && !validation)
    throw Error("odds_fold = validation needs --validation");
  RewardOptions options{cfg.weights, cfg.admm};
  const Dataset* val = validation ? &*validation : nullptr;
  auto reward = make_reward_function(data, cfg.objective, cfg.signals, options, val);
  SearchResult result = train(data.db.schema(), reward, cfg.search);
  if (result.candidates.empty()) throw Error("structure search produced no feasible candidate");

  RuleSet best{result.best.clauses, data.db.schema()};
  ObjectiveConfig final_objective = cfg.objective;
  final_objective.weight_mode = WeightMode::per_candidate;
  auto breakdown = score_candidate(best, data, final_objective, cfg.signals, options, val);
  write_text(args.out, format_ruleset(breakdown.rules));

  fs::path history = args.history.empty() ? fs::path(args.out.string() + ".history.tsv") : args.history;
  std::ostringstream h;
  h << "episode\treward\n";
  for (std::size_t i = 0; i < result.rewards.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", result.rewards[i]);
    h << i << '\t' << (std::isfinite(result.rewards[i]) ? buf : "-inf") << '\n';
  }
  write_text(history, h.str());

  std::cout << "best_episode=" << result.best.episode << '\n'
            << "best_reward=" << result.best.reward << '\n'
            << "likelihood=" << breakdown.likelihood << '\n'
            << "prior=" << breakdown.prior << '\n'
            << "odds=" << breakdown.odds << '\n'
            << format_report(breakdown.report);
  print_diagnostics(std::cout, breakdown.diagnostics);
  return 0;
}

struct InferArgs {
  fs::path data, rules, out, report;
  bool learn = false;
  double delta = 0.1;
  std::string fair = "none";
  std::string target;
  double threshold = 0.5;
};

int run_infer(const InferArgs& args) {
  Dataset data = load_dataset(args.data);
  RuleSet rules = parse_ruleset(read_text(args.rules), data.db.schema());
  if (args.learn) rules = learn_weights(rules, data.db, data.truth);
  InferenceOptions options;
  options.fair = parse_fair_list(args.fair);
  options.delta = args.delta;
  options.fair_target = args.target.empty() ? data.fair_target : args.target;
  Prediction p = predict(rules, data.db, options);
  write_atom_values(args.out, data.db, p.map.assignment);

  std::ostringstream report;
  print_diagnostics(report, p.map.diagnostics);
  report << "energy=" << p.map.energy << '\n';
  if (!options.fair_target.empty()) {
    const Assignment* truth = data.truth.hasNaN() ? nullptr : &data.truth;
    report << format_report(fairness_report(p.map.assignment, truth, p.groups, args.threshold));
  }
  if (!args.report.empty()) write_text(args.report, report.str());
  std::cout << report.str();
  return 0;
}

struct AuditArgs {
  fs::path preds, truth, groups;
  double threshold = 0.5;
  bool continuous = false;
  std::string target;
};

int run_audit(const AuditArgs& args) {
  auto preds = read_atom_values(args.preds);
  auto groups = read_group_file(args.groups);
  std::vector<std::string> atoms;
  Assignment y(static_cast<Eigen::Index>(preds.size()));
  for (const auto& [atom, value] : preds) {
    y[static_cast<Eigen::Index>(atoms.size())] = value;
    atoms.push_back(atom);
  }
  Assignment truth = Assignment::Constant(y.size(), std::nan(""));
  bool have_truth = !args.truth.empty();
  if (have_truth) {
    auto t = read_atom_values(args.truth);
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      auto it = t.find(atoms[i]);
      if (it != t.end()) truth[static_cast<Eigen::Index>(i)] = it->second;
    }
  }
  GroupSpec spec = group_spec(atoms, groups, args.target);
  // Atoms outside the audited groups may lack truth; only the grouped ones matter.
  Assignment grouped_truth = truth;
  bool complete = have_truth;
  for (const auto* list : {&spec.protected_atoms, &spec.unprotected_atoms})
    for (int i : *list) complete = complete && !std::isnan(truth[i]);
  for (Eigen::Index i = 0; i < grouped_truth.size(); ++i)
    if (std::isnan(grouped_truth[i])) grouped_truth[i] = 0.0;
  std::optional<double> threshold;
  if (!args.continuous) threshold = args.threshold;
  std::cout << format_report(fairness_report(y, complete ? &grouped_truth : nullptr, spec, threshold));
  return 0;
}

struct EvalArgs {
  fs::path data, rules;
  int folds = 5;
  std::uint64_t seed = 0;
  std::string fair = "rd,rr,rc";
  double delta = 0.1;
  bool no_learn = false;
};

int run_eval(const EvalArgs& args) {
  Dataset data = load_dataset(args.data);
  RuleSet rules = parse_ruleset(read_text(args.rules), data.db.schema());
  EvalOptions options;
  options.folds = args.folds;
  options.seed = args.seed;
  options.learn_weights = !args.no_learn;
  options.inference.fair = parse_fair_list(args.fair);
  options.inference.delta = args.delta;
  std::cout << format_cross_validation(cross_validate(data, rules, options));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fairness-aware structure learning for hinge-loss Markov random fields"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate the synthetic paper-review dataset");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--seed", gen.params.seed, "Random seed");
  gen_cmd->add_option("--papers", gen.params.n_papers);
  gen_cmd->add_option("--authors", gen.params.n_authors);
  gen_cmd->add_option("--reviewers", gen.params.n_reviewers);
  gen_cmd->add_option("--reviewers-per-paper", gen.params.reviewers_per_paper);
  gen_cmd->add_option("--theta1", gen.params.theta1);
  gen_cmd->add_option("--theta2", gen.params.theta2);
  gen_cmd->add_option("--p-h", gen.params.p_h, "P(top-rank affiliation)");
  gen_cmd->add_option("--p-s", gen.params.p_s, "P(student author)");
  gen_cmd->add_option("--p-q", gen.params.p_q, "P(high quality)");
  gen_cmd->add_option("--acceptable-flip", gen.params.acceptable_flip);
  gen_cmd->add_flag("--hide-high-quality", gen.hide_high_quality, "Do not emit highQuality");

  LearnArgs learn;
  auto* learn_cmd = app.add_subcommand("learn", "Structure search");
  learn_cmd->add_option("--data", learn.data)->required();
  learn_cmd->add_option("--config", learn.config)->required();
  learn_cmd->add_option("--out", learn.out, "Rule file for the best clause set")->required();
  learn_cmd->add_option("--history", learn.history, "Reward history (default: <out>.history.tsv)");
  learn_cmd->add_option("--validation", learn.validation, "Data directory for the equalized-odds fold");

  InferArgs infer;
  auto* infer_cmd = app.add_subcommand("infer", "MAP inference, optionally fairness-constrained");
  infer_cmd->add_option("--data", infer.data)->required();
  infer_cmd->add_option("--rules", infer.rules)->required();
  infer_cmd->add_option("--out", infer.out, "Predictions file")->required();
  infer_cmd->add_option("--report", infer.report, "Write diagnostics and fairness report here");
  infer_cmd->add_flag("--learn-weights", infer.learn, "Learn clause weights against truth.tsv first");
  infer_cmd->add_option("--delta", infer.delta);
  infer_cmd->add_option("--fair", infer.fair, "none | nonparity | subset of rd,rr,rc");
  infer_cmd->add_option("--target", infer.target, "Audited predicate (default from manifest)");
  infer_cmd->add_option("--threshold", infer.threshold);

  AuditArgs audit;
  auto* audit_cmd = app.add_subcommand("audit", "Fairness metrics of a predictions file");
  audit_cmd->add_option("--preds", audit.preds)->required();
  audit_cmd->add_option("--truth", audit.truth);
  audit_cmd->add_option("--groups", audit.groups)->required();
  audit_cmd->add_option("--threshold", audit.threshold);
  audit_cmd->add_flag("--continuous", audit.continuous, "Rate metrics on raw values");
  audit_cmd->add_option("--target", audit.target, "Only atoms of this predicate");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Cross-validated prediction and fairness metrics");
  eval_cmd->add_option("--data", eval.data)->required();
  eval_cmd->add_option("--rules", eval.rules)->required();
  eval_cmd->add_option("--folds", eval.folds);
  eval_cmd->add_option("--seed", eval.seed);
  eval_cmd->add_option("--fair", eval.fair);
  eval_cmd->add_option("--delta", eval.delta);
  eval_cmd->add_flag("--no-learn", eval.no_learn, "Keep the rule file's weights");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen_cmd) return run_gen_data(gen);
    if (*learn_cmd) return run_learn(learn);
    if (*infer_cmd) return run_infer(infer);
    if (*audit_cmd) return run_audit(audit);
    if (*eval_cmd) return run_eval(eval);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
