#include "fairsl/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "fairsl/datagen.hpp"
#include "fairsl/error.hpp"

namespace fairsl {

namespace {

std::vector<std::size_t> descending_order(const std::vector<double>& scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  return order;
}

void check_inputs(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw Error("scores and labels differ in length");
  for (int l : labels)
    if (l != 0 && l != 1) throw Error("labels must be 0 or 1");
}

}  // namespace

double auc_roc(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_inputs(scores, labels);
  const double pos = std::count(labels.begin(), labels.end(), 1);
  const double neg = static_cast<double>(labels.size()) - pos;
  if (pos == 0 || neg == 0) throw UndefinedMetric("AUC-ROC needs both classes");
  auto order = descending_order(scores);
  double area = 0.0, tp = 0.0, fp = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    double tp_step = 0.0, fp_step = 0.0;
    std::size_t j = i;
    for (; j < order.size() && scores[order[j]] == scores[order[i]]; ++j)
      (labels[order[j]] ? tp_step : fp_step) += 1.0;
    area += (fp_step / neg) * (tp + 0.5 * tp_step) / pos;
    tp += tp_step;
    fp += fp_step;
    i = j;
  }
  return area;
}

double auc_pr(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_inputs(scores, labels);
  const double pos = std::count(labels.begin(), labels.end(), 1);
  if (pos == 0) throw UndefinedMetric("AUC-PR needs positive examples");
  auto order = descending_order(scores);
  double area = 0.0, tp = 0.0, seen = 0.0, recall = 0.0, precision = 1.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    for (; j < order.size() && scores[order[j]] == scores[order[i]]; ++j) {
      tp += labels[order[j]];
      seen += 1.0;
    }
    double r = tp / pos, p = tp / seen;
    area += (r - recall) * 0.5 * (p + precision);
    recall = r;
    precision = p;
    i = j;
  }
  return area;
}

std::map<std::string, int> assign_folds(std::vector<std::string> entities, int folds, std::uint64_t seed) {
  if (folds < 2) throw Error("need at least 2 folds");
  std::sort(entities.begin(), entities.end());
  entities.erase(std::unique(entities.begin(), entities.end()), entities.end());
  if (static_cast<int>(entities.size()) < folds) throw Error("fewer entities than folds");
  std::mt19937_64 rng(seed);
  for (std::size_t i = entities.size(); i > 1; --i) {
    auto j = std::min(i - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i)));
    std::swap(entities[i - 1], entities[j]);
  }
  std::map<std::string, int> out;
  for (std::size_t i = 0; i < entities.size(); ++i) out[entities[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));
  return out;
}

double group_auc_roc(const Assignment& preds, const Assignment& truth, const GroupSpec& groups, double threshold) {
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto* atoms : {&groups.protected_atoms, &groups.unprotected_atoms})
    for (int i : *atoms) {
      if (std::isnan(truth[i])) continue;
      scores.push_back(preds[i]);
      labels.push_back(truth[i] >= threshold ? 1 : 0);
    }
  return auc_roc(scores, labels);
}

std::vector<FoldResult> cross_validate(const Dataset& data, const RuleSet& rules, const EvalOptions& options) {
  const Database& db = data.db;
  if (data.fair_target.empty()) throw Error("dataset has no fair target predicate");
  std::vector<std::string> entities;
  for (const auto& [id, label] : db.groups())
    if (label != GroupLabel::none) entities.push_back(db.constant_name(id));
  if (entities.empty()) throw Error("cross-validation needs group-labelled entities");
  auto fold_of = assign_folds(entities, options.folds, options.seed);

  InferenceOptions inference = options.inference;
  inference.fair_target = data.fair_target;
  std::vector<FoldResult> out;
  for (int k = 0; k < options.folds; ++k) {
    std::set<int> test, train;
    for (const auto& [name, fold] : fold_of) (fold == k ? test : train).insert(*db.find_constant(name));
    auto restrict = [&](const std::set<int>& excluded) {
      auto r = restrict_database(db, excluded);
      Assignment truth(static_cast<Eigen::Index>(r.index_map.size()));
      for (std::size_t i = 0; i < r.index_map.size(); ++i)
        truth[static_cast<Eigen::Index>(i)] = data.truth[r.index_map[i]];
      return Dataset{std::move(r.db), std::move(truth), data.fair_target};
    };
    Dataset train_set = restrict(test);
    Dataset test_set = restrict(train);

    RuleSet weighted = options.learn_weights ? learn_weights(rules, train_set.db, train_set.truth, options.weights) : rules;
    auto prediction = predict(weighted, test_set.db, inference);
    const Assignment& y = prediction.map.assignment;

    FoldResult r;
    r.fold = k;
    r.diagnostics = prediction.map.diagnostics;
    r.report = fairness_report(y, &test_set.truth, prediction.groups, options.threshold);
    try {
      r.auc_roc = group_auc_roc(y, test_set.truth, prediction.groups, options.threshold);
    } catch (const UndefinedMetric&) {
    }
    auto pr = [&](const std::vector<int>& atoms) -> std::optional<double> {
      std::vector<double> scores;
      std::vector<int> labels;
      for (int i : atoms) {
        if (std::isnan(test_set.truth[i])) continue;
        scores.push_back(y[i]);
        labels.push_back(test_set.truth[i] >= options.threshold ? 1 : 0);
      }
      try {
        return auc_pr(scores, labels);
      } catch (const UndefinedMetric&) {
        return std::nullopt;
      }
    };
    r.auc_pr_protected = pr(prediction.groups.protected_atoms);
    r.auc_pr_unprotected = pr(prediction.groups.unprotected_atoms);
    out.push_back(std::move(r));
  }
  return out;
}

std::string format_cross_validation(const std::vector<FoldResult>& folds) {
  using Field = std::optional<double>;
  struct Column {
    const char* name;
    Field (*get)(const FoldResult&);
  };
  const Column columns[] = {
      {"auc_roc", [](const FoldResult& f) { return f.auc_roc; }},
      {"auc_pr_protected", [](const FoldResult& f) { return f.auc_pr_protected; }},
      {"auc_pr_unprotected", [](const FoldResult& f) { return f.auc_pr_unprotected; }},
      {"rd", [](const FoldResult& f) { return f.report.rd; }},
      {"rr", [](const FoldResult& f) { return f.report.rr; }},
      {"rc", [](const FoldResult& f) { return f.report.rc; }},
      {"spd", [](const FoldResult& f) { return f.report.spd; }},
      {"di", [](const FoldResult& f) { return f.report.di; }},
      {"eo_pos", [](const FoldResult& f) { return f.report.eo_pos; }},
      {"eo_neg", [](const FoldResult& f) { return f.report.eo_neg; }},
      {"eq_opportunity", [](const FoldResult& f) { return f.report.eq_opportunity; }},
      {"avg_odds", [](const FoldResult& f) { return f.report.avg_odds; }},
      {"non_parity", [](const FoldResult& f) { return f.report.non_parity; }},
  };
  std::ostringstream out;
  char buf[64];
  out << "fold";
  for (const auto& c : columns) out << '\t' << c.name;
  out << '\n';
  for (const auto& f : folds) {
    out << f.fold;
    for (const auto& c : columns) {
      Field v = c.get(f);
      if (v) {
        std::snprintf(buf, sizeof buf, "%.4f", *v);
        out << '\t' << buf;
      } else {
        out << "\tundefined";
      }
    }
    out << '\n';
  }
  out << "mean±std";
  for (const auto& c : columns) {
    std::vector<double> xs;
    for (const auto& f : folds)
      if (auto v = c.get(f)) xs.push_back(*v);
    if (xs.empty()) {
      out << "\tundefined";
      continue;
    }
    double m = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size(), s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    s = xs.size() > 1 ? std::sqrt(s / (xs.size() - 1)) : 0.0;
    std::snprintf(buf, sizeof buf, "%.4f±%.4f", m, s);
    out << '\t' << buf;
  }
  out << '\n';
  return out.str();
}

}  // namespace fairsl
