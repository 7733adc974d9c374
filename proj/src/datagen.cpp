#include "fairsl/datagen.hpp"

#include <algorithm>
#include <cstdio>
#include <string>

#include "fairsl/error.hpp"

namespace fairsl {

void validate(const GenParams& params) {
  if (params.n_papers < 1 || params.n_authors < 1 || params.n_reviewers < 1)
    throw Error("paper, author and reviewer counts must be >= 1");
  if (params.reviewers_per_paper < 1) throw Error("reviewers_per_paper must be >= 1");
  if (params.reviewers_per_paper > params.n_reviewers) throw Error("reviewers_per_paper exceeds n_reviewers");
  for (double p : {params.p_h, params.p_s, params.p_q, params.theta1, params.theta2, params.acceptable_flip})
    if (!(p >= 0.0 && p <= 1.0)) throw Error("probabilities must lie in [0,1]");
}

double review_probability(bool quality, bool top_affiliation, bool student, double theta1, double theta2) {
  if (!quality) {
    if (!top_affiliation) return student ? 0.05 : 0.15;
    return student ? 0.15 : 0.20;
  }
  if (!top_affiliation) return student ? theta1 : 0.85;
  return student ? theta2 : 0.85;
}

PaperReviewData generate_paper_review(const GenParams& params) {
  validate(params);
  Schema schema = {
      {"submits", 2, PredicateKind::observed, {"author", "paper"}},
      {"student", 1, PredicateKind::observed, {"author"}},
      {"acceptable", 1, PredicateKind::observed, {"paper"}},
      {"reviews", 2, PredicateKind::observed, {"reviewer", "paper"}},
      {"positiveReviews", 2, PredicateKind::target, {"reviewer", "paper"}},
      {"positiveSummary", 1, PredicateKind::target, {"paper"}},
  };
  if (params.emit_high_quality) schema.push_back({"highQuality", 1, PredicateKind::observed, {"paper"}});

  std::mt19937_64 rng(params.seed);
  auto bernoulli = [&](double p) { return uniform01(rng) < p; };
  auto pick = [&](int n) { return std::min(n - 1, static_cast<int>(uniform01(rng) * n)); };

  PaperReviewData out{Dataset{Database(schema), Assignment(), "positiveSummary"}, {}};
  Database& db = out.data.db;
  std::vector<double> truth;

  std::vector<bool> top(static_cast<std::size_t>(params.n_authors)), student(top.size());
  for (int a = 0; a < params.n_authors; ++a) {
    top[static_cast<std::size_t>(a)] = bernoulli(params.p_h);
    student[static_cast<std::size_t>(a)] = bernoulli(params.p_s);
    std::string name = "a" + std::to_string(a);
    db.intern(name);
    if (student[static_cast<std::size_t>(a)]) db.set_observed("student", {name}, 1.0);
  }
  for (int r = 0; r < params.n_reviewers; ++r) db.intern("r" + std::to_string(r));

  for (int p = 0; p < params.n_papers; ++p) {
    std::string paper = "p" + std::to_string(p);
    bool quality = bernoulli(params.p_q);
    int author = pick(params.n_authors);
    bool acceptable = bernoulli(params.acceptable_flip) ? !quality : quality;
    const auto a = static_cast<std::size_t>(author);

    db.set_observed("submits", {"a" + std::to_string(author), paper}, 1.0);
    if (acceptable) db.set_observed("acceptable", {paper}, 1.0);
    if (params.emit_high_quality && quality) db.set_observed("highQuality", {paper}, 1.0);
    db.set_group(paper, student[a] ? GroupLabel::protected_group : GroupLabel::unprotected_group);

    std::vector<int> chosen;
    while (static_cast<int>(chosen.size()) < params.reviewers_per_paper) {
      int r = pick(params.n_reviewers);
      if (std::find(chosen.begin(), chosen.end(), r) == chosen.end()) chosen.push_back(r);
    }
    double positives = 0.0;
    for (int r : chosen) {
      std::string reviewer = "r" + std::to_string(r);
      bool positive = bernoulli(review_probability(quality, top[a], student[a], params.theta1, params.theta2));
      db.set_observed("reviews", {reviewer, paper}, 1.0);
      db.add_target("positiveReviews", {reviewer, paper});
      truth.push_back(positive ? 1.0 : 0.0);
      positives += positive ? 1.0 : 0.0;
      out.reviews.push_back({quality, top[a], student[a], positive});
    }
    db.add_target("positiveSummary", {paper});
    truth.push_back(positives / static_cast<double>(chosen.size()));
  }
  out.data.truth = Eigen::Map<Assignment>(truth.data(), static_cast<Eigen::Index>(truth.size()));
  return out;
}

std::vector<std::pair<std::string, std::string>> manifest_entries(const GenParams& params) {
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return std::string(buf);
  };
  return {{"generator", "paper_review"},
          {"seed", std::to_string(params.seed)},
          {"n_papers", std::to_string(params.n_papers)},
          {"n_authors", std::to_string(params.n_authors)},
          {"n_reviewers", std::to_string(params.n_reviewers)},
          {"reviewers_per_paper", std::to_string(params.reviewers_per_paper)},
          {"p_h", num(params.p_h)},
          {"p_s", num(params.p_s)},
          {"p_q", num(params.p_q)},
          {"theta1", num(params.theta1)},
          {"theta2", num(params.theta2)},
          {"acceptable_flip", num(params.acceptable_flip)},
          {"emit_high_quality", params.emit_high_quality ? "true" : "false"}};
}

}  // namespace fairsl
