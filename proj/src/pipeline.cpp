#include "fairsl/pipeline.hpp"

#include <algorithm>
#include <sstream>

#include "fairsl/error.hpp"

namespace fairsl {

std::vector<FairMetric> parse_fair_list(std::string_view text) {
  std::vector<FairMetric> out;
  if (text == "none") return out;
  std::string item;
  std::istringstream in{std::string(text)};
  while (std::getline(in, item, ',')) {
    FairMetric m = parse_fair_metric(item);
    if (std::find(out.begin(), out.end(), m) != out.end()) throw Error("fairness metric listed twice: " + item);
    out.push_back(m);
  }
  if (out.empty()) throw Error("empty fairness metric list");
  if (out.size() > 1 && std::find(out.begin(), out.end(), FairMetric::non_parity) != out.end())
    throw Error("nonparity cannot be combined with other metrics");
  return out;
}

Prediction predict(const RuleSet& weighted, const Database& db, const InferenceOptions& options) {
  Prediction out;
  out.potentials = ground_ruleset(weighted, db);
  if (!options.fair_target.empty()) out.groups = group_spec(db, options.fair_target);
  if (!options.fair.empty()) {
    if (options.fair_target.empty()) throw Error("fairness constraints need a fair target predicate");
    for (FairMetric m : options.fair) {
      auto c = build_delta_constraints(m, out.groups, options.delta);
      out.constraints.insert(out.constraints.end(), c.begin(), c.end());
    }
  }
  out.map = map_inference(out.potentials, out.constraints, db.num_targets(), options.admm);
  return out;
}

}  // namespace fairsl
