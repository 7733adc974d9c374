#include "fairsl/grounding.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "fairsl/error.hpp"

namespace fairsl {

SparseCoefficients canonicalize(SparseCoefficients terms) {
  std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  SparseCoefficients out;
  for (const auto& [index, coef] : terms) {
    if (!out.empty() && out.back().first == index)
      out.back().second += coef;
    else
      out.emplace_back(index, coef);
  }
  std::erase_if(out, [](const auto& t) { return std::abs(t.second) < 1e-15; });
  return out;
}

double linear_value(const SparseCoefficients& coefficients, double constant, const Assignment& y) {
  double v = constant;
  for (const auto& [index, coef] : coefficients) {
    if (index < 0 || index >= y.size()) throw Error("assignment is missing target atom " + std::to_string(index));
    v += coef * y[index];
  }
  return v;
}

double potential_value(const GroundPotential& potential, const Assignment& y) {
  double l = std::max(0.0, linear_value(potential.coefficients, potential.constant, y));
  return potential.exponent == 2 ? l * l : l;
}

double total_energy(std::span<const GroundPotential> potentials, const Assignment& y) {
  double e = 0.0;
  for (const auto& p : potentials) e += p.weight * potential_value(p, y);
  return e;
}

namespace {

struct CompiledLiteral {
  int predicate = -1;
  bool negated = false;
  bool in_head = false;
  // Per argument: variable slot (>= 0) or constant id encoded as -(id + 2);
  // -1 marks a constant unknown to the database.
  std::vector<int> slots;
};

constexpr int kUnknownConstant = -1;
int encode_constant(int id) { return -(id + 2); }
int decode_constant(int slot) { return -slot - 2; }

class Grounder {
 public:
  Grounder(const Clause& clause, const Database& db, int clause_index)
      : clause_(clause), db_(db), clause_index_(clause_index) {
    compile();
  }

  std::vector<GroundPotential> run() {
    binding_.assign(variables_.size(), -1);
    matched_.assign(literals_.size(), nullptr);
    join(0);
    return std::move(out_);
  }

 private:
  void compile() {
    const auto& schema = db_.schema();
    auto compile_literal = [&](const Literal& lit, bool in_head) {
      CompiledLiteral c;
      c.predicate = predicate_index(schema, lit.predicate);
      if (c.predicate < 0) throw Error("unknown predicate " + lit.predicate);
      if (static_cast<int>(lit.args.size()) != schema[static_cast<std::size_t>(c.predicate)].arity)
        throw Error("arity mismatch for " + lit.predicate);
      c.negated = lit.negated;
      c.in_head = in_head;
      for (std::size_t k = 0; k < lit.args.size(); ++k) {
        const Term& t = lit.args[k];
        if (t.is_variable) {
          auto it = std::find(variables_.begin(), variables_.end(), t.name);
          int slot = static_cast<int>(it - variables_.begin());
          if (it == variables_.end()) {
            variables_.push_back(t.name);
            positions_.emplace_back();
          }
          positions_[static_cast<std::size_t>(slot)].emplace_back(c.predicate, static_cast<int>(k));
          c.slots.push_back(slot);
        } else {
          auto id = db_.find_constant(t.name);
          c.slots.push_back(id ? encode_constant(*id) : kUnknownConstant);
        }
      }
      return c;
    };
    for (const auto& lit : clause_.body) literals_.push_back(compile_literal(lit, false));
    literals_.push_back(compile_literal(clause_.head, true));

    for (const auto& pos : positions_) {
      std::set<int> domain;
      for (const auto& [pred, k] : pos) {
        const auto& consts = db_.position_constants(pred, k);
        domain.insert(consts.begin(), consts.end());
      }
      domains_.emplace_back(domain.begin(), domain.end());
    }

    // A head-only variable ranges over the constants of its head position;
    // with none there it has no type at all.
    std::set<int> body_vars;
    for (std::size_t i = 0; i + 1 < literals_.size(); ++i)
      for (int slot : literals_[i].slots)
        if (slot >= 0) body_vars.insert(slot);
    for (int slot : literals_.back().slots)
      if (slot >= 0 && !body_vars.count(slot) && domains_[static_cast<std::size_t>(slot)].empty())
        throw Error("unbound head variable " + variables_[static_cast<std::size_t>(slot)] + " in " +
                    format_clause(clause_));

    // Positive body literals generate bindings from stored atoms: an absent
    // or zero-valued atom there makes the grounding trivially satisfied.
    for (std::size_t i = 0; i + 1 < literals_.size(); ++i)
      if (!literals_[i].negated) generators_.push_back(static_cast<int>(i));
    std::stable_sort(generators_.begin(), generators_.end(), [&](int a, int b) {
      return db_.entries(literals_[static_cast<std::size_t>(a)].predicate).size() <
             db_.entries(literals_[static_cast<std::size_t>(b)].predicate).size();
    });
    for (std::size_t v = 0; v < variables_.size(); ++v) free_order_.push_back(static_cast<int>(v));
  }

  void join(std::size_t depth) {
    if (depth == generators_.size()) {
      enumerate_free(0);
      return;
    }
    int li = generators_[depth];
    const auto& lit = literals_[static_cast<std::size_t>(li)];
    const auto& rows = db_.entries(lit.predicate);

    int bound_pos = -1, bound_const = 0;
    for (std::size_t k = 0; k < lit.slots.size(); ++k) {
      int value = resolve(lit.slots[k]);
      if (value == kUnknownConstant) return;  // atom cannot exist
      if (value >= 0) {
        bound_pos = static_cast<int>(k);
        bound_const = value;
        break;
      }
    }
    auto visit = [&](const Database::Entry& e) {
      if (e.target < 0 && e.value <= 0.0) return;
      std::vector<int> newly_bound;
      bool ok = true;
      for (std::size_t k = 0; k < lit.slots.size() && ok; ++k) {
        int slot = lit.slots[k];
        if (slot >= 0) {
          int& b = binding_[static_cast<std::size_t>(slot)];
          if (b < 0) {
            b = e.args[k];
            newly_bound.push_back(slot);
          } else if (b != e.args[k]) {
            ok = false;
          }
        } else if (decode_constant(slot) != e.args[k]) {
          ok = false;
        }
      }
      if (ok) {
        matched_[static_cast<std::size_t>(li)] = &e;
        join(depth + 1);
        matched_[static_cast<std::size_t>(li)] = nullptr;
      }
      for (int s : newly_bound) binding_[static_cast<std::size_t>(s)] = -1;
    };
    if (bound_pos >= 0) {
      for (int row : db_.entries_with(lit.predicate, bound_pos, bound_const)) visit(rows[static_cast<std::size_t>(row)]);
    } else {
      for (const auto& e : rows) visit(e);
    }
  }

  void enumerate_free(std::size_t i) {
    while (i < free_order_.size() && binding_[static_cast<std::size_t>(free_order_[i])] >= 0) ++i;
    if (i == free_order_.size()) {
      emit();
      return;
    }
    int v = free_order_[i];
    for (int c : domains_[static_cast<std::size_t>(v)]) {
      binding_[static_cast<std::size_t>(v)] = c;
      enumerate_free(i + 1);
    }
    binding_[static_cast<std::size_t>(v)] = -1;
  }

  // Constant id for a slot under the current binding; -1 unknown constant, -2 unbound.
  int resolve(int slot) const {
    if (slot >= 0) {
      int b = binding_[static_cast<std::size_t>(slot)];
      return b >= 0 ? b : -2;
    }
    return slot == kUnknownConstant ? kUnknownConstant : decode_constant(slot);
  }

  void emit() {
    const int k = static_cast<int>(literals_.size()) - 1;
    double constant = -(k - 1);
    SparseCoefficients terms;
    for (std::size_t i = 0; i < literals_.size(); ++i) {
      const auto& lit = literals_[i];
      const Database::Entry* e = matched_[i];
      if (!e) {
        args_.clear();
        bool unknown = false;
        for (int slot : lit.slots) {
          int c = resolve(slot);
          if (c < 0) unknown = true;
          args_.push_back(c);
        }
        e = unknown ? nullptr : db_.find(lit.predicate, args_);
      }
      // Literal truth value as (sign * x + offset) where x is the atom value.
      double sign = lit.negated ? -1.0 : 1.0;
      double offset = lit.negated ? 1.0 : 0.0;
      // Body literals add their value, the head subtracts it.
      double dir = lit.in_head ? -1.0 : 1.0;
      constant += dir * offset;
      if (e && e->target >= 0)
        terms.emplace_back(e->target, dir * sign);
      else
        constant += dir * sign * (e ? e->value : 0.0);
    }
    terms = canonicalize(std::move(terms));
    double box_max = constant;
    for (const auto& t : terms) box_max += std::max(0.0, t.second);
    if (box_max <= 1e-12) return;
    GroundPotential p;
    p.coefficients = std::move(terms);
    p.constant = constant;
    p.exponent = clause_.exponent;
    p.weight = clause_.weight;
    p.clause = clause_index_;
    out_.push_back(std::move(p));
  }

  const Clause& clause_;
  const Database& db_;
  int clause_index_;
  std::vector<CompiledLiteral> literals_;
  std::vector<std::string> variables_;
  std::vector<std::vector<std::pair<int, int>>> positions_;
  std::vector<std::vector<int>> domains_;
  std::vector<int> generators_;
  std::vector<int> free_order_;
  std::vector<int> binding_;
  std::vector<const Database::Entry*> matched_;
  std::vector<int> args_;
  std::vector<GroundPotential> out_;
};

}  // namespace

std::vector<GroundPotential> ground_clause(const Clause& clause, const Database& db, int clause_index) {
  if (clause.body.empty()) throw Error("clause body is empty");
  return Grounder(clause, db, clause_index).run();
}

std::vector<GroundPotential> ground_ruleset(const RuleSet& rules, const Database& db) {
  std::vector<GroundPotential> out;
  for (std::size_t i = 0; i < rules.clauses.size(); ++i) {
    auto g = ground_clause(rules.clauses[i], db, static_cast<int>(i));
    out.insert(out.end(), std::make_move_iterator(g.begin()), std::make_move_iterator(g.end()));
  }
  return out;
}

void apply_weights(std::span<GroundPotential> potentials, const RuleSet& rules) {
  for (auto& p : potentials) p.weight = rules.clauses.at(static_cast<std::size_t>(p.clause)).weight;
}

}  // namespace fairsl
