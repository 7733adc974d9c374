#pragma once

#include <compare>
#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace fairsl {

enum class PredicateKind { observed, target };

/// A relation symbol. `sorts` names the entity sort of each argument
/// position; when empty every position is its own sort.
struct Predicate {
  std::string name;
  int arity = 1;
  PredicateKind kind = PredicateKind::observed;
  std::vector<std::string> sorts;

  std::string sort_of(int position) const;
  bool is_target() const { return kind == PredicateKind::target; }

  friend bool operator==(const Predicate&, const Predicate&) = default;
};

using Schema = std::vector<Predicate>;

/// Throws Error on duplicate names, empty names, arity < 1 or a sort list of
/// the wrong length.
void validate_schema(const Schema& schema);
const Predicate* find_predicate(const Schema& schema, std::string_view name);
int predicate_index(const Schema& schema, std::string_view name);

/// Variable or constant argument of a literal.
struct Term {
  std::string name;
  bool is_variable = false;

  static Term variable(std::string name) { return {std::move(name), true}; }
  static Term constant(std::string name) { return {std::move(name), false}; }

  friend auto operator<=>(const Term&, const Term&) = default;
};

struct Literal {
  std::string predicate;
  std::vector<Term> args;
  bool negated = false;

  friend auto operator<=>(const Literal&, const Literal&) = default;
};

/// Weighted implication `body_1 & ... & body_k -> head`.
struct Clause {
  double weight = 1.0;
  std::vector<Literal> body;
  Literal head;
  int exponent = 1;

  friend bool operator==(const Clause&, const Clause&) = default;
};

struct RuleSet {
  std::vector<Clause> clauses;
  Schema schema;

  friend bool operator==(const RuleSet&, const RuleSet&) = default;
};

inline constexpr std::size_t kUnlimitedClauses = std::numeric_limits<std::size_t>::max();

/// Parses one rule per line:
///
///     WEIGHT ":" literal ("&" literal)* "->" literal ["^2"]
///
/// `!` negates a literal, identifiers starting with an uppercase letter are
/// variables, anything else (or a double-quoted string) is a constant and
/// `#` starts a comment. Every failure is reported as a ParseError carrying
/// the offending line and column.
RuleSet parse_ruleset(std::string_view text, const Schema& schema,
                      std::size_t max_clauses = kUnlimitedClauses);

/// Parses a single literal such as `!reviews(R,p1)` without schema checks.
Literal parse_literal(std::string_view text);

/// Checks a clause against the schema. Throws Error describing the problem.
void validate_clause(const Clause& clause, const Schema& schema);

/// Number of literals, head included.
int clause_length(const Clause& clause);

std::string format_term(const Term& term);
std::string format_literal(const Literal& literal);
std::string format_clause(const Clause& clause);
/// Inverse of parse_ruleset, one clause per line.
std::string format_ruleset(const RuleSet& rules);

/// Canonical text of the clause structure, ignoring weight and body order.
std::string structure_key(const Clause& clause);

}  // namespace fairsl
