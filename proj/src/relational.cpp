#include "fairsl/relational.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>

#include "fairsl/error.hpp"

namespace fairsl {

std::string Predicate::sort_of(int position) const {
  if (!sorts.empty()) return sorts.at(static_cast<std::size_t>(position));
  return name + "#" + std::to_string(position);
}

void validate_schema(const Schema& schema) {
  std::set<std::string> seen;
  for (const auto& p : schema) {
    if (p.name.empty()) throw Error("predicate with empty name");
    if (p.arity < 1) throw Error("predicate " + p.name + " has arity < 1");
    if (!p.sorts.empty() && static_cast<int>(p.sorts.size()) != p.arity)
      throw Error("predicate " + p.name + " declares " + std::to_string(p.sorts.size()) +
                  " sorts for arity " + std::to_string(p.arity));
    if (!seen.insert(p.name).second) throw Error("duplicate predicate " + p.name);
  }
}

const Predicate* find_predicate(const Schema& schema, std::string_view name) {
  for (const auto& p : schema)
    if (p.name == name) return &p;
  return nullptr;
}

int predicate_index(const Schema& schema, std::string_view name) {
  for (std::size_t i = 0; i < schema.size(); ++i)
    if (schema[i].name == name) return static_cast<int>(i);
  return -1;
}

namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Recursive-descent parser over a single line. Columns are 1-based.
class LineParser {
 public:
  LineParser(std::string_view line, std::size_t line_no) : s_(line), line_(line_no) {}

  Literal parse_single_literal() {
    Literal lit = parse_literal();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return lit;
  }

  Clause parse(const Schema& schema) {
    Clause clause;
    skip_ws();
    clause.weight = parse_weight();
    skip_ws();
    expect(':');

    std::vector<std::size_t> columns;
    columns.push_back(col_after_ws());
    clause.body.push_back(parse_literal());
    while (true) {
      skip_ws();
      if (peek() == '&') {
        ++pos_;
        columns.push_back(col_after_ws());
        clause.body.push_back(parse_literal());
      } else if (s_.substr(pos_, 2) == "->") {
        pos_ += 2;
        break;
      } else {
        fail("expected '&' or '->'");
      }
    }
    std::size_t head_col = col_after_ws();
    clause.head = parse_literal();
    skip_ws();
    if (peek() == '^') {
      ++pos_;
      if (peek() != '2') fail("only exponent ^2 is supported");
      ++pos_;
      clause.exponent = 2;
      skip_ws();
    }
    if (pos_ != s_.size()) fail("unexpected trailing input");

    for (std::size_t i = 0; i < clause.body.size(); ++i) check_literal(clause.body[i], schema, columns[i]);
    check_literal(clause.head, schema, head_col);
    if (!find_predicate(schema, clause.head.predicate)->is_target())
      throw ParseError("head predicate " + clause.head.predicate + " is not a target predicate", line_,
                       head_col);
    std::set<Literal> distinct;
    for (const auto& l : clause.body)
      if (!distinct.insert(l).second)
        throw ParseError("literal " + format_literal(l) + " repeated", line_, columns.front());
    if (distinct.count(clause.head))
      throw ParseError("head literal repeated in body", line_, head_col);
    return clause;
  }

 private:
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  std::size_t col() const { return pos_ + 1; }
  std::size_t col_after_ws() {
    skip_ws();
    return col();
  }
  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\r')) ++pos_;
  }
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_, col()); }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  double parse_weight() {
    std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.' ||
                                s_[pos_] == 'e' || s_[pos_] == 'E' || s_[pos_] == '-' || s_[pos_] == '+'))
      ++pos_;
    double w = 0.0;
    auto [ptr, ec] = std::from_chars(s_.data() + start, s_.data() + pos_, w);
    if (ec != std::errc() || ptr != s_.data() + pos_ || start == pos_) {
      pos_ = start;
      fail("expected rule weight");
    }
    if (!std::isfinite(w)) {
      pos_ = start;
      fail("rule weight is not finite");
    }
    if (w < 0.0) {
      pos_ = start;
      fail("negative rule weight");
    }
    return w;
  }

  Literal parse_literal() {
    skip_ws();
    Literal lit;
    if (peek() == '!') {
      lit.negated = true;
      ++pos_;
      skip_ws();
    }
    if (!is_ident_start(peek())) fail("expected predicate name");
    std::size_t start = pos_;
    while (is_ident_char(peek())) ++pos_;
    lit.predicate = std::string(s_.substr(start, pos_ - start));
    skip_ws();
    expect('(');
    while (true) {
      skip_ws();
      lit.args.push_back(parse_term());
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      if (peek() == ')') {
        ++pos_;
        break;
      }
      fail("expected ',' or ')'");
    }
    return lit;
  }

  Term parse_term() {
    if (peek() == '"') {
      ++pos_;
      std::string value;
      while (true) {
        if (pos_ >= s_.size()) fail("unterminated string constant");
        char c = s_[pos_++];
        if (c == '"') break;
        if (c == '\\') {
          if (pos_ >= s_.size()) fail("unterminated string constant");
          c = s_[pos_++];
        }
        value.push_back(c);
      }
      return Term::constant(std::move(value));
    }
    if (!is_ident_char(peek())) fail("expected variable or constant");
    std::size_t start = pos_;
    while (is_ident_char(peek())) ++pos_;
    std::string name(s_.substr(start, pos_ - start));
    if (std::isupper(static_cast<unsigned char>(name.front()))) return Term::variable(std::move(name));
    return Term::constant(std::move(name));
  }

  void check_literal(const Literal& lit, const Schema& schema, std::size_t column) const {
    const Predicate* p = find_predicate(schema, lit.predicate);
    if (!p) throw ParseError("unknown predicate " + lit.predicate, line_, column);
    if (static_cast<int>(lit.args.size()) != p->arity)
      throw ParseError("predicate " + lit.predicate + " expects " + std::to_string(p->arity) +
                           " arguments, got " + std::to_string(lit.args.size()),
                       line_, column);
  }

  std::string_view s_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

// Removes a trailing `#` comment, ignoring `#` inside quoted constants.
std::string_view strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted && c == '\\') {
      ++i;
      continue;
    }
    if (c == '"') quoted = !quoted;
    if (c == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

std::string format_weight(double w) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), w);
  std::string out(buf, ptr);
  if (out.find_first_of(".eE") == std::string::npos) out += ".0";
  return out;
}

}  // namespace

RuleSet parse_ruleset(std::string_view text, const Schema& schema, std::size_t max_clauses) {
  RuleSet rules;
  rules.schema = schema;
  std::size_t line_no = 0;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    std::size_t end = text.find('\n', begin);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = strip_comment(text.substr(begin, end - begin));
    if (!is_blank(line)) {
      if (rules.clauses.size() >= max_clauses)
        throw ParseError("more than " + std::to_string(max_clauses) + " clauses", line_no, 1);
      rules.clauses.push_back(LineParser(line, line_no).parse(schema));
    }
    if (end == text.size()) break;
    begin = end + 1;
  }
  return rules;
}

Literal parse_literal(std::string_view text) { return LineParser(text, 1).parse_single_literal(); }

void validate_clause(const Clause& clause, const Schema& schema) {
  if (!(clause.weight >= 0.0) || !std::isfinite(clause.weight)) throw Error("clause weight must be >= 0");
  if (clause.exponent != 1 && clause.exponent != 2) throw Error("clause exponent must be 1 or 2");
  if (clause.body.empty()) throw Error("clause body is empty");
  auto check = [&](const Literal& l) {
    const Predicate* p = find_predicate(schema, l.predicate);
    if (!p) throw Error("unknown predicate " + l.predicate);
    if (static_cast<int>(l.args.size()) != p->arity) throw Error("arity mismatch for " + l.predicate);
  };
  for (const auto& l : clause.body) check(l);
  check(clause.head);
  if (!find_predicate(schema, clause.head.predicate)->is_target())
    throw Error("head predicate " + clause.head.predicate + " is not a target predicate");
  std::set<Literal> distinct(clause.body.begin(), clause.body.end());
  if (distinct.size() != clause.body.size() || distinct.count(clause.head))
    throw Error("literal repeated in clause " + format_clause(clause));
}

int clause_length(const Clause& clause) { return static_cast<int>(clause.body.size()) + 1; }

std::string format_term(const Term& term) {
  if (term.is_variable) return term.name;
  bool plain = !term.name.empty() && !std::isupper(static_cast<unsigned char>(term.name.front())) &&
               std::all_of(term.name.begin(), term.name.end(), is_ident_char);
  if (plain) return term.name;
  std::string out = "\"";
  for (char c : term.name) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_literal(const Literal& literal) {
  std::string out = literal.negated ? "!" : "";
  out += literal.predicate + "(";
  for (std::size_t i = 0; i < literal.args.size(); ++i) {
    if (i) out += ",";
    out += format_term(literal.args[i]);
  }
  return out + ")";
}

std::string format_clause(const Clause& clause) {
  std::string out = format_weight(clause.weight) + " : ";
  for (std::size_t i = 0; i < clause.body.size(); ++i) {
    if (i) out += " & ";
    out += format_literal(clause.body[i]);
  }
  out += " -> " + format_literal(clause.head);
  if (clause.exponent == 2) out += " ^2";
  return out;
}

std::string format_ruleset(const RuleSet& rules) {
  std::string out;
  for (const auto& c : rules.clauses) out += format_clause(c) + "\n";
  return out;
}

std::string structure_key(const Clause& clause) {
  std::vector<std::string> body;
  for (const auto& l : clause.body) body.push_back(format_literal(l));
  std::sort(body.begin(), body.end());
  std::string out;
  for (const auto& b : body) out += b + "&";
  out += "->" + format_literal(clause.head);
  if (clause.exponent == 2) out += "^2";
  return out;
}

}  // namespace fairsl
