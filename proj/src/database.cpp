#include "fairsl/database.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <cstdio>

#include "fairsl/error.hpp"

namespace fairsl {

Database::Database(Schema schema) : schema_(std::move(schema)) {
  validate_schema(schema_);
  tables_.resize(schema_.size());
  for (std::size_t p = 0; p < schema_.size(); ++p) {
    tables_[p].by_position.resize(static_cast<std::size_t>(schema_[p].arity));
    tables_[p].constants.resize(static_cast<std::size_t>(schema_[p].arity));
  }
}

int Database::intern(std::string_view constant) {
  auto it = constant_ids_.find(std::string(constant));
  if (it != constant_ids_.end()) return it->second;
  int id = static_cast<int>(constants_.size());
  constants_.emplace_back(constant);
  constant_ids_.emplace(constants_.back(), id);
  return id;
}

std::optional<int> Database::find_constant(std::string_view constant) const {
  auto it = constant_ids_.find(std::string(constant));
  if (it == constant_ids_.end()) return std::nullopt;
  return it->second;
}

int Database::checked_predicate(std::string_view name) const {
  int p = predicate_index(schema_, name);
  if (p < 0) throw Error("unknown predicate " + std::string(name));
  return p;
}

int Database::insert(int predicate, std::vector<int> args) {
  const auto& pred = schema_.at(static_cast<std::size_t>(predicate));
  if (static_cast<int>(args.size()) != pred.arity)
    throw Error("predicate " + pred.name + " expects " + std::to_string(pred.arity) + " arguments");
  auto& table = tables_[static_cast<std::size_t>(predicate)];
  auto it = table.lookup.find(args);
  if (it != table.lookup.end()) return it->second;
  int row = static_cast<int>(table.rows.size());
  for (std::size_t k = 0; k < args.size(); ++k) {
    table.by_position[k][args[k]].push_back(row);
    table.constants[k].insert(args[k]);
  }
  table.lookup.emplace(args, row);
  table.rows.push_back(Entry{std::move(args), 0.0, -1});
  return row;
}

void Database::set_observed(std::string_view predicate, const std::vector<std::string>& args, double value) {
  std::vector<int> ids;
  for (const auto& a : args) ids.push_back(intern(a));
  set_observed(checked_predicate(predicate), std::move(ids), value);
}

void Database::set_observed(int predicate, std::vector<int> args, double value) {
  if (!(value >= 0.0 && value <= 1.0))
    throw Error("truth value outside [0,1] for " + schema_.at(static_cast<std::size_t>(predicate)).name);
  int row = insert(predicate, std::move(args));
  auto& entry = tables_[static_cast<std::size_t>(predicate)].rows[static_cast<std::size_t>(row)];
  if (entry.target >= 0) throw Error("atom " + atom_to_string({predicate, entry.args}) + " is already a target");
  entry.value = value;
}

int Database::add_target(std::string_view predicate, const std::vector<std::string>& args) {
  std::vector<int> ids;
  for (const auto& a : args) ids.push_back(intern(a));
  return add_target(checked_predicate(predicate), std::move(ids));
}

int Database::add_target(int predicate, std::vector<int> args) {
  const auto& pred = schema_.at(static_cast<std::size_t>(predicate));
  if (!pred.is_target()) throw Error("predicate " + pred.name + " is not a target predicate");
  auto& table = tables_[static_cast<std::size_t>(predicate)];
  bool existed = table.lookup.count(args) > 0;
  int row = insert(predicate, std::move(args));
  auto& entry = table.rows[static_cast<std::size_t>(row)];
  if (entry.target >= 0) return entry.target;
  if (existed) throw Error("atom " + atom_to_string({predicate, entry.args}) + " is already observed");
  entry.target = static_cast<int>(targets_.size());
  targets_.push_back(GroundAtom{predicate, entry.args});
  return entry.target;
}

const Database::Entry* Database::find(int predicate, std::span<const int> args) const {
  const auto& table = tables_[static_cast<std::size_t>(predicate)];
  auto it = table.lookup.find(args);
  if (it == table.lookup.end()) return nullptr;
  return &table.rows[static_cast<std::size_t>(it->second)];
}

const std::vector<int>& Database::entries_with(int predicate, int position, int constant) const {
  static const std::vector<int> kEmpty;
  const auto& index = tables_[static_cast<std::size_t>(predicate)].by_position[static_cast<std::size_t>(position)];
  auto it = index.find(constant);
  return it == index.end() ? kEmpty : it->second;
}

const std::set<int>& Database::position_constants(int predicate, int position) const {
  return tables_[static_cast<std::size_t>(predicate)].constants[static_cast<std::size_t>(position)];
}

std::optional<int> Database::target_index(const GroundAtom& atom) const {
  const Entry* e = find(atom.predicate, atom.args);
  if (!e || e->target < 0) return std::nullopt;
  return e->target;
}

std::string Database::atom_to_string(const GroundAtom& atom) const {
  Literal lit;
  lit.predicate = schema_.at(static_cast<std::size_t>(atom.predicate)).name;
  for (int c : atom.args) lit.args.push_back(Term::constant(constant_name(c)));
  return format_literal(lit);
}

GroundAtom Database::parse_atom(std::string_view text) const {
  Literal lit;
  try {
    lit = parse_literal(text);
  } catch (const ParseError& e) {
    throw Error("malformed atom '" + std::string(text) + "': " + e.what());
  }
  if (lit.negated) throw Error("negated atom '" + std::string(text) + "'");
  GroundAtom atom;
  atom.predicate = checked_predicate(lit.predicate);
  if (static_cast<int>(lit.args.size()) != schema_[static_cast<std::size_t>(atom.predicate)].arity)
    throw Error("arity mismatch in atom '" + std::string(text) + "'");
  for (const auto& t : lit.args) {
    auto id = find_constant(t.name);
    if (!id) throw Error("unknown constant '" + t.name + "' in atom '" + std::string(text) + "'");
    atom.args.push_back(*id);
  }
  return atom;
}

void Database::set_group(std::string_view entity, GroupLabel label) { groups_[intern(entity)] = label; }

GroupLabel Database::group_of(int constant) const {
  auto it = groups_.find(constant);
  return it == groups_.end() ? GroupLabel::none : it->second;
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t begin = 0;
  while (true) {
    auto end = line.find('\t', begin);
    out.push_back(line.substr(begin, end == std::string::npos ? std::string::npos : end - begin));
    if (end == std::string::npos) break;
    begin = end + 1;
  }
  return out;
}

double parse_value(const std::string& s, const std::filesystem::path& file, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError("bad number '" + s + "' in " + file.string(), line, 1);
  return v;
}

// Yields non-empty, non-comment lines with their 1-based numbers.
template <typename F>
void for_each_line(const std::filesystem::path& file, F&& f) {
  std::ifstream in(file);
  if (!in) throw Error("cannot open " + file.string());
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    f(line, no);
  }
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

Schema read_schema_file(const std::filesystem::path& file) {
  Schema schema;
  for_each_line(file, [&](const std::string& line, std::size_t no) {
    auto cols = split_tabs(line);
    if (cols.size() != 3) throw ParseError("expected name<TAB>kind<TAB>sorts", no, 1);
    Predicate p;
    p.name = cols[0];
    if (cols[1] == "observed")
      p.kind = PredicateKind::observed;
    else if (cols[1] == "target")
      p.kind = PredicateKind::target;
    else
      throw ParseError("unknown predicate kind '" + cols[1] + "'", no, cols[0].size() + 2);
    std::stringstream ss(cols[2]);
    std::string sort;
    while (std::getline(ss, sort, ',')) p.sorts.push_back(sort);
    p.arity = static_cast<int>(p.sorts.size());
    schema.push_back(std::move(p));
  });
  validate_schema(schema);
  return schema;
}

std::map<std::string, double> read_atom_values(const std::filesystem::path& file) {
  std::map<std::string, double> out;
  for_each_line(file, [&](const std::string& line, std::size_t no) {
    auto cols = split_tabs(line);
    if (cols.size() != 2) throw ParseError("expected atom<TAB>value", no, 1);
    out[cols[0]] = parse_value(cols[1], file, no);
  });
  return out;
}

void write_atom_values(const std::filesystem::path& file, const Database& db, const Assignment& values) {
  std::ofstream out(file);
  if (!out) throw Error("cannot write " + file.string());
  for (int i = 0; i < static_cast<int>(db.num_targets()); ++i)
    out << db.atom_to_string(db.target_atom(i)) << '\t' << format_value(values[i]) << '\n';
}

std::map<std::string, GroupLabel> read_group_file(const std::filesystem::path& file) {
  std::map<std::string, GroupLabel> out;
  for_each_line(file, [&](const std::string& line, std::size_t no) {
    auto cols = split_tabs(line);
    if (cols.size() != 2) throw ParseError("expected entity<TAB>protected|unprotected", no, 1);
    if (cols[1] == "protected")
      out[cols[0]] = GroupLabel::protected_group;
    else if (cols[1] == "unprotected")
      out[cols[0]] = GroupLabel::unprotected_group;
    else
      throw ParseError("unknown group '" + cols[1] + "'", no, cols[0].size() + 2);
  });
  return out;
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset data{Database(read_schema_file(dir / "schema.tsv")), Assignment(), ""};
  auto& db = data.db;
  for (const auto& pred : db.schema()) {
    auto file = dir / (pred.name + ".tsv");
    if (!std::filesystem::exists(file)) continue;
    for_each_line(file, [&](const std::string& line, std::size_t no) {
      auto cols = split_tabs(line);
      auto arity = static_cast<std::size_t>(pred.arity);
      if (cols.size() != arity && cols.size() != arity + 1)
        throw ParseError(file.filename().string() + ": expected " + std::to_string(pred.arity) +
                             " constants and an optional value",
                         no, 1);
      std::vector<std::string> args(cols.begin(), cols.begin() + static_cast<long>(arity));
      if (pred.is_target()) {
        db.add_target(pred.name, args);
      } else {
        double value = cols.size() > arity ? parse_value(cols.back(), file, no) : 1.0;
        db.set_observed(pred.name, args, value);
      }
    });
  }
  data.truth = Assignment::Constant(static_cast<Eigen::Index>(db.num_targets()), std::nan(""));
  if (std::filesystem::exists(dir / "truth.tsv")) {
    for (const auto& [atom_text, value] : read_atom_values(dir / "truth.tsv")) {
      auto idx = db.target_index(db.parse_atom(atom_text));
      if (!idx) throw Error("truth.tsv: " + atom_text + " is not a target atom");
      if (!(value >= 0.0 && value <= 1.0)) throw Error("truth.tsv: value outside [0,1] for " + atom_text);
      data.truth[*idx] = value;
    }
  }
  if (std::filesystem::exists(dir / "groups.tsv"))
    for (const auto& [entity, label] : read_group_file(dir / "groups.tsv")) db.set_group(entity, label);
  if (std::filesystem::exists(dir / "manifest.txt")) {
    for_each_line(dir / "manifest.txt", [&](const std::string& line, std::size_t) {
      auto eq = line.find('=');
      if (eq != std::string::npos && line.substr(0, eq) == "fair_target") data.fair_target = line.substr(eq + 1);
    });
  }
  return data;
}

void write_dataset(const Dataset& data, const std::filesystem::path& dir,
                   const std::vector<std::pair<std::string, std::string>>& manifest) {
  const auto& db = data.db;
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "schema.tsv");
    for (const auto& p : db.schema()) {
      out << p.name << '\t' << (p.is_target() ? "target" : "observed") << '\t';
      for (int k = 0; k < p.arity; ++k) out << (k ? "," : "") << p.sort_of(k);
      out << '\n';
    }
  }
  for (std::size_t p = 0; p < db.schema().size(); ++p) {
    std::ofstream out(dir / (db.schema()[p].name + ".tsv"));
    for (const auto& e : db.entries(static_cast<int>(p))) {
      for (std::size_t k = 0; k < e.args.size(); ++k) out << (k ? "\t" : "") << db.constant_name(e.args[k]);
      if (e.target < 0) out << '\t' << format_value(e.value);
      out << '\n';
    }
  }
  if (data.truth.size() == static_cast<Eigen::Index>(db.num_targets())) {
    std::ofstream out(dir / "truth.tsv");
    for (int i = 0; i < static_cast<int>(db.num_targets()); ++i)
      if (!std::isnan(data.truth[i]))
        out << db.atom_to_string(db.target_atom(i)) << '\t' << format_value(data.truth[i]) << '\n';
  }
  if (!db.groups().empty()) {
    std::ofstream out(dir / "groups.tsv");
    for (const auto& [entity, label] : db.groups()) {
      if (label == GroupLabel::none) continue;
      out << db.constant_name(entity) << '\t'
          << (label == GroupLabel::protected_group ? "protected" : "unprotected") << '\n';
    }
  }
  std::ofstream out(dir / "manifest.txt");
  if (!data.fair_target.empty()) out << "fair_target=" << data.fair_target << '\n';
  for (const auto& [k, v] : manifest) out << k << '=' << v << '\n';
}

Restriction restrict_database(const Database& db, const std::set<int>& excluded) {
  Restriction r{Database(db.schema()), {}};
  for (std::size_t c = 0; c < db.num_constants(); ++c) r.db.intern(db.constant_name(static_cast<int>(c)));
  auto mentions_excluded = [&](const std::vector<int>& args) {
    return std::any_of(args.begin(), args.end(), [&](int c) { return excluded.count(c) > 0; });
  };
  for (std::size_t p = 0; p < db.schema().size(); ++p)
    for (const auto& e : db.entries(static_cast<int>(p))) {
      if (e.target >= 0 || mentions_excluded(e.args)) continue;
      r.db.set_observed(static_cast<int>(p), e.args, e.value);
    }
  for (int i = 0; i < static_cast<int>(db.num_targets()); ++i) {
    const auto& atom = db.target_atom(i);
    if (mentions_excluded(atom.args)) continue;
    r.db.add_target(atom.predicate, atom.args);
    r.index_map.push_back(i);
  }
  for (const auto& [entity, label] : db.groups())
    if (!excluded.count(entity)) r.db.set_group(db.constant_name(entity), label);
  return r;
}

}  // namespace fairsl
