#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fairsl/relational.hpp"

namespace fairsl {

/// Values of the target atoms, indexed by target index.
using Assignment = Eigen::VectorXd;

enum class GroupLabel { none, protected_group, unprotected_group };

struct GroundAtom {
  int predicate = -1;
  std::vector<int> args;

  friend auto operator<=>(const GroundAtom&, const GroundAtom&) = default;
};

/// Relational data. Observed atoms carry fixed truth values in [0,1] and are
/// closed-world (unlisted atoms are 0); target atoms are the free variables of
/// MAP inference and are numbered 0..num_targets()-1 in insertion order.
class Database {
 public:
  struct Entry {
    std::vector<int> args;
    double value = 0.0;  // observed value; unused for targets
    int target = -1;     // target index, or -1 when observed
  };

  explicit Database(Schema schema);

  const Schema& schema() const { return schema_; }

  int intern(std::string_view constant);
  std::optional<int> find_constant(std::string_view constant) const;
  const std::string& constant_name(int id) const { return constants_.at(static_cast<std::size_t>(id)); }
  std::size_t num_constants() const { return constants_.size(); }

  void set_observed(std::string_view predicate, const std::vector<std::string>& args, double value);
  void set_observed(int predicate, std::vector<int> args, double value);
  /// Returns the target index (existing index if already declared).
  int add_target(std::string_view predicate, const std::vector<std::string>& args);
  int add_target(int predicate, std::vector<int> args);

  /// Entry for the ground atom, or nullptr when the atom is absent (value 0).
  const Entry* find(int predicate, std::span<const int> args) const;
  /// All stored atoms of a predicate.
  const std::vector<Entry>& entries(int predicate) const { return tables_.at(static_cast<std::size_t>(predicate)).rows; }
  /// Indices into entries(predicate) whose argument `position` equals `constant`.
  const std::vector<int>& entries_with(int predicate, int position, int constant) const;
  /// Constants ever seen at an argument position.
  const std::set<int>& position_constants(int predicate, int position) const;

  std::size_t num_targets() const { return targets_.size(); }
  const GroundAtom& target_atom(int index) const { return targets_.at(static_cast<std::size_t>(index)); }
  std::optional<int> target_index(const GroundAtom& atom) const;

  std::string atom_to_string(const GroundAtom& atom) const;
  /// Parses `pred(c1,c2)`; throws Error on malformed text or unknown names.
  GroundAtom parse_atom(std::string_view text) const;

  void set_group(std::string_view entity, GroupLabel label);
  GroupLabel group_of(int constant) const;
  const std::map<int, GroupLabel>& groups() const { return groups_; }

 private:
  struct ArgsLess {
    using is_transparent = void;
    template <typename A, typename B>
    bool operator()(const A& a, const B& b) const {
      return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
    }
  };
  struct Table {
    std::vector<Entry> rows;
    std::map<std::vector<int>, int, ArgsLess> lookup;
    std::vector<std::unordered_map<int, std::vector<int>>> by_position;
    std::vector<std::set<int>> constants;
  };

  int insert(int predicate, std::vector<int> args);
  int checked_predicate(std::string_view name) const;

  Schema schema_;
  std::vector<Table> tables_;
  std::vector<std::string> constants_;
  std::unordered_map<std::string, int> constant_ids_;
  std::vector<GroundAtom> targets_;
  std::map<int, GroupLabel> groups_;
};

/// A database together with the ground-truth values of its targets (NaN where
/// unknown) and the predicate whose atoms are the audited decisions.
struct Dataset {
  Database db;
  Assignment truth;
  std::string fair_target;
};

/// Loads a data directory: `schema.tsv`, one `<predicate>.tsv` per predicate,
/// optional `groups.tsv`, `truth.tsv` and `manifest.txt`.
Dataset load_dataset(const std::filesystem::path& dir);
/// Writes a data directory readable by load_dataset. Output is deterministic.
void write_dataset(const Dataset& data, const std::filesystem::path& dir,
                   const std::vector<std::pair<std::string, std::string>>& manifest = {});

Schema read_schema_file(const std::filesystem::path& file);

/// Reads `atom<TAB>value` lines into a map keyed by atom text.
std::map<std::string, double> read_atom_values(const std::filesystem::path& file);
void write_atom_values(const std::filesystem::path& file, const Database& db, const Assignment& values);

/// Reads `entity<TAB>protected|unprotected` lines.
std::map<std::string, GroupLabel> read_group_file(const std::filesystem::path& file);

/// Sub-database keeping only atoms that mention none of `excluded` constants.
/// `index_map[new_target] = old_target`.
struct Restriction {
  Database db;
  std::vector<int> index_map;
};
Restriction restrict_database(const Database& db, const std::set<int>& excluded);

}  // namespace fairsl
