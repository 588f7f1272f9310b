#pragma once

// Typed STRIPS subset of PDDL 2.1: parsing, printing, grounding and state
// progression. Negative preconditions are supported; durative actions,
// numeric fluents, quantifiers and conditional effects are not.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "planinfer/errors.hpp"

namespace planinfer::pddl {

class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& message);

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class UnsupportedFeature : public Error {
 public:
  explicit UnsupportedFeature(std::string construct);

  const std::string& construct() const noexcept { return construct_; }

 private:
  std::string construct_;
};

class TypeMismatch : public Error {
 public:
  using Error::Error;
};

class UnknownPredicate : public Error {
 public:
  using Error::Error;
};

std::string to_lower(std::string_view text);

// Letters, digits, '-' and '_', starting with a letter.
bool is_identifier(std::string_view text);

inline constexpr std::string_view kRootType = "object";

struct TypedName {
  std::string name;
  std::string type{kRootType};

  bool operator==(const TypedName&) const = default;
};

struct TypeDecl {
  std::string name;
  std::optional<std::string> parent;

  bool operator==(const TypeDecl&) const = default;
};

struct PredicateSchema {
  std::string name;
  std::vector<TypedName> params;

  bool operator==(const PredicateSchema&) const = default;
};

// Arguments are either variables ("?x") or object/constant names.
struct Atom {
  std::string predicate;
  std::vector<std::string> args;

  bool operator==(const Atom&) const = default;
  auto operator<=>(const Atom&) const = default;
};

struct Literal {
  Atom atom;
  bool negated = false;

  bool operator==(const Literal&) const = default;
};

struct ActionSchema {
  std::string name;
  std::vector<TypedName> params;
  std::vector<Literal> precondition;
  std::vector<Atom> add_effects;
  std::vector<Atom> delete_effects;

  bool operator==(const ActionSchema&) const = default;
};

struct Domain {
  std::string name;
  std::vector<std::string> requirements;
  std::vector<TypeDecl> types;
  std::vector<TypedName> constants;
  std::vector<PredicateSchema> predicates;
  std::vector<ActionSchema> actions;

  const ActionSchema* find_action(std::string_view name) const;
  const PredicateSchema* find_predicate(std::string_view name) const;
  bool has_type(std::string_view type) const;
  // Reflexive; every type descends from `object`.
  bool is_subtype(std::string_view type, std::string_view ancestor) const;

  bool operator==(const Domain&) const = default;
};

struct Problem {
  std::string name;
  std::string domain_name;
  std::vector<TypedName> objects;
  std::vector<Atom> init;
  std::vector<Literal> goal;

  bool operator==(const Problem&) const = default;
};

// A named action instance, e.g. inspect(rr, a). Canonical form is lowercase.
struct GroundedPredicate {
  std::string name;
  std::vector<std::string> args;

  static GroundedPredicate make(std::string_view name, std::vector<std::string> args);

  std::string to_string() const;

  bool operator==(const GroundedPredicate&) const = default;
  auto operator<=>(const GroundedPredicate&) const = default;
};

Domain parse_domain(std::string_view text);
Problem parse_problem(std::string_view text, const Domain& domain);

std::string print_domain(const Domain& domain);
std::string print_problem(const Problem& problem);

using AtomId = std::uint32_t;

// Closed-world state over the finite atom space of one World.
class State {
 public:
  State() = default;
  explicit State(std::size_t atom_count) : bits_(atom_count, false) {}

  bool contains(AtomId id) const { return id < bits_.size() && bits_[id]; }
  void insert(AtomId id) { bits_.at(id) = true; }
  void erase(AtomId id) { bits_.at(id) = false; }
  std::size_t capacity() const { return bits_.size(); }
  std::vector<AtomId> atoms() const;

  bool operator==(const State&) const = default;

 private:
  std::vector<bool> bits_;
};

// Atom id lists are sorted and duplicate-free.
struct GroundedAction {
  GroundedPredicate predicate;
  std::vector<AtomId> pre_positive;
  std::vector<AtomId> pre_negative;
  std::vector<AtomId> adds;
  std::vector<AtomId> deletes;

  bool operator==(const GroundedAction&) const = default;
};

struct UnknownAction {
  GroundedPredicate predicate;
  std::string reason;
};

using Grounding = std::variant<GroundedAction, UnknownAction>;

// Grounded view of a (domain, problem) pair. Every atom the domain can mention
// over the problem's objects gets a dense id, so states are plain bitsets.
class World {
 public:
  World(Domain domain, Problem problem);

  const Domain& domain() const { return domain_; }
  const Problem& problem() const { return problem_; }

  std::size_t atom_count() const { return atom_count_; }
  std::optional<AtomId> find_atom(const Atom& ground_atom) const;
  Atom atom(AtomId id) const;
  std::string atom_string(AtomId id) const;

  const State& initial_state() const { return initial_; }

  Grounding ground(const GroundedPredicate& predicate) const;

  bool goal_holds(const State& state) const;
  // First goal literal violated in `state`, rendered as text.
  std::optional<std::string> unsatisfied_goal(const State& state) const;

  std::optional<std::string> object_type(std::string_view object) const;

 private:
  struct PredicateTable {
    std::string name;
    AtomId offset = 0;
    std::vector<std::vector<std::string>> objects;  // compatible objects per parameter
    std::vector<std::unordered_map<std::string, std::size_t>> index;
    std::vector<std::size_t> strides;
    std::size_t size = 0;
  };

  Domain domain_;
  Problem problem_;
  std::unordered_map<std::string, std::string> object_types_;
  std::vector<PredicateTable> tables_;
  std::unordered_map<std::string, std::size_t> table_index_;
  std::size_t atom_count_ = 0;
  State initial_;
  std::vector<AtomId> goal_positive_;
  std::vector<AtomId> goal_negative_;
};

// Builds a World per call; prefer World::ground in loops.
Grounding ground_action(const Domain& domain, const GroundedPredicate& predicate,
                        const Problem& problem);

bool applicable(const State& state, const GroundedAction& action);

// Deletes are applied before adds.
State apply(const State& state, std::span<const GroundedAction> actions);
State apply(const State& state, std::span<const GroundedAction* const> actions);

}  // namespace planinfer::pddl

template <>
struct std::hash<planinfer::pddl::GroundedPredicate> {
  std::size_t operator()(const planinfer::pddl::GroundedPredicate& p) const noexcept;
};
