#include "planinfer/pddl.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>
#include <unordered_set>

namespace planinfer::pddl {

ParseError::ParseError(std::size_t line, std::size_t column, const std::string& message)
    : Error("PDDL parse error at " + std::to_string(line) + ":" + std::to_string(column) +
            ": " + message),
      line_(line),
      column_(column) {}

UnsupportedFeature::UnsupportedFeature(std::string construct)
    : Error("unsupported PDDL feature: " + construct), construct_(std::move(construct)) {}

std::string to_lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_identifier(std::string_view text) {
  if (text.empty() || !std::isalpha(static_cast<unsigned char>(text.front()))) return false;
  return std::all_of(text.begin(), text.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '-' || c == '_';
  });
}

namespace {

bool is_variable(std::string_view text) {
  return text.size() > 1 && text.front() == '?' && is_identifier(text.substr(1));
}

// ---------------------------------------------------------------------------
// S-expressions
// ---------------------------------------------------------------------------

struct SExpr {
  bool is_list = false;
  std::string atom;
  std::vector<SExpr> items;
  std::size_t line = 1;
  std::size_t column = 1;

  bool is_atom(std::string_view text) const { return !is_list && atom == text; }
  bool head_is(std::string_view text) const {
    return is_list && !items.empty() && items.front().is_atom(text);
  }
};

struct Token {
  enum Kind { Open, Close, Symbol } kind;
  std::string text;
  std::size_t line;
  std::size_t column;
};

std::vector<Token> tokenize(std::string_view input) {
  std::vector<Token> tokens;
  std::size_t line = 1;
  std::size_t column = 1;
  std::size_t i = 0;
  auto advance = [&] {
    if (input[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
    ++i;
  };
  while (i < input.size()) {
    const char c = input[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance();
    } else if (c == ';') {
      while (i < input.size() && input[i] != '\n') advance();
    } else if (c == '(' || c == ')') {
      tokens.push_back({c == '(' ? Token::Open : Token::Close, std::string(1, c), line, column});
      advance();
    } else {
      const std::size_t start = i;
      const std::size_t start_line = line;
      const std::size_t start_column = column;
      while (i < input.size() && !std::isspace(static_cast<unsigned char>(input[i])) &&
             input[i] != '(' && input[i] != ')' && input[i] != ';') {
        advance();
      }
      tokens.push_back(
          {Token::Symbol, to_lower(input.substr(start, i - start)), start_line, start_column});
    }
  }
  return tokens;
}

SExpr read_expr(const std::vector<Token>& tokens, std::size_t& pos) {
  const Token& tok = tokens[pos];
  if (tok.kind == Token::Close) throw ParseError(tok.line, tok.column, "unexpected ')'");
  SExpr expr;
  expr.line = tok.line;
  expr.column = tok.column;
  ++pos;
  if (tok.kind == Token::Symbol) {
    expr.atom = tok.text;
    return expr;
  }
  expr.is_list = true;
  while (true) {
    if (pos >= tokens.size()) throw ParseError(tok.line, tok.column, "unmatched '('");
    if (tokens[pos].kind == Token::Close) {
      ++pos;
      return expr;
    }
    expr.items.push_back(read_expr(tokens, pos));
  }
}

SExpr read_document(std::string_view text) {
  const auto tokens = tokenize(text);
  if (tokens.empty()) throw ParseError(1, 1, "expected '(define', found end of input");
  std::size_t pos = 0;
  SExpr doc = read_expr(tokens, pos);
  if (pos != tokens.size()) {
    throw ParseError(tokens[pos].line, tokens[pos].column, "trailing input after definition");
  }
  return doc;
}

[[noreturn]] void fail(const SExpr& at, const std::string& message) {
  throw ParseError(at.line, at.column, message);
}

const SExpr& expect_list(const SExpr& e, std::string_view what) {
  if (!e.is_list) fail(e, "expected " + std::string(what) + ", found '" + e.atom + "'");
  return e;
}

std::string expect_name(const SExpr& e, std::string_view what) {
  if (e.is_list || !is_identifier(e.atom)) {
    fail(e, "expected " + std::string(what) + (e.is_list ? ", found '('" : ", found '" + e.atom + "'"));
  }
  return e.atom;
}

const std::set<std::string, std::less<>> kUnsupportedHeads = {
    "or",       "imply",    "forall",   "exists",    "when",       "=",      "<",
    ">",        "<=",       ">=",       "increase",  "decrease",   "assign", "scale-up",
    "scale-down", "at",     "over",     "either",    "preference", "at-most-once",
    "sometime", "always",   "within",   "hold-during", "hold-after"};

void reject_unsupported(const SExpr& e) {
  if (e.is_list && !e.items.empty() && !e.items.front().is_list &&
      kUnsupportedHeads.contains(e.items.front().atom)) {
    throw UnsupportedFeature(e.items.front().atom);
  }
}

// "a b - t c" -> {(a,t),(b,t),(c,object)}
std::vector<TypedName> parse_typed_list(const SExpr& list, std::size_t start, bool variables) {
  std::vector<TypedName> out;
  std::vector<std::string> pending;
  for (std::size_t i = start; i < list.items.size(); ++i) {
    const SExpr& item = list.items[i];
    if (item.is_list) {
      reject_unsupported(item);
      fail(item, "expected name in typed list, found '('");
    }
    if (item.atom == "-") {
      if (pending.empty()) fail(item, "type annotation '-' without preceding names");
      if (i + 1 >= list.items.size()) fail(item, "expected type name after '-'");
      const SExpr& type = list.items[++i];
      if (type.is_list) {
        reject_unsupported(type);
        fail(type, "expected type name, found '('");
      }
      const std::string type_name = expect_name(type, "type name");
      for (auto& name : pending) out.push_back({std::move(name), type_name});
      pending.clear();
      continue;
    }
    if (variables ? !is_variable(item.atom) : !is_identifier(item.atom)) {
      fail(item, std::string("expected ") + (variables ? "variable" : "name") + ", found '" +
                     item.atom + "'");
    }
    pending.push_back(item.atom);
  }
  for (auto& name : pending) out.push_back({std::move(name), std::string(kRootType)});
  return out;
}

Atom parse_atom(const SExpr& e, bool allow_variables) {
  expect_list(e, "atom");
  reject_unsupported(e);
  if (e.items.empty()) fail(e, "expected predicate name, found '()'");
  Atom atom;
  atom.predicate = expect_name(e.items.front(), "predicate name");
  for (std::size_t i = 1; i < e.items.size(); ++i) {
    const SExpr& arg = e.items[i];
    if (arg.is_list) fail(arg, "expected term, found '('");
    if (is_variable(arg.atom)) {
      if (!allow_variables) fail(arg, "variable '" + arg.atom + "' in ground atom");
    } else if (!is_identifier(arg.atom)) {
      fail(arg, "expected term, found '" + arg.atom + "'");
    }
    atom.args.push_back(arg.atom);
  }
  return atom;
}

Literal parse_literal(const SExpr& e, bool allow_variables) {
  expect_list(e, "literal");
  if (e.head_is("not")) {
    if (e.items.size() != 2) fail(e, "'not' takes exactly one atom");
    return {parse_atom(e.items[1], allow_variables), true};
  }
  return {parse_atom(e, allow_variables), false};
}

// Conjunction of literals: "()", a literal, or "(and ...)".
std::vector<Literal> parse_conjunction(const SExpr& e, bool allow_variables) {
  expect_list(e, "formula");
  reject_unsupported(e);
  if (e.items.empty()) return {};
  if (e.head_is("and")) {
    std::vector<Literal> out;
    for (std::size_t i = 1; i < e.items.size(); ++i) {
      const SExpr& part = e.items[i];
      expect_list(part, "literal");
      reject_unsupported(part);
      if (part.head_is("and")) {
        auto nested = parse_conjunction(part, allow_variables);
        out.insert(out.end(), nested.begin(), nested.end());
      } else {
        out.push_back(parse_literal(part, allow_variables));
      }
    }
    return out;
  }
  return {parse_literal(e, allow_variables)};
}

template <typename T>
void push_unique(std::vector<T>& v, T value) {
  if (std::find(v.begin(), v.end(), value) == v.end()) v.push_back(std::move(value));
}

// ---------------------------------------------------------------------------
// Domain semantics
// ---------------------------------------------------------------------------

void check_types(const Domain& d) {
  std::unordered_map<std::string, std::optional<std::string>> parent;
  for (const auto& t : d.types) {
    if (t.name == kRootType) throw TypeMismatch("type 'object' cannot be redeclared");
    if (parent.contains(t.name)) throw TypeMismatch("type '" + t.name + "' declared twice");
    parent[t.name] = t.parent;
  }
  for (const auto& t : d.types) {
    if (t.parent && *t.parent != kRootType && !parent.contains(*t.parent)) {
      throw TypeMismatch("type '" + t.name + "' has undeclared parent '" + *t.parent + "'");
    }
    std::unordered_set<std::string> seen{t.name};
    std::optional<std::string> cur = t.parent;
    while (cur && *cur != kRootType) {
      if (!seen.insert(*cur).second) throw TypeMismatch("cyclic type hierarchy at '" + t.name + "'");
      cur = parent.at(*cur);
    }
  }
}

void check_params(const Domain& d, const std::vector<TypedName>& params, const std::string& owner) {
  std::unordered_set<std::string> names;
  for (const auto& p : params) {
    if (!names.insert(p.name).second) {
      throw TypeMismatch("duplicate parameter '" + p.name + "' in '" + owner + "'");
    }
    if (!d.has_type(p.type)) {
      throw TypeMismatch("unknown type '" + p.type + "' for parameter '" + p.name + "' in '" +
                         owner + "'");
    }
  }
}

void check_schema_atom(const Domain& d, const Atom& atom, const ActionSchema& action) {
  const PredicateSchema* schema = d.find_predicate(atom.predicate);
  if (!schema) {
    throw UnknownPredicate("action '" + action.name + "' uses undeclared predicate '" +
                           atom.predicate + "'");
  }
  if (schema->params.size() != atom.args.size()) {
    throw TypeMismatch("action '" + action.name + "': predicate '" + atom.predicate +
                       "' expects " + std::to_string(schema->params.size()) + " arguments");
  }
  for (std::size_t i = 0; i < atom.args.size(); ++i) {
    const std::string& arg = atom.args[i];
    std::optional<std::string> type;
    if (arg.front() == '?') {
      auto it = std::find_if(action.params.begin(), action.params.end(),
                             [&](const TypedName& p) { return p.name == arg; });
      if (it == action.params.end()) {
        throw TypeMismatch("action '" + action.name + "': variable '" + arg +
                           "' is not a parameter");
      }
      type = it->type;
    } else {
      auto it = std::find_if(d.constants.begin(), d.constants.end(),
                             [&](const TypedName& c) { return c.name == arg; });
      if (it == d.constants.end()) {
        throw TypeMismatch("action '" + action.name + "': unknown constant '" + arg + "'");
      }
      type = it->type;
    }
    if (!d.is_subtype(*type, schema->params[i].type)) {
      throw TypeMismatch("action '" + action.name + "': argument '" + arg + "' of type '" +
                         *type + "' does not fit '" + schema->params[i].type + "' in '" +
                         atom.predicate + "'");
    }
  }
}

void check_domain(const Domain& d) {
  check_types(d);
  for (const auto& c : d.constants) {
    if (!d.has_type(c.type)) throw TypeMismatch("constant '" + c.name + "' has unknown type");
  }
  std::unordered_set<std::string> predicate_names;
  for (const auto& p : d.predicates) {
    if (!predicate_names.insert(p.name).second) {
      throw TypeMismatch("predicate '" + p.name + "' declared twice");
    }
    check_params(d, p.params, p.name);
  }
  std::unordered_set<std::string> action_names;
  for (const auto& a : d.actions) {
    if (!action_names.insert(a.name).second) {
      throw TypeMismatch("action '" + a.name + "' declared twice");
    }
    if (predicate_names.contains(a.name)) {
      throw TypeMismatch("'" + a.name + "' is both an action and a predicate");
    }
    check_params(d, a.params, a.name);
    for (const auto& lit : a.precondition) check_schema_atom(d, lit.atom, a);
    for (const auto& atom : a.add_effects) check_schema_atom(d, atom, a);
    for (const auto& atom : a.delete_effects) check_schema_atom(d, atom, a);
    // An atom both added and deleted is only accepted as a resource lock: it
    // must also be a positive precondition, so the action leaves it unchanged.
    for (const auto& atom : a.add_effects) {
      if (std::find(a.delete_effects.begin(), a.delete_effects.end(), atom) ==
          a.delete_effects.end()) {
        continue;
      }
      const bool locked = std::any_of(a.precondition.begin(), a.precondition.end(),
                                      [&](const Literal& l) { return !l.negated && l.atom == atom; });
      if (!locked) {
        throw TypeMismatch("action '" + a.name + "' both adds and deletes '" + atom.predicate +
                           "' without requiring it");
      }
    }
  }
}

ActionSchema parse_action(const SExpr& e) {
  if (e.items.size() < 2) fail(e, "expected action name");
  ActionSchema action;
  action.name = expect_name(e.items[1], "action name");
  for (std::size_t i = 2; i < e.items.size(); i += 2) {
    const SExpr& key = e.items[i];
    if (key.is_list) fail(key, "expected action keyword, found '('");
    if (i + 1 >= e.items.size()) fail(key, "missing value for '" + key.atom + "'");
    const SExpr& value = e.items[i + 1];
    if (key.atom == ":parameters") {
      expect_list(value, "parameter list");
      action.params = parse_typed_list(value, 0, true);
    } else if (key.atom == ":precondition") {
      action.precondition = parse_conjunction(value, true);
    } else if (key.atom == ":effect") {
      for (const auto& lit : parse_conjunction(value, true)) {
        if (lit.negated) {
          push_unique(action.delete_effects, lit.atom);
        } else {
          push_unique(action.add_effects, lit.atom);
        }
      }
    } else if (key.atom == ":duration") {
      throw UnsupportedFeature(":duration");
    } else {
      fail(key, "expected ':parameters', ':precondition' or ':effect', found '" + key.atom + "'");
    }
  }
  return action;
}

std::string join(const std::vector<std::string>& parts, const char* sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string print_atom(const Atom& a) {
  std::string out = "(" + a.predicate;
  for (const auto& arg : a.args) out += " " + arg;
  return out + ")";
}

std::string print_literal(const Literal& l) {
  return l.negated ? "(not " + print_atom(l.atom) + ")" : print_atom(l.atom);
}

std::string print_typed(const std::vector<TypedName>& names) {
  std::vector<std::string> parts;
  for (const auto& n : names) parts.push_back(n.name + " - " + n.type);
  return join(parts);
}

std::string print_conjunction(const std::vector<Literal>& lits) {
  std::string out = "(and";
  for (const auto& l : lits) out += " " + print_literal(l);
  return out + ")";
}

}  // namespace

// ---------------------------------------------------------------------------
// Domain
// ---------------------------------------------------------------------------

const ActionSchema* Domain::find_action(std::string_view n) const {
  auto it = std::find_if(actions.begin(), actions.end(), [&](const auto& a) { return a.name == n; });
  return it == actions.end() ? nullptr : &*it;
}

const PredicateSchema* Domain::find_predicate(std::string_view n) const {
  auto it = std::find_if(predicates.begin(), predicates.end(),
                         [&](const auto& p) { return p.name == n; });
  return it == predicates.end() ? nullptr : &*it;
}

bool Domain::has_type(std::string_view type) const {
  return type == kRootType ||
         std::any_of(types.begin(), types.end(), [&](const auto& t) { return t.name == type; });
}

bool Domain::is_subtype(std::string_view type, std::string_view ancestor) const {
  if (ancestor == kRootType) return has_type(type);
  std::optional<std::string> cur{std::string(type)};
  for (std::size_t guard = 0; cur && guard <= types.size() + 1; ++guard) {
    if (*cur == ancestor) return true;
    if (*cur == kRootType) return false;
    auto it = std::find_if(types.begin(), types.end(), [&](const auto& t) { return t.name == *cur; });
    if (it == types.end()) return false;
    cur = it->parent;
  }
  return false;
}

Domain parse_domain(std::string_view text) {
  const SExpr doc = read_document(text);
  expect_list(doc, "'(define'");
  if (doc.items.empty() || !doc.items[0].is_atom("define")) fail(doc, "expected 'define'");
  if (doc.items.size() < 2 || !doc.items[1].head_is("domain") || doc.items[1].items.size() != 2) {
    fail(doc.items.size() < 2 ? doc : doc.items[1], "expected '(domain <name>)'");
  }
  Domain d;
  d.name = expect_name(doc.items[1].items[1], "domain name");
  for (std::size_t i = 2; i < doc.items.size(); ++i) {
    const SExpr& section = expect_list(doc.items[i], "domain section");
    if (section.items.empty() || section.items[0].is_list) fail(section, "expected section keyword");
    const std::string& key = section.items[0].atom;
    if (key == ":requirements") {
      for (std::size_t j = 1; j < section.items.size(); ++j) {
        if (section.items[j].is_list) fail(section.items[j], "expected requirement flag");
        d.requirements.push_back(section.items[j].atom);
      }
    } else if (key == ":types") {
      for (auto& t : parse_typed_list(section, 1, false)) {
        if (t.name == kRootType) continue;
        d.types.push_back({t.name, t.type});
      }
    } else if (key == ":constants") {
      auto constants = parse_typed_list(section, 1, false);
      d.constants.insert(d.constants.end(), constants.begin(), constants.end());
    } else if (key == ":predicates") {
      for (std::size_t j = 1; j < section.items.size(); ++j) {
        const SExpr& p = expect_list(section.items[j], "predicate declaration");
        if (p.items.empty()) fail(p, "expected predicate name");
        d.predicates.push_back(
            {expect_name(p.items[0], "predicate name"), parse_typed_list(p, 1, true)});
      }
    } else if (key == ":action") {
      d.actions.push_back(parse_action(section));
    } else if (key == ":durative-action" || key == ":functions" || key == ":derived" ||
               key == ":constraints" || key == ":process" || key == ":event") {
      throw UnsupportedFeature(key);
    } else {
      fail(section.items[0], "unknown domain section '" + key + "'");
    }
  }
  check_domain(d);
  return d;
}

// ---------------------------------------------------------------------------
// Problem
// ---------------------------------------------------------------------------

namespace {

void check_ground_atom(const Domain& d, const std::unordered_map<std::string, std::string>& objects,
                       const Atom& atom, std::string_view where) {
  const PredicateSchema* schema = d.find_predicate(atom.predicate);
  if (!schema) {
    throw UnknownPredicate(std::string(where) + " uses undeclared predicate '" + atom.predicate + "'");
  }
  if (schema->params.size() != atom.args.size()) {
    throw TypeMismatch(std::string(where) + ": '" + print_atom(atom) + "' has arity " +
                       std::to_string(atom.args.size()) + ", expected " +
                       std::to_string(schema->params.size()));
  }
  for (std::size_t i = 0; i < atom.args.size(); ++i) {
    auto it = objects.find(atom.args[i]);
    if (it == objects.end()) {
      throw TypeMismatch(std::string(where) + ": unknown object '" + atom.args[i] + "'");
    }
    if (!d.is_subtype(it->second, schema->params[i].type)) {
      throw TypeMismatch(std::string(where) + ": object '" + atom.args[i] + "' of type '" +
                         it->second + "' does not fit '" + schema->params[i].type + "'");
    }
  }
}

std::unordered_map<std::string, std::string> object_table(const Domain& d, const Problem& p) {
  std::unordered_map<std::string, std::string> table;
  for (const auto& c : d.constants) table[c.name] = c.type;
  for (const auto& o : p.objects) {
    if (!d.has_type(o.type)) throw TypeMismatch("object '" + o.name + "' has unknown type '" + o.type + "'");
    if (!table.emplace(o.name, o.type).second) {
      throw TypeMismatch("object '" + o.name + "' declared twice");
    }
  }
  return table;
}

}  // namespace

Problem parse_problem(std::string_view text, const Domain& domain) {
  const SExpr doc = read_document(text);
  expect_list(doc, "'(define'");
  if (doc.items.empty() || !doc.items[0].is_atom("define")) fail(doc, "expected 'define'");
  if (doc.items.size() < 2 || !doc.items[1].head_is("problem") || doc.items[1].items.size() != 2) {
    fail(doc.items.size() < 2 ? doc : doc.items[1], "expected '(problem <name>)'");
  }
  Problem p;
  p.name = expect_name(doc.items[1].items[1], "problem name");
  for (std::size_t i = 2; i < doc.items.size(); ++i) {
    const SExpr& section = expect_list(doc.items[i], "problem section");
    if (section.items.empty() || section.items[0].is_list) fail(section, "expected section keyword");
    const std::string& key = section.items[0].atom;
    if (key == ":domain") {
      if (section.items.size() != 2) fail(section, "expected '(:domain <name>)'");
      p.domain_name = expect_name(section.items[1], "domain name");
      if (p.domain_name != domain.name) {
        fail(section.items[1], "problem is for domain '" + p.domain_name + "', not '" + domain.name + "'");
      }
    } else if (key == ":requirements") {
      // recorded on the domain only
    } else if (key == ":objects") {
      auto objects = parse_typed_list(section, 1, false);
      p.objects.insert(p.objects.end(), objects.begin(), objects.end());
    } else if (key == ":init") {
      for (std::size_t j = 1; j < section.items.size(); ++j) {
        const SExpr& a = section.items[j];
        if (a.head_is("=")) throw UnsupportedFeature("numeric fluent initialisation");
        if (a.head_is("at")) throw UnsupportedFeature("timed initial literal");
        push_unique(p.init, parse_atom(a, false));
      }
    } else if (key == ":goal") {
      if (section.items.size() != 2) fail(section, "expected exactly one goal formula");
      p.goal = parse_conjunction(section.items[1], false);
    } else if (key == ":metric") {
      throw UnsupportedFeature(":metric");
    } else if (key == ":constraints") {
      throw UnsupportedFeature(":constraints");
    } else {
      fail(section.items[0], "unknown problem section '" + key + "'");
    }
  }
  if (p.domain_name.empty()) fail(doc, "missing '(:domain <name>)'");
  const auto objects = object_table(domain, p);
  for (const auto& atom : p.init) check_ground_atom(domain, objects, atom, "init");
  for (const auto& lit : p.goal) check_ground_atom(domain, objects, lit.atom, "goal");
  return p;
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

std::string print_domain(const Domain& d) {
  std::ostringstream out;
  out << "(define (domain " << d.name << ")\n";
  if (!d.requirements.empty()) out << "  (:requirements " << join(d.requirements) << ")\n";
  if (!d.types.empty()) {
    out << "  (:types";
    for (const auto& t : d.types) out << " " << t.name << " - " << t.parent.value_or(std::string(kRootType));
    out << ")\n";
  }
  if (!d.constants.empty()) out << "  (:constants " << print_typed(d.constants) << ")\n";
  out << "  (:predicates";
  for (const auto& p : d.predicates) {
    out << "\n    (" << p.name;
    if (!p.params.empty()) out << " " << print_typed(p.params);
    out << ")";
  }
  out << ")\n";
  for (const auto& a : d.actions) {
    out << "  (:action " << a.name << "\n";
    out << "    :parameters (" << print_typed(a.params) << ")\n";
    out << "    :precondition " << print_conjunction(a.precondition) << "\n";
    std::vector<Literal> effects;
    for (const auto& atom : a.add_effects) effects.push_back({atom, false});
    for (const auto& atom : a.delete_effects) effects.push_back({atom, true});
    out << "    :effect " << print_conjunction(effects) << ")\n";
  }
  out << ")\n";
  return out.str();
}

std::string print_problem(const Problem& p) {
  std::ostringstream out;
  out << "(define (problem " << p.name << ")\n";
  out << "  (:domain " << p.domain_name << ")\n";
  out << "  (:objects " << print_typed(p.objects) << ")\n";
  out << "  (:init";
  for (const auto& a : p.init) out << "\n    " << print_atom(a);
  out << ")\n";
  out << "  (:goal " << print_conjunction(p.goal) << "))\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Grounded predicates and states
// ---------------------------------------------------------------------------

GroundedPredicate GroundedPredicate::make(std::string_view name, std::vector<std::string> args) {
  GroundedPredicate p{to_lower(name), std::move(args)};
  for (auto& a : p.args) a = to_lower(a);
  return p;
}

std::string GroundedPredicate::to_string() const {
  std::string out = name + "(";
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) out += ",";
    out += args[i];
  }
  return out + ")";
}

std::vector<AtomId> State::atoms() const {
  std::vector<AtomId> out;
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i]) out.push_back(static_cast<AtomId>(i));
  }
  return out;
}

// ---------------------------------------------------------------------------
// World
// ---------------------------------------------------------------------------

World::World(Domain domain, Problem problem)
    : domain_(std::move(domain)), problem_(std::move(problem)) {
  object_types_ = object_table(domain_, problem_);
  // Deterministic object order: constants, then problem objects.
  std::vector<TypedName> all_objects = domain_.constants;
  all_objects.insert(all_objects.end(), problem_.objects.begin(), problem_.objects.end());

  AtomId offset = 0;
  for (const auto& schema : domain_.predicates) {
    PredicateTable table;
    table.name = schema.name;
    table.offset = offset;
    table.size = 1;
    for (const auto& param : schema.params) {
      std::vector<std::string> compatible;
      std::unordered_map<std::string, std::size_t> index;
      for (const auto& o : all_objects) {
        if (domain_.is_subtype(o.type, param.type)) {
          index[o.name] = compatible.size();
          compatible.push_back(o.name);
        }
      }
      table.objects.push_back(std::move(compatible));
      table.index.push_back(std::move(index));
    }
    table.strides.assign(schema.params.size(), 1);
    for (std::size_t i = schema.params.size(); i-- > 0;) {
      table.strides[i] = table.size;
      table.size *= table.objects[i].size();
    }
    offset += static_cast<AtomId>(table.size);
    table_index_[schema.name] = tables_.size();
    tables_.push_back(std::move(table));
  }
  atom_count_ = offset;

  initial_ = State(atom_count_);
  for (const auto& atom : problem_.init) {
    auto id = find_atom(atom);
    if (!id) throw TypeMismatch("init atom " + print_atom(atom) + " is not well-typed");
    initial_.insert(*id);
  }
  for (const auto& lit : problem_.goal) {
    auto id = find_atom(lit.atom);
    if (!id) throw TypeMismatch("goal atom " + print_atom(lit.atom) + " is not well-typed");
    (lit.negated ? goal_negative_ : goal_positive_).push_back(*id);
  }
}

std::optional<AtomId> World::find_atom(const Atom& a) const {
  auto it = table_index_.find(a.predicate);
  if (it == table_index_.end()) return std::nullopt;
  const PredicateTable& t = tables_[it->second];
  if (a.args.size() != t.objects.size()) return std::nullopt;
  std::size_t id = t.offset;
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    auto pos = t.index[i].find(a.args[i]);
    if (pos == t.index[i].end()) return std::nullopt;
    id += pos->second * t.strides[i];
  }
  return static_cast<AtomId>(id);
}

Atom World::atom(AtomId id) const {
  for (const auto& t : tables_) {
    if (id < t.offset || id >= t.offset + t.size) continue;
    Atom a{t.name, {}};
    std::size_t rest = id - t.offset;
    for (std::size_t i = 0; i < t.objects.size(); ++i) {
      a.args.push_back(t.objects[i][rest / t.strides[i]]);
      rest %= t.strides[i];
    }
    return a;
  }
  throw Error("atom id out of range");
}

std::string World::atom_string(AtomId id) const {
  const Atom a = atom(id);
  std::string out = a.predicate + "(";
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (i) out += ",";
    out += a.args[i];
  }
  return out + ")";
}

std::optional<std::string> World::object_type(std::string_view object) const {
  auto it = object_types_.find(std::string(object));
  if (it == object_types_.end()) return std::nullopt;
  return it->second;
}

Grounding World::ground(const GroundedPredicate& pred) const {
  const ActionSchema* schema = domain_.find_action(pred.name);
  if (!schema) return UnknownAction{pred, "no action named '" + pred.name + "'"};
  if (schema->params.size() != pred.args.size()) {
    return UnknownAction{pred, "'" + pred.name + "' takes " + std::to_string(schema->params.size()) +
                                   " arguments, got " + std::to_string(pred.args.size())};
  }
  std::unordered_map<std::string, std::string> binding;
  for (std::size_t i = 0; i < pred.args.size(); ++i) {
    auto type = object_type(pred.args[i]);
    if (!type) return UnknownAction{pred, "unknown object '" + pred.args[i] + "'"};
    if (!domain_.is_subtype(*type, schema->params[i].type)) {
      return UnknownAction{pred, "object '" + pred.args[i] + "' is not a " + schema->params[i].type};
    }
    binding[schema->params[i].name] = pred.args[i];
  }
  auto instantiate = [&](const Atom& a) {
    Atom g{a.predicate, {}};
    for (const auto& arg : a.args) g.args.push_back(arg.front() == '?' ? binding.at(arg) : arg);
    // Schema atoms are type-checked against parameter types, so this holds.
    return find_atom(g).value();
  };
  auto sorted = [](std::vector<AtomId> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  };
  GroundedAction action{pred, {}, {}, {}, {}};
  for (const auto& lit : schema->precondition) {
    (lit.negated ? action.pre_negative : action.pre_positive).push_back(instantiate(lit.atom));
  }
  for (const auto& a : schema->add_effects) action.adds.push_back(instantiate(a));
  for (const auto& a : schema->delete_effects) action.deletes.push_back(instantiate(a));
  action.pre_positive = sorted(std::move(action.pre_positive));
  action.pre_negative = sorted(std::move(action.pre_negative));
  action.adds = sorted(std::move(action.adds));
  action.deletes = sorted(std::move(action.deletes));
  return action;
}

bool World::goal_holds(const State& state) const { return !unsatisfied_goal(state); }

std::optional<std::string> World::unsatisfied_goal(const State& state) const {
  for (AtomId id : goal_positive_) {
    if (!state.contains(id)) return atom_string(id);
  }
  for (AtomId id : goal_negative_) {
    if (state.contains(id)) return "not " + atom_string(id);
  }
  return std::nullopt;
}

Grounding ground_action(const Domain& domain, const GroundedPredicate& pred, const Problem& problem) {
  return World(domain, problem).ground(pred);
}

bool applicable(const State& state, const GroundedAction& action) {
  return std::all_of(action.pre_positive.begin(), action.pre_positive.end(),
                     [&](AtomId id) { return state.contains(id); }) &&
         std::none_of(action.pre_negative.begin(), action.pre_negative.end(),
                      [&](AtomId id) { return state.contains(id); });
}

State apply(const State& state, std::span<const GroundedAction* const> actions) {
  State next = state;
  for (const auto* a : actions) {
    for (AtomId id : a->deletes) next.erase(id);
  }
  for (const auto* a : actions) {
    for (AtomId id : a->adds) next.insert(id);
  }
  return next;
}

State apply(const State& state, std::span<const GroundedAction> actions) {
  std::vector<const GroundedAction*> ptrs;
  ptrs.reserve(actions.size());
  for (const auto& a : actions) ptrs.push_back(&a);
  return apply(state, std::span<const GroundedAction* const>(ptrs));
}

}  // namespace planinfer::pddl

std::size_t std::hash<planinfer::pddl::GroundedPredicate>::operator()(
    const planinfer::pddl::GroundedPredicate& p) const noexcept {
  std::size_t h = std::hash<std::string>{}(p.name);
  for (const auto& a : p.args) h = h * 1000003u ^ std::hash<std::string>{}(a);
  return h;
}
