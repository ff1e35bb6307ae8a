#pragma once

// Datalog with inequality bodies: program model, parser with canonical
// emission, and bottom-up evaluation (semi-naive, with a naive reference
// evaluator for cross-checks).

#include "gomq/core.hpp"

namespace gomq {

struct DatalogAtom {
  std::string rel;
  std::vector<std::string> vars;

  friend auto operator<=>(const DatalogAtom&, const DatalogAtom&) = default;
};

struct DatalogRule {
  DatalogAtom head;
  std::vector<DatalogAtom> body;                            // relational atoms
  std::vector<std::pair<std::string, std::string>> neqs;    // x != y

  void canonicalize() {
    std::sort(body.begin(), body.end());
    body.erase(std::unique(body.begin(), body.end()), body.end());
    for (auto& [a, b] : neqs)
      if (b < a) std::swap(a, b);
    std::sort(neqs.begin(), neqs.end());
    neqs.erase(std::unique(neqs.begin(), neqs.end()), neqs.end());
  }

  friend auto operator<=>(const DatalogRule&, const DatalogRule&) = default;
};

struct DatalogProgram {
  std::vector<DatalogRule> rules;
  std::string goal = "goal";

  int arity() const {
    for (const auto& r : rules)
      if (r.head.rel == goal) return static_cast<int>(r.head.vars.size());
    return 0;
  }

  std::set<std::string> intensional() const {
    std::set<std::string> s;
    for (const auto& r : rules) s.insert(r.head.rel);
    return s;
  }

  void validate() const {
    Signature sig;
    bool goal_in_head = false;
    for (const auto& r : rules) {
      if (r.body.empty()) throw std::runtime_error("rule with empty body: " + r.head.rel);
      std::set<std::string> bodyVars;
      for (const auto& a : r.body) {
        sig_add(sig, a.rel, static_cast<int>(a.vars.size()));
        bodyVars.insert(a.vars.begin(), a.vars.end());
        if (a.rel == goal) throw std::runtime_error("goal relation used in a rule body");
      }
      sig_add(sig, r.head.rel, static_cast<int>(r.head.vars.size()));
      for (const auto& v : r.head.vars)
        if (!bodyVars.count(v))
          throw std::runtime_error("head variable " + v + " does not occur in the body");
      for (const auto& [a, b] : r.neqs)
        if (!bodyVars.count(a) || !bodyVars.count(b))
          throw std::runtime_error("inequality over variables not bound by the body");
      if (r.head.rel == goal) goal_in_head = true;
    }
    if (!goal_in_head) throw std::runtime_error("program has no goal rule");
  }
};

// ---------------------------------------------------------------------------
// Evaluation

using TupleSet = std::set<std::vector<Term>>;
using Database = std::map<std::string, TupleSet>;

namespace detail {

// Joins the rule body against `db`, reading body position `deltaPos` from
// `delta` instead (deltaPos < 0 reads everything from db). Emits head tuples.
inline void fire_rule(const DatalogRule& rule, const Database& db, const Database* delta,
                      int deltaPos, TupleSet& out) {
  std::map<std::string, Term> env;
  auto rec = [&](auto&& self, size_t i) -> void {
    if (i == rule.body.size()) {
      for (const auto& [a, b] : rule.neqs)
        if (env.at(a) == env.at(b)) return;
      std::vector<Term> head;
      head.reserve(rule.head.vars.size());
      for (const auto& v : rule.head.vars) head.push_back(env.at(v));
      out.insert(std::move(head));
      return;
    }
    const auto& atom = rule.body[i];
    const Database& source = (static_cast<int>(i) == deltaPos && delta) ? *delta : db;
    auto it = source.find(atom.rel);
    if (it == source.end()) return;
    for (const auto& tup : it->second) {
      if (tup.size() != atom.vars.size()) continue;
      std::vector<std::pair<std::string, bool>> bound;  // var, was-new
      bool ok = true;
      for (size_t k = 0; k < tup.size(); ++k) {
        auto jt = env.find(atom.vars[k]);
        if (jt != env.end()) {
          if (jt->second != tup[k]) { ok = false; break; }
        } else {
          env[atom.vars[k]] = tup[k];
          bound.push_back({atom.vars[k], true});
        }
      }
      if (ok) self(self, i + 1);
      for (auto& [v, fresh] : bound) env.erase(v);
    }
  };
  rec(rec, 0);
}

}  // namespace detail

// Least-fixpoint goal tuples by semi-naive iteration. Inequality atoms filter
// by term identity.
inline TupleSet evaluate(const DatalogProgram& P, const Instance& D) {
  P.validate();
  auto idb = P.intensional();
  Database db;
  for (const auto& f : D.facts) {
    if (idb.count(f.rel))
      throw std::runtime_error("instance uses intensional relation " + f.rel);
    db[f.rel].insert(f.args);
  }
  // arity consistency between program and data
  {
    Signature sig;
    for (const auto& f : D.facts) sig_add(sig, f.rel, static_cast<int>(f.args.size()));
    for (const auto& r : P.rules) {
      for (const auto& a : r.body) {
        auto it = sig.find(a.rel);
        if (it != sig.end() && it->second != static_cast<int>(a.vars.size()))
          throw std::runtime_error("arity mismatch on " + a.rel);
      }
    }
  }

  Database delta;
  for (const auto& rule : P.rules) {
    bool pureEdb = true;
    for (const auto& a : rule.body)
      if (idb.count(a.rel)) pureEdb = false;
    if (!pureEdb) continue;
    TupleSet fresh;
    detail::fire_rule(rule, db, nullptr, -1, fresh);
    for (const auto& t : fresh)
      if (db[rule.head.rel].insert(t).second) delta[rule.head.rel].insert(t);
  }

  while (true) {
    Database next;
    for (const auto& rule : P.rules) {
      for (size_t i = 0; i < rule.body.size(); ++i) {
        if (!idb.count(rule.body[i].rel)) continue;
        if (!delta.count(rule.body[i].rel)) continue;
        TupleSet fresh;
        detail::fire_rule(rule, db, &delta, static_cast<int>(i), fresh);
        for (const auto& t : fresh) {
          auto& rel = db[rule.head.rel];
          if (!rel.count(t)) next[rule.head.rel].insert(t);
        }
      }
    }
    if (next.empty()) break;
    for (const auto& [rel, ts] : next) db[rel].insert(ts.begin(), ts.end());
    delta = std::move(next);
  }
  auto it = db.find(P.goal);
  return it == db.end() ? TupleSet{} : it->second;
}

// Reference evaluator: recompute every rule against the full database until
// nothing changes.
inline TupleSet naive_evaluate(const DatalogProgram& P, const Instance& D) {
  P.validate();
  auto idb = P.intensional();
  Database db;
  for (const auto& f : D.facts) {
    if (idb.count(f.rel))
      throw std::runtime_error("instance uses intensional relation " + f.rel);
    db[f.rel].insert(f.args);
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& rule : P.rules) {
      TupleSet fresh;
      detail::fire_rule(rule, db, nullptr, -1, fresh);
      for (const auto& t : fresh)
        if (db[rule.head.rel].insert(t).second) changed = true;
    }
  }
  auto it = db.find(P.goal);
  return it == db.end() ? TupleSet{} : it->second;
}

// ---------------------------------------------------------------------------
// ".dlog" format. Canonical emission: body atoms sorted, inequalities last,
// rules sorted lexicographically, single space after body commas.

inline std::string emit_rule(const DatalogRule& r) {
  std::string s = r.head.rel + "(";
  for (size_t i = 0; i < r.head.vars.size(); ++i) {
    if (i) s += ",";
    s += r.head.vars[i];
  }
  s += ") :- ";
  bool first = true;
  for (const auto& a : r.body) {
    if (!first) s += ", ";
    first = false;
    s += a.rel + "(";
    for (size_t i = 0; i < a.vars.size(); ++i) {
      if (i) s += ",";
      s += a.vars[i];
    }
    s += ")";
  }
  for (const auto& [a, b] : r.neqs) {
    if (!first) s += ", ";
    first = false;
    s += a + " != " + b;
  }
  return s + ".";
}

inline std::string emit_program(const DatalogProgram& P) {
  std::vector<std::string> lines;
  for (auto r : P.rules) {
    r.canonicalize();
    lines.push_back(emit_rule(r));
  }
  std::sort(lines.begin(), lines.end());
  lines.erase(std::unique(lines.begin(), lines.end()), lines.end());
  std::string out = "% goal: " + P.goal + "\n";
  for (const auto& l : lines) out += l + "\n";
  return out;
}

inline DatalogProgram parse_program(const std::string& text) {
  DatalogProgram P;
  int line = 1, col = 1;
  size_t i = 0;
  auto peek = [&]() -> int { return i < text.size() ? static_cast<unsigned char>(text[i]) : -1; };
  auto get = [&]() -> int {
    int c = peek();
    if (c == -1) return -1;
    ++i;
    if (c == '\n') { ++line; col = 1; } else { ++col; }
    return c;
  };
  auto skip_ws = [&]() {
    while (true) {
      int c = peek();
      if (c == '%') {
        // "% goal: NAME" designates the goal relation
        size_t save = i;
        std::string comment;
        while (peek() != -1 && peek() != '\n') comment += static_cast<char>(get());
        (void)save;
        const std::string tag = "% goal:";
        if (comment.rfind(tag, 0) == 0) {
          std::string name = comment.substr(tag.size());
          size_t a = name.find_first_not_of(" \t");
          if (a != std::string::npos) {
            size_t b = name.find_last_not_of(" \t\r");
            P.goal = name.substr(a, b - a + 1);
          }
        }
      } else if (c != -1 && std::isspace(c)) {
        get();
      } else {
        return;
      }
    }
  };
  auto ident = [&]() -> std::string {
    skip_ws();
    int l = line, c0 = col;
    if (peek() == -1 || !std::isalpha(peek())) throw ParseError("expected identifier", l, c0);
    std::string s;
    while (peek() != -1 && (std::isalnum(peek()) || peek() == '_')) s += static_cast<char>(get());
    return s;
  };
  auto expect = [&](char want) {
    skip_ws();
    int l = line, c0 = col;
    if (get() != want) throw ParseError(std::string("expected '") + want + "'", l, c0);
  };
  auto parse_atom_args = [&](DatalogAtom& a) {
    expect('(');
    skip_ws();
    if (peek() == ')') { get(); return; }  // 0-ary heads for Boolean goals
    while (true) {
      a.vars.push_back(ident());
      skip_ws();
      if (peek() == ',') { get(); continue; }
      break;
    }
    expect(')');
  };

  while (true) {
    skip_ws();
    if (peek() == -1) break;
    DatalogRule r;
    r.head.rel = ident();
    parse_atom_args(r.head);
    skip_ws();
    expect(':');
    expect('-');
    while (true) {
      std::string first = ident();
      skip_ws();
      if (peek() == '!') {
        get();
        expect('=');
        r.neqs.push_back({first, ident()});
      } else {
        DatalogAtom a;
        a.rel = first;
        parse_atom_args(a);
        r.body.push_back(std::move(a));
      }
      skip_ws();
      if (peek() == ',') { get(); continue; }
      break;
    }
    expect('.');
    r.canonicalize();
    P.rules.push_back(std::move(r));
  }
  P.validate();
  return P;
}

}  // namespace gomq
