#pragma once

// Sentence ASTs for the guarded universal fragments (with counting), the
// s-expression surface syntax, finite model checking, fragment
// classification and the description-logic layer with its FO translation.

#include <cassert>
#include <memory>
#include <numeric>

#include "gomq/core.hpp"

namespace gomq {

// ---------------------------------------------------------------------------
// Formulas

enum class FKind { True, False, Atom, Eq, Not, And, Or, Exists, Forall, AtLeast };

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

struct Formula {
  FKind kind = FKind::True;
  std::string rel;                 // Atom
  std::vector<std::string> vars;   // Atom args; Eq uses vars[0], vars[1]
  std::vector<FormulaPtr> kids;    // And/Or members; Not and quantifier body at kids[0]
  std::vector<std::string> qvars;  // quantified variables (AtLeast: exactly one)
  FormulaPtr guard;                // Atom or Eq
  int count = 0;                   // AtLeast threshold
};

inline FormulaPtr f_true() { return std::make_shared<Formula>(Formula{FKind::True}); }
inline FormulaPtr f_false() { return std::make_shared<Formula>(Formula{FKind::False}); }

inline FormulaPtr f_atom(std::string rel, std::vector<std::string> vars) {
  Formula f;
  f.kind = FKind::Atom;
  f.rel = std::move(rel);
  f.vars = std::move(vars);
  return std::make_shared<Formula>(std::move(f));
}

inline FormulaPtr f_eq(std::string x, std::string y) {
  Formula f;
  f.kind = FKind::Eq;
  f.vars = {std::move(x), std::move(y)};
  return std::make_shared<Formula>(std::move(f));
}

inline FormulaPtr f_not(FormulaPtr g) {
  Formula f;
  f.kind = FKind::Not;
  f.kids = {std::move(g)};
  return std::make_shared<Formula>(std::move(f));
}

inline FormulaPtr f_and(std::vector<FormulaPtr> kids) {
  if (kids.empty()) return f_true();
  if (kids.size() == 1) return kids[0];
  Formula f;
  f.kind = FKind::And;
  f.kids = std::move(kids);
  return std::make_shared<Formula>(std::move(f));
}

inline FormulaPtr f_or(std::vector<FormulaPtr> kids) {
  if (kids.empty()) return f_false();
  if (kids.size() == 1) return kids[0];
  Formula f;
  f.kind = FKind::Or;
  f.kids = std::move(kids);
  return std::make_shared<Formula>(std::move(f));
}

inline FormulaPtr f_exists(std::vector<std::string> qvars, FormulaPtr guard, FormulaPtr body) {
  Formula f;
  f.kind = FKind::Exists;
  f.qvars = std::move(qvars);
  f.guard = std::move(guard);
  f.kids = {std::move(body)};
  return std::make_shared<Formula>(std::move(f));
}

inline FormulaPtr f_forall(std::vector<std::string> qvars, FormulaPtr guard, FormulaPtr body) {
  Formula f;
  f.kind = FKind::Forall;
  f.qvars = std::move(qvars);
  f.guard = std::move(guard);
  f.kids = {std::move(body)};
  return std::make_shared<Formula>(std::move(f));
}

inline FormulaPtr f_atleast(int n, std::string qvar, FormulaPtr guard, FormulaPtr body) {
  Formula f;
  f.kind = FKind::AtLeast;
  f.count = n;
  f.qvars = {std::move(qvar)};
  f.guard = std::move(guard);
  f.kids = {std::move(body)};
  return std::make_shared<Formula>(std::move(f));
}

inline void free_vars_into(const Formula& f, std::set<std::string>& out) {
  switch (f.kind) {
    case FKind::True:
    case FKind::False:
      return;
    case FKind::Atom:
    case FKind::Eq:
      out.insert(f.vars.begin(), f.vars.end());
      return;
    case FKind::Not:
    case FKind::And:
    case FKind::Or:
      for (const auto& k : f.kids) free_vars_into(*k, out);
      return;
    case FKind::Exists:
    case FKind::Forall:
    case FKind::AtLeast: {
      std::set<std::string> inner;
      free_vars_into(*f.guard, inner);
      free_vars_into(*f.kids[0], inner);
      for (const auto& v : f.qvars) inner.erase(v);
      out.insert(inner.begin(), inner.end());
      return;
    }
  }
}

inline std::set<std::string> free_vars(const Formula& f) {
  std::set<std::string> out;
  free_vars_into(f, out);
  return out;
}

// Nesting depth of guarded quantifiers; counting quantifiers contribute.
inline int depth(const Formula& f) {
  switch (f.kind) {
    case FKind::True:
    case FKind::False:
    case FKind::Atom:
    case FKind::Eq:
      return 0;
    case FKind::Not:
      return depth(*f.kids[0]);
    case FKind::And:
    case FKind::Or: {
      int d = 0;
      for (const auto& k : f.kids) d = std::max(d, depth(*k));
      return d;
    }
    case FKind::Exists:
    case FKind::Forall:
    case FKind::AtLeast:
      return 1 + depth(*f.kids[0]);
  }
  return 0;
}

inline std::string to_sexpr(const Formula& f) {
  switch (f.kind) {
    case FKind::True:
      return "true";
    case FKind::False:
      return "false";
    case FKind::Atom: {
      std::string s = "(atom " + f.rel;
      for (const auto& v : f.vars) s += " " + v;
      return s + ")";
    }
    case FKind::Eq:
      return "(eq " + f.vars[0] + " " + f.vars[1] + ")";
    case FKind::Not:
      return "(not " + to_sexpr(*f.kids[0]) + ")";
    case FKind::And:
    case FKind::Or: {
      std::string s = f.kind == FKind::And ? "(and" : "(or";
      for (const auto& k : f.kids) s += " " + to_sexpr(*k);
      return s + ")";
    }
    case FKind::Exists:
    case FKind::Forall:
    case FKind::AtLeast: {
      std::string head = f.kind == FKind::Exists ? "exists"
                         : f.kind == FKind::Forall ? "forall"
                                                   : "atleast " + std::to_string(f.count);
      std::string s = "(" + head + " ((";
      for (size_t i = 0; i < f.qvars.size(); ++i) s += (i ? " " : "") + f.qvars[i];
      std::string g;
      if (f.guard->kind == FKind::Eq) {
        g = "(= " + f.guard->vars[0] + " " + f.guard->vars[1] + ")";
      } else {
        g = "(" + f.guard->rel;
        for (const auto& v : f.guard->vars) g += " " + v;
        g += ")";
      }
      return s + ") " + g + ") " + to_sexpr(*f.kids[0]) + ")";
    }
  }
  return "?";
}

inline bool formula_equal(const Formula& a, const Formula& b) { return to_sexpr(a) == to_sexpr(b); }

// Capture-free only when `sub` maps into fresh or already-free names; callers
// substitute pool variables disjoint from the quantified ones.
inline FormulaPtr substitute(const FormulaPtr& f, const std::map<std::string, std::string>& sub) {
  auto mapv = [&](const std::vector<std::string>& vs) {
    std::vector<std::string> out;
    out.reserve(vs.size());
    for (const auto& v : vs) {
      auto it = sub.find(v);
      out.push_back(it == sub.end() ? v : it->second);
    }
    return out;
  };
  switch (f->kind) {
    case FKind::True:
    case FKind::False:
      return f;
    case FKind::Atom:
      return f_atom(f->rel, mapv(f->vars));
    case FKind::Eq: {
      auto vs = mapv(f->vars);
      return f_eq(vs[0], vs[1]);
    }
    case FKind::Not:
      return f_not(substitute(f->kids[0], sub));
    case FKind::And:
    case FKind::Or: {
      std::vector<FormulaPtr> ks;
      for (const auto& k : f->kids) ks.push_back(substitute(k, sub));
      Formula g;
      g.kind = f->kind;
      g.kids = std::move(ks);
      return std::make_shared<Formula>(std::move(g));
    }
    case FKind::Exists:
    case FKind::Forall:
    case FKind::AtLeast: {
      std::map<std::string, std::string> inner = sub;
      for (const auto& q : f->qvars) inner.erase(q);
      Formula g;
      g.kind = f->kind;
      g.count = f->count;
      g.qvars = f->qvars;
      g.guard = substitute(f->guard, inner);
      g.kids = {substitute(f->kids[0], inner)};
      return std::make_shared<Formula>(std::move(g));
    }
  }
  return f;
}

// ---------------------------------------------------------------------------
// Sentences and ontologies

struct Sentence {
  std::vector<std::string> vars;
  FormulaPtr guard;  // relational atom over vars, or (= y y)
  FormulaPtr body;
};

inline std::string to_sexpr(const Sentence& s) {
  std::string out = "(forall ((";
  for (size_t i = 0; i < s.vars.size(); ++i) out += (i ? " " : "") + s.vars[i];
  std::string g;
  if (s.guard->kind == FKind::Eq) {
    g = "(= " + s.guard->vars[0] + " " + s.guard->vars[1] + ")";
  } else {
    g = "(" + s.guard->rel;
    for (const auto& v : s.guard->vars) g += " " + v;
    g += ")";
  }
  return out + ") " + g + ") " + to_sexpr(*s.body) + ")";
}

inline int depth(const Sentence& s) { return depth(*s.body); }

struct Ontology {
  std::vector<Sentence> sentences;
  std::set<std::string> functional;  // binary relations interpreted as partial functions

  Signature sig() const {
    Signature s;
    auto walk = [&](auto&& self, const Formula& f) -> void {
      if (f.kind == FKind::Atom) sig_add(s, f.rel, static_cast<int>(f.vars.size()));
      if (f.guard) self(self, *f.guard);
      for (const auto& k : f.kids) self(self, *k);
    };
    for (const auto& sen : sentences) {
      walk(walk, *sen.guard);
      walk(walk, *sen.body);
    }
    for (const auto& r : functional) sig_add(s, r, 2);
    return s;
  }
};

inline int depth(const Ontology& O) {
  int d = 0;
  for (const auto& s : O.sentences) d = std::max(d, depth(s));
  return d;
}

// Symbol count |O|: names, variables, connectives and quantifiers count one
// each; counting thresholds are coded in unary.
inline int symbol_size(const Formula& f) {
  switch (f.kind) {
    case FKind::True:
    case FKind::False:
      return 1;
    case FKind::Atom:
      return 1 + static_cast<int>(f.vars.size());
    case FKind::Eq:
      return 3;
    case FKind::Not:
      return 1 + symbol_size(*f.kids[0]);
    case FKind::And:
    case FKind::Or: {
      int n = 1;
      for (const auto& k : f.kids) n += symbol_size(*k);
      return n;
    }
    case FKind::Exists:
    case FKind::Forall:
    case FKind::AtLeast:
      return (f.kind == FKind::AtLeast ? f.count : 1) + static_cast<int>(f.qvars.size()) +
             symbol_size(*f.guard) + symbol_size(*f.kids[0]);
  }
  return 1;
}

inline int symbol_size(const Ontology& O) {
  int n = 0;
  for (const auto& s : O.sentences)
    n += 1 + static_cast<int>(s.vars.size()) + symbol_size(*s.guard) + symbol_size(*s.body);
  n += 2 * static_cast<int>(O.functional.size());
  return n;
}

// ---------------------------------------------------------------------------
// Finite model checking

using Env = std::map<std::string, Term>;

namespace detail {

// Enumerates assignments of `qvars` satisfying the guard under `env`,
// invoking `fn` with the extended environment. Quantified variables rebind
// (shadow any outer binding). Returns false when `fn` short-circuited.
template <typename Fn>
bool guard_matches(const Interpretation& A, const Formula& guard,
                   const std::vector<std::string>& qvars, const Env& env, Fn&& fn) {
  Env base = env;
  for (const auto& q : qvars) base.erase(q);
  if (guard.kind == FKind::Eq) {
    const std::string& u = guard.vars[0];
    const std::string& v = guard.vars[1];
    bool ub = base.count(u), vb = base.count(v);
    if (u == v) {
      if (ub) return fn(base);
      for (const auto& t : A.dom()) {
        Env ext = base;
        ext[u] = t;
        if (!fn(ext)) return false;
      }
      return true;
    }
    if (ub && vb) {
      if (base.at(u) == base.at(v)) return fn(base);
      return true;
    }
    if (ub || vb) {
      Env ext = base;
      ext[ub ? v : u] = base.at(ub ? u : v);
      return fn(ext);
    }
    for (const auto& t : A.dom()) {
      Env ext = base;
      ext[u] = t;
      ext[v] = t;
      if (!fn(ext)) return false;
    }
    return true;
  }
  // relational guard: iterate matching atoms
  for (const auto& a : A.atoms) {
    if (a.rel != guard.rel || a.args.size() != guard.vars.size()) continue;
    Env ext = base;
    bool ok = true;
    for (size_t i = 0; i < guard.vars.size(); ++i) {
      auto jt = ext.find(guard.vars[i]);
      if (jt != ext.end()) {
        if (jt->second != a.args[i]) { ok = false; break; }
      } else {
        ext[guard.vars[i]] = a.args[i];
      }
    }
    if (ok && !fn(ext)) return false;
  }
  return true;
}

}  // namespace detail

inline bool eval_formula(const Interpretation& A, const Formula& f, Env& env) {
  switch (f.kind) {
    case FKind::True:
      return true;
    case FKind::False:
      return false;
    case FKind::Atom: {
      Atom a{f.rel, {}};
      for (const auto& v : f.vars) a.args.push_back(env.at(v));
      return A.contains(a);
    }
    case FKind::Eq:
      return env.at(f.vars[0]) == env.at(f.vars[1]);
    case FKind::Not:
      return !eval_formula(A, *f.kids[0], env);
    case FKind::And:
      for (const auto& k : f.kids)
        if (!eval_formula(A, *k, env)) return false;
      return true;
    case FKind::Or:
      for (const auto& k : f.kids)
        if (eval_formula(A, *k, env)) return true;
      return false;
    case FKind::Exists: {
      bool found = false;
      detail::guard_matches(A, *f.guard, f.qvars, env, [&](Env& ext) {
        Env local = ext;
        if (eval_formula(A, *f.kids[0], local)) { found = true; return false; }
        return true;
      });
      return found;
    }
    case FKind::Forall: {
      bool all = true;
      detail::guard_matches(A, *f.guard, f.qvars, env, [&](Env& ext) {
        Env local = ext;
        if (!eval_formula(A, *f.kids[0], local)) { all = false; return false; }
        return true;
      });
      return all;
    }
    case FKind::AtLeast: {
      // count distinct witnesses of the quantified variable
      TermSet witnesses;
      const std::string& z = f.qvars[0];
      detail::guard_matches(A, *f.guard, f.qvars, env, [&](Env& ext) {
        Env local = ext;
        if (eval_formula(A, *f.kids[0], local)) witnesses.insert(local.at(z));
        return true;
      });
      return static_cast<int>(witnesses.size()) >= f.count;
    }
  }
  return false;
}

inline bool eval_sentence(const Interpretation& A, const Sentence& s) {
  Env env;
  bool all = true;
  detail::guard_matches(A, *s.guard, s.vars, env, [&](Env& ext) {
    Env local = ext;
    if (!eval_formula(A, *s.body, local)) { all = false; return false; }
    return true;
  });
  return all;
}

inline bool functional_ok(const Interpretation& A, const std::string& rel) {
  std::map<Term, TermSet> succ;
  for (const auto& a : A.atoms)
    if (a.rel == rel && a.args.size() == 2) succ[a.args[0]].insert(a.args[1]);
  for (const auto& [x, ys] : succ)
    if (ys.size() > 1) return false;
  return true;
}

inline bool models(const Interpretation& A, const Ontology& O) {
  for (const auto& r : O.functional)
    if (!functional_ok(A, r)) return false;
  for (const auto& s : O.sentences)
    if (!eval_sentence(A, s)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Fragment classification

enum class Band { Dichotomy, CSPHard, NoDichotomy, Unknown };

inline std::string to_string(Band b) {
  switch (b) {
    case Band::Dichotomy: return "Dichotomy";
    case Band::CSPHard: return "CSPHard";
    case Band::NoDichotomy: return "NoDichotomy";
    case Band::Unknown: return "Unknown";
  }
  return "Unknown";
}

struct FragmentTag {
  int depth = 0;
  bool twoVar = false;
  bool minusRestriction = false;  // every outermost guard is an equality
  bool equalityUsed = false;      // equality in a non-guard position
  bool counting = false;
  bool functions = false;
  std::string cls = "unknown";
  Band status = Band::Unknown;
};

namespace detail {

inline void collect_vars(const Formula& f, std::set<std::string>& out) {
  out.insert(f.vars.begin(), f.vars.end());
  out.insert(f.qvars.begin(), f.qvars.end());
  if (f.guard) collect_vars(*f.guard, out);
  for (const auto& k : f.kids) collect_vars(*k, out);
}

inline bool uses_eq(const Formula& f) {
  if (f.kind == FKind::Eq) return true;
  for (const auto& k : f.kids)
    if (uses_eq(*k)) return true;
  // guards are atomic or equality; equality guards are only legal at the
  // outermost position and are not counted here
  return false;
}

inline bool uses_counting(const Formula& f) {
  if (f.kind == FKind::AtLeast) return true;
  for (const auto& k : f.kids)
    if (uses_counting(*k)) return true;
  return false;
}

}  // namespace detail

inline FragmentTag classify(const Ontology& O) {
  FragmentTag t;
  t.depth = depth(O);
  t.functions = !O.functional.empty();
  t.minusRestriction = true;
  t.twoVar = true;
  for (const auto& [rel, ar] : O.sig())
    if (ar > 2) t.twoVar = false;
  for (const auto& s : O.sentences) {
    if (s.guard->kind != FKind::Eq) t.minusRestriction = false;
    std::set<std::string> vs(s.vars.begin(), s.vars.end());
    detail::collect_vars(*s.body, vs);
    if (s.guard) detail::collect_vars(*s.guard, vs);
    if (vs.size() > 2) t.twoVar = false;
    if (detail::uses_eq(*s.body)) t.equalityUsed = true;
    if (detail::uses_counting(*s.body)) t.counting = true;
  }
  if (O.sentences.empty()) t.minusRestriction = true;

  const int d = t.depth;
  const bool two = t.twoVar, minus = t.minusRestriction, eq = t.equalityUsed,
             cnt = t.counting, fn = t.functions;
  struct Row {
    const char* base;
    int d;
    bool eqAllowed, fAllowed;
    Band band;
    bool fits;
  };
  const Row rows[] = {
      {"uGF", 1, false, false, Band::Dichotomy, d <= 1 && !eq && !cnt && !fn},
      {"uGF^-", 1, true, false, Band::Dichotomy, d <= 1 && minus && !cnt && !fn},
      {"uGF2^-", 2, false, false, Band::Dichotomy, d <= 2 && two && minus && !eq && !cnt && !fn},
      {"uGC2^-", 1, true, false, Band::Dichotomy, d <= 1 && two && minus && !fn},
      {"uGF2", 1, true, false, Band::CSPHard, d <= 1 && two && !cnt && !fn},
      {"uGF2", 2, false, false, Band::CSPHard, d <= 2 && two && !eq && !cnt && !fn},
      {"uGF2", 1, false, true, Band::CSPHard, d <= 1 && two && !eq && !cnt},
      {"uGC2", 1, false, false, Band::CSPHard, d <= 1 && two && !eq && !fn},
      {"uGF2^-", 2, false, true, Band::NoDichotomy, d <= 2 && two && minus && !eq && !cnt},
  };
  for (const auto& r : rows) {
    if (!r.fits) continue;
    t.cls = std::string(r.base) + "(" + std::to_string(r.d);
    if (r.eqAllowed && eq) t.cls += ",=";
    if (r.fAllowed && fn) t.cls += ",f";
    t.cls += ")";
    t.status = r.band;
    return t;
  }
  t.cls = "uGF" + std::string(two ? "2" : "") + (minus ? "^-" : "") + "(" + std::to_string(d) +
          std::string(eq ? ",=" : "") + std::string(fn ? ",f" : "") + ")";
  t.status = Band::Unknown;
  return t;
}

// Fragment predicates used as operation preconditions.
inline bool is_ugf_eq(const Ontology& O) {
  FragmentTag t = classify(O);
  return !t.counting && !t.functions;
}
inline bool is_ugc2_eq(const Ontology& O) {
  FragmentTag t = classify(O);
  return t.twoVar && !t.functions;
}
inline bool is_ugc2_minus_1eq(const Ontology& O) {
  FragmentTag t = classify(O);
  return t.twoVar && t.minusRestriction && t.depth <= 1 && !t.functions;
}

// ---------------------------------------------------------------------------
// s-expression reader

namespace detail {

struct SExpr {
  bool is_list = false;
  std::string tok;
  std::vector<SExpr> items;
  int line = 1, col = 1;
};

class SReader {
 public:
  explicit SReader(const std::string& text) : text_(text) {}

  std::vector<SExpr> read_all() {
    std::vector<SExpr> out;
    skip_ws();
    while (peek() != -1) {
      out.push_back(read());
      skip_ws();
    }
    return out;
  }

 private:
  SExpr read() {
    skip_ws();
    SExpr e;
    e.line = line_;
    e.col = col_;
    int c = peek();
    if (c == -1) throw ParseError("unexpected end of input", line_, col_);
    if (c == '(') {
      get();
      e.is_list = true;
      while (true) {
        skip_ws();
        if (peek() == ')') { get(); break; }
        if (peek() == -1) throw ParseError("unclosed '('", e.line, e.col);
        e.items.push_back(read());
      }
      return e;
    }
    if (c == ')') throw ParseError("unexpected ')'", line_, col_);
    while (true) {
      c = peek();
      if (c == -1 || c == '(' || c == ')' || std::isspace(c)) break;
      e.tok += static_cast<char>(get());
    }
    return e;
  }

  int peek() const { return i_ < text_.size() ? static_cast<unsigned char>(text_[i_]) : -1; }
  int get() {
    int c = peek();
    if (c == -1) return -1;
    ++i_;
    if (c == '\n') { ++line_; col_ = 1; } else { ++col_; }
    return c;
  }
  void skip_ws() {
    while (true) {
      int c = peek();
      if (c == ';' || c == '%') {
        while (peek() != -1 && peek() != '\n') get();
      } else if (c != -1 && std::isspace(c)) {
        get();
      } else {
        return;
      }
    }
  }

  const std::string& text_;
  size_t i_ = 0;
  int line_ = 1, col_ = 1;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// ".ugf" parsing

namespace detail {

inline std::string want_symbol(const SExpr& e, const char* what) {
  if (e.is_list || !is_identifier(e.tok)) throw ParseError(std::string("expected ") + what, e.line, e.col);
  return e.tok;
}

inline int want_number(const SExpr& e) {
  if (e.is_list || e.tok.empty()) throw ParseError("expected number", e.line, e.col);
  for (char c : e.tok)
    if (!std::isdigit(static_cast<unsigned char>(c))) throw ParseError("expected number", e.line, e.col);
  return std::stoi(e.tok);
}

// guard form: (R v...) or (= v v)
inline FormulaPtr parse_guard(const SExpr& e) {
  if (!e.is_list || e.items.empty()) throw ParseError("expected guard", e.line, e.col);
  const SExpr& head = e.items[0];
  if (!head.is_list && head.tok == "=") {
    if (e.items.size() != 3) throw ParseError("equality guard takes two variables", e.line, e.col);
    return f_eq(want_symbol(e.items[1], "variable"), want_symbol(e.items[2], "variable"));
  }
  std::string rel = want_symbol(head, "relation");
  std::vector<std::string> vs;
  for (size_t i = 1; i < e.items.size(); ++i) vs.push_back(want_symbol(e.items[i], "variable"));
  if (vs.empty()) throw ParseError("guard atom needs arguments", e.line, e.col);
  return f_atom(rel, vs);
}

// binder form: ((vars...) guard)
inline std::pair<std::vector<std::string>, FormulaPtr> parse_binder(const SExpr& e) {
  if (!e.is_list || e.items.size() != 2 || !e.items[0].is_list)
    throw ParseError("expected ((vars...) guard)", e.line, e.col);
  std::vector<std::string> vars;
  for (const auto& v : e.items[0].items) vars.push_back(want_symbol(v, "variable"));
  if (vars.empty()) throw ParseError("binder needs at least one variable", e.line, e.col);
  return {vars, parse_guard(e.items[1])};
}

// Checks the guard condition: guard variables must cover the quantified
// variables and every free variable of the body.
inline void check_guard_covers(const SExpr& at, const FormulaPtr& guard,
                               const std::vector<std::string>& qvars, const Formula& body) {
  std::set<std::string> gv(guard->vars.begin(), guard->vars.end());
  for (const auto& q : qvars)
    if (!gv.count(q))
      throw ParseError("guard does not contain quantified variable " + q, at.line, at.col);
  for (const auto& v : free_vars(body))
    if (!gv.count(v))
      throw ParseError("guard does not contain free body variable " + v, at.line, at.col);
}

inline FormulaPtr parse_body(const SExpr& e);

inline FormulaPtr parse_quantifier(const SExpr& e, bool universal) {
  if (e.items.size() != 3) throw ParseError("quantifier takes a binder and a body", e.line, e.col);
  auto [vars, guard] = parse_binder(e.items[1]);
  if (guard->kind == FKind::Eq)
    throw ParseError("equality guard is not allowed inside a sentence body", e.line, e.col);
  FormulaPtr body = parse_body(e.items[2]);
  check_guard_covers(e, guard, vars, *body);
  return universal ? f_forall(vars, guard, body) : f_exists(vars, guard, body);
}

inline FormulaPtr parse_counting(const SExpr& e, bool exactly) {
  if (e.items.size() != 4) throw ParseError("counting quantifier takes n, binder, body", e.line, e.col);
  int n = want_number(e.items[1]);
  if (n < 1) throw ParseError("counting threshold must be at least 1", e.items[1].line, e.items[1].col);
  auto [vars, guard] = parse_binder(e.items[2]);
  if (vars.size() != 1) throw ParseError("counting quantifier binds one variable", e.line, e.col);
  if (guard->kind == FKind::Eq || guard->vars.size() != 2)
    throw ParseError("counting guard must be a binary atom", e.line, e.col);
  std::set<std::string> gs(guard->vars.begin(), guard->vars.end());
  if (gs.size() != 2 || !gs.count(vars[0]))
    throw ParseError("counting guard must relate the bound variable to a free one", e.line, e.col);
  FormulaPtr body = parse_body(e.items[3]);
  check_guard_covers(e, guard, vars, *body);
  if (!exactly) return f_atleast(n, vars[0], guard, body);
  return f_and({f_atleast(n, vars[0], guard, body), f_not(f_atleast(n + 1, vars[0], guard, body))});
}

inline FormulaPtr parse_body(const SExpr& e) {
  if (!e.is_list) {
    if (e.tok == "true") return f_true();
    if (e.tok == "false") return f_false();
    throw ParseError("unexpected token '" + e.tok + "'", e.line, e.col);
  }
  if (e.items.empty()) throw ParseError("empty form", e.line, e.col);
  const SExpr& head = e.items[0];
  if (head.is_list) throw ParseError("expected operator", head.line, head.col);
  const std::string& op = head.tok;
  if (op == "and" || op == "or") {
    std::vector<FormulaPtr> ks;
    for (size_t i = 1; i < e.items.size(); ++i) ks.push_back(parse_body(e.items[i]));
    return op == "and" ? f_and(ks) : f_or(ks);
  }
  if (op == "not") {
    if (e.items.size() != 2) throw ParseError("not takes one formula", e.line, e.col);
    return f_not(parse_body(e.items[1]));
  }
  if (op == "atom") {
    if (e.items.size() < 3) throw ParseError("atom takes a relation and arguments", e.line, e.col);
    std::string rel = want_symbol(e.items[1], "relation");
    std::vector<std::string> vs;
    for (size_t i = 2; i < e.items.size(); ++i) vs.push_back(want_symbol(e.items[i], "variable"));
    return f_atom(rel, vs);
  }
  if (op == "eq") {
    if (e.items.size() != 3) throw ParseError("eq takes two variables", e.line, e.col);
    return f_eq(want_symbol(e.items[1], "variable"), want_symbol(e.items[2], "variable"));
  }
  if (op == "exists") return parse_quantifier(e, false);
  if (op == "forall") return parse_quantifier(e, true);
  if (op == "atleast") return parse_counting(e, false);
  if (op == "exactly") return parse_counting(e, true);
  if (op == "=")
    throw ParseError("equality guard is not allowed inside a sentence body", e.line, e.col);
  throw ParseError("unknown form '" + op + "'", e.line, e.col);
}

// Quantified subformulas must be open (no sentences as subformulas).
inline void check_open(const SExpr& at, const Formula& f) {
  if (f.kind == FKind::Exists || f.kind == FKind::Forall || f.kind == FKind::AtLeast) {
    if (free_vars(f).empty())
      throw ParseError("closed quantified subformula (sentences may not nest)", at.line, at.col);
    check_open(at, *f.kids[0]);
    return;
  }
  for (const auto& k : f.kids) check_open(at, *k);
}

}  // namespace detail

inline Sentence parse_sentence_sexpr(const detail::SExpr& e) {
  using detail::SExpr;
  if (!e.is_list || e.items.empty() || e.items[0].is_list || e.items[0].tok != "forall")
    throw ParseError(
        "top-level form must be (forall ...) or (functional R); "
        "boolean combinations of sentences are rejected: they are not invariant "
        "under disjoint unions",
        e.line, e.col);
  if (e.items.size() != 3) throw ParseError("forall takes a binder and a body", e.line, e.col);
  auto [vars, guard] = detail::parse_binder(e.items[1]);
  if (guard->kind == FKind::Eq) {
    if (vars.size() != 1 || guard->vars[0] != vars[0] || guard->vars[1] != vars[0])
      throw ParseError("an equality sentence guard must have the form (= y y)", e.line, e.col);
  }
  Sentence s;
  s.vars = vars;
  s.guard = guard;
  s.body = detail::parse_body(e.items[2]);
  detail::check_guard_covers(e, guard, vars, *s.body);
  detail::check_open(e, *s.body);
  return s;
}

inline Ontology parse_ontology(const std::string& text) {
  detail::SReader rd(text);
  Ontology O;
  for (const auto& e : rd.read_all()) {
    if (e.is_list && !e.items.empty() && !e.items[0].is_list && e.items[0].tok == "functional") {
      if (e.items.size() != 2) throw ParseError("functional takes one relation", e.line, e.col);
      O.functional.insert(detail::want_symbol(e.items[1], "relation"));
      continue;
    }
    O.sentences.push_back(parse_sentence_sexpr(e));
  }
  O.sig();  // arity consistency
  return O;
}

inline std::string emit_ontology(const Ontology& O) {
  std::string out;
  for (const auto& s : O.sentences) out += to_sexpr(s) + "\n";
  for (const auto& r : O.functional) out += "(functional " + r + ")\n";
  return out;
}

// ---------------------------------------------------------------------------
// Description logic layer

enum class CKind { Top, Bot, Name, And, Or, Not, Some, All, AtLeastC, AtMostC };

struct Concept;
using ConceptPtr = std::shared_ptr<const Concept>;

struct Role {
  std::string name;
  bool inverse = false;
  friend auto operator<=>(const Role&, const Role&) = default;
};

struct Concept {
  CKind kind = CKind::Top;
  std::string name;  // Name
  Role role;         // Some/All/AtLeastC/AtMostC
  int n = 0;         // counting
  std::vector<ConceptPtr> kids;
};

inline ConceptPtr c_top() { return std::make_shared<Concept>(Concept{CKind::Top}); }
inline ConceptPtr c_bot() { return std::make_shared<Concept>(Concept{CKind::Bot}); }
inline ConceptPtr c_name(std::string n) {
  Concept c;
  c.kind = CKind::Name;
  c.name = std::move(n);
  return std::make_shared<Concept>(std::move(c));
}
inline ConceptPtr c_and(std::vector<ConceptPtr> ks) {
  if (ks.size() == 1) return ks[0];
  Concept c;
  c.kind = CKind::And;
  c.kids = std::move(ks);
  return std::make_shared<Concept>(std::move(c));
}
inline ConceptPtr c_or(std::vector<ConceptPtr> ks) {
  if (ks.size() == 1) return ks[0];
  Concept c;
  c.kind = CKind::Or;
  c.kids = std::move(ks);
  return std::make_shared<Concept>(std::move(c));
}
inline ConceptPtr c_not(ConceptPtr k) {
  Concept c;
  c.kind = CKind::Not;
  c.kids = {std::move(k)};
  return std::make_shared<Concept>(std::move(c));
}
inline ConceptPtr c_some(Role r, ConceptPtr k) {
  Concept c;
  c.kind = CKind::Some;
  c.role = std::move(r);
  c.kids = {std::move(k)};
  return std::make_shared<Concept>(std::move(c));
}
inline ConceptPtr c_all(Role r, ConceptPtr k) {
  Concept c;
  c.kind = CKind::All;
  c.role = std::move(r);
  c.kids = {std::move(k)};
  return std::make_shared<Concept>(std::move(c));
}
inline ConceptPtr c_atleast(int n, Role r, ConceptPtr k) {
  Concept c;
  c.kind = CKind::AtLeastC;
  c.n = n;
  c.role = std::move(r);
  c.kids = {std::move(k)};
  return std::make_shared<Concept>(std::move(c));
}
inline ConceptPtr c_atmost(int n, Role r, ConceptPtr k) {
  Concept c;
  c.kind = CKind::AtMostC;
  c.n = n;
  c.role = std::move(r);
  c.kids = {std::move(k)};
  return std::make_shared<Concept>(std::move(c));
}

struct DLOntology {
  std::vector<std::pair<ConceptPtr, ConceptPtr>> inclusions;
  std::vector<std::pair<Role, Role>> roleInclusions;
  std::vector<Role> functionalRoles;
};

inline int dl_depth(const Concept& c) {
  switch (c.kind) {
    case CKind::Top:
    case CKind::Bot:
    case CKind::Name:
      return 0;
    case CKind::And:
    case CKind::Or:
    case CKind::Not: {
      int d = 0;
      for (const auto& k : c.kids) d = std::max(d, dl_depth(*k));
      return d;
    }
    case CKind::Some:
    case CKind::All:
    case CKind::AtLeastC:
    case CKind::AtMostC:
      return 1 + dl_depth(*c.kids[0]);
  }
  return 0;
}

inline int dl_depth(const DLOntology& D) {
  int d = 0;
  for (const auto& [c1, c2] : D.inclusions) d = std::max({d, dl_depth(*c1), dl_depth(*c2)});
  return d;
}

struct DLTag {
  int depth = 0;
  bool inverses = false, roleIncs = false, counting = false, functions = false;
  bool alchiq() const { return !functions; }
};

inline DLTag dl_classify(const DLOntology& D) {
  DLTag t;
  t.depth = dl_depth(D);
  t.roleIncs = !D.roleInclusions.empty();
  t.functions = !D.functionalRoles.empty();
  auto walk = [&](auto&& self, const Concept& c) -> void {
    if (c.kind == CKind::Some || c.kind == CKind::All || c.kind == CKind::AtLeastC ||
        c.kind == CKind::AtMostC) {
      if (c.role.inverse) t.inverses = true;
      if (c.kind == CKind::AtLeastC || c.kind == CKind::AtMostC) t.counting = true;
    }
    for (const auto& k : c.kids) self(self, *k);
  };
  for (const auto& [c1, c2] : D.inclusions) {
    walk(walk, *c1);
    walk(walk, *c2);
  }
  for (const auto& [r, s] : D.roleInclusions)
    if (r.inverse || s.inverse) t.inverses = true;
  for (const auto& r : D.functionalRoles)
    if (r.inverse) t.inverses = true;
  return t;
}

enum class TranslateMode { Minus, Free };

namespace detail {

inline FormulaPtr role_atom(const Role& r, const std::string& from, const std::string& to) {
  return r.inverse ? f_atom(r.name, {to, from}) : f_atom(r.name, {from, to});
}

// Standard FO translation C*(v); quantified variables alternate over {x, y}.
inline FormulaPtr concept_fo(const Concept& c, const std::string& v) {
  const std::string w = v == "x" ? "y" : "x";
  switch (c.kind) {
    case CKind::Top:
      return f_true();
    case CKind::Bot:
      return f_false();
    case CKind::Name:
      return f_atom(c.name, {v});
    case CKind::And: {
      std::vector<FormulaPtr> ks;
      for (const auto& k : c.kids) ks.push_back(concept_fo(*k, v));
      return f_and(ks);
    }
    case CKind::Or: {
      std::vector<FormulaPtr> ks;
      for (const auto& k : c.kids) ks.push_back(concept_fo(*k, v));
      return f_or(ks);
    }
    case CKind::Not:
      return f_not(concept_fo(*c.kids[0], v));
    case CKind::Some:
      return f_exists({w}, role_atom(c.role, v, w), concept_fo(*c.kids[0], w));
    case CKind::All:
      return f_forall({w}, role_atom(c.role, v, w), concept_fo(*c.kids[0], w));
    case CKind::AtLeastC:
      return f_atleast(c.n, w, role_atom(c.role, v, w), concept_fo(*c.kids[0], w));
    case CKind::AtMostC:
      return f_not(f_atleast(c.n + 1, w, role_atom(c.role, v, w), concept_fo(*c.kids[0], w)));
  }
  return f_true();
}

}  // namespace detail

// Minus mode: C [= D becomes the uGF2^- sentence Ax(x=x -> (~C*(x) v D*(x))).
// Free mode additionally rewrites C [= all R.D and (some R.C) [= D through
// the outermost relational guard, dropping one quantifier level.
inline Ontology translate_dl(const DLOntology& D, TranslateMode mode = TranslateMode::Minus) {
  Ontology O;
  for (const auto& [lhs, rhs] : D.inclusions) {
    if (mode == TranslateMode::Free) {
      if (rhs->kind == CKind::All && !rhs->role.inverse) {
        Sentence s;
        s.vars = {"x", "y"};
        s.guard = f_atom(rhs->role.name, {"x", "y"});
        s.body = f_or({f_not(detail::concept_fo(*lhs, "x")), detail::concept_fo(*rhs->kids[0], "y")});
        O.sentences.push_back(std::move(s));
        continue;
      }
      if (lhs->kind == CKind::Some && !lhs->role.inverse) {
        Sentence s;
        s.vars = {"x", "y"};
        s.guard = f_atom(lhs->role.name, {"x", "y"});
        s.body = f_or({f_not(detail::concept_fo(*lhs->kids[0], "y")), detail::concept_fo(*rhs, "x")});
        O.sentences.push_back(std::move(s));
        continue;
      }
    }
    Sentence s;
    s.vars = {"x"};
    s.guard = f_eq("x", "x");
    s.body = f_or({f_not(detail::concept_fo(*lhs, "x")), detail::concept_fo(*rhs, "x")});
    O.sentences.push_back(std::move(s));
  }
  for (const auto& [r, sr] : D.roleInclusions) {
    Sentence s;
    s.vars = {"x", "y"};
    s.guard = detail::role_atom(r, "x", "y");
    s.body = detail::role_atom(sr, "x", "y");
    O.sentences.push_back(std::move(s));
  }
  for (const auto& r : D.functionalRoles) {
    if (r.inverse) throw std::runtime_error("unsupported constructor: functionality of an inverse role");
    O.functional.insert(r.name);
  }
  return O;
}

// ".dl" format: (ci C D), (ri R S), (func R); concepts are
// top | bot | name | (and ...) | (or ...) | (not C) | (some R C) | (all R C)
// | (atleast n R C) | (atmost n R C) | (exactly n R C), roles name | (inv R).
namespace detail {

inline Role parse_role(const SExpr& e) {
  if (!e.is_list) return Role{want_symbol(e, "role"), false};
  if (e.items.size() == 2 && !e.items[0].is_list && e.items[0].tok == "inv")
    return Role{want_symbol(e.items[1], "role"), true};
  throw ParseError("expected role or (inv R)", e.line, e.col);
}

inline ConceptPtr parse_concept(const SExpr& e) {
  if (!e.is_list) {
    if (e.tok == "top") return c_top();
    if (e.tok == "bot") return c_bot();
    return c_name(want_symbol(e, "concept name"));
  }
  if (e.items.empty() || e.items[0].is_list) throw ParseError("expected concept", e.line, e.col);
  const std::string& op = e.items[0].tok;
  if (op == "and" || op == "or") {
    std::vector<ConceptPtr> ks;
    for (size_t i = 1; i < e.items.size(); ++i) ks.push_back(parse_concept(e.items[i]));
    if (ks.empty()) throw ParseError(op + " needs members", e.line, e.col);
    return op == "and" ? c_and(ks) : c_or(ks);
  }
  if (op == "not") {
    if (e.items.size() != 2) throw ParseError("not takes one concept", e.line, e.col);
    return c_not(parse_concept(e.items[1]));
  }
  if (op == "some" || op == "all") {
    if (e.items.size() != 3) throw ParseError(op + " takes a role and a concept", e.line, e.col);
    Role r = parse_role(e.items[1]);
    ConceptPtr k = parse_concept(e.items[2]);
    return op == "some" ? c_some(r, k) : c_all(r, k);
  }
  if (op == "atleast" || op == "atmost" || op == "exactly") {
    if (e.items.size() != 4) throw ParseError(op + " takes n, a role and a concept", e.line, e.col);
    int n = want_number(e.items[1]);
    Role r = parse_role(e.items[2]);
    ConceptPtr k = parse_concept(e.items[3]);
    if (op == "atleast") return c_atleast(n, r, k);
    if (op == "atmost") return c_atmost(n, r, k);
    return c_and({c_atleast(n, r, k), c_atmost(n, r, k)});
  }
  throw ParseError("unknown concept form '" + op + "'", e.line, e.col);
}

}  // namespace detail

inline DLOntology parse_dl(const std::string& text) {
  detail::SReader rd(text);
  DLOntology D;
  for (const auto& e : rd.read_all()) {
    if (!e.is_list || e.items.empty() || e.items[0].is_list)
      throw ParseError("expected (ci ...), (ri ...) or (func ...)", e.line, e.col);
    const std::string& op = e.items[0].tok;
    if (op == "ci") {
      if (e.items.size() != 3) throw ParseError("ci takes two concepts", e.line, e.col);
      D.inclusions.push_back({detail::parse_concept(e.items[1]), detail::parse_concept(e.items[2])});
    } else if (op == "ri") {
      if (e.items.size() != 3) throw ParseError("ri takes two roles", e.line, e.col);
      D.roleInclusions.push_back({detail::parse_role(e.items[1]), detail::parse_role(e.items[2])});
    } else if (op == "func") {
      if (e.items.size() != 2) throw ParseError("func takes one role", e.line, e.col);
      D.functionalRoles.push_back(detail::parse_role(e.items[1]));
    } else {
      throw ParseError("unknown form '" + op + "'", e.line, e.col);
    }
  }
  return D;
}

}  // namespace gomq
