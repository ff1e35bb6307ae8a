#pragma once

// Datalog(!=) rewritings for rAQ evaluation: formula closure, guarded types
// with bounded-model realizability, compatibility, and the rule schemas for
// uGF(=) (arbitrary arity) and uGC2(=) (binary, counting-aware), plus the
// UCQ pipeline over strong decompositions.
//
// Predicates P^l_Theta exist for every set Theta of realizable types the
// schemas can actually derive: seeds from the guarded-fact rules, closed
// under compatibility filtering and intersection. Rules whose head set can
// never be derived are dead weight in the textbook program and are omitted;
// on every instance the derived facts coincide.

#include <functional>

#include "gomq/datalog.hpp"
#include "gomq/queries.hpp"
#include "gomq/oracle.hpp"

namespace gomq {

struct RewriteConfig {
  int satBound = 4;              // realizability model domain bound
  std::uint64_t satNodeBudget = 20000000;  // DFS nodes across the whole build
  size_t maxTypesPerShape = 4000;
  size_t maxPredicates = 600;    // reachable Theta-set cap (full emission)
  size_t maxRules = 60000;
  int maxW = 3;                  // variable pool is 2w-1
  int gc2LinkCap = 2;            // cap on l in the counting propagation rules
  bool unsoundCap = false;       // allow the cap even when the paper bound exceeds it
  int strengthenD = 2;           // attachment bound for the UCQ pipeline

  // Reachable-only mode: name only the type-set predicates the schemas
  // actually derive on these instances. The program then reproduces the full
  // schema exactly on them (and underapproximates elsewhere). Without
  // training instances the full rule schema is emitted, which is only
  // feasible for small type tables.
  std::vector<Instance> training;
};

// ---------------------------------------------------------------------------
// Closure

// Structural metadata per closure entry, used to derive the truth values of
// boolean combinations from their parts when enumerating candidate types.
struct ClosureChildRef {
  int entry = -1;            // child entry, or -1 for a truth constant
  std::vector<int> argMap;   // child canonical position -> parent position
  int constant = -1;         // 0 false / 1 true when entry < 0
};

enum class EntryKind { Atomic, Equality, Quant, Compound };

struct ClosureEntryInfo {
  EntryKind kind = EntryKind::Atomic;
  FKind op = FKind::And;     // compound operator
  std::vector<ClosureChildRef> children;
};

struct Closure {
  // canonical entries: free variables renamed to v1..vm in first-occurrence
  // order; deduplicated by print form
  std::vector<FormulaPtr> formulas;
  std::vector<int> arity;        // number of free variables per entry
  std::vector<ClosureEntryInfo> info;
  int queryIdx = -1;             // the rAQ as an openGF formula
  int eqIdx = -1;                // the single equality atom, -1 when dropped
  Signature sig;
  int w = 1;
  bool equalityFree = false;
};

namespace detail {

inline FormulaPtr canonicalize_free(const FormulaPtr& f, int* arityOut,
                                    std::vector<std::string>* orderOut = nullptr) {
  std::vector<std::string> order;
  std::set<std::string> seen;
  auto walk = [&](auto&& self, const Formula& g, std::set<std::string> bound) -> void {
    if (g.kind == FKind::Atom || g.kind == FKind::Eq) {
      for (const auto& v : g.vars)
        if (!bound.count(v) && seen.insert(v).second) order.push_back(v);
      return;
    }
    std::set<std::string> inner = bound;
    for (const auto& q : g.qvars) inner.insert(q);
    if (g.guard) self(self, *g.guard, inner);
    for (const auto& k : g.kids) self(self, *k, g.kind == FKind::Exists || g.kind == FKind::Forall ||
                                                        g.kind == FKind::AtLeast
                                                    ? inner
                                                    : bound);
  };
  walk(walk, *f, {});
  std::map<std::string, std::string> ren;
  for (size_t i = 0; i < order.size(); ++i) ren[order[i]] = "v" + std::to_string(i + 1);
  if (arityOut) *arityOut = static_cast<int>(order.size());
  if (orderOut) *orderOut = order;
  return substitute(f, ren);
}

// the rAQ as an openGF formula along its cg-tree decomposition
inline FormulaPtr raq_formula(const CQ& q, const CgTreeDecomposition& td) {
  std::map<int, std::vector<int>> children;
  for (auto [p, c] : td.edges) children[p].push_back(c);
  for (auto& [p, cs] : children) std::sort(cs.begin(), cs.end());
  auto build = [&](auto&& self, int node) -> FormulaPtr {
    const Bag& b = td.bag.at(node);
    std::vector<FormulaPtr> conj;
    for (const auto& a : b.atoms) {
      std::vector<std::string> vs;
      for (const auto& t : a.args) vs.push_back(t.id);
      conj.push_back(f_atom(a.rel, vs));
    }
    for (int c : children[node]) {
      const Bag& cb = td.bag.at(c);
      std::vector<std::string> newVars;
      for (const auto& t : cb.dom)
        if (!b.dom.count(t)) newVars.push_back(t.id);
      FormulaPtr sub = self(self, c);
      if (newVars.empty()) {
        conj.push_back(sub);
        continue;
      }
      // guard: an atom of the child bag whose arguments cover its domain
      const Atom* guard = nullptr;
      for (const auto& a : cb.atoms)
        if (TermSet(a.args.begin(), a.args.end()) == cb.dom) { guard = &a; break; }
      if (!guard) throw std::runtime_error("rAQ bag without a guard atom");
      std::vector<std::string> gv;
      for (const auto& t : guard->args) gv.push_back(t.id);
      conj.push_back(f_exists(newVars, f_atom(guard->rel, gv), sub));
    }
    return f_and(conj);
  };
  auto dedup = [&](auto&& self, const FormulaPtr& f) -> FormulaPtr {
    // conjunctions repeat guard atoms of child bags; drop duplicates
    if (f->kind == FKind::And) {
      std::vector<FormulaPtr> ks;
      std::set<std::string> seen;
      for (const auto& k : f->kids) {
        FormulaPtr d = self(self, k);
        if (seen.insert(to_sexpr(*d)).second) ks.push_back(d);
      }
      return f_and(ks);
    }
    if (f->kind == FKind::Exists) {
      FormulaPtr body = self(self, f->kids[0]);
      if (body->kind == FKind::And) {
        std::vector<FormulaPtr> ks;
        std::string g = to_sexpr(*f->guard);
        for (const auto& k : body->kids)
          if (to_sexpr(*k) != g) ks.push_back(k);
        body = f_and(ks);
      } else if (to_sexpr(*body) == to_sexpr(*f->guard)) {
        body = f_true();
      }
      return f_exists(f->qvars, f->guard, body);
    }
    return f;
  };
  return dedup(dedup, build(build, td.root));
}

inline void close_under_subformulas(const FormulaPtr& f, std::map<std::string, FormulaPtr>& out) {
  int ar = 0;
  FormulaPtr canon = canonicalize_free(f, &ar);
  std::string key = to_sexpr(*canon);
  if (out.emplace(key, canon).second) {
    switch (f->kind) {
      case FKind::Not:
      case FKind::And:
      case FKind::Or:
        for (const auto& k : f->kids) close_under_subformulas(k, out);
        break;
      case FKind::Exists:
      case FKind::Forall:
      case FKind::AtLeast:
        close_under_subformulas(f->kids[0], out);
        break;
      default:
        break;
    }
  }
}

}  // namespace detail

inline Closure closure(const Ontology& O, const CQ& q) {
  auto td = is_rAQ(q);
  if (!td) throw std::runtime_error("closure: the query must be an rAQ");
  Closure cl;
  cl.sig = O.sig();
  for (const auto& a : q.atoms) sig_add(cl.sig, a.rel, static_cast<int>(a.args.size()));
  for (const auto& [rel, ar] : cl.sig) cl.w = std::max(cl.w, ar);

  cl.equalityFree = true;
  for (const auto& s : O.sentences)
    if (detail::uses_eq(*s.body)) cl.equalityFree = false;

  std::map<std::string, FormulaPtr> entries;
  for (const auto& s : O.sentences)
    detail::close_under_subformulas(f_forall(s.vars, s.guard, s.body), entries);
  FormulaPtr qf = detail::raq_formula(q, *td);
  detail::close_under_subformulas(qf, entries);
  for (const auto& [rel, ar] : cl.sig) {
    std::vector<std::string> vs;
    for (int i = 0; i < ar; ++i) vs.push_back("v" + std::to_string(i + 1));
    detail::close_under_subformulas(f_atom(rel, vs), entries);
  }
  if (!cl.equalityFree) detail::close_under_subformulas(f_eq("v1", "v2"), entries);

  std::string qkey;
  {
    int ar = 0;
    qkey = to_sexpr(*detail::canonicalize_free(qf, &ar));
  }
  std::map<std::string, int> indexOfKey;
  for (const auto& [key, f] : entries) {
    int ar = 0;
    FormulaPtr canon = detail::canonicalize_free(f, &ar);
    if (f->kind == FKind::True || f->kind == FKind::False) continue;
    cl.formulas.push_back(canon);
    cl.arity.push_back(ar);
    indexOfKey[key] = static_cast<int>(cl.formulas.size() - 1);
    if (key == qkey) cl.queryIdx = static_cast<int>(cl.formulas.size() - 1);
    if (f->kind == FKind::Eq) cl.eqIdx = static_cast<int>(cl.formulas.size() - 1);
  }
  if (cl.queryIdx < 0) throw std::runtime_error("closure: query formula missing");

  // structural metadata: compounds reference their children's entries
  cl.info.resize(cl.formulas.size());
  for (size_t i = 0; i < cl.formulas.size(); ++i) {
    const Formula& f = *cl.formulas[i];
    ClosureEntryInfo& inf = cl.info[i];
    switch (f.kind) {
      case FKind::Atom:
        inf.kind = EntryKind::Atomic;
        break;
      case FKind::Eq:
        inf.kind = EntryKind::Equality;
        break;
      case FKind::Exists:
      case FKind::Forall:
      case FKind::AtLeast:
        inf.kind = EntryKind::Quant;
        break;
      case FKind::Not:
      case FKind::And:
      case FKind::Or: {
        inf.kind = EntryKind::Compound;
        inf.op = f.kind;
        for (const auto& k : f.kids) {
          ClosureChildRef ref;
          if (k->kind == FKind::True || k->kind == FKind::False) {
            ref.constant = k->kind == FKind::True ? 1 : 0;
          } else {
            int ar = 0;
            std::vector<std::string> order;
            FormulaPtr kc = detail::canonicalize_free(k, &ar, &order);
            auto it = indexOfKey.find(to_sexpr(*kc));
            if (it == indexOfKey.end()) throw std::runtime_error("closure: child entry missing");
            ref.entry = it->second;
            // in the parent's canonical form the child's free variables are
            // v<j> names; map each child position to the parent position
            for (const auto& name : order) ref.argMap.push_back(std::stoi(name.substr(1)) - 1);
          }
          inf.children.push_back(std::move(ref));
        }
        break;
      }
      default:
        break;
    }
  }
  return cl;
}

// ---------------------------------------------------------------------------
// Types

// One instantiated closure formula: entry index plus pool positions for its
// canonical free variables.
struct TypeLiteral {
  int formula;
  std::vector<int> args;  // values in [0, shape)

  friend auto operator<=>(const TypeLiteral&, const TypeLiteral&) = default;
};

// The instantiation universe for a tuple shape (x1..xl).
struct TypeUniverse {
  int shape = 1;
  std::vector<TypeLiteral> literals;
  std::map<TypeLiteral, int> index;

  // positions of relational atom instantiations covering all l variables
  std::vector<int> guardLiterals;
  // equality literal positions by (i, j)
  std::map<std::pair<int, int>, int> eqAt;
  int queryLiteralAt(const Closure& cl, const std::vector<int>& args) const {
    auto it = index.find(TypeLiteral{cl.queryIdx, args});
    return it == index.end() ? -1 : it->second;
  }
};

using TypeBits = std::vector<bool>;  // truth value per universe literal

inline TypeUniverse make_universe(const Closure& cl, int shape) {
  TypeUniverse U;
  U.shape = shape;
  for (size_t fi = 0; fi < cl.formulas.size(); ++fi) {
    int ar = cl.arity[fi];
    std::vector<int> args(ar, 0);
    while (true) {
      U.index.emplace(TypeLiteral{static_cast<int>(fi), args}, static_cast<int>(U.literals.size()));
      U.literals.push_back(TypeLiteral{static_cast<int>(fi), args});
      const Formula& f = *cl.formulas[fi];
      if (f.kind == FKind::Atom) {
        std::set<int> used(args.begin(), args.end());
        if (static_cast<int>(used.size()) == shape) U.guardLiterals.push_back(
            static_cast<int>(U.literals.size()) - 1);
      }
      if (f.kind == FKind::Eq && ar == 2)
        U.eqAt[{args[0], args[1]}] = static_cast<int>(U.literals.size()) - 1;
      if (ar == 0) break;
      int k = 0;
      while (k < ar && ++args[k] == shape) args[k++] = 0;
      if (k == ar) break;
    }
  }
  return U;
}

struct XType {
  TypeBits bits;
  friend auto operator<=>(const XType&, const XType&) = default;
};

inline std::string type_key(const XType& t) {
  std::string s;
  s.reserve(t.bits.size());
  for (bool b : t.bits) s += b ? '1' : '0';
  return s;
}

// types agree on every literal whose arguments lie in the shared positions;
// shared maps positions of the second shape to positions of the first
// (-1: unshared)
inline bool compatible_mapped(const TypeUniverse& U1, const XType& t1, const TypeUniverse& U2,
                              const XType& t2, const std::vector<int>& sharedOfU2) {
  for (size_t i = 0; i < U2.literals.size(); ++i) {
    const TypeLiteral& lit = U2.literals[i];
    TypeLiteral mapped{lit.formula, {}};
    bool allShared = true;
    for (int a : lit.args) {
      if (sharedOfU2[a] < 0) { allShared = false; break; }
      mapped.args.push_back(sharedOfU2[a]);
    }
    if (!allShared) continue;
    auto it = U1.index.find(mapped);
    if (it == U1.index.end()) continue;
    if (t1.bits[it->second] != t2.bits[i]) return false;
  }
  return true;
}

// plain compatibility of types over explicit pool-variable tuples
inline bool compatible(const TypeUniverse& U1, const XType& t1, const std::vector<int>& vars1,
                       const TypeUniverse& U2, const XType& t2, const std::vector<int>& vars2) {
  std::vector<int> sharedOfU2(vars2.size(), -1);
  for (size_t i = 0; i < vars2.size(); ++i)
    for (size_t j = 0; j < vars1.size(); ++j)
      if (vars2[i] == vars1[j]) sharedOfU2[i] = static_cast<int>(j);
  return compatible_mapped(U1, t1, U2, t2, sharedOfU2);
}

// ---------------------------------------------------------------------------
// Bounded model search (3-valued pruning) for realizability

namespace detail {

enum class TV { False, True, Unknown };

struct ModelSearch {
  std::vector<Term> dom;
  std::vector<Atom> cells;
  std::map<Atom, int> cellIdx;
  std::vector<int> assign;  // -1 unknown, 0 false, 1 true
  const Ontology* O = nullptr;
  std::uint64_t* nodeBudget = nullptr;
  std::vector<FormulaPtr> sentenceFs;
  // assumed truth of constrained (canonical formula, elements) pairs; lets
  // the pruning see type-internal contradictions without completing a model
  std::map<std::pair<std::string, std::vector<Term>>, bool> assume;
  mutable std::map<const Formula*, std::pair<std::string, std::vector<std::string>>> canonCache;

  ModelSearch(const Ontology& o, const Signature& sig, int m, std::uint64_t* budget)
      : O(&o), nodeBudget(budget) {
    for (const auto& s : o.sentences) sentenceFs.push_back(f_forall(s.vars, s.guard, s.body));
    for (int i = 0; i < m; ++i) dom.push_back(cst("e" + std::to_string(i + 1)));
    for (const auto& [rel, ar] : sig) {
      std::vector<int> idx(ar, 0);
      while (true) {
        Atom a{rel, {}};
        for (int k = 0; k < ar; ++k) a.args.push_back(dom[idx[k]]);
        cells.push_back(a);
        int k = 0;
        while (k < ar && ++idx[k] == m) idx[k++] = 0;
        if (k == ar) break;
      }
    }
    // assign cells over low element indices first: contradictions local to
    // the pinned pool elements then prune at shallow depth
    std::map<Term, int> pos;
    for (int i = 0; i < m; ++i) pos[dom[i]] = i;
    std::stable_sort(cells.begin(), cells.end(), [&](const Atom& a, const Atom& b) {
      auto rank = [&](const Atom& x) {
        int r = 0;
        for (const auto& t : x.args) r = std::max(r, pos[t]);
        return r;
      };
      return rank(a) < rank(b);
    });
    for (size_t i = 0; i < cells.size(); ++i) cellIdx[cells[i]] = static_cast<int>(i);
    assign.assign(cells.size(), -1);
  }

  TV atom_tv(const Atom& a) const {
    auto it = cellIdx.find(a);
    if (it == cellIdx.end()) return TV::False;
    int v = assign[it->second];
    return v < 0 ? TV::Unknown : (v ? TV::True : TV::False);
  }

  // excludeKey: the constraint currently being checked must not justify
  // itself through its own assumption
  TV eval3(const Formula& f, Env& env, const std::string* excludeKey = nullptr,
           bool useAssume = true) const {
    if (useAssume && !assume.empty() &&
        (f.kind == FKind::Exists || f.kind == FKind::Forall || f.kind == FKind::AtLeast)) {
      auto it = canonCache.find(&f);
      if (it == canonCache.end()) {
        std::vector<std::string> order;
        int ar = 0;
        FormulaPtr canon = canonicalize_free(std::make_shared<Formula>(f), &ar, &order);
        it = canonCache.emplace(&f, std::make_pair(to_sexpr(*canon), order)).first;
      }
      const auto& [key, order] = it->second;
      if (!excludeKey || key != *excludeKey) {
        std::vector<Term> args;
        bool bound = true;
        for (const auto& v : order) {
          auto jt = env.find(v);
          if (jt == env.end()) { bound = false; break; }
          args.push_back(jt->second);
        }
        if (bound) {
          auto at = assume.find({key, args});
          if (at != assume.end()) return at->second ? TV::True : TV::False;
        }
      }
    }
    switch (f.kind) {
      case FKind::True:
        return TV::True;
      case FKind::False:
        return TV::False;
      case FKind::Atom: {
        Atom a{f.rel, {}};
        for (const auto& v : f.vars) a.args.push_back(env.at(v));
        return atom_tv(a);
      }
      case FKind::Eq:
        return env.at(f.vars[0]) == env.at(f.vars[1]) ? TV::True : TV::False;
      case FKind::Not: {
        TV t = eval3(*f.kids[0], env, excludeKey, useAssume);
        return t == TV::Unknown ? TV::Unknown : (t == TV::True ? TV::False : TV::True);
      }
      case FKind::And: {
        bool unk = false;
        for (const auto& k : f.kids) {
          TV t = eval3(*k, env, excludeKey, useAssume);
          if (t == TV::False) return TV::False;
          if (t == TV::Unknown) unk = true;
        }
        return unk ? TV::Unknown : TV::True;
      }
      case FKind::Or: {
        bool unk = false;
        for (const auto& k : f.kids) {
          TV t = eval3(*k, env, excludeKey, useAssume);
          if (t == TV::True) return TV::True;
          if (t == TV::Unknown) unk = true;
        }
        return unk ? TV::Unknown : TV::False;
      }
      case FKind::Exists:
      case FKind::Forall:
      case FKind::AtLeast: {
        // enumerate assignments over the fixed domain
        int yes = 0;
        bool unk = false;
        std::vector<size_t> idx(f.qvars.size(), 0);
        TermSet witnesses;
        while (true) {
          Env ext = env;
          for (size_t i = 0; i < f.qvars.size(); ++i) ext[f.qvars[i]] = dom[idx[i]];
          TV g = eval3(*f.guard, ext, excludeKey, useAssume);
          if (g != TV::False) {
            TV b = eval3(*f.kids[0], ext, excludeKey, useAssume);
            if (f.kind == FKind::Forall) {
              if (g == TV::True && b == TV::False) return TV::False;
              if (g == TV::Unknown || b == TV::Unknown) unk = true;
            } else {
              if (g == TV::True && b == TV::True) {
                ++yes;
                if (f.kind == FKind::AtLeast) witnesses.insert(ext.at(f.qvars[0]));
              } else if (g == TV::Unknown || b == TV::Unknown) {
                unk = true;
              }
            }
          }
          size_t k = 0;
          while (k < idx.size() && ++idx[k] == dom.size()) idx[k++] = 0;
          if (k == idx.size() || idx.empty()) break;
        }
        if (f.kind == FKind::Forall) return unk ? TV::Unknown : TV::True;
        if (f.kind == FKind::Exists) return yes > 0 ? TV::True : (unk ? TV::Unknown : TV::False);
        if (static_cast<int>(witnesses.size()) >= f.count) return TV::True;
        return unk ? TV::Unknown : TV::False;
      }
    }
    return TV::Unknown;
  }

  bool sentences_possible() const {
    for (const auto& f : sentenceFs) {
      Env env;
      TV t = eval3(*f, env);
      if (t == TV::False) return false;
    }
    return true;
  }

  bool sentences_hold_exactly() const {
    for (const auto& f : sentenceFs) {
      Env env;
      if (eval3(*f, env, nullptr, false) != TV::True) return false;
    }
    return true;
  }

  // extra constraints: (formula, element args, required truth value)
  struct Constraint {
    FormulaPtr f;
    std::vector<Term> args;  // values for v1..vm
    bool want;
    std::string key;         // canonical print form, set by prime_constraints
  };

  void prime_constraints(std::vector<Constraint>& cs) {
    for (auto& c : cs) {
      int ar = 0;
      FormulaPtr canon = canonicalize_free(c.f, &ar);
      c.key = to_sexpr(*canon);
      if (c.f->kind == FKind::Exists || c.f->kind == FKind::Forall ||
          c.f->kind == FKind::AtLeast)
        assume[{c.key, c.args}] = c.want;
    }
  }

  bool constraints_possible(const std::vector<Constraint>& cs, bool exact) const {
    for (const auto& c : cs) {
      Env env;
      for (size_t i = 0; i < c.args.size(); ++i) env["v" + std::to_string(i + 1)] = c.args[i];
      if (exact) {
        if (eval3(*c.f, env, nullptr, false) != (c.want ? TV::True : TV::False)) return false;
      } else {
        TV t = eval3(*c.f, env, &c.key, true);
        if (t == (c.want ? TV::False : TV::True)) return false;
      }
    }
    return true;
  }

  // on_model(cells true-set) -> false to stop; returns false when the node
  // budget ran out
  template <typename Fn>
  bool search(std::vector<Constraint> cs, Fn&& on_model) {
    prime_constraints(cs);
    return dfs(0, cs, on_model);
  }

 private:
  template <typename Fn>
  bool dfs(size_t i, const std::vector<ModelSearch::Constraint>& cs, Fn& on_model) {
    if (*nodeBudget == 0) return false;
    --*nodeBudget;
    if (i == cells.size()) {
      // leaf: exact, assumption-free verification
      if (!sentences_hold_exactly() || !constraints_possible(cs, true)) return true;
      Interpretation M;
      for (size_t k = 0; k < cells.size(); ++k)
        if (assign[k] == 1) M.add(cells[k]);
      if (!on_model(M)) return false;
      return true;
    }
    if (!sentences_possible() || !constraints_possible(cs, false)) return true;  // pruned
    if (assign[i] != -1) return dfs(i + 1, cs, on_model);
    for (int v : {0, 1}) {
      assign[i] = v;
      bool keep = dfs(i + 1, cs, on_model);
      assign[i] = -1;
      if (!keep) return false;
    }
    return true;
  }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Type tables

struct TypeTable {
  TypeUniverse universe;
  std::vector<XType> types;            // realizable types, canonical order
  std::map<std::string, int> indexOf;  // by type_key
};

namespace detail {

// Derives the truth values of compound literals from atomic, equality and
// quantified ones; sentence literals (closed quantified formulas) are pinned
// to true since realizable types live in models of the ontology.
struct CandidateBits {
  const Closure* cl;
  const TypeUniverse* U;
  std::vector<signed char> val;  // -1 undecided, 0, 1

  explicit CandidateBits(const Closure& c, const TypeUniverse& u)
      : cl(&c), U(&u), val(u.literals.size(), -1) {
    for (size_t i = 0; i < U->literals.size(); ++i) {
      const TypeLiteral& lit = U->literals[i];
      const ClosureEntryInfo& inf = cl->info[lit.formula];
      if (inf.kind == EntryKind::Equality && lit.args[0] == lit.args[1]) val[i] = 1;
      if (inf.kind == EntryKind::Quant && lit.args.empty()) val[i] = 1;  // ontology sentence
    }
  }

  int derive(int litIdx) {
    if (val[litIdx] >= 0) return val[litIdx];
    const TypeLiteral& lit = U->literals[litIdx];
    const ClosureEntryInfo& inf = cl->info[lit.formula];
    if (inf.kind != EntryKind::Compound) return -1;  // free literal, still open
    int r = -1;
    if (inf.op == FKind::Not) {
      int c = child_value(inf.children[0], lit.args);
      r = c < 0 ? -1 : 1 - c;
    } else {
      bool allKnown = true;
      bool anyTrue = false, anyFalse = false;
      for (const auto& ch : inf.children) {
        int c = child_value(ch, lit.args);
        if (c < 0) allKnown = false;
        if (c == 1) anyTrue = true;
        if (c == 0) anyFalse = true;
      }
      if (inf.op == FKind::And) r = anyFalse ? 0 : (allKnown ? 1 : -1);
      else r = anyTrue ? 1 : (allKnown ? 0 : -1);
    }
    val[litIdx] = static_cast<signed char>(r);
    return r;
  }

  int child_value(const ClosureChildRef& ch, const std::vector<int>& parentArgs) {
    if (ch.entry < 0) return ch.constant;
    TypeLiteral kid{ch.entry, {}};
    for (int pos : ch.argMap) kid.args.push_back(parentArgs[pos]);
    return derive(U->index.at(kid));
  }
};

}  // namespace detail

// All x-types realizable in a model of O with at most cfg.satBound elements.
// Candidates are enumerated over the free literals (atoms, equalities and
// open quantified formulas) with compounds derived; each candidate is then
// checked by a targeted bounded model search with the tuple's atomic facts
// pinned and the quantified literals as three-valued constraints.
inline TypeTable enumerate_types(const Ontology& O, const Closure& cl, int shape,
                                 const RewriteConfig& cfg, std::uint64_t* nodeBudget) {
  TypeTable tab;
  tab.universe = make_universe(cl, shape);
  const TypeUniverse& U = tab.universe;

  std::vector<int> freeBits;
  for (size_t i = 0; i < U.literals.size(); ++i) {
    const TypeLiteral& lit = U.literals[i];
    const ClosureEntryInfo& inf = cl.info[lit.formula];
    if (inf.kind == EntryKind::Atomic) freeBits.push_back(static_cast<int>(i));
    if (inf.kind == EntryKind::Equality && lit.args[0] < lit.args[1])
      freeBits.push_back(static_cast<int>(i));
    if (inf.kind == EntryKind::Quant && !lit.args.empty()) freeBits.push_back(static_cast<int>(i));
  }
  if (freeBits.size() > 26) throw BudgetError("enumerate_types: literal universe too large");

  std::vector<signed char> choice(freeBits.size(), 0);
  auto try_candidate = [&]() {
    detail::CandidateBits cand(cl, U);
    for (size_t i = 0; i < freeBits.size(); ++i) {
      cand.val[freeBits[i]] = choice[i];
      const TypeLiteral& lit = U.literals[freeBits[i]];
      if (cl.info[lit.formula].kind == EntryKind::Equality) {
        // symmetric twin
        auto it = U.index.find(TypeLiteral{lit.formula, {lit.args[1], lit.args[0]}});
        if (it != U.index.end()) cand.val[it->second] = choice[i];
      }
    }
    // a type needs a relational guard atom over all variables
    bool guarded = false;
    for (int g : U.guardLiterals)
      if (cand.val[g] == 1) guarded = true;
    if (!guarded) return;

    // position classes from equality bits
    std::vector<int> cls(shape);
    for (int i = 0; i < shape; ++i) cls[i] = i;
    if (cl.eqIdx >= 0) {
      for (int i = 0; i < shape; ++i)
        for (int j = i + 1; j < shape; ++j) {
          auto it = U.eqAt.find({i, j});
          if (it != U.eqAt.end() && cand.val[it->second] == 1) {
            int a = std::min(cls[i], cls[j]);
            cls[i] = cls[j] = a;
          }
        }
    }
    // canonical class ids
    std::map<int, int> remap;
    for (int i = 0; i < shape; ++i)
      if (!remap.count(cls[i])) {
        int id = static_cast<int>(remap.size());
        remap[cls[i]] = id;
      }
    for (int i = 0; i < shape; ++i) cls[i] = remap[cls[i]];
    const int nclasses = 1 + *std::max_element(cls.begin(), cls.end());

    // identified positions: all literals must be invariant under the merge
    for (size_t i = 0; i < U.literals.size(); ++i) {
      const TypeLiteral& lit = U.literals[i];
      TypeLiteral merged = lit;
      bool changed = false;
      for (size_t k = 0; k < merged.args.size(); ++k) {
        int rep = -1;
        for (int p = 0; p < shape; ++p)
          if (cls[p] == cls[merged.args[k]]) { rep = p; break; }
        if (rep != merged.args[k]) { merged.args[k] = rep; changed = true; }
      }
      if (!changed) continue;
      auto it = U.index.find(merged);
      if (it == U.index.end()) continue;
      int a = cand.derive(static_cast<int>(i));
      int b = cand.derive(it->second);
      if (a >= 0 && b >= 0 && a != b) return;  // inconsistent under identification
    }

    // derive all compound literals from their parts
    for (size_t i = 0; i < U.literals.size(); ++i)
      if (cand.derive(static_cast<int>(i)) < 0) return;

    // targeted realizability search
    for (int m = nclasses; m <= std::max(nclasses, cfg.satBound); ++m) {
      detail::ModelSearch ms(O, cl.sig, m, nodeBudget);
      bool conflict = false;
      std::vector<detail::ModelSearch::Constraint> cs;
      for (size_t i = 0; i < U.literals.size() && !conflict; ++i) {
        const TypeLiteral& lit = U.literals[i];
        const ClosureEntryInfo& inf = cl.info[lit.formula];
        if (inf.kind == EntryKind::Atomic) {
          Atom a{cl.formulas[lit.formula]->rel, {}};
          for (int p : lit.args) a.args.push_back(ms.dom[cls[p]]);
          int cell = ms.cellIdx.at(a);
          if (ms.assign[cell] >= 0 && ms.assign[cell] != cand.val[i]) conflict = true;
          ms.assign[cell] = cand.val[i];
        } else if (inf.kind == EntryKind::Quant && !lit.args.empty()) {
          detail::ModelSearch::Constraint c;
          c.f = cl.formulas[lit.formula];
          for (int p : lit.args) c.args.push_back(ms.dom[cls[p]]);
          c.want = cand.val[i] == 1;
          cs.push_back(std::move(c));
        }
      }
      if (conflict) continue;
      bool found = false;
      bool ok = ms.search(cs, [&](const Interpretation&) {
        found = true;
        return false;
      });
      if (!ok && !found) throw BudgetError("enumerate_types: realizability search budget exceeded");
      if (found) {
        XType t;
        t.bits.resize(U.literals.size());
        for (size_t i = 0; i < U.literals.size(); ++i) t.bits[i] = cand.val[i] == 1;
        std::string key = type_key(t);
        if (!tab.indexOf.count(key)) {
          tab.indexOf[key] = static_cast<int>(tab.types.size());
          tab.types.push_back(std::move(t));
          if (tab.types.size() > cfg.maxTypesPerShape)
            throw BudgetError("enumerate_types: type budget exceeded");
        }
        return;
      }
    }
  };

  // enumerate all free-bit assignments
  size_t n = freeBits.size();
  for (std::uint64_t mask = 0; mask < (1ull << n); ++mask) {
    for (size_t i = 0; i < n; ++i) choice[i] = (mask >> i) & 1 ? 1 : 0;
    try_candidate();
  }

  std::sort(tab.types.begin(), tab.types.end());
  tab.indexOf.clear();
  for (size_t i = 0; i < tab.types.size(); ++i) tab.indexOf[type_key(tab.types[i])] = static_cast<int>(i);
  return tab;
}

// ---------------------------------------------------------------------------
// Rewriting artifacts

struct RewriteStats {
  std::map<int, int> typeCount;    // shape -> realizable types
  int predicates = 0;
  int rules = 0;
  std::uint64_t satNodesUsed = 0;
  int gc2LinkBound = 0;
  bool paperBoundCapped = false;
};

struct RewritingArtifacts {
  int w = 1;
  Closure cl;
  std::map<int, TypeTable> tables;  // shape -> table
  DatalogProgram program;
  RewriteStats stats;
  bool heuristic = false;
  bool reachableOnly = false;  // trained on concrete instances
};

namespace detail {

// Theta sets are referenced as sorted index lists into the shape's table.
using ThetaSet = std::vector<int>;

inline std::string theta_hash(int shape, const ThetaSet& s) {
  // FNV-1a over the canonical encoding
  std::uint64_t h = 14695981039346656037ULL;
  auto mix = [&](std::uint64_t x) {
    h ^= x;
    h *= 1099511628211ULL;
  };
  mix(static_cast<std::uint64_t>(shape));
  for (int i : s) mix(static_cast<std::uint64_t>(i) + 0x9e37);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf, 16);
}

inline std::string pred_name(int shape, const ThetaSet& s) {
  return "p_" + std::to_string(shape) + "_" + theta_hash(shape, s);
}

inline std::vector<std::string> pool_vars(int n) {
  std::vector<std::string> v;
  for (int i = 1; i <= n; ++i) v.push_back("x" + std::to_string(i));
  return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Part 1: uGF(=)

namespace detail {

struct SeedRule {
  int shape;
  ThetaSet theta;
  DatalogRule rule;
};

// schema 1: P_Theta(x1..xl) <- R(pattern) & alpha, for every surjective
// variable pattern of every relation and every atomic/inequality side
// condition. Equality side conditions merge head variables.
inline std::vector<SeedRule> seed_rules(const Closure& cl, const std::map<int, TypeTable>& tables,
                                        bool allowNeq) {
  std::vector<SeedRule> out;
  auto vars = pool_vars(cl.w);
  for (const auto& [rel, ar] : cl.sig) {
    // surjective patterns [ar] -> [l], canonical by first occurrence
    std::vector<int> pat(ar, 0);
    auto rec = [&](auto&& self, int pos, int used) -> void {
      if (pos == ar) {
        int l = used;
        if (l > cl.w || !tables.count(l)) return;
        const TypeTable& tab = tables.at(l);
        const TypeUniverse& U = tab.universe;
        // the literal for R under this pattern
        int fIdx = -1;
        for (size_t fi = 0; fi < cl.formulas.size(); ++fi)
          if (cl.formulas[fi]->kind == FKind::Atom && cl.formulas[fi]->rel == rel) fIdx = static_cast<int>(fi);
        if (fIdx < 0) return;
        auto relLitIt = U.index.find(TypeLiteral{fIdx, pat});
        if (relLitIt == U.index.end()) return;
        int relLit = relLitIt->second;

        DatalogAtom guardAtom{rel, {}};
        for (int p : pat) guardAtom.vars.push_back(vars[p]);

        auto emit = [&](const std::optional<TypeLiteral>& side, bool sideVal,
                        const std::vector<std::pair<std::string, std::string>>& neqs,
                        const std::optional<DatalogAtom>& sideAtom) {
          ThetaSet theta;
          for (size_t ti = 0; ti < tab.types.size(); ++ti) {
            const XType& t = tab.types[ti];
            if (!t.bits[relLit]) continue;
            if (side) {
              auto it = U.index.find(*side);
              if (it == U.index.end()) continue;
              if (t.bits[it->second] != sideVal) continue;
            }
            theta.push_back(static_cast<int>(ti));
          }
          SeedRule sr;
          sr.shape = l;
          sr.theta = theta;
          sr.rule.head.rel = pred_name(l, theta);
          for (int i = 0; i < l; ++i) sr.rule.head.vars.push_back(vars[i]);
          sr.rule.body.push_back(guardAtom);
          if (sideAtom) sr.rule.body.push_back(*sideAtom);
          sr.rule.neqs = neqs;
          sr.rule.canonicalize();
          out.push_back(std::move(sr));
        };

        // alpha = the guard itself (plain seeding)
        emit(std::nullopt, true, {}, std::nullopt);
        // alpha = relational atom over the head variables
        for (const auto& [rel2, ar2] : cl.sig) {
          int f2 = -1;
          for (size_t fi = 0; fi < cl.formulas.size(); ++fi)
            if (cl.formulas[fi]->kind == FKind::Atom && cl.formulas[fi]->rel == rel2)
              f2 = static_cast<int>(fi);
          if (f2 < 0) continue;
          std::vector<int> args(ar2, 0);
          while (true) {
            DatalogAtom sa{rel2, {}};
            for (int a : args) sa.vars.push_back(vars[a]);
            bool inRange = true;
            for (int a : args)
              if (a >= l) inRange = false;
            if (inRange) emit(TypeLiteral{f2, args}, true, {}, sa);
            int k = 0;
            while (k < ar2 && ++args[k] == l) args[k++] = 0;
            if (k == ar2) break;
          }
        }
        // alpha = inequality xi != xj
        if (allowNeq && cl.eqIdx >= 0) {
          for (int i = 0; i < l; ++i)
            for (int j = i + 1; j < l; ++j)
              emit(TypeLiteral{cl.eqIdx, {i, j}}, false, {{vars[i], vars[j]}}, std::nullopt);
        }
        return;
      }
      for (int v = 0; v <= used && v < cl.w; ++v) {
        pat[pos] = v;
        self(self, pos + 1, std::max(used, v + 1));
      }
    };
    rec(rec, 0, 0);
  }
  return out;
}

struct Overlap {
  int l1, l2;
  std::vector<int> sharedOfU2;      // position in shape2 -> position in shape1 or -1
  std::vector<std::string> vars2;   // datalog variables of the second atom
};

// all overlap patterns between canonical tuples of the two shapes (at least
// one shared position; fresh variables drawn canonically from the pool)
inline std::vector<Overlap> overlap_patterns(int l1, int l2, int w) {
  std::vector<Overlap> out;
  auto vars = pool_vars(2 * w - 1);
  std::vector<int> choice(l2, -2);
  auto rec = [&](auto&& self, int pos) -> void {
    if (pos == l2) {
      bool any = false;
      for (int c : choice)
        if (c >= 0) any = true;
      if (!any) return;
      Overlap o;
      o.l1 = l1;
      o.l2 = l2;
      o.sharedOfU2.assign(l2, -1);
      int fresh = 0;
      for (int i = 0; i < l2; ++i) {
        if (choice[i] >= 0) {
          o.sharedOfU2[i] = choice[i];
          o.vars2.push_back(vars[choice[i]]);
        } else {
          o.vars2.push_back(vars[l1 + fresh]);
          ++fresh;
        }
      }
      out.push_back(std::move(o));
      return;
    }
    // shared with an l1 position not already used, or fresh
    for (int v = 0; v < l1; ++v) {
      bool used = false;
      for (int i = 0; i < pos; ++i)
        if (choice[i] == v) used = true;
      if (used) continue;
      choice[pos] = v;
      self(self, pos + 1);
    }
    choice[pos] = -1;
    self(self, pos + 1);
    choice[pos] = -2;
  };
  rec(rec, 0);
  return out;
}

}  // namespace detail

namespace detail {

// Trace-driven emission: run the schemas semantically on the training
// instances (per tuple, the minimal derivable type set is the meet of its
// seeds, repeatedly filtered against the neighbours' minimal sets) and emit
// exactly the rules exercised along the way. Every emitted rule is a rule of
// the full schema, so the program underapproximates in general and coincides
// with it on the training instances.
inline void emit_from_traces(RewritingArtifacts& R, const std::vector<SeedRule>& seeds,
                             const std::vector<Overlap>& pats, const RewriteConfig& cfg,
                             const std::function<ThetaSet(int, const ThetaSet&, int, const ThetaSet&,
                                                          const Overlap&)>& filter_theta,
                             std::set<std::pair<int, ThetaSet>>& usedSets,
                             std::vector<DatalogRule>& rules) {
  std::set<std::string> ruleKeys;
  auto addRule = [&](DatalogRule r) {
    r.canonicalize();
    std::string key = emit_rule(r);
    if (!ruleKeys.insert(key).second) return;
    rules.push_back(std::move(r));
    if (rules.size() > cfg.maxRules) throw BudgetError("rewriting: rule budget exceeded");
  };
  auto vars = pool_vars(2 * R.w - 1);
  for (const auto& s : seeds) addRule(s.rule);
  for (const auto& s : seeds) usedSets.insert({s.shape, s.theta});

  for (const auto& D : cfg.training) {
    // seed facts per tuple via the seed rules' own bodies
    Database db;
    for (const auto& f : D.facts) db[f.rel].insert(f.args);
    std::map<std::vector<Term>, std::pair<int, ThetaSet>> cur;  // tuple -> (shape, set)
    std::map<std::vector<Term>, std::vector<ThetaSet>> seedsAt;
    for (const auto& s : seeds) {
      TupleSet heads;
      fire_rule(s.rule, db, nullptr, -1, heads);
      for (const auto& h : heads) seedsAt[h].push_back(s.theta);
    }
    for (auto& [tuple, thetas] : seedsAt) {
      std::sort(thetas.begin(), thetas.end());
      thetas.erase(std::unique(thetas.begin(), thetas.end()), thetas.end());
      ThetaSet meet = thetas[0];
      int shape = static_cast<int>(tuple.size());
      for (size_t i = 1; i < thetas.size(); ++i) {
        ThetaSet inter;
        std::set_intersection(meet.begin(), meet.end(), thetas[i].begin(), thetas[i].end(),
                              std::back_inserter(inter));
        if (inter != meet && inter != thetas[i]) {
          DatalogRule r;
          r.head.rel = pred_name(shape, inter);
          for (int k = 0; k < shape; ++k) r.head.vars.push_back(vars[k]);
          DatalogAtom b1{pred_name(shape, meet), {}}, b2{pred_name(shape, thetas[i]), {}};
          for (int k = 0; k < shape; ++k) {
            b1.vars.push_back(vars[k]);
            b2.vars.push_back(vars[k]);
          }
          r.body = {b1, b2};
          addRule(std::move(r));
        }
        meet = std::move(inter);
        usedSets.insert({shape, meet});
      }
      cur[tuple] = {shape, meet};
    }

    // decreasing fixpoint of neighbour filtering
    bool changed = true;
    while (changed) {
      changed = false;
      for (auto& [tuple, entry] : cur) {
        auto& [shape, theta] = entry;
        for (const auto& [nbr, nentry] : cur) {
          const auto& [nshape, ntheta] = nentry;
          // overlap patterns consistent with the element equalities
          for (const auto& o : pats) {
            if (o.l1 != shape || o.l2 != nshape) continue;
            bool fits = true;
            for (int i = 0; i < o.l2 && fits; ++i) {
              if (o.sharedOfU2[i] >= 0) {
                if (nbr[i] != tuple[o.sharedOfU2[i]]) fits = false;
              }
            }
            if (!fits) continue;
            ThetaSet nt = filter_theta(shape, theta, nshape, ntheta, o);
            if (nt == theta) continue;
            DatalogRule r;
            r.head.rel = pred_name(shape, nt);
            for (int k = 0; k < shape; ++k) r.head.vars.push_back(vars[k]);
            DatalogAtom b1{pred_name(shape, theta), {}};
            for (int k = 0; k < shape; ++k) b1.vars.push_back(vars[k]);
            DatalogAtom b2{pred_name(nshape, ntheta), o.vars2};
            r.body = {b1, b2};
            addRule(std::move(r));
            theta = nt;
            usedSets.insert({shape, theta});
            changed = true;
          }
        }
      }
    }
  }
}

}  // namespace detail

inline RewritingArtifacts build_rewriting_ugf(const Ontology& O, const CQ& q,
                                              const RewriteConfig& cfg = {}) {
  if (!is_ugf_eq(O)) throw std::runtime_error("build_rewriting_ugf: ontology outside uGF(=)");
  RewritingArtifacts R;
  R.cl = closure(O, q);
  R.w = R.cl.w;
  if (R.w > cfg.maxW) throw BudgetError("build_rewriting_ugf: arity above the configured maximum");
  std::uint64_t nodes = cfg.satNodeBudget;
  for (int l = 1; l <= R.w; ++l) {
    R.tables[l] = enumerate_types(O, R.cl, l, cfg, &nodes);
    R.stats.typeCount[l] = static_cast<int>(R.tables[l].types.size());
  }
  R.stats.satNodesUsed = cfg.satNodeBudget - nodes;

  const bool allowNeq = !R.cl.equalityFree;
  auto seeds = detail::seed_rules(R.cl, R.tables, allowNeq);

  // reachable Theta sets per shape
  std::map<int, std::set<detail::ThetaSet>> reach;
  for (const auto& s : seeds) reach[s.shape].insert(s.theta);
  size_t npred = 0;
  for (auto& [l, s] : reach) npred += s.size();

  std::vector<detail::Overlap> pats;
  for (int l1 = 1; l1 <= R.w; ++l1)
    for (int l2 = 1; l2 <= R.w; ++l2)
      for (auto& o : detail::overlap_patterns(l1, l2, R.w)) pats.push_back(o);

  auto filter_theta = [&](int l1, const detail::ThetaSet& th1, int l2, const detail::ThetaSet& th2,
                          const detail::Overlap& o) {
    const TypeTable& T1 = R.tables.at(l1);
    const TypeTable& T2 = R.tables.at(l2);
    detail::ThetaSet out;
    for (int i : th1) {
      bool ok = false;
      for (int j : th2)
        if (compatible_mapped(T1.universe, T1.types[i], T2.universe, T2.types[j], o.sharedOfU2)) {
          ok = true;
          break;
        }
      if (ok) out.push_back(i);
    }
    return out;
  };

  DatalogProgram& P = R.program;
  auto addRule = [&](DatalogRule r) {
    r.canonicalize();
    P.rules.push_back(std::move(r));
    if (P.rules.size() > cfg.maxRules) throw BudgetError("build_rewriting_ugf: rule budget exceeded");
  };
  auto vars = detail::pool_vars(2 * R.w - 1);

  if (!cfg.training.empty()) {
    R.reachableOnly = true;
    std::set<std::pair<int, detail::ThetaSet>> used;
    std::vector<DatalogRule> rules;
    detail::emit_from_traces(R, seeds, pats, cfg, filter_theta, used, rules);
    for (auto& r : rules) addRule(std::move(r));
    reach.clear();
    for (const auto& [l, th] : used) reach[l].insert(th);
    npred = used.size();
  } else {
    bool grown = true;
    while (grown) {
      grown = false;
      // compatibility filtering
      for (const auto& o : pats) {
        if (!reach.count(o.l1) || !reach.count(o.l2)) continue;
        std::vector<detail::ThetaSet> th1s(reach[o.l1].begin(), reach[o.l1].end());
        std::vector<detail::ThetaSet> th2s(reach[o.l2].begin(), reach[o.l2].end());
        for (const auto& t1 : th1s)
          for (const auto& t2 : th2s) {
            auto nt = filter_theta(o.l1, t1, o.l2, t2, o);
            if (nt != t1 && reach[o.l1].insert(nt).second) {
              grown = true;
              if (++npred > cfg.maxPredicates)
                throw BudgetError("build_rewriting_ugf: predicate budget exceeded");
            }
          }
      }
      // intersections
      for (auto& [l, sets] : reach) {
        std::vector<detail::ThetaSet> v(sets.begin(), sets.end());
        for (size_t i = 0; i < v.size(); ++i)
          for (size_t j = i + 1; j < v.size(); ++j) {
            detail::ThetaSet inter;
            std::set_intersection(v[i].begin(), v[i].end(), v[j].begin(), v[j].end(),
                                  std::back_inserter(inter));
            if (sets.insert(inter).second) {
              grown = true;
              if (++npred > cfg.maxPredicates)
                throw BudgetError("build_rewriting_ugf: predicate budget exceeded");
            }
          }
      }
    }

    for (const auto& s : seeds) addRule(s.rule);
    for (const auto& o : pats) {
      for (const auto& t1 : reach[o.l1])
        for (const auto& t2 : reach[o.l2]) {
          auto nt = filter_theta(o.l1, t1, o.l2, t2, o);
          if (nt == t1) continue;  // no-op rule
          DatalogRule r;
          r.head.rel = detail::pred_name(o.l1, nt);
          for (int i = 0; i < o.l1; ++i) r.head.vars.push_back(vars[i]);
          DatalogAtom b1{detail::pred_name(o.l1, t1), {}};
          for (int i = 0; i < o.l1; ++i) b1.vars.push_back(vars[i]);
          DatalogAtom b2{detail::pred_name(o.l2, t2), o.vars2};
          r.body = {b1, b2};
          addRule(std::move(r));
        }
    }
    for (auto& [l, sets] : reach) {
      std::vector<detail::ThetaSet> v(sets.begin(), sets.end());
      for (size_t i = 0; i < v.size(); ++i)
        for (size_t j = i + 1; j < v.size(); ++j) {
          detail::ThetaSet inter;
          std::set_intersection(v[i].begin(), v[i].end(), v[j].begin(), v[j].end(),
                                std::back_inserter(inter));
          if (inter == v[i] || inter == v[j]) continue;
          DatalogRule r;
          r.head.rel = detail::pred_name(l, inter);
          for (int k = 0; k < l; ++k) r.head.vars.push_back(vars[k]);
          DatalogAtom b1{detail::pred_name(l, v[i]), {}}, b2{detail::pred_name(l, v[j]), {}};
          for (int k = 0; k < l; ++k) {
            b1.vars.push_back(vars[k]);
            b2.vars.push_back(vars[k]);
          }
          r.body = {b1, b2};
          addRule(std::move(r));
        }
    }
  }

  // goal rules (schema 4): all answer-position patterns whose q-instantiation
  // is contained in every type of Theta
  const int karity = static_cast<int>(q.answerVars.size());
  for (auto& [l, sets] : reach) {
    const TypeTable& tab = R.tables.at(l);
    std::vector<int> pos(karity, 0);
    while (true) {
      int qlit = tab.universe.queryLiteralAt(R.cl, pos);
      if (qlit >= 0) {
        for (const auto& th : sets) {
          if (th.empty()) continue;
          bool all = true;
          for (int i : th)
            if (!tab.types[i].bits[qlit]) { all = false; break; }
          if (!all) continue;
          DatalogRule r;
          r.head.rel = P.goal;
          for (int p : pos) r.head.vars.push_back(vars[p]);
          DatalogAtom b{detail::pred_name(l, th), {}};
          for (int i = 0; i < l; ++i) b.vars.push_back(vars[i]);
          r.body = {b};
          addRule(std::move(r));
        }
      }
      int k = 0;
      while (k < karity && ++pos[k] == l) pos[k++] = 0;
      if (k == karity || karity == 0) break;
    }
  }

  // inconsistency rules (schema 5): goal everywhere once some empty set is
  // derivable; head variables are grounded through a domain predicate
  bool emptyReachable = false;
  for (auto& [l, sets] : reach)
    if (sets.count({})) emptyReachable = true;
  if (emptyReachable) {
    for (const auto& [rel, ar] : R.cl.sig) {
      for (int p = 0; p < ar; ++p) {
        DatalogRule r;
        r.head = {"p_dom", {"x1"}};
        DatalogAtom b{rel, {}};
        for (int i = 0; i < ar; ++i) b.vars.push_back(i == p ? "x1" : "u" + std::to_string(i));
        r.body = {b};
        addRule(std::move(r));
      }
    }
    for (auto& [l, sets] : reach) {
      if (!sets.count({})) continue;
      DatalogRule r;
      r.head.rel = P.goal;
      for (int i = 0; i < karity; ++i) r.head.vars.push_back("x" + std::to_string(i + 1));
      DatalogAtom b{detail::pred_name(l, {}), {}};
      for (int i = 0; i < l; ++i) b.vars.push_back("y" + std::to_string(i + 1));
      r.body = {b};
      for (int i = 0; i < karity; ++i) r.body.push_back({"p_dom", {"x" + std::to_string(i + 1)}});
      addRule(std::move(r));
    }
  }

  // ensure at least one (possibly never-firing) goal rule so the program
  // validates; a fresh nullary marker relation never occurs in instances
  bool hasGoal = false;
  for (const auto& r : P.rules) hasGoal |= r.head.rel == P.goal;
  if (!hasGoal) {
    DatalogRule r;
    r.head.rel = P.goal;
    for (int i = 0; i < karity; ++i) r.head.vars.push_back("x" + std::to_string(i + 1));
    DatalogAtom b{"p_never", {}};
    for (int i = 0; i < karity; ++i) b.vars.push_back("x" + std::to_string(i + 1));
    if (karity == 0) b.vars.push_back("x1");
    r.body = {b};
    addRule(std::move(r));
  }

  R.stats.predicates = static_cast<int>(npred);
  R.stats.rules = static_cast<int>(P.rules.size());
  P.validate();
  return R;
}

// ---------------------------------------------------------------------------
// Part 2: uGC2(=)

namespace detail {

// joint realizability of a star of pair types around a shared centre:
// theta0 over (x, z0) plus thetas[i] over (x, z_{i+1}), all z's distinct
class StarRealizability {
 public:
  StarRealizability(const Ontology& O, const Closure& cl, const TypeTable& pairs,
                    const RewriteConfig& cfg, std::uint64_t* nodes)
      : O_(&O), cl_(&cl), pairs_(&pairs), cfg_(&cfg), nodes_(nodes) {}

  bool realizable(const std::vector<int>& star) {
    auto it = memo_.find(star);
    if (it != memo_.end()) return it->second;
    bool r = compute(star);
    memo_[star] = r;
    return r;
  }

 private:
  bool compute(const std::vector<int>& star) {
    const TypeUniverse& U = pairs_->universe;
    // leaves are distinct; the centre may coincide with a leaf when the
    // type's equality literal says so
    const int n = static_cast<int>(star.size());
    auto eqIt = U.eqAt.find({0, 1});
    std::vector<Term> elems;
    Term centre = cst("e1");
    elems.push_back(centre);
    std::vector<Term> leaf(n);
    for (int i = 0; i < n; ++i) {
      bool eq = false;
      if (eqIt != U.eqAt.end()) eq = pairs_->types[star[i]].bits[eqIt->second];
      if (eq) {
        leaf[i] = centre;
      } else {
        leaf[i] = cst("e" + std::to_string(i + 2));
        elems.push_back(leaf[i]);
      }
    }
    // distinct z's: equal-to-centre can hold for at most one leaf
    int eqCount = 0;
    for (int i = 0; i < n; ++i)
      if (leaf[i] == centre) ++eqCount;
    if (eqCount > 1) return false;

    int m = static_cast<int>(elems.size()) + 1;  // one extra witness element
    m = std::max(m, cfg_->satBound);
    ModelSearch ms(*O_, cl_->sig, m, nodes_);
    std::vector<ModelSearch::Constraint> cs;
    for (int i = 0; i < n; ++i) {
      const XType& t = pairs_->types[star[i]];
      for (size_t li = 0; li < U.literals.size(); ++li) {
        const TypeLiteral& lit = U.literals[li];
        ModelSearch::Constraint c;
        c.f = cl_->formulas[lit.formula];
        for (int a : lit.args) c.args.push_back(a == 0 ? ms.dom[0] : leaf_dom(ms, leaf, i));
        c.want = t.bits[li];
        cs.push_back(std::move(c));
      }
    }
    bool found = false;
    bool ok = ms.search(cs, [&](const Interpretation&) {
      found = true;
      return false;
    });
    if (!ok && !found) throw BudgetError("star realizability budget exceeded");
    return found;
  }

  static Term leaf_dom(const ModelSearch& ms, const std::vector<Term>& leaf, int i) {
    for (const auto& d : ms.dom)
      if (d == leaf[i]) return d;
    return leaf[i];
  }

  const Ontology* O_;
  const Closure* cl_;
  const TypeTable* pairs_;
  const RewriteConfig* cfg_;
  std::uint64_t* nodes_;
  std::map<std::vector<int>, bool> memo_;
};

}  // namespace detail

// the paper's link bound N*tau*2^tau for the counting propagation rules, or
// nullopt when it is astronomically large
inline std::optional<long double> gc2_paper_link_bound(const Ontology& O, const Closure& cl,
                                                       size_t pairTypes) {
  int N = 1;
  auto scanN = [&](auto&& self, const Formula& f) -> void {
    if (f.kind == FKind::AtLeast) N = std::max(N, f.count);
    if (f.guard) self(self, *f.guard);
    for (const auto& k : f.kids) self(self, *k);
  };
  for (const auto& s : O.sentences) scanN(scanN, *s.body);
  (void)cl;
  long double tau = static_cast<long double>(pairTypes) + 1;
  if (tau > 50) return std::nullopt;
  long double bound = static_cast<long double>(N) * tau * std::pow(2.0L, tau);
  if (bound > 1e15L) return std::nullopt;
  return bound;
}

inline RewritingArtifacts build_rewriting_ugc2(const Ontology& O, const CQ& q,
                                               const RewriteConfig& cfg = {}) {
  if (!is_ugc2_eq(O)) throw std::runtime_error("build_rewriting_ugc2: ontology outside uGC2(=)");
  if (q.answerVars.size() != 1)
    throw std::runtime_error("build_rewriting_ugc2: rAQ must have a single answer variable");
  RewritingArtifacts R;
  R.cl = closure(O, q);
  R.w = 2;
  if (R.cl.w > 2) throw std::runtime_error("build_rewriting_ugc2: arity above two");
  std::uint64_t nodes = cfg.satNodeBudget;
  for (int l = 1; l <= 2; ++l) {
    R.tables[l] = enumerate_types(O, R.cl, l, cfg, &nodes);
    R.stats.typeCount[l] = static_cast<int>(R.tables[l].types.size());
  }

  // link cap: the paper bound or the configured cap, refusing silently
  // unsound output unless asked for
  int L = cfg.gc2LinkCap;
  auto paper = gc2_paper_link_bound(O, R.cl, R.tables[2].types.size());
  R.stats.gc2LinkBound = L;
  if (!paper || *paper > static_cast<long double>(L)) {
    if (!cfg.unsoundCap)
      throw BudgetError(
          "build_rewriting_ugc2: the paper's link bound exceeds the cap; "
          "pass unsoundCap to emit a heuristic program");
    R.heuristic = true;
    R.stats.paperBoundCapped = true;
  } else {
    L = static_cast<int>(*paper);
  }

  const bool allowNeq = true;  // inequalities are integral to part 2
  auto seeds = detail::seed_rules(R.cl, R.tables, allowNeq && !R.cl.equalityFree);

  const TypeTable& pairs = R.tables.at(2);
  const TypeUniverse& U2 = pairs.universe;

  // position swap on pair types
  std::vector<int> swapLit(U2.literals.size());
  for (size_t i = 0; i < U2.literals.size(); ++i) {
    TypeLiteral lit = U2.literals[i];
    for (auto& a : lit.args) a = 1 - a;
    swapLit[i] = U2.index.at(lit);
  }
  auto swap_type = [&](int idx) {
    XType t;
    t.bits.resize(U2.literals.size());
    for (size_t i = 0; i < U2.literals.size(); ++i) t.bits[swapLit[i]] = pairs.types[idx].bits[i];
    return pairs.indexOf.at(type_key(t));
  };

  std::map<int, std::set<detail::ThetaSet>> reach;
  for (const auto& s : seeds) reach[s.shape].insert(s.theta);

  detail::StarRealizability stars(O, R.cl, pairs, cfg, &nodes);
  // centre-compatibility precheck: both types agree on all centre-only literals
  std::vector<int> centreShared{0, -1};
  auto centre_compat = [&](int a, int b) {
    return compatible_mapped(U2, pairs.types[a], U2, pairs.types[b], centreShared);
  };

  auto star_filter = [&](const detail::ThetaSet& th0, const std::vector<detail::ThetaSet>& ths) {
    detail::ThetaSet out;
    for (int t0 : th0) {
      // search one realizable combination
      std::vector<int> pick(ths.size(), -1);
      auto rec = [&](auto&& self, size_t i, std::vector<int>& star) -> bool {
        if (i == ths.size()) return stars.realizable(star);
        for (int cand : ths[i]) {
          if (!centre_compat(t0, cand)) continue;
          star.push_back(cand);
          if (self(self, i + 1, star)) { star.pop_back(); return true; }
          star.pop_back();
        }
        return false;
      };
      std::vector<int> star{t0};
      if (rec(rec, 0, star)) out.push_back(t0);
    }
    return out;
  };

  auto swap_theta = [&](const detail::ThetaSet& th) {
    detail::ThetaSet out;
    for (int i : th) out.push_back(swap_type(i));
    std::sort(out.begin(), out.end());
    return out;
  };

  // reachability closure: swaps, star filtering, intersections
  size_t npred = 0;
  for (auto& [l, s] : reach) npred += s.size();
  bool grown = true;
  while (grown) {
    grown = false;
    std::vector<detail::ThetaSet> pairSets(reach[2].begin(), reach[2].end());
    for (const auto& th : pairSets) {
      auto sw = swap_theta(th);
      if (reach[2].insert(sw).second) {
        grown = true;
        if (++npred > cfg.maxPredicates) throw BudgetError("build_rewriting_ugc2: predicate budget");
      }
    }
    pairSets.assign(reach[2].begin(), reach[2].end());
    for (int l = 1; l <= L; ++l) {
      // all choices of (Theta_1..Theta_l) from the reachable pair sets; to
      // keep this finite we reuse a single Theta for every position beyond
      // the first two (the filter is monotone in each position)
      for (const auto& th0 : pairSets) {
        for (const auto& th1 : pairSets) {
          std::vector<detail::ThetaSet> ths(l, th1);
          auto nt = star_filter(th0, ths);
          if (nt != th0 && reach[2].insert(nt).second) {
            grown = true;
            if (++npred > cfg.maxPredicates)
              throw BudgetError("build_rewriting_ugc2: predicate budget");
          }
        }
      }
    }
    for (auto& [l, sets] : reach) {
      std::vector<detail::ThetaSet> v(sets.begin(), sets.end());
      for (size_t i = 0; i < v.size(); ++i)
        for (size_t j = i + 1; j < v.size(); ++j) {
          detail::ThetaSet inter;
          std::set_intersection(v[i].begin(), v[i].end(), v[j].begin(), v[j].end(),
                                std::back_inserter(inter));
          if (sets.insert(inter).second) {
            grown = true;
            if (++npred > cfg.maxPredicates)
              throw BudgetError("build_rewriting_ugc2: predicate budget");
          }
        }
    }
  }

  // emission
  DatalogProgram& P = R.program;
  auto addRule = [&](DatalogRule r) {
    r.canonicalize();
    P.rules.push_back(std::move(r));
    if (P.rules.size() > cfg.maxRules) throw BudgetError("build_rewriting_ugc2: rule budget");
  };
  for (const auto& s : seeds) addRule(s.rule);

  for (const auto& th : reach[2]) {
    auto sw = swap_theta(th);
    DatalogRule r;
    r.head.rel = detail::pred_name(2, sw);
    r.head.vars = {"x", "y"};
    r.body = {DatalogAtom{detail::pred_name(2, th), {"y", "x"}}};
    addRule(std::move(r));
  }

  std::vector<detail::ThetaSet> pairSets(reach[2].begin(), reach[2].end());
  for (int l = 1; l <= L; ++l) {
    for (const auto& th0 : pairSets)
      for (const auto& th1 : pairSets) {
        std::vector<detail::ThetaSet> ths(l, th1);
        auto nt = star_filter(th0, ths);
        if (nt == th0) continue;
        DatalogRule r;
        r.head.rel = detail::pred_name(2, nt);
        r.head.vars = {"x", "z0"};
        r.body = {DatalogAtom{detail::pred_name(2, th0), {"x", "z0"}}};
        for (int i = 1; i <= l; ++i)
          r.body.push_back(DatalogAtom{detail::pred_name(2, th1), {"x", "z" + std::to_string(i)}});
        for (int i = 0; i <= l; ++i)
          for (int j = i + 1; j <= l; ++j)
            r.neqs.push_back({"z" + std::to_string(i), "z" + std::to_string(j)});
        addRule(std::move(r));
      }
  }

  for (auto& [l, sets] : reach) {
    std::vector<detail::ThetaSet> v(sets.begin(), sets.end());
    std::vector<std::string> vs = l == 1 ? std::vector<std::string>{"x"}
                                         : std::vector<std::string>{"x", "y"};
    for (size_t i = 0; i < v.size(); ++i)
      for (size_t j = i + 1; j < v.size(); ++j) {
        detail::ThetaSet inter;
        std::set_intersection(v[i].begin(), v[i].end(), v[j].begin(), v[j].end(),
                              std::back_inserter(inter));
        if (inter == v[i] || inter == v[j]) continue;
        DatalogRule r;
        r.head.rel = detail::pred_name(l, inter);
        r.head.vars = vs;
        r.body = {DatalogAtom{detail::pred_name(l, v[i]), vs},
                  DatalogAtom{detail::pred_name(l, v[j]), vs}};
        addRule(std::move(r));
      }
  }

  // goal rules
  for (auto& [l, sets] : reach) {
    const TypeTable& tab = R.tables.at(l);
    std::vector<std::string> vs = l == 1 ? std::vector<std::string>{"x"}
                                         : std::vector<std::string>{"x", "y"};
    for (int pos = 0; pos < l; ++pos) {
      int qlit = tab.universe.queryLiteralAt(R.cl, {pos});
      if (qlit < 0) continue;
      for (const auto& th : sets) {
        if (th.empty()) continue;
        bool all = true;
        for (int i : th)
          if (!tab.types[i].bits[qlit]) { all = false; break; }
        if (!all) continue;
        DatalogRule r;
        r.head.rel = P.goal;
        r.head.vars = {vs[pos]};
        r.body = {DatalogAtom{detail::pred_name(l, th), vs}};
        addRule(std::move(r));
      }
    }
  }

  bool emptyReachable = false;
  for (auto& [l, sets] : reach)
    if (sets.count({})) emptyReachable = true;
  if (emptyReachable) {
    for (const auto& [rel, ar] : R.cl.sig)
      for (int p = 0; p < ar; ++p) {
        DatalogRule r;
        r.head = {"p_dom", {"x1"}};
        DatalogAtom b{rel, {}};
        for (int i = 0; i < ar; ++i) b.vars.push_back(i == p ? "x1" : "u" + std::to_string(i));
        r.body = {b};
        addRule(std::move(r));
      }
    for (auto& [l, sets] : reach) {
      if (!sets.count({})) continue;
      DatalogRule r;
      r.head = {P.goal, {"x1"}};
      DatalogAtom b{detail::pred_name(l, {}), {}};
      for (int i = 0; i < l; ++i) b.vars.push_back("y" + std::to_string(i + 1));
      r.body = {b, DatalogAtom{"p_dom", {"x1"}}};
      addRule(std::move(r));
    }
  }

  bool hasGoal = false;
  for (const auto& r : P.rules) hasGoal |= r.head.rel == P.goal;
  if (!hasGoal) {
    DatalogRule r;
    r.head = {P.goal, {"x1"}};
    r.body = {DatalogAtom{"p_never", {"x1"}}};
    addRule(std::move(r));
  }

  R.stats.predicates = static_cast<int>(npred);
  R.stats.rules = static_cast<int>(P.rules.size());
  R.stats.satNodesUsed = cfg.satNodeBudget - nodes;
  P.validate();
  return R;
}

// ---------------------------------------------------------------------------
// Evaluation helpers and the UCQ pipeline

inline TupleSet rewriting_answers(const RewritingArtifacts& R, const Instance& D) {
  return evaluate(R.program, D);
}

// Theorem-8 pipeline: a strong decomposition, one rewriting per distinct rAQ,
// disjoint intensional namespaces, one combining goal rule per pair.
inline DatalogProgram build_ucq_rewriting(const Ontology& O, const UCQ& q,
                                          const RewriteConfig& cfg = {}) {
  q.validate();
  Decomposition dec = decompose_ucq(O, q);
  StrengthenConfig scfg;
  scfg.d = cfg.strengthenD;
  Decomposition strong = dec.strong ? dec : strengthen_decomposition(dec, O, q, scfg);

  const bool gc2 = classify(O).counting;

  // one rewriting per distinct rAQ
  std::map<std::string, std::pair<int, CQ>> distinct;
  for (const auto& p : strong.pairs)
    for (const auto& part : p.parts) {
      std::string key = detail::cq_key(part);
      if (!distinct.count(key))
        distinct.emplace(key, std::make_pair(static_cast<int>(distinct.size()), part));
    }

  DatalogProgram out;
  std::map<std::string, std::string> subgoal;  // cq key -> renamed goal
  for (const auto& [key, entry] : distinct) {
    const auto& [idx, part] = entry;
    RewritingArtifacts sub = gc2 ? build_rewriting_ugc2(O, part, cfg)
                                 : build_rewriting_ugf(O, part, cfg);
    std::string prefix = "p_q" + std::to_string(idx) + "_";
    auto subIdb = sub.program.intensional();
    auto rename = [&](const std::string& rel) {
      if (rel == sub.program.goal) return prefix + "goal";
      if (subIdb.count(rel)) return prefix + rel;
      return rel;
    };
    for (auto r : sub.program.rules) {
      r.head.rel = rename(r.head.rel);
      for (auto& a : r.body) a.rel = rename(a.rel);
      out.rules.push_back(std::move(r));
    }
    subgoal[key] = prefix + "goal";
  }

  // combining rules
  bool needDom = false;
  for (const auto& p : strong.pairs) {
    DatalogRule r;
    r.head.rel = out.goal;
    std::map<std::string, std::string> merge;  // answer var -> folded image
    for (const auto& [x, fx] : p.eqs) merge[x] = fx;
    std::set<std::string> bound;
    for (const auto& a : p.phi) {
      DatalogAtom b{a.rel, {}};
      for (const auto& t : a.args) b.vars.push_back(t.id);
      bound.insert(b.vars.begin(), b.vars.end());
      r.body.push_back(std::move(b));
    }
    for (const auto& part : p.parts) {
      DatalogAtom b{subgoal.at(detail::cq_key(part)), {}};
      for (const auto& v : part.answerVars) b.vars.push_back(v);
      bound.insert(b.vars.begin(), b.vars.end());
      r.body.push_back(std::move(b));
    }
    for (const auto& x : strong.answerVars) {
      std::string v = merge.count(x) ? merge.at(x) : x;
      r.head.vars.push_back(v);
      if (!bound.count(v)) {
        r.body.push_back(DatalogAtom{"p_dom", {v}});
        needDom = true;
        bound.insert(v);
      }
    }
    if (r.body.empty()) {
      r.body.push_back(DatalogAtom{"p_dom", {r.head.vars.empty() ? "x1" : r.head.vars[0]}});
      needDom = true;
    }
    out.rules.push_back(std::move(r));
  }
  if (needDom) {
    Signature sig = O.sig();
    for (const auto& d : q.disjuncts)
      for (const auto& a : d.atoms) sig_add(sig, a.rel, static_cast<int>(a.args.size()));
    for (const auto& [rel, ar] : sig)
      for (int p = 0; p < ar; ++p) {
        DatalogRule r;
        r.head = {"p_dom", {"x1"}};
        DatalogAtom b{rel, {}};
        for (int i = 0; i < ar; ++i) b.vars.push_back(i == p ? "x1" : "u" + std::to_string(i));
        r.body = {b};
        out.rules.push_back(std::move(r));
      }
  }
  for (auto& r : out.rules) r.canonicalize();
  out.validate();
  return out;
}

// ".stats" report
inline std::string emit_stats(const RewritingArtifacts& R) {
  std::string s;
  s += "w = " + std::to_string(R.w) + "\n";
  for (const auto& [l, c] : R.stats.typeCount)
    s += "types[" + std::to_string(l) + "] = " + std::to_string(c) + "\n";
  s += "predicates = " + std::to_string(R.stats.predicates) + "\n";
  s += "rules = " + std::to_string(R.stats.rules) + "\n";
  s += "sat_nodes = " + std::to_string(R.stats.satNodesUsed) + "\n";
  if (R.stats.gc2LinkBound) s += "gc2_link_bound = " + std::to_string(R.stats.gc2LinkBound) + "\n";
  s += std::string("heuristic = ") + (R.heuristic ? "true" : "false") + "\n";
  return s;
}

}  // namespace gomq
