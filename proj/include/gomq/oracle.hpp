#pragma once

// Brute-force ground truth: consistency, certain answers and saturation via a
// memoized disjunctive chase.
//
// The chase creates fresh labelled nulls for existential and counting
// obligations and repairs equality/functionality violations by unifying a
// null with another term. Reusing existing elements as witnesses is not
// branched on (any such model extends a fresh-null branch followed by
// unifications); instead, a reuse-only "closing" search runs whenever a
// branch is about to create nulls, so finite models over the current domain
// are still found. Terminal branches are verified models; every model of the
// input contains a homomorphic image of some explored terminal when the run
// is complete, which is what makes Yes verdicts sound.

#include "gomq/queries.hpp"

namespace gomq {

enum class V3 { Yes, No, Unknown };

inline std::string to_string(V3 v) {
  switch (v) {
    case V3::Yes: return "Yes";
    case V3::No: return "No";
    case V3::Unknown: return "Unknown";
  }
  return "Unknown";
}

struct Verdict3 {
  V3 value = V3::Unknown;
  std::string mode;  // complete-universal | chase-exhausted | inconsistent | budget
  std::optional<Interpretation> witness;
};

struct ChaseBudget {
  int maxNewNulls = 32;
  int maxBranchDepth = 8;
  int maxBranches = 4096;

  ChaseBudget scaled(double f) const {
    ChaseBudget b = *this;
    b.maxNewNulls = static_cast<int>(b.maxNewNulls * f);
    b.maxBranchDepth = static_cast<int>(b.maxBranchDepth * f);
    b.maxBranches = static_cast<int>(b.maxBranches * f);
    return b;
  }
};

// True when no existential or counting quantifier occurs in positive
// polarity and no functionality axiom is present; such ontologies are
// equivalent to universal first-order sentences.
inline bool is_universal(const Ontology& O) {
  if (!O.functional.empty()) return false;
  auto scan = [&](auto&& self, const Formula& f, bool pos) -> bool {
    switch (f.kind) {
      case FKind::True:
      case FKind::False:
      case FKind::Atom:
      case FKind::Eq:
        return true;
      case FKind::Not:
        return self(self, *f.kids[0], !pos);
      case FKind::And:
      case FKind::Or:
        for (const auto& k : f.kids)
          if (!self(self, *k, pos)) return false;
        return true;
      case FKind::Forall:
        return self(self, *f.kids[0], pos);
      case FKind::Exists:
      case FKind::AtLeast:
        if (pos) return false;
        return self(self, *f.kids[0], pos);
    }
    return true;
  };
  for (const auto& s : O.sentences)
    if (!scan(scan, *s.body, true)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Chase internals

namespace detail {

// One way to repair a violated formula: atoms to add (possibly over fresh
// placeholder nulls, ids prefixed "_p") and unifications to apply.
struct ChaseAction {
  std::vector<Atom> add;
  std::vector<std::pair<Term, Term>> unify;  // at least one side a null

  bool creates_nulls() const {
    for (const auto& a : add)
      for (const auto& t : a.args)
        if (t.kind == TermKind::Null && t.id.rfind("_p", 0) == 0) return true;
    return false;
  }
};

inline std::vector<ChaseAction> cross(const std::vector<ChaseAction>& xs,
                                      const std::vector<ChaseAction>& ys) {
  std::vector<ChaseAction> out;
  for (const auto& x : xs)
    for (const auto& y : ys) {
      ChaseAction a = x;
      a.add.insert(a.add.end(), y.add.begin(), y.add.end());
      a.unify.insert(a.unify.end(), y.unify.begin(), y.unify.end());
      out.push_back(std::move(a));
    }
  return out;
}

struct OptionContext {
  const Interpretation* A = nullptr;
  int placeholderCounter = 0;
  bool reuseOnly = false;  // closing mode: witnesses come from the domain

  Term placeholder() { return nul("_p" + std::to_string(++placeholderCounter)); }
};

// All minimal ways to make f true under env, given that atoms can only be
// added and nulls unified. Empty result: this disjunct is unrepairable.
inline std::vector<ChaseAction> options(OptionContext& ctx, const Formula& f, const Env& env);

inline std::vector<ChaseAction> options_not(OptionContext& ctx, const Formula& g, const Env& env) {
  switch (g.kind) {
    case FKind::True:
      return {};
    case FKind::False:
      return {ChaseAction{}};
    case FKind::Atom: {
      Atom a{g.rel, {}};
      for (const auto& v : g.vars) a.args.push_back(env.at(v));
      if (ctx.A->contains(a)) return {};  // present atoms cannot be retracted
      return {ChaseAction{}};
    }
    case FKind::Eq: {
      if (env.at(g.vars[0]) == env.at(g.vars[1])) return {};
      return {ChaseAction{}};
    }
    case FKind::Not:
      return options(ctx, *g.kids[0], env);
    case FKind::And: {
      // ¬(f1 ∧ f2) = ¬f1 ∨ ¬f2
      std::vector<ChaseAction> out;
      for (const auto& k : g.kids) {
        auto o = options_not(ctx, *k, env);
        out.insert(out.end(), o.begin(), o.end());
      }
      return out;
    }
    case FKind::Or: {
      std::vector<ChaseAction> acc{ChaseAction{}};
      for (const auto& k : g.kids) {
        auto o = options_not(ctx, *k, env);
        if (o.empty()) return {};
        acc = cross(acc, o);
      }
      return acc;
    }
    case FKind::Exists: {
      // ¬∃y(α ∧ φ): every current guard match must satisfy ¬φ
      std::vector<ChaseAction> acc{ChaseAction{}};
      bool dead = false;
      guard_matches(*ctx.A, *g.guard, g.qvars, env, [&](Env& ext) {
        auto o = options_not(ctx, *g.kids[0], ext);
        if (o.empty()) { dead = true; return false; }
        acc = cross(acc, o);
        return true;
      });
      if (dead) return {};
      return acc;
    }
    case FKind::Forall: {
      // ¬∀y(α → φ) = ∃y(α ∧ ¬φ); only the reuse route exists, creating a
      // guard atom for a fresh witness of a negated formula is never minimal
      std::vector<ChaseAction> out;
      guard_matches(*ctx.A, *g.guard, g.qvars, env, [&](Env& ext) {
        auto o = options_not(ctx, *g.kids[0], ext);
        out.insert(out.end(), o.begin(), o.end());
        return true;
      });
      return out;
    }
    case FKind::AtLeast: {
      // at most (count-1) witnesses: unify surplus witnesses pairwise
      TermSet witnesses;
      const std::string& z = g.qvars[0];
      guard_matches(*ctx.A, *g.guard, g.qvars, env, [&](Env& ext) {
        Env local = ext;
        if (eval_formula(*ctx.A, *g.kids[0], local)) witnesses.insert(local.at(z));
        return true;
      });
      if (static_cast<int>(witnesses.size()) < g.count) return {ChaseAction{}};
      std::vector<ChaseAction> out;
      std::vector<Term> ws(witnesses.begin(), witnesses.end());
      for (size_t i = 0; i < ws.size(); ++i)
        for (size_t j = i + 1; j < ws.size(); ++j) {
          if (ws[i].kind != TermKind::Null && ws[j].kind != TermKind::Null) continue;
          ChaseAction a;
          a.unify.push_back({ws[i], ws[j]});
          out.push_back(std::move(a));
        }
      return out;
    }
  }
  return {};
}

inline std::vector<ChaseAction> options(OptionContext& ctx, const Formula& f, const Env& env) {
  switch (f.kind) {
    case FKind::True:
      return {ChaseAction{}};
    case FKind::False:
      return {};
    case FKind::Atom: {
      Atom a{f.rel, {}};
      for (const auto& v : f.vars) a.args.push_back(env.at(v));
      if (ctx.A->contains(a)) return {ChaseAction{}};
      ChaseAction act;
      act.add.push_back(std::move(a));
      return {act};
    }
    case FKind::Eq: {
      Term u = env.at(f.vars[0]), v = env.at(f.vars[1]);
      if (u == v) return {ChaseAction{}};
      if (u.kind == TermKind::Null || v.kind == TermKind::Null) {
        ChaseAction act;
        act.unify.push_back({u, v});
        return {act};
      }
      return {};  // distinct constants can never be identified
    }
    case FKind::Not:
      return options_not(ctx, *f.kids[0], env);
    case FKind::And: {
      std::vector<ChaseAction> acc{ChaseAction{}};
      for (const auto& k : f.kids) {
        auto o = options(ctx, *k, env);
        if (o.empty()) return {};
        acc = cross(acc, o);
      }
      return acc;
    }
    case FKind::Or: {
      std::vector<ChaseAction> out;
      for (const auto& k : f.kids) {
        auto o = options(ctx, *k, env);
        out.insert(out.end(), o.begin(), o.end());
      }
      return out;
    }
    case FKind::Exists: {
      std::vector<ChaseAction> out;
      if (ctx.reuseOnly) {
        // witnesses drawn from the current domain
        if (f.guard->kind == FKind::Eq) {
          guard_matches(*ctx.A, *f.guard, f.qvars, env, [&](Env& ext) {
            auto o = options(ctx, *f.kids[0], ext);
            out.insert(out.end(), o.begin(), o.end());
            return true;
          });
          return out;
        }
        auto domset = ctx.A->dom();
        std::vector<Term> dom(domset.begin(), domset.end());
        std::vector<Term> pick(f.qvars.size());
        auto rec = [&](auto&& self, size_t i) -> void {
          if (i == f.qvars.size()) {
            Env ext = env;
            for (size_t k = 0; k < f.qvars.size(); ++k) ext[f.qvars[k]] = pick[k];
            Atom ga{f.guard->rel, {}};
            for (const auto& v : f.guard->vars) ga.args.push_back(ext.at(v));
            ChaseAction base;
            if (!ctx.A->contains(ga)) base.add.push_back(ga);
            auto o = options(ctx, *f.kids[0], ext);
            for (const auto& x : cross({base}, o)) out.push_back(x);
            return;
          }
          for (const auto& t : dom) {
            pick[i] = t;
            self(self, i + 1);
          }
        };
        rec(rec, 0);
        return out;
      }
      // fresh-null witness
      if (f.guard->kind == FKind::Eq) {
        // ∃y(x=y ∧ φ): the witness is forced
        guard_matches(*ctx.A, *f.guard, f.qvars, env, [&](Env& ext) {
          auto o = options(ctx, *f.kids[0], ext);
          out.insert(out.end(), o.begin(), o.end());
          return true;
        });
        return out;
      }
      Env ext = env;
      for (const auto& q : f.qvars) ext[q] = ctx.placeholder();
      Atom ga{f.guard->rel, {}};
      for (const auto& v : f.guard->vars) ga.args.push_back(ext.at(v));
      ChaseAction base;
      base.add.push_back(ga);
      auto o = options(ctx, *f.kids[0], ext);
      return cross({base}, o);
    }
    case FKind::Forall: {
      std::vector<ChaseAction> acc{ChaseAction{}};
      bool dead = false;
      guard_matches(*ctx.A, *f.guard, f.qvars, env, [&](Env& ext) {
        Env local = ext;
        if (eval_formula(*ctx.A, *f.kids[0], local)) return true;  // already fine here
        auto o = options(ctx, *f.kids[0], ext);
        if (o.empty()) { dead = true; return false; }
        acc = cross(acc, o);
        return true;
      });
      if (dead) return {};
      return acc;
    }
    case FKind::AtLeast: {
      TermSet witnesses;
      const std::string& z = f.qvars[0];
      guard_matches(*ctx.A, *f.guard, f.qvars, env, [&](Env& ext) {
        Env local = ext;
        if (eval_formula(*ctx.A, *f.kids[0], local)) witnesses.insert(local.at(z));
        return true;
      });
      int missing = f.count - static_cast<int>(witnesses.size());
      if (missing <= 0) return {ChaseAction{}};
      if (ctx.reuseOnly) {
        // choose the missing witnesses among other domain elements
        std::vector<Term> cand;
        for (const auto& t : ctx.A->dom())
          if (!witnesses.count(t)) cand.push_back(t);
        std::vector<ChaseAction> out;
        std::vector<int> sel;
        auto rec = [&](auto&& self, size_t start) -> void {
          if (static_cast<int>(sel.size()) == missing) {
            std::vector<ChaseAction> acc{ChaseAction{}};
            for (int idx : sel) {
              Env ext = env;
              ext[z] = cand[idx];
              Atom ga{f.guard->rel, {}};
              for (const auto& v : f.guard->vars) ga.args.push_back(ext.at(v));
              ChaseAction base;
              if (!ctx.A->contains(ga)) base.add.push_back(ga);
              auto o = options(ctx, *f.kids[0], ext);
              if (o.empty()) { acc.clear(); break; }
              acc = cross(acc, cross({base}, o));
            }
            out.insert(out.end(), acc.begin(), acc.end());
            return;
          }
          for (size_t i = start; i < cand.size(); ++i) {
            sel.push_back(static_cast<int>(i));
            self(self, i + 1);
            sel.pop_back();
          }
        };
        rec(rec, 0);
        return out;
      }
      std::vector<ChaseAction> acc{ChaseAction{}};
      for (int k = 0; k < missing; ++k) {
        Env ext = env;
        ext[z] = ctx.placeholder();
        Atom ga{f.guard->rel, {}};
        for (const auto& v : f.guard->vars) ga.args.push_back(ext.at(v));
        ChaseAction base;
        base.add.push_back(ga);
        auto o = options(ctx, *f.kids[0], ext);
        if (o.empty()) return {};
        acc = cross(acc, cross({base}, o));
      }
      return acc;
    }
  }
  return {};
}

struct Violation {
  int sentenceIdx = -1;  // -1: functionality of `rel`
  std::string rel;
  Env env;
  std::vector<ChaseAction> opts;
};

// canonical state key: nulls renamed by first occurrence in atom order
inline std::string state_key(const Interpretation& A) {
  std::map<std::string, std::string> ren;
  std::string out;
  for (const auto& a : A.atoms) {
    out += a.rel + "(";
    for (const auto& t : a.args) {
      if (t.kind == TermKind::Null) {
        auto [it, fresh] = ren.emplace(t.id, "#" + std::to_string(ren.size()));
        out += it->second;
      } else {
        out += t.id;
      }
      out += ",";
    }
    out += ")";
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Chase driver

struct ChaseOutcome {
  std::vector<Interpretation> terminals;  // verified models, canonical order
  bool complete = false;                  // every branch terminated or died
  int statesExplored = 0;
};

namespace detail {

class ChaseRun {
 public:
  ChaseRun(const Ontology& O, const ChaseBudget& b, bool reuseOnly)
      : O_(&O), budget_(b), reuseOnly_(reuseOnly) {}

  // on_terminal returns false to stop the whole exploration early
  template <typename Fn>
  bool run(const Interpretation& start, int startNulls, Fn& on_terminal) {
    incomplete_ = false;
    abort_requested_ = false;
    explore(start, startNulls, 0, on_terminal);
    return !incomplete_ && !abort_requested_;
  }

  int states = 0;
  bool aborted() const { return abort_requested_; }

 private:
  template <typename Fn>
  void explore(Interpretation A, int nulls, int depth, Fn& on_terminal) {
    if (abort_requested_ || incomplete_exhausted_) return;
    if (++states > budget_.maxBranches) {
      incomplete_ = true;
      incomplete_exhausted_ = true;
      return;
    }
    std::string key = state_key(A);
    if (!seen_.insert(key).second) return;

    std::optional<Violation> chosen = pick_violation(A);
    if (!chosen) {
      if (!on_terminal(A)) abort_requested_ = true;
      return;
    }
    if (chosen->opts.empty()) return;  // dead branch

    bool allCreate = !reuseOnly_;
    for (const auto& o : chosen->opts)
      if (!o.creates_nulls()) allCreate = false;
    if (allCreate) {
      // closing attempt: look for a model over the current domain; an extra
      // of the search, so its budget is a separate pool and its failures do
      // not make the main run incomplete
      ChaseRun closer(*O_, budget_, true);
      closer.run(A, nulls, on_terminal);
      if (closer.aborted()) { abort_requested_ = true; return; }
    }

    int ndepth = depth + (chosen->opts.size() > 1 ? 1 : 0);
    if (ndepth > budget_.maxBranchDepth) {
      incomplete_ = true;
      return;
    }
    for (const auto& act : chosen->opts) {
      if (abort_requested_ || incomplete_exhausted_) return;
      Interpretation B = A;
      int nnulls = nulls;
      apply(B, nnulls, act);
      if (nnulls > budget_.maxNewNulls) {
        incomplete_ = true;
        continue;
      }
      explore(std::move(B), nnulls, ndepth, on_terminal);
    }
  }

  std::optional<Violation> pick_violation(const Interpretation& A) {
    std::vector<Violation> found;
    for (size_t i = 0; i < O_->sentences.size(); ++i) {
      const Sentence& s = O_->sentences[i];
      Env env;
      guard_matches(A, *s.guard, s.vars, env, [&](Env& ext) {
        Env local = ext;
        if (!eval_formula(A, *s.body, local)) {
          Violation v;
          v.sentenceIdx = static_cast<int>(i);
          v.env = ext;
          found.push_back(std::move(v));
        }
        return true;
      });
    }
    for (const auto& rel : O_->functional) {
      std::map<Term, std::vector<Term>> succ;
      for (const auto& a : A.atoms)
        if (a.rel == rel && a.args.size() == 2) succ[a.args[0]].push_back(a.args[1]);
      for (const auto& [x, ys] : succ) {
        for (size_t i = 0; i < ys.size(); ++i)
          for (size_t j = i + 1; j < ys.size(); ++j) {
            Violation v;
            v.rel = rel;
            v.env["x"] = x;
            v.env["y1"] = ys[i];
            v.env["y2"] = ys[j];
            found.push_back(std::move(v));
          }
      }
    }
    if (found.empty()) return std::nullopt;

    // compute options; a violation without options kills the branch at once
    std::optional<Violation> best;
    for (auto& v : found) {
      OptionContext ctx;
      ctx.A = &A;
      ctx.reuseOnly = reuseOnly_;
      if (v.sentenceIdx >= 0) {
        v.opts = options(ctx, *O_->sentences[v.sentenceIdx].body, v.env);
      } else {
        Term y1 = v.env.at("y1"), y2 = v.env.at("y2");
        if (y1.kind == TermKind::Null || y2.kind == TermKind::Null) {
          ChaseAction a;
          a.unify.push_back({y1, y2});
          v.opts = {a};
        } else {
          v.opts = {};
        }
      }
      if (v.opts.empty()) return v;  // dead end dominates
      if (!best || v.opts.size() < best->opts.size()) best = v;
    }
    return best;
  }

  void apply(Interpretation& A, int& nulls, const ChaseAction& act) {
    std::map<std::string, Term> ph;
    for (const auto& a : act.add) {
      Atom b{a.rel, {}};
      for (const auto& t : a.args) {
        if (t.kind == TermKind::Null && t.id.rfind("_p", 0) == 0) {
          auto it = ph.find(t.id);
          if (it == ph.end()) {
            Term fresh = nul("_n" + std::to_string(++nullCounter_));
            ++nulls;
            it = ph.emplace(t.id, fresh).first;
          }
          b.args.push_back(it->second);
        } else {
          b.args.push_back(t);
        }
      }
      A.add(std::move(b));
    }
    for (auto [u, v] : act.unify) {
      auto fix = [&](Term t) {
        if (t.kind == TermKind::Null && t.id.rfind("_p", 0) == 0) {
          auto it = ph.find(t.id);
          if (it != ph.end()) return it->second;
        }
        return t;
      };
      u = fix(u);
      v = fix(v);
      if (u == v) continue;
      Term survivor, gone;
      if (u.kind == TermKind::Null && v.kind == TermKind::Null) {
        survivor = std::min(u, v);
        gone = std::max(u, v);
      } else if (u.kind == TermKind::Null) {
        survivor = v;
        gone = u;
      } else if (v.kind == TermKind::Null) {
        survivor = u;
        gone = v;
      } else {
        continue;  // constant pair: options never produce this
      }
      AtomSet renamed;
      for (const auto& a : A.atoms) {
        Atom b{a.rel, {}};
        for (const auto& t : a.args) b.args.push_back(t == gone ? survivor : t);
        renamed.insert(std::move(b));
      }
      A.atoms = std::move(renamed);
    }
  }

  const Ontology* O_;
  ChaseBudget budget_;
  bool reuseOnly_;
  bool incomplete_ = false;
  bool incomplete_exhausted_ = false;  // state budget gone, stop exploring
  bool abort_requested_ = false;       // on_terminal asked to stop
  std::set<std::string> seen_;
  std::uint64_t nullCounter_ = 0;
};

}  // namespace detail

// Explores the disjunctive chase tree of (O, D). `on_terminal` may stop the
// run early (for first-witness queries); outcome.complete is only meaningful
// when the run was not stopped.
template <typename Fn>
inline ChaseOutcome run_chase(const Ontology& O, const Instance& D, const ChaseBudget& b,
                              Fn&& on_terminal) {
  detail::ChaseRun run(O, b, false);
  ChaseOutcome out;
  auto collect = [&](const Interpretation& A) {
    out.terminals.push_back(A);
    return on_terminal(A);
  };
  bool complete = run.run(D.interp(), 0, collect);
  out.complete = complete;
  out.statesExplored = run.states;
  return out;
}

inline ChaseOutcome run_chase(const Ontology& O, const Instance& D, const ChaseBudget& b) {
  return run_chase(O, D, b, [](const Interpretation&) { return true; });
}

// ---------------------------------------------------------------------------
// Oracle operations

inline Verdict3 is_consistent(const Ontology& O, const Instance& D, const ChaseBudget& b = {}) {
  Verdict3 v;
  auto out = run_chase(O, D, b, [](const Interpretation&) { return false; });
  if (!out.terminals.empty()) {
    v.value = V3::Yes;
    v.witness = out.terminals.front();
    v.mode = "model-found";
    return v;
  }
  if (out.complete) {
    v.value = V3::No;
    v.mode = "all-branches-clash";
    return v;
  }
  v.value = V3::Unknown;
  v.mode = "budget";
  return v;
}

// Certain answer to a disjunction of CQ facts: every model must satisfy some
// q_i(a_i). The plain certain answer is the single-disjunct case.
inline Verdict3 certain_disjunction(const Ontology& O, const Instance& D,
                                    const std::vector<std::pair<UCQ, std::vector<Term>>>& goals,
                                    const ChaseBudget& b = {}) {
  Verdict3 v;
  std::optional<Interpretation> refuting;
  auto out = run_chase(O, D, b, [&](const Interpretation& A) {
    for (const auto& [q, tup] : goals)
      if (eval_query(A, q, tup)) return true;
    refuting = A;
    return false;
  });
  if (refuting) {
    v.value = V3::No;
    v.witness = refuting;
    v.mode = "countermodel";
    return v;
  }
  if (out.complete) {
    if (out.terminals.empty()) {
      v.value = V3::Yes;
      v.mode = "inconsistent";
      return v;
    }
    v.value = V3::Yes;
    v.mode = is_universal(O) ? "complete-universal" : "chase-exhausted";
    return v;
  }
  v.value = V3::Unknown;
  v.mode = "budget";
  return v;
}

inline Verdict3 certain_answer(const Ontology& O, const Instance& D, const UCQ& q,
                               const std::vector<Term>& tuple, const ChaseBudget& b = {}) {
  if (static_cast<int>(tuple.size()) != q.arity())
    throw std::runtime_error("certain_answer: tuple arity mismatch");
  return certain_disjunction(O, D, {{q, tuple}}, b);
}

// Minimal instance containing D that is closed under certain atomic facts
// over dom(D). A complete chase yields all of them in one pass: a fact over
// constants is certain iff it holds in every terminal.
inline std::optional<Instance> saturate(const Ontology& O, const Instance& D,
                                        const ChaseBudget& b = {}) {
  auto out = run_chase(O, D, b);
  if (!out.complete) return std::nullopt;
  if (out.terminals.empty()) throw std::runtime_error("saturate: instance inconsistent");
  TermSet dom = D.dom();
  AtomSet certain;
  bool first = true;
  for (const auto& t : out.terminals) {
    AtomSet over;
    for (const auto& a : t.atoms) {
      bool inDom = true;
      for (const auto& x : a.args)
        if (!dom.count(x)) { inDom = false; break; }
      if (inDom) over.insert(a);
    }
    if (first) {
      certain = std::move(over);
      first = false;
    } else {
      AtomSet inter;
      std::set_intersection(certain.begin(), certain.end(), over.begin(), over.end(),
                            std::inserter(inter, inter.begin()));
      certain = std::move(inter);
    }
  }
  AtomSet facts = D.facts;
  facts.insert(certain.begin(), certain.end());
  return Instance(facts);
}

// All models of O over exactly dom(D) (supersets of D restricted to `sig`),
// enumerated exhaustively; the independent reference for universal
// ontologies and a building block for tests.
template <typename Fn>
inline void enumerate_models_over_domain(const Ontology& O, const Instance& D, const Signature& sig,
                                         Fn&& fn) {
  auto domset = D.dom();
  std::vector<Term> dom(domset.begin(), domset.end());
  std::vector<Atom> cells;
  for (const auto& [rel, ar] : sig) {
    std::vector<int> idx(ar, 0);
    while (true) {
      Atom a{rel, {}};
      for (int i = 0; i < ar; ++i) a.args.push_back(dom[idx[i]]);
      if (!D.facts.count(a)) cells.push_back(a);
      int k = 0;
      while (k < ar && ++idx[k] == static_cast<int>(dom.size())) idx[k++] = 0;
      if (k == ar) break;
    }
  }
  if (cells.size() > 30) throw BudgetError("enumerate_models_over_domain: too many atom cells");
  for (std::uint64_t mask = 0; mask < (1ull << cells.size()); ++mask) {
    Interpretation A(D.facts);
    for (size_t i = 0; i < cells.size(); ++i)
      if (mask & (1ull << i)) A.add(cells[i]);
    if (models(A, O))
      if (!fn(A)) return;
  }
}

}  // namespace gomq
