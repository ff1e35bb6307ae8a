#pragma once

// Conjunctive queries, canonical databases, rooted acyclic queries and the
// decomposition of UCQs into a core part over the instance plus tree-shaped
// side queries.

#include <cmath>

#include "gomq/logic.hpp"

namespace gomq {

// Query atoms are stored as Atoms whose arguments are constants named by the
// query variables; the canonical database is then the atom set itself.
struct CQ {
  std::vector<std::string> answerVars;
  AtomSet atoms;

  bool boolean() const { return answerVars.empty(); }

  std::set<std::string> vars() const {
    std::set<std::string> v;
    for (const auto& a : atoms)
      for (const auto& t : a.args) v.insert(t.id);
    return v;
  }

  void validate() const {
    if (atoms.empty()) throw std::runtime_error("query with empty body");
    auto vs = vars();
    for (const auto& x : answerVars)
      if (!vs.count(x)) throw std::runtime_error("answer variable " + x + " not used in any atom");
  }

  friend auto operator<=>(const CQ&, const CQ&) = default;
};

struct UCQ {
  std::string name = "q";
  std::vector<CQ> disjuncts;

  int arity() const { return disjuncts.empty() ? 0 : static_cast<int>(disjuncts[0].answerVars.size()); }

  void validate() const {
    if (disjuncts.empty()) throw std::runtime_error("UCQ needs at least one disjunct");
    for (const auto& d : disjuncts) {
      d.validate();
      if (static_cast<int>(d.answerVars.size()) != arity())
        throw std::runtime_error("UCQ disjuncts disagree on arity");
    }
  }
};

inline UCQ as_ucq(CQ q, std::string name = "q") {
  UCQ u;
  u.name = std::move(name);
  u.disjuncts = {std::move(q)};
  return u;
}

inline CQ atomic_query(const std::string& rel, int arity) {
  CQ q;
  for (int i = 0; i < arity; ++i) q.answerVars.push_back("x" + std::to_string(i + 1));
  Atom a{rel, {}};
  for (const auto& v : q.answerVars) a.args.push_back(cst(v));
  q.atoms.insert(a);
  return q;
}

// ---------------------------------------------------------------------------
// Canonical database

struct CanonicalDatabase {
  Instance instance;
  std::map<std::string, Term> varToConst;
};

inline CanonicalDatabase canonical_database(const CQ& q) {
  q.validate();
  CanonicalDatabase r;
  r.instance = Instance(q.atoms);
  for (const auto& v : q.vars()) r.varToConst[v] = cst(v);
  return r;
}

// ---------------------------------------------------------------------------
// Evaluation

inline bool eval_cq(const Interpretation& A, const CQ& q, const std::vector<Term>& tuple) {
  if (tuple.size() != q.answerVars.size()) throw std::runtime_error("answer tuple arity mismatch");
  TermMap fixed;
  for (size_t i = 0; i < tuple.size(); ++i) {
    Term key = cst(q.answerVars[i]);
    auto it = fixed.find(key);
    if (it != fixed.end()) {
      if (it->second != tuple[i]) return false;
    } else {
      fixed[key] = tuple[i];
    }
  }
  return hom_exists(Interpretation(q.atoms), A, fixed);
}

inline bool eval_query(const Interpretation& A, const UCQ& q, const std::vector<Term>& tuple) {
  for (const auto& d : q.disjuncts)
    if (eval_cq(A, d, tuple)) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Guarded-tree decomposability (GYO reduction) and rAQs

namespace detail {

// Join tree of the atom hypergraph, or nullopt when it is cyclic or
// disconnected. Nodes are the inclusion-maximal atom scopes.
inline std::optional<CgTreeDecomposition> join_tree(const Interpretation& A) {
  std::vector<TermSet> edges;
  {
    std::set<TermSet> dedup;
    for (const auto& a : A.atoms) dedup.insert(TermSet(a.args.begin(), a.args.end()));
    // keep only inclusion-maximal scopes; smaller ones are absorbed
    for (const auto& e : dedup) {
      bool maximal = true;
      for (const auto& f : dedup)
        if (e != f && std::includes(f.begin(), f.end(), e.begin(), e.end())) { maximal = false; break; }
      if (maximal) edges.push_back(e);
    }
  }
  const size_t n = edges.size();
  if (n == 0) return std::nullopt;
  std::vector<TermSet> reduced = edges;
  std::vector<bool> active(n, true);
  std::vector<int> parent(n, -1);
  bool changed = true;
  while (changed) {
    changed = false;
    // drop vertices private to a single active edge
    std::map<Term, int> count;
    for (size_t i = 0; i < n; ++i)
      if (active[i])
        for (const auto& t : reduced[i]) count[t]++;
    for (size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      TermSet keep;
      for (const auto& t : reduced[i])
        if (count[t] > 1) keep.insert(t);
      if (keep.size() != reduced[i].size()) { reduced[i] = keep; changed = true; }
    }
    // absorb an edge contained in another
    for (size_t i = 0; i < n && !changed; ++i) {
      if (!active[i]) continue;
      for (size_t j = 0; j < n; ++j) {
        if (i == j || !active[j]) continue;
        if (std::includes(reduced[j].begin(), reduced[j].end(), reduced[i].begin(), reduced[i].end())) {
          active[i] = false;
          parent[i] = static_cast<int>(j);
          changed = true;
          break;
        }
      }
    }
  }
  size_t remaining = 0, last = 0;
  for (size_t i = 0; i < n; ++i)
    if (active[i]) { ++remaining; last = i; }
  if (remaining != 1) return std::nullopt;  // cyclic or disconnected

  CgTreeDecomposition td;
  td.root = static_cast<int>(last);
  for (size_t i = 0; i < n; ++i) {
    td.nodes.push_back(static_cast<int>(i));
    td.bag[static_cast<int>(i)] = make_bag(A, edges[i]);
    if (parent[i] >= 0) td.edges.push_back({parent[i], static_cast<int>(i)});
  }
  std::string why;
  if (!is_cg_tree_decomposition(td, A, &why)) return std::nullopt;
  return td;
}

}  // namespace detail

inline std::optional<CgTreeDecomposition> cg_tree_decomposition_of(const Interpretation& A) {
  return detail::join_tree(A);
}

inline bool cg_tree_decomposable(const Interpretation& A) { return detail::join_tree(A).has_value(); }

// A cg-tree decomposition of the canonical database rooted at the answer
// variables, or nullopt. Boolean queries are rejected.
inline std::optional<CgTreeDecomposition> is_rAQ(const CQ& q) {
  q.validate();
  if (q.boolean()) throw std::runtime_error("rAQs are non-Boolean by definition");
  Interpretation D(q.atoms);
  TermSet X;
  for (const auto& v : q.answerVars) X.insert(cst(v));
  if (!is_guarded_set(D, X)) return std::nullopt;
  auto td = detail::join_tree(D);
  if (!td) return std::nullopt;
  // re-root: if some bag has domain exactly X, use it; otherwise attach a new
  // root bag with domain X below a bag containing X
  for (int n : td->nodes) {
    if (td->bag.at(n).dom == X) {
      td->root = n;
      std::string why;
      if (!is_cg_tree_decomposition(*td, D, &why)) return std::nullopt;
      return td;
    }
  }
  int host = -1;
  for (int n : td->nodes) {
    const TermSet& d = td->bag.at(n).dom;
    if (std::includes(d.begin(), d.end(), X.begin(), X.end())) { host = n; break; }
  }
  if (host < 0) return std::nullopt;
  int fresh = 1 + *std::max_element(td->nodes.begin(), td->nodes.end());
  td->nodes.push_back(fresh);
  td->bag[fresh] = make_bag(D, X);
  td->edges.push_back({fresh, host});
  td->root = fresh;
  std::string why;
  if (!is_cg_tree_decomposition(*td, D, &why)) return std::nullopt;
  return td;
}

// ---------------------------------------------------------------------------
// ".q" format: one rule per line, `q(x,y) <- R(x,z), S(z,y).`; several rules
// with the same head name form a UCQ; Boolean queries use `q()`.

inline std::vector<UCQ> parse_queries(const std::string& text) {
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
        while (peek() != -1 && peek() != '\n') get();
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

  std::vector<std::string> order;
  std::map<std::string, UCQ> byName;
  while (true) {
    skip_ws();
    if (peek() == -1) break;
    std::string head = ident();
    expect('(');
    CQ cq;
    skip_ws();
    if (peek() != ')') {
      while (true) {
        cq.answerVars.push_back(ident());
        skip_ws();
        if (peek() == ',') { get(); continue; }
        break;
      }
    }
    expect(')');
    skip_ws();
    expect('<');
    expect('-');
    while (true) {
      std::string rel = ident();
      expect('(');
      Atom a{rel, {}};
      while (true) {
        a.args.push_back(cst(ident()));
        skip_ws();
        if (peek() == ',') { get(); continue; }
        break;
      }
      expect(')');
      cq.atoms.insert(std::move(a));
      skip_ws();
      if (peek() == ',') { get(); continue; }
      break;
    }
    expect('.');
    cq.validate();
    auto it = byName.find(head);
    if (it == byName.end()) {
      UCQ u;
      u.name = head;
      u.disjuncts = {std::move(cq)};
      byName.emplace(head, std::move(u));
      order.push_back(head);
    } else {
      it->second.disjuncts.push_back(std::move(cq));
    }
  }
  std::vector<UCQ> out;
  for (const auto& h : order) {
    byName[h].validate();
    out.push_back(byName[h]);
  }
  if (out.empty()) throw ParseError("no query rules", line, col);
  return out;
}

inline std::string emit_query(const UCQ& q) {
  std::string out;
  for (const auto& d : q.disjuncts) {
    out += q.name + "(";
    for (size_t i = 0; i < d.answerVars.size(); ++i) {
      if (i) out += ",";
      out += d.answerVars[i];
    }
    out += ") <- ";
    bool first = true;
    for (const auto& a : d.atoms) {
      if (!first) out += ", ";
      first = false;
      out += a.rel + "(";
      for (size_t i = 0; i < a.args.size(); ++i) {
        if (i) out += ",";
        out += a.args[i].id;
      }
      out += ")";
    }
    out += ".\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Decompositions (squid-style)

struct DecompPair {
  AtomSet phi;                                             // core atoms, variables in V
  std::vector<std::pair<std::string, std::string>> eqs;    // answer variable x = f(x)
  std::vector<CQ> parts;                                   // tree-shaped side queries
};

struct Decomposition {
  std::vector<std::string> answerVars;
  std::vector<DecompPair> pairs;
  bool strong = false;
};

struct DecomposeConfig {
  size_t maxTuples = 200000;  // enumeration budget
  size_t maxPairs = 20000;
};

namespace detail {

inline std::vector<AtomSet> connected_components(const AtomSet& atoms) {
  std::vector<Atom> v(atoms.begin(), atoms.end());
  std::vector<int> comp(v.size(), -1);
  int ncomp = 0;
  for (size_t i = 0; i < v.size(); ++i) {
    if (comp[i] >= 0) continue;
    comp[i] = ncomp;
    std::vector<size_t> stack{i};
    while (!stack.empty()) {
      size_t a = stack.back();
      stack.pop_back();
      TermSet va(v[a].args.begin(), v[a].args.end());
      for (size_t b = 0; b < v.size(); ++b) {
        if (comp[b] >= 0) continue;
        bool shares = false;
        for (const auto& t : v[b].args)
          if (va.count(t)) { shares = true; break; }
        if (shares) { comp[b] = ncomp; stack.push_back(b); }
      }
    }
    ++ncomp;
  }
  std::vector<AtomSet> out(ncomp);
  for (size_t i = 0; i < v.size(); ++i) out[comp[i]].insert(v[i]);
  return out;
}

inline std::string pair_key(const DecompPair& p) {
  std::string k;
  for (const auto& a : p.phi) k += to_string(a) + ";";
  k += "|";
  for (const auto& [x, y] : p.eqs) k += x + "=" + y + ";";
  k += "|";
  std::vector<std::string> parts;
  for (const auto& q : p.parts) {
    std::string s;
    for (const auto& v : q.answerVars) s += v + ",";
    s += ":";
    for (const auto& a : q.atoms) s += to_string(a) + ";";
    parts.push_back(s);
  }
  std::sort(parts.begin(), parts.end());
  for (const auto& s : parts) k += s + "#";
  return k;
}

}  // namespace detail

// All pairs (phi(y), C) arising from idempotent foldings of a disjunct, a
// choice of instance-variables V, a core part H over V and the connected
// components of the rest as tree parts. In two-variable counting mode each
// part keeps at most one variable of V.
inline Decomposition decompose_ucq(const Ontology& O, const UCQ& q, DecomposeConfig cfg = {}) {
  q.validate();
  const bool gc2 = classify(O).counting;
  if (gc2 && !is_ugc2_eq(O)) throw std::runtime_error("counting ontology outside uGC2(=)");
  Decomposition dec;
  dec.answerVars = q.disjuncts[0].answerVars;
  std::set<std::string> seen;
  size_t tuples = 0;

  for (const auto& disj : q.disjuncts) {
    auto disjVars = disj.vars();
    std::vector<std::string> dom(disjVars.begin(), disjVars.end());
    const size_t n = dom.size();
    std::set<std::string> ans(disj.answerVars.begin(), disj.answerVars.end());
    std::map<std::string, size_t> idx;
    for (size_t i = 0; i < n; ++i) idx[dom[i]] = i;

    // enumerate idempotent foldings f (identity on its image)
    std::vector<int> f(n);
    auto emit_for_f = [&]() {
      // image and folded atoms
      std::map<std::string, std::string> sub;
      for (size_t i = 0; i < n; ++i) sub[dom[i]] = dom[f[i]];
      AtomSet folded;
      for (const auto& a : disj.atoms) {
        Atom b{a.rel, {}};
        for (const auto& t : a.args) b.args.push_back(cst(sub.at(t.id)));
        folded.insert(std::move(b));
      }
      std::set<std::string> image;
      for (size_t i = 0; i < n; ++i) image.insert(dom[f[i]]);
      std::set<std::string> ansImage;
      for (const auto& x : disj.answerVars) ansImage.insert(sub.at(x));
      // V ranges over subsets of the image containing the folded answer vars
      std::vector<std::string> rest;
      for (const auto& v : image)
        if (!ansImage.count(v)) rest.push_back(v);
      const size_t rn = rest.size();
      if (rn > 20) throw BudgetError("decompose_ucq: too many variables");
      for (size_t vmask = 0; vmask < (1u << rn); ++vmask) {
        std::set<std::string> V = ansImage;
        for (size_t i = 0; i < rn; ++i)
          if (vmask & (1u << i)) V.insert(rest[i]);
        // eligible core atoms: all variables inside V
        std::vector<Atom> eligible, forced;
        for (const auto& a : folded) {
          bool inV = true;
          for (const auto& t : a.args)
            if (!V.count(t.id)) { inV = false; break; }
          (inV ? eligible : forced).push_back(a);
        }
        const size_t en = eligible.size();
        if (en > 20) throw BudgetError("decompose_ucq: too many core candidates");
        for (size_t hmask = 0; hmask < (1u << en); ++hmask) {
          if (++tuples > cfg.maxTuples) throw BudgetError("decompose_ucq: tuple budget exceeded");
          AtomSet H, treeAtoms(forced.begin(), forced.end());
          for (size_t i = 0; i < en; ++i)
            (hmask & (1u << i) ? H : treeAtoms).insert(eligible[i]);
          bool ok = true;
          std::vector<CQ> parts;
          for (const auto& comp : detail::connected_components(treeAtoms)) {
            Interpretation ci(comp);
            if (!cg_tree_decomposable(ci)) { ok = false; break; }
            CQ part;
            part.atoms = comp;
            TermSet d = ci.dom();
            for (const auto& t : d)
              if (V.count(t.id)) part.answerVars.push_back(t.id);
            if (gc2 && part.answerVars.size() > 1) { ok = false; break; }
            parts.push_back(std::move(part));
          }
          if (!ok) continue;
          DecompPair p;
          p.phi = H;
          for (const auto& x : disj.answerVars)
            if (sub.at(x) != x) p.eqs.push_back({x, sub.at(x)});
          std::sort(p.eqs.begin(), p.eqs.end());
          p.eqs.erase(std::unique(p.eqs.begin(), p.eqs.end()), p.eqs.end());
          p.parts = std::move(parts);
          std::string key = detail::pair_key(p);
          if (seen.insert(key).second) {
            dec.pairs.push_back(std::move(p));
            if (dec.pairs.size() > cfg.maxPairs) throw BudgetError("decompose_ucq: pair budget exceeded");
          }
        }
      }
    };
    // recursive enumeration of idempotent maps with f(ans) an answer var
    auto rec = [&](auto&& self, size_t i) -> void {
      if (i == n) {
        bool idem = true;
        for (size_t j = 0; j < n && idem; ++j) idem = (f[f[j]] == f[j]);
        if (idem) emit_for_f();
        return;
      }
      for (size_t img = 0; img < n; ++img) {
        if (ans.count(dom[i]) && !ans.count(dom[img])) continue;
        f[i] = static_cast<int>(img);
        self(self, i + 1);
      }
    };
    rec(rec, 0);
  }
  dec.strong = true;
  for (const auto& p : dec.pairs)
    for (const auto& part : p.parts)
      if (part.boolean()) dec.strong = false;
  return dec;
}

// Whether condition 2 of the decomposition definition holds for a concrete
// model: some pair and assignment of core variables into dom(D) matches phi
// in D and all side queries in the model.
inline bool decomposition_condition2(const Decomposition& dec, const Instance& D,
                                     const std::vector<Term>& tuple, const Interpretation& model) {
  Interpretation Di = D.interp();
  auto DiDom = Di.dom();
  std::vector<Term> domv(DiDom.begin(), DiDom.end());
  for (const auto& p : dec.pairs) {
    std::set<std::string> ys;
    for (size_t i = 0; i < dec.answerVars.size(); ++i) ys.insert(dec.answerVars[i]);
    for (const auto& a : p.phi)
      for (const auto& t : a.args) ys.insert(t.id);
    for (const auto& [x, y] : p.eqs) { ys.insert(x); ys.insert(y); }
    for (const auto& part : p.parts)
      for (const auto& v : part.answerVars) ys.insert(v);
    std::vector<std::string> yv(ys.begin(), ys.end());

    std::map<std::string, Term> pi;
    bool fixed_ok = true;
    for (size_t i = 0; i < dec.answerVars.size(); ++i) {
      auto it = pi.find(dec.answerVars[i]);
      if (it != pi.end() && it->second != tuple[i]) { fixed_ok = false; break; }
      pi[dec.answerVars[i]] = tuple[i];
    }
    if (!fixed_ok) continue;
    std::vector<std::string> freev;
    for (const auto& v : yv)
      if (!pi.count(v)) freev.push_back(v);

    auto check = [&]() -> bool {
      for (const auto& [x, y] : p.eqs)
        if (pi.at(x) != pi.at(y)) return false;
      for (const auto& a : p.phi) {
        Atom g{a.rel, {}};
        for (const auto& t : a.args) g.args.push_back(pi.at(t.id));
        if (!D.facts.count(g)) return false;
      }
      for (const auto& part : p.parts) {
        std::vector<Term> pt;
        for (const auto& v : part.answerVars) pt.push_back(pi.at(v));
        if (!eval_cq(model, part, pt)) return false;
      }
      return true;
    };
    auto rec = [&](auto&& self, size_t i) -> bool {
      if (i == freev.size()) return check();
      for (const auto& t : domv) {
        pi[freev[i]] = t;
        if (self(self, i + 1)) return true;
      }
      pi.erase(freev[i]);
      return false;
    };
    if (rec(rec, 0)) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Weak-to-strong decomposition

struct StrengthenConfig {
  int d = 2;               // attachment length bound
  size_t maxAttachments = 5000;
  size_t maxPairs = 20000;
};

// The paper's bound d = s + tau^2 + 1 where tau counts C-types over 2w
// constants; astronomically large for all but degenerate inputs, so callers
// get it behind a cap check.
inline std::optional<long double> paper_attachment_bound(const Ontology& O, const UCQ& q) {
  // |cl(O,q)| instantiations over 2w constants, doubly exponentiated
  int w = 1;
  for (const auto& [r, a] : O.sig()) w = std::max(w, a);
  for (const auto& d : q.disjuncts)
    for (const auto& a : d.atoms) w = std::max(w, static_cast<int>(a.args.size()));
  long double cl = static_cast<long double>(symbol_size(O)) + 8.0L;
  for (const auto& d : q.disjuncts) cl += static_cast<long double>(d.atoms.size()) * 2 + 2;
  long double insts = cl * std::pow(static_cast<long double>(2 * w), static_cast<long double>(w));
  if (insts > 60) return std::nullopt;  // 2^insts already out of reach
  long double tau = std::pow(2.0L, insts);
  long double s = 1;
  for (const auto& d : q.disjuncts) s = std::max<long double>(s, d.atoms.size());
  return s + tau * tau + 1;
}

namespace detail {

inline std::string cq_key(const CQ& q) {
  std::string s;
  for (const auto& v : q.answerVars) s += v + ",";
  s += ":";
  for (const auto& a : q.atoms) s += to_string(a) + ";";
  return s;
}

// All rAQs  q'(x) <- R1(y1) ^ ... ^ Re(ye) ^ phi  with e <= d: x occurs in
// y1, the last atom contains one bridging variable of phi and no other
// phi variable occurs anywhere in the chain. Fresh chain variables are named
// canonically (w1, w2, ... in order of first use), so enumeration is free of
// renaming duplicates.
inline std::vector<CQ> boolean_attachments(const CQ& phi, const Ontology& O, int d,
                                           size_t maxAttachments) {
  std::vector<std::pair<std::string, int>> rels;
  for (const auto& [r, a] : O.sig())
    if (a >= 2) rels.push_back({r, a});
  auto phiVarSet = phi.vars();
  std::vector<std::string> phiVars(phiVarSet.begin(), phiVarSet.end());
  std::set<std::string> phiSet(phiVars.begin(), phiVars.end());
  std::string ax = "qx";
  while (phiSet.count(ax)) ax += "x";

  std::vector<CQ> out;
  std::set<std::string> seen;
  std::vector<Atom> chain;

  auto emit = [&](const std::string& bridge) {
    bool hasX = false;
    for (const auto& t : chain.front().args)
      if (t.id == ax) hasX = true;
    if (!hasX) return;
    bool hasY = false;
    for (const auto& t : chain.back().args)
      if (t.id == bridge) hasY = true;
    if (!hasY) return;
    CQ cand;
    cand.answerVars = {ax};
    cand.atoms = phi.atoms;
    for (const auto& a : chain) cand.atoms.insert(a);
    if (!is_rAQ(cand)) return;
    std::string key = cq_key(cand);
    if (!seen.insert(key).second) return;
    out.push_back(std::move(cand));
    if (out.size() >= maxAttachments)
      throw BudgetError("strengthen_decomposition: attachment budget exceeded");
  };

  auto atoms_rec = [&](auto&& self, int i, int e, int usedFresh, const std::string& bridge) -> void {
    if (i == e) {
      emit(bridge);
      return;
    }
    const bool last = (i + 1 == e);
    for (const auto& [rel, ar] : rels) {
      std::vector<std::string> tuple(ar);
      auto pos_rec = [&](auto&& pself, int pos, int uf) -> void {
        if (pos == ar) {
          Atom a{rel, {}};
          for (const auto& v : tuple) a.args.push_back(cst(v));
          chain.push_back(std::move(a));
          self(self, i + 1, e, uf, bridge);
          chain.pop_back();
          return;
        }
        std::vector<std::string> cands{ax};
        for (int k = 1; k <= uf; ++k) cands.push_back("w" + std::to_string(k));
        cands.push_back("w" + std::to_string(uf + 1));  // next canonical fresh name
        if (last) cands.push_back(bridge);
        for (const auto& c : cands) {
          tuple[pos] = c;
          pself(pself, pos + 1, c == "w" + std::to_string(uf + 1) ? uf + 1 : uf);
        }
      };
      pos_rec(pos_rec, 0, usedFresh);
    }
  };

  for (int e = 1; e <= d; ++e)
    for (const auto& y : phiVars) atoms_rec(atoms_rec, 0, e, 0, y);
  return out;
}

}  // namespace detail

// Replaces every Boolean side query by the rAQ attachments of bounded length;
// pairs multiply out over the alternatives.
inline Decomposition strengthen_decomposition(const Decomposition& dec, const Ontology& O,
                                              const UCQ& q, StrengthenConfig cfg = {}) {
  (void)q;
  Decomposition out;
  out.answerVars = dec.answerVars;
  for (const auto& p : dec.pairs) {
    std::vector<std::vector<CQ>> choices;
    bool dead = false;
    for (const auto& part : p.parts) {
      if (!part.boolean()) {
        choices.push_back({part});
        continue;
      }
      auto atts = detail::boolean_attachments(part, O, cfg.d, cfg.maxAttachments);
      if (atts.empty()) { dead = true; break; }
      choices.push_back(std::move(atts));
    }
    if (dead) continue;
    // cartesian product of alternatives
    std::vector<size_t> pick(choices.size(), 0);
    while (true) {
      DecompPair np;
      np.phi = p.phi;
      np.eqs = p.eqs;
      for (size_t i = 0; i < choices.size(); ++i) np.parts.push_back(choices[i][pick[i]]);
      out.pairs.push_back(std::move(np));
      if (out.pairs.size() > cfg.maxPairs)
        throw BudgetError("strengthen_decomposition: pair budget exceeded");
      size_t k = 0;
      while (k < pick.size()) {
        if (++pick[k] < choices[k].size()) break;
        pick[k] = 0;
        ++k;
      }
      if (k == pick.size()) break;
    }
  }
  out.strong = true;
  return out;
}

}  // namespace gomq
