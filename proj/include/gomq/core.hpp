#pragma once

// Relational core: terms, atoms, instances, interpretations, guarded sets,
// homomorphisms, cg-tree decompositions and the connected guarded
// bisimulation game.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gomq {

// Thrown when a combinatorial enumeration exceeds its configured budget.
class BudgetError : public std::runtime_error {
 public:
  explicit BudgetError(const std::string& msg) : std::runtime_error(msg) {}
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::string msg, int line, int col)
      : std::runtime_error(msg + " at line " + std::to_string(line) + ", column " + std::to_string(col)),
        line_(line), col_(col) {}
  int line() const { return line_; }
  int col() const { return col_; }

 private:
  int line_, col_;
};

inline bool is_identifier(const std::string& s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0]))) return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  return true;
}

enum class TermKind { Constant, Null };

struct Term {
  TermKind kind = TermKind::Constant;
  std::string id;

  friend auto operator<=>(const Term&, const Term&) = default;
};

inline Term cst(std::string id) { return Term{TermKind::Constant, std::move(id)}; }
inline Term nul(std::string id) { return Term{TermKind::Null, std::move(id)}; }

inline std::string to_string(const Term& t) {
  return t.kind == TermKind::Null ? "?" + t.id : t.id;
}

// Fresh names use the reserved prefix "_n"; user identifiers may not start
// with an underscore, so generated names never clash with parsed input.
class NameGen {
 public:
  std::string fresh() { return "_n" + std::to_string(++counter_); }
  std::string fresh(const std::string& base) { return base + "_n" + std::to_string(++counter_); }

 private:
  std::uint64_t counter_ = 0;
};

struct Atom {
  std::string rel;
  std::vector<Term> args;

  friend auto operator<=>(const Atom&, const Atom&) = default;
};

inline std::string to_string(const Atom& a) {
  std::string s = a.rel + "(";
  for (size_t i = 0; i < a.args.size(); ++i) {
    if (i) s += ",";
    s += to_string(a.args[i]);
  }
  return s + ")";
}

using AtomSet = std::set<Atom>;
using TermSet = std::set<Term>;
using TermMap = std::map<Term, Term>;

// Relation name -> arity. Declaring the same name twice with different
// arities is rejected everywhere signatures are built.
using Signature = std::map<std::string, int>;

inline void sig_add(Signature& sig, const std::string& rel, int arity) {
  auto [it, inserted] = sig.emplace(rel, arity);
  if (!inserted && it->second != arity)
    throw std::runtime_error("relation " + rel + " used with arities " +
                             std::to_string(it->second) + " and " + std::to_string(arity));
}

struct Interpretation {
  AtomSet atoms;
  Signature sig;  // always covers every atom; may name extra relations

  Interpretation() = default;
  explicit Interpretation(AtomSet as) : atoms(std::move(as)) { close_sig(); }
  Interpretation(AtomSet as, Signature s) : atoms(std::move(as)), sig(std::move(s)) { close_sig(); }

  void close_sig() {
    for (const auto& a : atoms) sig_add(sig, a.rel, static_cast<int>(a.args.size()));
  }

  void add(Atom a) {
    sig_add(sig, a.rel, static_cast<int>(a.args.size()));
    atoms.insert(std::move(a));
  }

  TermSet dom() const {
    TermSet d;
    for (const auto& a : atoms) d.insert(a.args.begin(), a.args.end());
    return d;
  }

  bool contains(const Atom& a) const { return atoms.count(a) > 0; }

  // Subinterpretation induced by X.
  Interpretation induced(const TermSet& X) const {
    Interpretation r;
    r.sig = sig;
    for (const auto& a : atoms) {
      bool in = true;
      for (const auto& t : a.args)
        if (!X.count(t)) { in = false; break; }
      if (in) r.atoms.insert(a);
    }
    return r;
  }

  friend auto operator<=>(const Interpretation& a, const Interpretation& b) { return a.atoms <=> b.atoms; }
  friend bool operator==(const Interpretation& a, const Interpretation& b) { return a.atoms == b.atoms; }
};

// A database instance: finite, non-empty, constants only.
struct Instance {
  AtomSet facts;

  Instance() = default;
  explicit Instance(AtomSet fs) : facts(std::move(fs)) { validate(); }

  void validate() const {
    if (facts.empty()) throw std::runtime_error("instance must be non-empty");
    for (const auto& a : facts)
      for (const auto& t : a.args)
        if (t.kind != TermKind::Constant)
          throw std::runtime_error("instance contains a labelled null: " + to_string(a));
  }

  Interpretation interp() const { return Interpretation(facts); }
  TermSet dom() const { return interp().dom(); }

  friend auto operator<=>(const Instance&, const Instance&) = default;
};

// ---------------------------------------------------------------------------
// Guarded sets

// All inclusion-maximal guarded sets of A. Every term occurs in at least one
// (singletons survive when no atom covers the term together with others).
inline std::vector<TermSet> maximal_guarded_sets(const Interpretation& A) {
  std::set<TermSet> cand;
  for (const auto& a : A.atoms) cand.insert(TermSet(a.args.begin(), a.args.end()));
  for (const auto& t : A.dom()) cand.insert(TermSet{t});
  std::vector<TermSet> out;
  for (const auto& g : cand) {
    bool maximal = true;
    for (const auto& h : cand) {
      if (g != h && std::includes(h.begin(), h.end(), g.begin(), g.end())) { maximal = false; break; }
    }
    if (maximal) out.push_back(g);
  }
  return out;  // set iteration is already sorted
}

inline bool is_guarded_set(const Interpretation& A, const TermSet& G) {
  if (G.empty()) return false;
  if (G.size() == 1) return A.dom().count(*G.begin()) > 0;
  for (const auto& a : A.atoms)
    if (TermSet(a.args.begin(), a.args.end()) == G) return true;
  return false;
}

// A tuple is guarded when its element set is contained in a guarded set.
inline bool is_guarded_tuple(const Interpretation& A, const std::vector<Term>& tup) {
  TermSet s(tup.begin(), tup.end());
  if (s.size() == 1) return A.dom().count(*s.begin()) > 0;
  for (const auto& a : A.atoms) {
    TermSet g(a.args.begin(), a.args.end());
    if (std::includes(g.begin(), g.end(), s.begin(), s.end())) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Homomorphisms

namespace detail {

struct HomProblem {
  std::vector<Term> order;                 // src terms, most-constrained-first
  std::vector<std::vector<Atom>> atoms_of;  // src atoms fully assigned at step i
  std::vector<Term> candidates;            // dst domain, sorted
  Interpretation dst;                      // held by value: enumerators outlive call sites
};

inline HomProblem make_hom_problem(const Interpretation& src, const Interpretation& dst,
                                   const TermMap& fixed) {
  HomProblem p;
  p.dst = dst;
  TermSet sdom = src.dom();
  for (const auto& [k, v] : fixed)
    if (!sdom.count(k)) sdom.insert(k);  // fixed may pin isolated terms
  std::map<Term, int> degree;
  for (const auto& t : sdom) degree[t] = 0;
  for (const auto& a : src.atoms)
    for (const auto& t : a.args) degree[t]++;
  std::vector<Term> free_terms;
  for (const auto& t : sdom)
    if (!fixed.count(t)) free_terms.push_back(t);
  std::sort(free_terms.begin(), free_terms.end(), [&](const Term& a, const Term& b) {
    if (degree[a] != degree[b]) return degree[a] > degree[b];
    return a < b;
  });
  std::vector<Term> fixed_first;
  for (const auto& [k, v] : fixed) fixed_first.push_back(k);
  p.order = fixed_first;
  p.order.insert(p.order.end(), free_terms.begin(), free_terms.end());

  std::map<Term, int> pos;
  for (size_t i = 0; i < p.order.size(); ++i) pos[p.order[i]] = static_cast<int>(i);
  p.atoms_of.resize(p.order.size());
  for (const auto& a : src.atoms) {
    int last = -1;
    for (const auto& t : a.args) last = std::max(last, pos[t]);
    if (last >= 0) p.atoms_of[last].push_back(a);
  }
  TermSet ddom = dst.dom();
  p.candidates.assign(ddom.begin(), ddom.end());
  return p;
}

}  // namespace detail

// Lazy enumeration of all homomorphisms src -> dst extending `fixed`.
// Deterministic: assignment order is most-constrained-first with id
// tie-break, candidate images in term order.
class HomomorphismEnumerator {
 public:
  HomomorphismEnumerator(const Interpretation& src, const Interpretation& dst, TermMap fixed = {})
      : problem_(detail::make_hom_problem(src, dst, fixed)), fixed_(std::move(fixed)) {
    image_.resize(problem_.order.size());
    choice_.assign(problem_.order.size(), -1);
  }

  std::optional<TermMap> next() {
    const size_t n = problem_.order.size();
    if (done_) return std::nullopt;
    if (resume_) {
      if (n == 0) { done_ = true; return std::nullopt; }
      level_ = n - 1;  // backtrack from the previously emitted assignment
      resume_ = false;
    }
    while (true) {
      if (level_ == n) {
        resume_ = true;
        TermMap m;
        for (size_t i = 0; i < n; ++i) m[problem_.order[i]] = image_[i];
        return m;
      }
      if (!advance(level_)) {
        if (level_ == 0) { done_ = true; return std::nullopt; }
        choice_[level_] = -1;
        --level_;
      } else {
        ++level_;
      }
    }
  }

 private:
  bool advance(size_t level) {
    const auto& t = problem_.order[level];
    auto fit = fixed_.find(t);
    if (fit != fixed_.end()) {
      if (choice_[level] >= 0) return false;  // fixed term has a single choice
      choice_[level] = 0;
      image_[level] = fit->second;
      return check(level);
    }
    int c = choice_[level];
    while (true) {
      ++c;
      if (c >= static_cast<int>(problem_.candidates.size())) { choice_[level] = -1; return false; }
      choice_[level] = c;
      image_[level] = problem_.candidates[c];
      if (check(level)) return true;
    }
  }

  bool check(size_t level) {
    std::map<Term, Term> partial;
    for (size_t i = 0; i <= level; ++i) partial[problem_.order[i]] = image_[i];
    for (const Atom& a : problem_.atoms_of[level]) {
      Atom im{a.rel, {}};
      im.args.reserve(a.args.size());
      for (const auto& t : a.args) im.args.push_back(partial.at(t));
      if (!problem_.dst.contains(im)) return false;
    }
    return true;
  }

  detail::HomProblem problem_;
  TermMap fixed_;
  std::vector<Term> image_;
  std::vector<int> choice_;
  size_t level_ = 0;
  bool resume_ = false;
  bool done_ = false;
};

inline std::vector<TermMap> find_homomorphisms(const Interpretation& src, const Interpretation& dst,
                                               const TermMap& fixed = {},
                                               size_t limit = SIZE_MAX) {
  HomomorphismEnumerator e(src, dst, fixed);
  std::vector<TermMap> out;
  while (out.size() < limit) {
    auto m = e.next();
    if (!m) break;
    out.push_back(std::move(*m));
  }
  return out;
}

inline std::optional<TermMap> first_homomorphism(const Interpretation& src, const Interpretation& dst,
                                                 const TermMap& fixed = {}) {
  auto v = find_homomorphisms(src, dst, fixed, 1);
  if (v.empty()) return std::nullopt;
  return v.front();
}

inline bool hom_exists(const Interpretation& src, const Interpretation& dst, const TermMap& fixed = {}) {
  return first_homomorphism(src, dst, fixed).has_value();
}

inline bool is_homomorphism(const TermMap& h, const Interpretation& src, const Interpretation& dst) {
  for (const auto& t : src.dom())
    if (!h.count(t)) return false;
  for (const auto& a : src.atoms) {
    Atom im{a.rel, {}};
    for (const auto& t : a.args) im.args.push_back(h.at(t));
    if (!dst.contains(im)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// cg-tree decompositions

// A bag carries its domain explicitly: the induced atom set can be empty for
// singleton domains (e.g. a root bag holding just the answer variable).
struct Bag {
  TermSet dom;
  AtomSet atoms;

  friend auto operator<=>(const Bag&, const Bag&) = default;
};

inline Bag make_bag(const Interpretation& A, const TermSet& dom) {
  return Bag{dom, A.induced(dom).atoms};
}

struct CgTreeDecomposition {
  std::vector<int> nodes;
  std::vector<std::pair<int, int>> edges;  // undirected; stored as (parent, child)
  std::map<int, Bag> bag;
  int root = 0;
};

inline bool is_cg_tree_decomposition(const CgTreeDecomposition& td, const Interpretation& A,
                                     std::string* why = nullptr) {
  auto fail = [&](const std::string& m) {
    if (why) *why = m;
    return false;
  };
  if (td.nodes.empty()) return fail("no nodes");
  std::set<int> nodeset(td.nodes.begin(), td.nodes.end());
  if (nodeset.size() != td.nodes.size()) return fail("duplicate node ids");
  if (!nodeset.count(td.root)) return fail("root not a node");
  for (int n : td.nodes)
    if (!td.bag.count(n)) return fail("node without bag");

  // tree: connected and |E| = |V|-1 with no self loops / duplicates
  std::map<int, std::vector<int>> adj;
  std::set<std::pair<int, int>> seen;
  for (auto [u, v] : td.edges) {
    if (u == v) return fail("self loop");
    if (!nodeset.count(u) || !nodeset.count(v)) return fail("edge endpoint not a node");
    auto key = std::minmax(u, v);
    if (!seen.insert({key.first, key.second}).second) return fail("duplicate edge");
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  if (td.edges.size() + 1 != td.nodes.size()) return fail("not a tree (edge count)");
  std::set<int> vis;
  std::vector<int> stack{td.root};
  while (!stack.empty()) {
    int n = stack.back();
    stack.pop_back();
    if (!vis.insert(n).second) continue;
    for (int m : adj[n]) stack.push_back(m);
  }
  if (vis.size() != nodeset.size()) return fail("not connected");

  // bags: induced, guarded, covering
  AtomSet unionbags;
  TermSet uniondoms;
  for (int n : td.nodes) {
    const auto& b = td.bag.at(n);
    if (b.dom.empty()) return fail("empty bag domain");
    if (A.induced(b.dom).atoms != b.atoms) return fail("bag is not the induced subinterpretation");
    if (!is_guarded_set(A, b.dom)) return fail("bag domain not guarded");
    unionbags.insert(b.atoms.begin(), b.atoms.end());
    uniondoms.insert(b.dom.begin(), b.dom.end());
  }
  if (unionbags != A.atoms) return fail("bags do not cover the structure");
  if (uniondoms != A.dom()) return fail("bag domains do not cover the domain");

  // adjacent bags overlap
  for (auto [u, v] : td.edges) {
    const TermSet& du = td.bag.at(u).dom;
    const TermSet& dv = td.bag.at(v).dom;
    std::vector<Term> inter;
    std::set_intersection(du.begin(), du.end(), dv.begin(), dv.end(), std::back_inserter(inter));
    if (inter.empty()) return fail("adjacent bags with disjoint domains");
  }

  // occurrence sets connected
  for (const auto& t : A.dom()) {
    std::vector<int> occ;
    for (int n : td.nodes)
      if (td.bag.at(n).dom.count(t)) occ.push_back(n);
    if (occ.empty()) return fail("term missing from every bag");
    std::set<int> occset(occ.begin(), occ.end());
    std::set<int> reach;
    std::vector<int> st{occ.front()};
    while (!st.empty()) {
      int n = st.back();
      st.pop_back();
      if (!reach.insert(n).second) continue;
      for (int m : adj[n])
        if (occset.count(m)) st.push_back(m);
    }
    if (reach.size() != occset.size()) return fail("occurrence set of " + to_string(t) + " not connected");
  }
  return true;
}

// ---------------------------------------------------------------------------
// Disjoint union

struct DisjointUnionResult {
  Interpretation result;
  std::vector<TermMap> renaming;  // per part: original term -> term in the union
};

// Union of the parts after renaming any term id that already occurred in an
// earlier part. Renamed terms keep their kind.
inline DisjointUnionResult disjoint_union(const std::vector<Interpretation>& parts) {
  DisjointUnionResult r;
  NameGen gen;
  std::set<std::string> used;
  for (const auto& part : parts) {
    TermMap ren;
    for (const auto& t : part.dom()) {
      if (used.count(t.id)) {
        Term fresh{t.kind, gen.fresh(t.id)};
        while (used.count(fresh.id)) fresh.id = gen.fresh(t.id);
        ren[t] = fresh;
      } else {
        ren[t] = t;
      }
    }
    for (const auto& [from, to] : ren) used.insert(to.id);
    for (const auto& a : part.atoms) {
      Atom b{a.rel, {}};
      for (const auto& t : a.args) b.args.push_back(ren.at(t));
      r.result.add(std::move(b));
    }
    for (const auto& [name, ar] : part.sig) sig_add(r.result.sig, name, ar);
    r.renaming.push_back(std::move(ren));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Connected guarded bisimulation game

constexpr int kUnboundedRounds = -1;

namespace detail {

using PartialIso = std::vector<std::pair<Term, Term>>;  // sorted by first

// All non-empty subsets of maximal guarded sets (the possible supports of
// guarded tuples).
inline std::vector<TermSet> guarded_subsets(const Interpretation& A) {
  std::set<TermSet> out;
  for (const auto& g : maximal_guarded_sets(A)) {
    std::vector<Term> v(g.begin(), g.end());
    const size_t n = v.size();
    for (size_t mask = 1; mask < (1u << n); ++mask) {
      TermSet s;
      for (size_t i = 0; i < n; ++i)
        if (mask & (1u << i)) s.insert(v[i]);
      out.insert(s);
    }
  }
  return {out.begin(), out.end()};
}

inline bool partial_iso_ok(const PartialIso& p, const Interpretation& A, const Interpretation& B) {
  TermSet X, Y;
  TermMap fwd, bwd;
  for (const auto& [a, b] : p) {
    if (fwd.count(a) || bwd.count(b)) return false;  // not injective / not functional
    fwd[a] = b;
    bwd[b] = a;
    X.insert(a);
    Y.insert(b);
  }
  Interpretation iA = A.induced(X), iB = B.induced(Y);
  for (const auto& at : iA.atoms) {
    Atom im{at.rel, {}};
    for (const auto& t : at.args) im.args.push_back(fwd.at(t));
    if (!iB.contains(im)) return false;
  }
  for (const auto& at : iB.atoms) {
    Atom im{at.rel, {}};
    for (const auto& t : at.args) im.args.push_back(bwd.at(t));
    if (!iA.contains(im)) return false;
  }
  return true;
}

}  // namespace detail

namespace detail {

// Shared machinery for the game: guarded subsets with a per-term occurrence
// index, so challenge and response moves are generated locally.
struct GameSide {
  const Interpretation* S = nullptr;
  std::vector<TermSet> subsets;
  std::map<Term, std::vector<size_t>> occ;

  explicit GameSide(const Interpretation& s) : S(&s) {
    subsets = guarded_subsets(s);
    for (size_t i = 0; i < subsets.size(); ++i)
      for (const auto& t : subsets[i]) occ[t].push_back(i);
  }
};

// All valid responses for a challenge support X2 on side `from`, agreeing
// with p on X2's overlap with dom(p). `flip` swaps the direction (back moves
// respond on the A side to a B-side challenge).
inline std::vector<PartialIso> responses(const PartialIso& p, const TermSet& X2, bool flip,
                                         const GameSide& A, const GameSide& B) {
  const GameSide& resp = flip ? A : B;
  std::vector<PartialIso> out;
  // part of X2 already pinned by p
  TermMap pinned;  // challenge-side term -> response-side term
  std::vector<Term> free_terms;
  for (const auto& t : X2) {
    bool found = false;
    for (const auto& [a, b] : p) {
      Term key = flip ? b : a, val = flip ? a : b;
      if (key == t) { pinned[t] = val; found = true; break; }
    }
    if (!found) free_terms.push_back(t);
  }
  // candidate response supports: must contain every pinned value
  std::set<size_t> cand;
  if (!pinned.empty()) {
    const Term& anchor = pinned.begin()->second;
    auto it = resp.occ.find(anchor);
    if (it == resp.occ.end()) return out;
    for (size_t i : it->second) cand.insert(i);
  } else {
    for (size_t i = 0; i < resp.subsets.size(); ++i) cand.insert(i);
  }
  for (size_t i : cand) {
    const TermSet& Y2 = resp.subsets[i];
    if (Y2.size() != X2.size()) continue;
    bool pin_ok = true;
    for (const auto& [k, v] : pinned)
      if (!Y2.count(v)) { pin_ok = false; break; }
    if (!pin_ok) continue;
    std::vector<Term> targets;
    for (const auto& t : Y2) {
      bool used = false;
      for (const auto& [k, v] : pinned)
        if (v == t) { used = true; break; }
      if (!used) targets.push_back(t);
    }
    std::sort(targets.begin(), targets.end());
    if (targets.size() != free_terms.size()) continue;
    do {
      PartialIso q;
      for (const auto& [k, v] : pinned) q.push_back(flip ? std::pair{v, k} : std::pair{k, v});
      for (size_t j = 0; j < free_terms.size(); ++j)
        q.push_back(flip ? std::pair{targets[j], free_terms[j]} : std::pair{free_terms[j], targets[j]});
      std::sort(q.begin(), q.end());
      if (partial_iso_ok(q, *A.S, *B.S)) out.push_back(q);
    } while (std::next_permutation(targets.begin(), targets.end()));
  }
  return out;
}

// Challenges against p: every guarded subset on either side that overlaps the
// respective support of p.
inline std::vector<std::pair<TermSet, bool>> challenges(const PartialIso& p, const GameSide& A,
                                                        const GameSide& B) {
  std::vector<std::pair<TermSet, bool>> out;
  std::set<size_t> ids;
  for (const auto& [a, b] : p) {
    auto it = A.occ.find(a);
    if (it != A.occ.end()) ids.insert(it->second.begin(), it->second.end());
  }
  for (size_t i : ids) out.push_back({A.subsets[i], false});
  ids.clear();
  for (const auto& [a, b] : p) {
    auto it = B.occ.find(b);
    if (it != B.occ.end()) ids.insert(it->second.begin(), it->second.end());
  }
  for (size_t i : ids) out.push_back({B.subsets[i], true});
  return out;
}

}  // namespace detail

// Duplicator's winning condition in the (k-round or unbounded)
// connected-guarded-bisimulation game started at the map a_i -> b_i.
// Unbounded play is the greatest fixpoint over the partial isomorphisms
// reachable from the start position; both structures must be finite.
inline bool guarded_bisimilar(const Interpretation& A, const std::vector<Term>& atup,
                              const Interpretation& B, const std::vector<Term>& btup,
                              int rounds = kUnboundedRounds) {
  if (atup.size() != btup.size() || atup.empty()) return false;
  detail::PartialIso start;
  {
    TermMap m;
    for (size_t i = 0; i < atup.size(); ++i) {
      auto it = m.find(atup[i]);
      if (it != m.end()) {
        if (it->second != btup[i]) return false;
      } else {
        m[atup[i]] = btup[i];
      }
    }
    for (const auto& kv : m) start.push_back(kv);
  }
  if (!detail::partial_iso_ok(start, A, B)) return false;
  if (!is_guarded_tuple(A, atup) || !is_guarded_tuple(B, btup)) return false;

  detail::GameSide sideA(A), sideB(B);

  if (rounds != kUnboundedRounds) {
    // round-bounded: memoized recursion, positions keyed by (iso, rounds left)
    std::map<std::pair<detail::PartialIso, int>, bool> memo;
    auto win = [&](auto&& self, const detail::PartialIso& p, int k) -> bool {
      if (k == 0) return true;
      auto key = std::make_pair(p, k);
      auto it = memo.find(key);
      if (it != memo.end()) return it->second;
      bool ok = true;
      for (const auto& [X2, flip] : detail::challenges(p, sideA, sideB)) {
        bool answered = false;
        for (const auto& q : detail::responses(p, X2, flip, sideA, sideB))
          if (self(self, q, k - 1)) { answered = true; break; }
        if (!answered) { ok = false; break; }
      }
      memo[key] = ok;
      return ok;
    };
    return win(win, start, rounds);
  }

  // unbounded: reachable closure, then removal fixpoint within it
  std::set<detail::PartialIso> reach{start};
  std::vector<detail::PartialIso> queue{start};
  std::map<detail::PartialIso, std::vector<std::pair<TermSet, bool>>> chal;
  std::map<std::pair<detail::PartialIso, std::pair<TermSet, bool>>, std::vector<detail::PartialIso>> resp;
  while (!queue.empty()) {
    detail::PartialIso p = queue.back();
    queue.pop_back();
    chal[p] = detail::challenges(p, sideA, sideB);
    for (const auto& c : chal[p]) {
      auto& rs = resp[{p, c}];
      rs = detail::responses(p, c.first, c.second, sideA, sideB);
      for (const auto& q : rs)
        if (reach.insert(q).second) queue.push_back(q);
    }
  }
  std::set<detail::PartialIso> alive = reach;
  bool changed = true;
  while (changed) {
    changed = false;
    std::set<detail::PartialIso> next;
    for (const auto& p : alive) {
      bool ok = true;
      for (const auto& c : chal[p]) {
        bool answered = false;
        for (const auto& q : resp[{p, c}])
          if (alive.count(q)) { answered = true; break; }
        if (!answered) { ok = false; break; }
      }
      if (ok) next.insert(p);
    }
    if (next != alive) { alive = std::move(next); changed = true; }
    if (!alive.count(start)) return false;
  }
  return alive.count(start) > 0;
}

// ---------------------------------------------------------------------------
// ".inst" file format: one fact per line, `Rel(t1,...,tk).`, '%' comments.

inline Instance parse_instance(const std::string& text) {
  AtomSet facts;
  Signature sig;
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
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        get();
      } else {
        return;
      }
    }
  };
  auto ident = [&]() -> std::string {
    skip_ws();
    int l = line, c0 = col;
    std::string s;
    int c = peek();
    if (c == -1 || !std::isalpha(c)) throw ParseError("expected identifier", l, c0);
    while (true) {
      c = peek();
      if (c != -1 && (std::isalnum(c) || c == '_')) s += static_cast<char>(get());
      else break;
    }
    return s;
  };
  auto expect = [&](char want) {
    skip_ws();
    int l = line, c0 = col;
    int c = get();
    if (c != want) throw ParseError(std::string("expected '") + want + "'", l, c0);
  };

  while (true) {
    skip_ws();
    if (peek() == -1) break;
    std::string rel = ident();
    expect('(');
    std::vector<Term> args;
    while (true) {
      args.push_back(cst(ident()));
      skip_ws();
      if (peek() == ',') { get(); continue; }
      break;
    }
    expect(')');
    expect('.');
    sig_add(sig, rel, static_cast<int>(args.size()));
    facts.insert(Atom{rel, std::move(args)});
  }
  if (facts.empty()) throw ParseError("instance must contain at least one fact", line, col);
  return Instance(std::move(facts));
}

inline std::string emit_instance(const Instance& D) {
  std::string out;
  for (const auto& a : D.facts) {
    out += a.rel + "(";
    for (size_t i = 0; i < a.args.size(); ++i) {
      if (i) out += ",";
      out += a.args[i].id;
    }
    out += ").\n";
  }
  return out;
}

inline std::string emit_interpretation(const Interpretation& A) {
  std::string out;
  for (const auto& a : A.atoms) out += to_string(a) + ".\n";
  return out;
}

}  // namespace gomq
