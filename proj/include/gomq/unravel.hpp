#pragma once

// Depth-truncated uGF- and uGC2-unravellings of instances, guarded unfolding
// of models into forests, and the unravelling-tolerance test.

#include "gomq/oracle.hpp"

namespace gomq {

enum class UnravelMode { UGF, UGC2 };

struct UnravelResult {
  Interpretation structure;                 // union of the root components
  std::vector<int> componentRoots;          // root node id per maximal guarded set
  std::vector<CgTreeDecomposition> trees;   // one per root component
  TermMap up;                               // copy -> original
  std::map<std::pair<int, Term>, Term> copyOf;  // (node, original) -> copy

  // substructure spanned by one component's bags
  Interpretation component(size_t i) const {
    Interpretation out;
    for (int n : trees[i].nodes) {
      const Bag& b = trees[i].bag.at(n);
      for (const auto& a : b.atoms) out.add(a);
    }
    return out;
  }

  // the copy of a tuple (over a maximal guarded set G) in the root bag of
  // G's component
  std::vector<Term> root_copy(size_t i, const std::vector<Term>& tuple) const {
    std::vector<Term> out;
    for (const auto& t : tuple) out.push_back(copyOf.at({componentRoots[i], t}));
    return out;
  }
};

namespace detail {

struct UnravelNode {
  int id;
  int parent;          // -1 for roots
  int guardIdx;        // index into the maximal guarded sets
  int depth;
  TermMap copy;        // original -> copy, for the bag's domain
};

}  // namespace detail

// Sequences t = G0 G1 ... Gn (n <= k) over the maximal guarded sets with
// (a) G_i != G_{i+1}, (b) overlapping, and (c) G_{i-1} != G_{i+1}
// (uGC2 mode: (c') G_i ∩ G_{i-1} != G_i ∩ G_{i+1}). Each bag is a fresh
// isomorphic copy of the induced substructure, sharing the overlap copies
// with its parent. Nodes are created in breadth-first order, so the depth-k
// result is a prefix of the depth-(k+1) one.
inline UnravelResult unravel(const Instance& D, int k, UnravelMode mode) {
  Interpretation Di = D.interp();
  if (mode == UnravelMode::UGC2)
    for (const auto& [rel, ar] : Di.sig)
      if (ar > 2) throw std::runtime_error("uGC2-unravelling requires arity <= 2");
  std::vector<TermSet> guards = maximal_guarded_sets(Di);

  UnravelResult R;
  std::uint64_t counter = 0;
  auto fresh_copy = [&](const Term& orig) {
    return cst(orig.id + "_n" + std::to_string(++counter));
  };

  std::vector<detail::UnravelNode> nodes;
  std::vector<std::vector<int>> children;
  auto make_node = [&](int parent, int guardIdx, int depth) {
    detail::UnravelNode n;
    n.id = static_cast<int>(nodes.size());
    n.parent = parent;
    n.guardIdx = guardIdx;
    n.depth = depth;
    const TermSet& G = guards[guardIdx];
    if (parent >= 0) {
      const auto& par = nodes[parent];
      const TermSet& PG = guards[par.guardIdx];
      for (const auto& d : G) {
        if (PG.count(d))
          n.copy[d] = par.copy.at(d);
        else
          n.copy[d] = fresh_copy(d);
      }
    } else {
      for (const auto& d : G) n.copy[d] = fresh_copy(d);
    }
    for (const auto& [orig, cp] : n.copy) {
      R.up[cp] = orig;
      R.copyOf[{n.id, orig}] = cp;
    }
    // bag atoms: image of the induced substructure
    for (const auto& a : Di.induced(G).atoms) {
      Atom b{a.rel, {}};
      for (const auto& t : a.args) b.args.push_back(n.copy.at(t));
      R.structure.add(std::move(b));
    }
    nodes.push_back(std::move(n));
    children.push_back({});
    if (parent >= 0) children[parent].push_back(nodes.back().id);
    return nodes.back().id;
  };

  // roots, then level order
  std::vector<int> frontier;
  for (size_t g = 0; g < guards.size(); ++g) {
    int id = make_node(-1, static_cast<int>(g), 0);
    R.componentRoots.push_back(id);
    frontier.push_back(id);
  }
  for (int depth = 1; depth <= k; ++depth) {
    std::vector<int> next;
    for (int t : frontier) {
      const auto& node = nodes[t];
      const TermSet& tail = guards[node.guardIdx];
      for (size_t g = 0; g < guards.size(); ++g) {
        const TermSet& G2 = guards[g];
        if (G2 == tail) continue;  // (a)
        std::vector<Term> overlap;
        std::set_intersection(tail.begin(), tail.end(), G2.begin(), G2.end(),
                              std::back_inserter(overlap));
        if (overlap.empty()) continue;  // (b)
        if (node.parent >= 0) {
          const TermSet& prev = guards[nodes[node.parent].guardIdx];
          if (mode == UnravelMode::UGF) {
            if (prev == G2) continue;  // (c)
          } else {
            TermSet withPrev, withNext;
            std::set_intersection(tail.begin(), tail.end(), prev.begin(), prev.end(),
                                  std::inserter(withPrev, withPrev.begin()));
            for (const auto& t2 : overlap) withNext.insert(t2);
            if (withPrev == withNext) continue;  // (c')
          }
        }
        next.push_back(make_node(t, static_cast<int>(g), depth));
      }
    }
    frontier = std::move(next);
  }

  // trees per root component
  for (size_t g = 0; g < guards.size(); ++g) {
    CgTreeDecomposition td;
    td.root = R.componentRoots[g];
    std::vector<int> stack{td.root};
    while (!stack.empty()) {
      int id = stack.back();
      stack.pop_back();
      td.nodes.push_back(id);
      TermSet dom;
      for (const auto& [orig, cp] : nodes[id].copy) dom.insert(cp);
      td.bag[id] = make_bag(R.structure, dom);
      for (int c : children[id]) {
        td.edges.push_back({id, c});
        stack.push_back(c);
      }
    }
    std::sort(td.nodes.begin(), td.nodes.end());
    std::sort(td.edges.begin(), td.edges.end());
    R.trees.push_back(std::move(td));
  }
  return R;
}

inline UnravelResult ugf_unravel(const Instance& D, int k) { return unravel(D, k, UnravelMode::UGF); }
inline UnravelResult ugc2_unravel(const Instance& D, int k) { return unravel(D, k, UnravelMode::UGC2); }

// the ".map" sidecar: one `copy -> original` line per copy
inline std::string emit_up_map(const UnravelResult& R) {
  std::string out;
  for (const auto& [cp, orig] : R.up) out += cp.id + " -> " + orig.id + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Forest unfolding of a model at an instance's guarded sets

struct ForestUnfoldResult {
  Interpretation structure;
  TermMap projection;  // structure dom -> dom(A); identity on dom(D)
};

// Depth-k guarded unfolding of a model A at the maximal guarded sets of D
// (UGF mode) or at the single constants of D (UGC2 mode). The result extends
// D, and the projection is a homomorphism onto A preserving dom(D).
inline ForestUnfoldResult forest_unfold(const Interpretation& A, const Instance& D, int k,
                                        UnravelMode mode) {
  for (const auto& f : D.facts)
    if (!A.contains(f)) throw std::runtime_error("forest_unfold: model does not contain the instance");
  if (mode == UnravelMode::UGC2)
    for (const auto& [rel, ar] : A.sig)
      if (ar > 2) throw std::runtime_error("uGC2 unfolding requires arity <= 2");

  TermSet ddom = D.dom();
  std::vector<TermSet> aguards = maximal_guarded_sets(A);
  ForestUnfoldResult R;
  for (const auto& f : D.facts) R.structure.add(f);
  for (const auto& t : ddom) R.projection[t] = t;
  std::uint64_t counter = 0;
  auto fresh_copy = [&](const Term& orig) {
    return cst(orig.id + "_u" + std::to_string(++counter));
  };

  struct Node {
    TermSet guard;        // guarded set of A at this bag (original names)
    TermSet parentGuard;  // empty for hooks
    TermMap copy;         // original -> copy (identity at the hook)
    int depth;
  };

  auto bag_atoms = [&](const Node& n) {
    for (const auto& a : A.induced(n.guard).atoms) {
      Atom b{a.rel, {}};
      for (const auto& t : a.args) b.args.push_back(n.copy.at(t));
      R.structure.add(std::move(b));
    }
  };

  std::vector<Node> frontier;
  if (mode == UnravelMode::UGF) {
    for (const auto& G : maximal_guarded_sets(D.interp())) {
      Node n;
      n.guard = G;
      for (const auto& t : G) n.copy[t] = t;  // identified with D
      n.depth = 0;
      bag_atoms(n);  // root bag: A's atoms over G, original names
      frontier.push_back(std::move(n));
    }
  } else {
    for (const auto& c : ddom) {
      Node n;
      n.guard = {c};
      n.copy[c] = c;
      n.depth = 0;
      bag_atoms(n);  // unary atoms of c in A
      frontier.push_back(std::move(n));
    }
    // binary atoms of A among instance constants stay as they are
    for (const auto& a : A.atoms) {
      bool inD = true;
      for (const auto& t : a.args)
        if (!ddom.count(t)) { inD = false; break; }
      if (inD) R.structure.add(a);
    }
  }

  for (int depth = 1; depth <= k; ++depth) {
    std::vector<Node> next;
    for (const auto& node : frontier) {
      for (const auto& G2 : aguards) {
        if (G2 == node.guard) continue;  // (a)
        TermSet overlap;
        std::set_intersection(node.guard.begin(), node.guard.end(), G2.begin(), G2.end(),
                              std::inserter(overlap, overlap.begin()));
        if (overlap.empty()) continue;  // (b)
        if (node.depth == 0) {
          // first step must leave the instance
          bool insideD = true;
          for (const auto& t : G2)
            if (!ddom.count(t)) insideD = false;
          if (insideD) continue;
        }
        if (!node.parentGuard.empty() || node.depth > 0) {
          if (mode == UnravelMode::UGF) {
            if (node.depth > 0 && G2 == node.parentGuard) continue;  // (c)
          } else {
            TermSet withPrev;
            std::set_intersection(node.guard.begin(), node.guard.end(), node.parentGuard.begin(),
                                  node.parentGuard.end(), std::inserter(withPrev, withPrev.begin()));
            if (node.depth > 0 && withPrev == overlap) continue;  // (c')
          }
        }
        next.push_back(Node{});
        Node& n = next.back();
        n.guard = G2;
        n.parentGuard = node.guard;
        n.depth = depth;
        for (const auto& t : G2) {
          auto it = node.copy.find(t);
          if (overlap.count(t) && it != node.copy.end())
            n.copy[t] = it->second;
          else
            n.copy[t] = fresh_copy(t);
        }
        for (const auto& [orig, cp] : n.copy)
          if (!R.projection.count(cp)) R.projection[cp] = orig;
        bag_atoms(n);
      }
    }
    frontier = std::move(next);
  }
  return R;
}

// ---------------------------------------------------------------------------
// Unravelling tolerance

struct ToleranceReport {
  Verdict3 verdict;        // Yes: tolerant at this depth; No: violated
  Verdict3 instanceSide;   // certain answer on D
  Verdict3 unravelSide;    // certain answer on the truncated unravelling
  UnravelMode mode = UnravelMode::UGF;
  int depth = 0;
};

// Compares certain answers on D and on the depth-k truncation of its
// unravelling at the copy of the tuple. A definite disagreement refutes
// tolerance at this depth; agreement is evidence at this depth only (the
// paper's unravelling is infinite). The (2) => (1) direction holds
// unconditionally for uGF(=) ontologies.
inline ToleranceReport test_unravelling_tolerance(const Ontology& O, const Instance& D, const CQ& q,
                                                  const std::vector<Term>& tuple, int k,
                                                  const ChaseBudget& b = {}) {
  if (!is_rAQ(q)) throw std::runtime_error("unravelling tolerance is defined for rAQs");
  Interpretation Di = D.interp();
  TermSet G(tuple.begin(), tuple.end());
  auto maxg = maximal_guarded_sets(Di);
  size_t gi = maxg.size();
  for (size_t i = 0; i < maxg.size(); ++i)
    if (maxg[i] == G) gi = i;
  if (gi == maxg.size())
    throw std::runtime_error("the tuple's element set must be maximally guarded in D");

  FragmentTag tag = classify(O);
  UnravelMode mode = (tag.counting || tag.functions) ? UnravelMode::UGC2 : UnravelMode::UGF;

  ToleranceReport rep;
  rep.mode = mode;
  rep.depth = k;
  rep.instanceSide = certain_answer(O, D, as_ucq(q), tuple, b);
  UnravelResult U = unravel(D, k, mode);
  Instance Du(U.structure.atoms);
  std::vector<Term> copyTuple = U.root_copy(gi, tuple);
  rep.unravelSide = certain_answer(O, Du, as_ucq(q), copyTuple, b);

  if (rep.instanceSide.value == V3::Unknown || rep.unravelSide.value == V3::Unknown) {
    rep.verdict.value = V3::Unknown;
    rep.verdict.mode = "budget";
  } else if (rep.instanceSide.value == rep.unravelSide.value) {
    rep.verdict.value = V3::Yes;
    rep.verdict.mode = "agree-at-depth-" + std::to_string(k);
  } else {
    rep.verdict.value = V3::No;
    rep.verdict.mode = rep.instanceSide.value == V3::Yes
                           ? "violated: (1) holds but (2) fails at depth " + std::to_string(k)
                           : "violated: (2) holds but (1) fails";
    rep.verdict.witness = rep.instanceSide.value == V3::Yes ? rep.unravelSide.witness
                                                            : rep.instanceSide.witness;
  }
  return rep;
}

}  // namespace gomq
