#include "gomq/unravel.hpp"

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace gomq;

namespace {

Instance triangle() {
  return Instance(AtomSet{Atom{"R", {cst("a"), cst("b")}}, Atom{"R", {cst("b"), cst("c")}},
                          Atom{"R", {cst("c"), cst("a")}}});
}

Instance star(int m) {
  AtomSet facts;
  for (int i = 1; i <= m; ++i) facts.insert(Atom{"R", {cst("a"), cst("b" + std::to_string(i))}});
  return Instance(facts);
}

int successors(const Interpretation& A, const Term& t, const std::string& rel) {
  int n = 0;
  for (const auto& a : A.atoms)
    if (a.rel == rel && a.args.size() == 2 && a.args[0] == t) ++n;
  return n;
}

TEST(UgfUnravel, TriangleComponentsAreChains) {
  // Each root component of the depth-k unravelling of a triangle is a chain
  // of k+1 bags.
  UnravelResult R = ugf_unravel(triangle(), 2);
  ASSERT_EQ(R.trees.size(), 3u);
  for (size_t i = 0; i < R.trees.size(); ++i) {
    const auto& td = R.trees[i];
    EXPECT_EQ(td.nodes.size(), 3u);  // root + 2 (each bag has a unique next edge)
    // a chain: every node has at most one child
    std::map<int, int> kidCount;
    for (auto [p, c] : td.edges) kidCount[p]++;
    for (auto [p, n] : kidCount) EXPECT_LE(n, 1);
    Interpretation comp = R.component(i);
    EXPECT_TRUE(is_cg_tree_decomposition(td, comp));
  }
}

TEST(UgfUnravel, SingleUnaryAtomIsIsomorphicCopy) {
  Instance D(AtomSet{Atom{"A", {cst("a")}}});
  UnravelResult R = ugf_unravel(D, 5);
  EXPECT_EQ(R.structure.atoms.size(), 1u);
  const Atom& only = *R.structure.atoms.begin();
  EXPECT_EQ(only.rel, "A");
  EXPECT_EQ(R.up.at(only.args[0]), cst("a"));
}

TEST(UgfUnravel, StarRootComponentGrowsOutdegreeWithDepth) {
  // star with 3 leaves: in the uGF-unravelling the a-copy of the root bag
  // gains fresh successors at every depth
  Instance D = star(3);
  UnravelResult Rk2 = ugf_unravel(D, 2);
  UnravelResult Rk3 = ugf_unravel(D, 3);
  // root component of G1 = {a, b1}: bags G1, G1G2, G1G3 plus depth-2 bags
  const auto& td = Rk2.trees[0];
  Term aCopy = Rk2.copyOf.at({Rk2.componentRoots[0], cst("a")});
  int deg2 = successors(Rk2.component(0), aCopy, "R");
  Term aCopy3 = Rk3.copyOf.at({Rk3.componentRoots[0], cst("a")});
  int deg3 = successors(Rk3.component(0), aCopy3, "R");
  EXPECT_EQ(deg2, 5);  // b1 + b2 + b3 + two depth-2 re-entries
  EXPECT_GT(deg3, deg2);
  (void)td;
}

TEST(Ugc2Unravel, PreservesSuccessorCounts) {
  Instance D = star(3);
  UnravelResult R = ugc2_unravel(D, 4);
  for (size_t i = 0; i < R.trees.size(); ++i) {
    Interpretation comp = R.component(i);
    for (const auto& [cp, orig] : R.up) {
      if (!comp.dom().count(cp)) continue;
      // interior copies keep the successor count of their originals
      // (boundary copies at the truncation depth may miss successors)
      int origDeg = successors(D.interp(), orig, "R");
      int copyDeg = successors(comp, cp, "R");
      EXPECT_LE(copyDeg, origDeg);
    }
  }
  // the root copy of a in G1's component has exactly 3 successors
  Term aCopy = R.copyOf.at({R.componentRoots[0], cst("a")});
  EXPECT_EQ(successors(R.component(0), aCopy, "R"), 3);
}

TEST(Ugc2Unravel, RejectsTernary) {
  Instance D(AtomSet{Atom{"Q", {cst("a"), cst("b"), cst("c")}}});
  EXPECT_THROW(ugc2_unravel(D, 1), std::runtime_error);
}

TEST(Unravel, CountingSeparationOnStar) {
  // O = forall x (atleast 4 R-successors -> A(x)): false on the star, false
  // at the root copy of the uGC2-unravelling, true at the root copy of the
  // uGF-unravelling for k >= 2
  Ontology O = parse_ontology(
      "(forall ((x) (= x x)) (or (not (atleast 4 ((y) (R x y)) true)) (atom A x)))");
  Instance D = star(3);
  Env env;
  env["x"] = cst("a");
  FormulaPtr antecedent = f_atleast(4, "y", f_atom("R", {"x", "y"}), f_true());
  EXPECT_FALSE(eval_formula(D.interp(), *antecedent, env));

  UnravelResult gf = ugf_unravel(D, 4);
  Term aGf = gf.copyOf.at({gf.componentRoots[0], cst("a")});
  Env env2;
  env2["x"] = aGf;
  EXPECT_TRUE(eval_formula(gf.structure, *antecedent, env2));

  UnravelResult gc = ugc2_unravel(D, 4);
  Term aGc = gc.copyOf.at({gc.componentRoots[0], cst("a")});
  Env env3;
  env3["x"] = aGc;
  EXPECT_FALSE(eval_formula(gc.structure, *antecedent, env3));
}

TEST(Unravel, UpIsAtomPreservingAndBagwiseIso) {
  test_util::Rng rng(404);
  for (int trial = 0; trial < 10; ++trial) {
    Instance D = test_util::random_instance(rng, 4, 3, 6);
    UnravelResult R = ugf_unravel(D, 2);
    // atom preservation
    for (const auto& a : R.structure.atoms) {
      Atom im{a.rel, {}};
      for (const auto& t : a.args) im.args.push_back(R.up.at(t));
      EXPECT_TRUE(D.facts.count(im));
    }
    // surjectivity onto D's atoms
    AtomSet images;
    for (const auto& a : R.structure.atoms) {
      Atom im{a.rel, {}};
      for (const auto& t : a.args) im.args.push_back(R.up.at(t));
      images.insert(im);
    }
    EXPECT_EQ(images, D.facts);
    // per-bag isomorphism: the bag is isomorphic to the induced substructure
    for (const auto& td : R.trees)
      for (int n : td.nodes) {
        const Bag& b = td.bag.at(n);
        TermSet origDom;
        for (const auto& t : b.dom) origDom.insert(R.up.at(t));
        EXPECT_EQ(b.dom.size(), origDom.size());  // injective on the bag
        Interpretation induced = D.interp().induced(origDom);
        EXPECT_EQ(b.atoms.size(), induced.atoms.size());
      }
  }
}

TEST(Unravel, TruncationMonotone) {
  test_util::Rng rng(1717);
  for (int trial = 0; trial < 6; ++trial) {
    Instance D = test_util::random_instance(rng, 4, 2, 5);
    UnravelResult a = ugf_unravel(D, 2);
    UnravelResult b = ugf_unravel(D, 3);
    for (const auto& atom : a.structure.atoms) EXPECT_TRUE(b.structure.contains(atom));
  }
}

TEST(Unravel, KRoundBisimilarAtMaximalGuardedRoots) {
  test_util::Rng rng(2323);
  for (int trial = 0; trial < 5; ++trial) {
    Instance D = test_util::random_instance(rng, 4, 2, 5);
    const int k = 2;
    UnravelResult R = ugf_unravel(D, k);
    auto guards = maximal_guarded_sets(D.interp());
    for (size_t gi = 0; gi < guards.size(); ++gi) {
      std::vector<Term> tup(guards[gi].begin(), guards[gi].end());
      std::vector<Term> copy = R.root_copy(gi, tup);
      EXPECT_TRUE(guarded_bisimilar(D.interp(), tup, R.structure, copy, k))
          << emit_instance(D) << " at component " << gi;
    }
  }
}

TEST(ForestUnfold, IdentityAtDepthZero) {
  Instance D = triangle();
  auto R = forest_unfold(D.interp(), D, 0, UnravelMode::UGF);
  EXPECT_EQ(R.structure.atoms, D.facts);
  for (const auto& [k, v] : R.projection) EXPECT_EQ(k, v);
}

TEST(ForestUnfold, ElModelUnfoldsToHookedPath) {
  Instance D(AtomSet{Atom{"A", {cst("a")}}});
  Interpretation model(AtomSet{Atom{"A", {cst("a")}}, Atom{"R", {cst("a"), cst("w")}},
                               Atom{"B", {cst("w")}}});
  auto R = forest_unfold(model, D, 3, UnravelMode::UGF);
  // the unfolding reaches a copy of w with B
  bool sawB = false;
  for (const auto& a : R.structure.atoms)
    if (a.rel == "B") sawB = true;
  EXPECT_TRUE(sawB);
  // projection is a homomorphism into the model preserving dom(D)
  EXPECT_TRUE(is_homomorphism(R.projection, R.structure, model));
  EXPECT_EQ(R.projection.at(cst("a")), cst("a"));
}

TEST(ForestUnfold, ProjectionIsAlwaysHomomorphism) {
  test_util::Rng rng(31337);
  Ontology O = parse_ontology("(forall ((x y) (R x y)) (atom S x y))");
  for (int trial = 0; trial < 6; ++trial) {
    Instance D = test_util::random_instance(rng, 3, 2, 4);
    auto sat = saturate(O, D);
    ASSERT_TRUE(sat.has_value());
    Interpretation model = sat->interp();
    auto R = forest_unfold(model, D, 2, UnravelMode::UGF);
    EXPECT_TRUE(is_homomorphism(R.projection, R.structure, model));
    for (const auto& t : D.dom()) EXPECT_EQ(R.projection.at(t), t);
  }
}

TEST(Tolerance, ParityTriangleViolatesTolerance) {
  Ontology O = parse_ontology(
      "(forall ((x) (A x)) (or (not (exists ((y) (R x y)) (atom A y))) (atom E x)))\n"
      "(forall ((x) (= x x)) (or (atom A x) (not (exists ((y) (R x y)) (not (atom A y)))) (atom E x)))\n"
      "(forall ((x y) (R x y)) (or (not (atom E x)) (atom E y)))\n"
      "(forall ((x y) (R y x)) (or (not (atom E x)) (atom E y)))\n");
  Instance D = triangle();
  // the tuple must span a maximal guarded set, so query E at the pair
  CQ q;
  q.answerVars = {"x", "y"};
  q.atoms = {Atom{"E", {cst("x")}}, Atom{"R", {cst("x"), cst("y")}}};
  ChaseBudget b;
  b.maxBranches = 60000;
  b.maxBranchDepth = 40;
  auto rep = test_unravelling_tolerance(O, D, q, {cst("a"), cst("b")}, 5, b);
  EXPECT_EQ(rep.instanceSide.value, V3::Yes);
  EXPECT_EQ(rep.unravelSide.value, V3::No);
  EXPECT_EQ(rep.verdict.value, V3::No);
  ASSERT_TRUE(rep.verdict.witness.has_value());
}

TEST(Tolerance, EmptyOntologyIsTolerant) {
  Ontology O;
  Instance D = triangle();
  CQ q;
  q.answerVars = {"x", "y"};
  q.atoms = {Atom{"R", {cst("x"), cst("y")}}};
  auto rep = test_unravelling_tolerance(O, D, q, {cst("a"), cst("b")}, 3);
  EXPECT_EQ(rep.verdict.value, V3::Yes);
}

TEST(Tolerance, ElIsTolerantOnSingleton) {
  Ontology O = parse_ontology("(forall ((x) (A x)) (exists ((y) (R x y)) (atom B y)))");
  Instance D(AtomSet{Atom{"A", {cst("a")}}});
  CQ q;
  q.answerVars = {"x"};
  q.atoms = {Atom{"R", {cst("x"), cst("y")}}, Atom{"B", {cst("y")}}};
  auto rep = test_unravelling_tolerance(O, D, q, {cst("a")}, 3);
  EXPECT_EQ(rep.instanceSide.value, V3::Yes);
  EXPECT_EQ(rep.unravelSide.value, V3::Yes);
  EXPECT_EQ(rep.verdict.value, V3::Yes);
}

}  // namespace
