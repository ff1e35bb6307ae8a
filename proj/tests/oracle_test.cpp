#include "gomq/oracle.hpp"

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace gomq;

namespace {

const char* kParity =
    "(forall ((x) (A x)) (or (not (exists ((y) (R x y)) (atom A y))) (atom E x)))\n"
    "(forall ((x) (= x x)) (or (atom A x) (not (exists ((y) (R x y)) (not (atom A y)))) (atom E x)))\n"
    "(forall ((x y) (R x y)) (or (not (atom E x)) (atom E y)))\n"
    "(forall ((x y) (R y x)) (or (not (atom E x)) (atom E y)))\n";

const char* kEl = "(forall ((x) (A x)) (exists ((y) (R x y)) (atom B y)))";

Instance triangle() {
  return Instance(AtomSet{Atom{"R", {cst("a"), cst("b")}}, Atom{"R", {cst("b"), cst("c")}},
                          Atom{"R", {cst("c"), cst("a")}}});
}

UCQ unary_query(const std::string& rel) { return as_ucq(atomic_query(rel, 1)); }

// Independent reference: a tuple is certain iff it holds in every model over
// dom(D) in the joint signature (sound and complete for universal ontologies).
V3 naive_universal_certain(const Ontology& O, const Instance& D, const UCQ& q,
                           const std::vector<Term>& tup) {
  Signature sig = O.sig();
  for (const auto& f : D.facts) sig_add(sig, f.rel, static_cast<int>(f.args.size()));
  for (const auto& d : q.disjuncts)
    for (const auto& a : d.atoms) sig_add(sig, a.rel, static_cast<int>(a.args.size()));
  bool all = true;
  enumerate_models_over_domain(O, D, sig, [&](const Interpretation& A) {
    if (!eval_query(A, q, tup)) { all = false; return false; }
    return true;
  });
  return all ? V3::Yes : V3::No;
}

TEST(IsUniversal, PolarityScan) {
  EXPECT_TRUE(is_universal(parse_ontology(kParity)));
  EXPECT_FALSE(is_universal(parse_ontology(kEl)));
  EXPECT_TRUE(is_universal(Ontology{}));
  Ontology f;
  f.functional.insert("F");
  EXPECT_FALSE(is_universal(f));
  // counting in positive polarity is existential
  EXPECT_FALSE(is_universal(parse_ontology("(forall ((x) (A x)) (atleast 2 ((y) (R x y)) true))")));
  // counting under negation is universal
  EXPECT_TRUE(is_universal(
      parse_ontology("(forall ((x) (= x x)) (or (not (atleast 4 ((y) (R x y)) true)) (atom A x)))")));
}

TEST(CertainAnswer, ParityTriangleEntailsE) {
  Ontology O = parse_ontology(kParity);
  Instance D = triangle();
  for (const char* c : {"a", "b", "c"}) {
    Verdict3 v = certain_answer(O, D, unary_query("E"), {cst(c)});
    EXPECT_EQ(v.value, V3::Yes);
    EXPECT_EQ(v.mode, "complete-universal");
  }
  EXPECT_EQ(naive_universal_certain(O, D, unary_query("E"), {cst("a")}), V3::Yes);
}

TEST(CertainAnswer, EmptyOntologyIsQueryEvaluation) {
  Ontology empty;
  Instance D(AtomSet{Atom{"A", {cst("a")}}, Atom{"R", {cst("a"), cst("b")}}});
  EXPECT_EQ(certain_answer(empty, D, unary_query("A"), {cst("a")}).value, V3::Yes);
  EXPECT_EQ(certain_answer(empty, D, unary_query("A"), {cst("b")}).value, V3::No);
}

TEST(CertainAnswer, ElChaseOneStep) {
  Ontology O = parse_ontology(kEl);
  Instance D(AtomSet{Atom{"A", {cst("a")}}});
  CQ q;
  q.answerVars = {"x"};
  q.atoms = {Atom{"R", {cst("x"), cst("y")}}, Atom{"B", {cst("y")}}};
  Verdict3 v = certain_answer(O, D, as_ucq(q), {cst("a")});
  EXPECT_EQ(v.value, V3::Yes);
  EXPECT_EQ(v.mode, "chase-exhausted");
}

TEST(CertainAnswer, NoCarriesVerifiedCountermodel) {
  Ontology O = parse_ontology(kEl);
  Instance D(AtomSet{Atom{"A", {cst("a")}}});
  Verdict3 v = certain_answer(O, D, unary_query("B"), {cst("a")});
  ASSERT_EQ(v.value, V3::No);
  ASSERT_TRUE(v.witness.has_value());
  EXPECT_TRUE(models(*v.witness, O));
  for (const auto& f : D.facts) EXPECT_TRUE(v.witness->contains(f));
  EXPECT_FALSE(eval_query(*v.witness, unary_query("B"), {cst("a")}));
}

TEST(CertainAnswer, AgreesWithNaiveEnumeratorOnUniversalOntologies) {
  test_util::Rng rng(2024);
  std::vector<Ontology> ontologies;
  ontologies.push_back(parse_ontology(kParity));
  ontologies.push_back(parse_ontology("(forall ((x y) (R x y)) (atom S x y))"));
  ontologies.push_back(parse_ontology(
      "(forall ((x) (A x)) (not (atom B x)))"
      "(forall ((x y) (R x y)) (or (atom A x) (atom B x)))"));
  ChaseBudget big;
  big.maxBranches = 200000;
  big.maxBranchDepth = 64;
  for (const auto& O : ontologies) {
    ASSERT_TRUE(is_universal(O));
    for (int trial = 0; trial < 8; ++trial) {
      Instance D = test_util::random_instance(rng, 3, 2, 4);
      UCQ q = unary_query(trial % 2 ? "A" : "E");
      std::vector<Term> tup{*D.dom().begin()};
      Verdict3 v = certain_answer(O, D, q, tup, big);
      ASSERT_NE(v.value, V3::Unknown);
      EXPECT_EQ(v.value, naive_universal_certain(O, D, q, tup)) << emit_instance(D);
    }
  }
}

TEST(IsConsistent, BasicVerdicts) {
  Instance D(AtomSet{Atom{"A", {cst("a")}}});
  Verdict3 yes = is_consistent(Ontology{}, D);
  EXPECT_EQ(yes.value, V3::Yes);
  ASSERT_TRUE(yes.witness.has_value());
  EXPECT_EQ(yes.witness->atoms, D.facts);

  Ontology bad = parse_ontology("(forall ((x) (A x)) false)");
  EXPECT_EQ(is_consistent(bad, D).value, V3::No);
  Instance D2(AtomSet{Atom{"B", {cst("b")}}});
  EXPECT_EQ(is_consistent(bad, D2).value, V3::Yes);
}

TEST(IsConsistent, FunctionalityClash) {
  Ontology O;
  O.functional.insert("F");
  // two distinct constant successors cannot be unified
  Instance D(AtomSet{Atom{"F", {cst("a"), cst("b")}}, Atom{"F", {cst("a"), cst("c")}}});
  EXPECT_EQ(is_consistent(O, D).value, V3::No);
  Instance D2(AtomSet{Atom{"F", {cst("a"), cst("b")}}});
  EXPECT_EQ(is_consistent(O, D2).value, V3::Yes);
}

TEST(Saturate, AddsCertainAtoms) {
  Ontology O = parse_ontology("(forall ((x y) (R x y)) (atom S x y))");
  Instance D(AtomSet{Atom{"R", {cst("a"), cst("b")}}});
  auto s = saturate(O, D);
  ASSERT_TRUE(s.has_value());
  EXPECT_TRUE(s->facts.count(Atom{"S", {cst("a"), cst("b")}}));
  EXPECT_EQ(s->facts.size(), 2u);
}

TEST(Saturate, EmptyOntologyFixpointAndIdempotence) {
  Instance D(AtomSet{Atom{"R", {cst("a"), cst("b")}}});
  auto s = saturate(Ontology{}, D);
  ASSERT_TRUE(s.has_value());
  EXPECT_EQ(s->facts, D.facts);

  Ontology O = parse_ontology(
      "(forall ((x y) (R x y)) (atom S x y))"
      "(forall ((x y) (S x y)) (atom T x y))");
  auto once = saturate(O, D);
  ASSERT_TRUE(once.has_value());
  auto twice = saturate(O, *once);
  ASSERT_TRUE(twice.has_value());
  EXPECT_EQ(once->facts, twice->facts);
  EXPECT_TRUE(once->facts.count(Atom{"T", {cst("a"), cst("b")}}));
}

TEST(Saturate, ElAddsNothingOverDomain) {
  Ontology O = parse_ontology(kEl);
  Instance D(AtomSet{Atom{"A", {cst("a")}}});
  auto s = saturate(O, D);
  ASSERT_TRUE(s.has_value());
  EXPECT_EQ(s->facts, D.facts);
}

TEST(Saturate, InconsistentInputThrows) {
  Ontology bad = parse_ontology("(forall ((x) (A x)) false)");
  Instance D(AtomSet{Atom{"A", {cst("a")}}});
  EXPECT_THROW(saturate(bad, D), std::runtime_error);
}

TEST(CertainDisjunction, BranchesCoverDisjuncts) {
  // O forces A(a) or B(a); neither disjunct alone is certain
  Ontology O = parse_ontology("(forall ((x) (C x)) (or (atom A x) (atom B x)))");
  Instance D(AtomSet{Atom{"C", {cst("a")}}});
  auto both = certain_disjunction(
      O, D, {{unary_query("A"), {cst("a")}}, {unary_query("B"), {cst("a")}}});
  EXPECT_EQ(both.value, V3::Yes);
  EXPECT_EQ(certain_answer(O, D, unary_query("A"), {cst("a")}).value, V3::No);
  EXPECT_EQ(certain_answer(O, D, unary_query("B"), {cst("a")}).value, V3::No);
}

TEST(Chase, BudgetYieldsUnknown) {
  // a forced chain of five pairwise-disjoint stages; two fresh nulls are not
  // enough to complete it and closing over small domains is blocked by the
  // disjointness constraints
  std::string text =
      "(forall ((x) (A x)) (exists ((y) (R x y)) (atom B y)))"
      "(forall ((x) (B x)) (exists ((y) (R x y)) (atom C y)))"
      "(forall ((x) (C x)) (exists ((y) (R x y)) (atom D y)))"
      "(forall ((x) (D x)) (exists ((y) (R x y)) (atom E2 y)))"
      "(forall ((x y) (R x y)) (not (eq x y)))";
  const char* labels[] = {"A", "B", "C", "D", "E2"};
  for (int i = 0; i < 5; ++i)
    for (int j = i + 1; j < 5; ++j)
      text += "(forall ((x) (" + std::string(labels[i]) + " x)) (not (atom " + labels[j] + " x)))";
  Ontology O = parse_ontology(text);
  Instance D(AtomSet{Atom{"A", {cst("a")}}});
  ChaseBudget tiny;
  tiny.maxNewNulls = 2;
  tiny.maxBranches = 2000;
  Verdict3 v = certain_answer(O, D, unary_query("Z"), {cst("a")}, tiny);
  EXPECT_EQ(v.value, V3::Unknown);
}

TEST(Chase, ClosingFindsFiniteModels) {
  // without the inequality constraint the loop model exists and refutes Z(a)
  Ontology O = parse_ontology("(forall ((x) (A x)) (exists ((y) (R x y)) (atom A y)))");
  Instance D(AtomSet{Atom{"A", {cst("a")}}});
  ChaseBudget tiny;
  tiny.maxNewNulls = 3;
  tiny.maxBranches = 400;
  Verdict3 v = certain_answer(O, D, unary_query("Z"), {cst("a")}, tiny);
  ASSERT_EQ(v.value, V3::No);
  EXPECT_TRUE(models(*v.witness, O));
}

}  // namespace
