#include "gomq/logic.hpp"

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace gomq;

namespace {

// Independent reference evaluator: expand every quantifier over the full
// domain, no guard-driven matching.
bool naive_eval(const Interpretation& A, const Formula& f, Env& env) {
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
      return !naive_eval(A, *f.kids[0], env);
    case FKind::And:
      for (const auto& k : f.kids)
        if (!naive_eval(A, *k, env)) return false;
      return true;
    case FKind::Or:
      for (const auto& k : f.kids)
        if (naive_eval(A, *k, env)) return true;
      return false;
    case FKind::Exists:
    case FKind::Forall:
    case FKind::AtLeast: {
      auto domset = A.dom();
      std::vector<Term> dom(domset.begin(), domset.end());
      std::vector<size_t> idx(f.qvars.size(), 0);
      int witnesses = 0;
      bool all = true, any = false;
      TermSet distinct;
      while (true) {
        Env ext = env;
        for (size_t i = 0; i < f.qvars.size(); ++i) ext[f.qvars[i]] = dom[idx[i]];
        bool g = naive_eval(A, *f.guard, ext);
        if (g) {
          bool b = naive_eval(A, *f.kids[0], ext);
          if (b) {
            any = true;
            if (f.kind == FKind::AtLeast) distinct.insert(ext.at(f.qvars[0]));
          }
          if (!b) all = false;
        }
        size_t k = 0;
        while (k < idx.size() && ++idx[k] == dom.size()) idx[k++] = 0;
        if (k == idx.size() || idx.empty()) break;
      }
      (void)witnesses;
      if (f.kind == FKind::Exists) return any;
      if (f.kind == FKind::Forall) return all;
      return static_cast<int>(distinct.size()) >= f.count;
    }
  }
  return false;
}

bool naive_eval_sentence(const Interpretation& A, const Sentence& s) {
  auto domset = A.dom();
  std::vector<Term> dom(domset.begin(), domset.end());
  std::vector<size_t> idx(s.vars.size(), 0);
  if (dom.empty()) return true;
  while (true) {
    Env env;
    for (size_t i = 0; i < s.vars.size(); ++i) env[s.vars[i]] = dom[idx[i]];
    if (naive_eval(A, *s.guard, env) && !naive_eval(A, *s.body, env)) return false;
    size_t k = 0;
    while (k < idx.size() && ++idx[k] == dom.size()) idx[k++] = 0;
    if (k == idx.size()) break;
  }
  return true;
}

const char* kExample3 = "(forall ((x y) (R x y)) (or (atom A x) (exists ((z) (S y z)) true)))";

TEST(Parser, Example3SentenceShape) {
  Ontology O = parse_ontology(kExample3);
  ASSERT_EQ(O.sentences.size(), 1u);
  const Sentence& s = O.sentences[0];
  EXPECT_EQ(s.vars, (std::vector<std::string>{"x", "y"}));
  EXPECT_EQ(s.guard->kind, FKind::Atom);
  EXPECT_EQ(depth(s), 1);
}

TEST(Parser, TautologicalSentence) {
  Ontology O = parse_ontology("(forall ((x) (= x x)) true)");
  ASSERT_EQ(O.sentences.size(), 1u);
  EXPECT_EQ(depth(O.sentences[0]), 0);
  auto A = Interpretation(AtomSet{Atom{"A", {cst("a")}}});
  EXPECT_TRUE(eval_sentence(A, O.sentences[0]));
}

TEST(Parser, EqualityGuardInsideBodyRejected) {
  EXPECT_THROW(parse_ontology("(forall ((x) (= x x)) (exists ((y) (= x y)) true))"), ParseError);
}

TEST(Parser, GuardMustCoverQuantifiedAndFreeVariables) {
  // quantified variable z missing from the guard
  EXPECT_THROW(parse_ontology("(forall ((x) (= x x)) (exists ((z) (A x)) (atom B z)))"), ParseError);
  // free body variable y not in the sentence guard
  EXPECT_THROW(parse_ontology("(forall ((x) (A x)) (atom R x y))"), ParseError);
}

TEST(Parser, BooleanCombinationRejectedWithDisjointUnionDiagnostic) {
  try {
    parse_ontology("(or (forall ((x) (= x x)) (atom A x)) (forall ((x) (= x x)) (atom B x)))");
    FAIL() << "expected rejection";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("disjoint unions"), std::string::npos);
  }
}

TEST(Parser, ClosedQuantifiedSubformulaRejected) {
  // (exists ((z) (B z)) true) is a sentence nested in a body
  EXPECT_THROW(parse_ontology("(forall ((x) (= x x)) (or (atom A x) (exists ((z) (B z)) true)))"),
               ParseError);
}

TEST(Parser, EmitRoundTrip) {
  std::string text =
      "(forall ((x y) (R x y)) (or (atom A x) (exists ((z) (S y z)) true)))\n"
      "(forall ((x) (= x x)) (not (atleast 2 ((y) (R x y)) true)))\n"
      "(functional F)\n";
  Ontology O = parse_ontology(text);
  Ontology O2 = parse_ontology(emit_ontology(O));
  EXPECT_EQ(emit_ontology(O), emit_ontology(O2));
}

TEST(Depth, QuantifierFreeIsZero) {
  Ontology O = parse_ontology("(forall ((x y) (R x y)) (atom A x))");
  EXPECT_EQ(depth(O), 0);
}

TEST(Depth, Example5MinusModeHasDepthTwo) {
  // some S.A [= all R. some S.B
  DLOntology D;
  D.inclusions.push_back({c_some(Role{"S"}, c_name("A")),
                          c_all(Role{"R"}, c_some(Role{"S"}, c_name("B")))});
  EXPECT_EQ(dl_depth(D), 2);
  Ontology minus = translate_dl(D, TranslateMode::Minus);
  EXPECT_EQ(depth(minus), 2);
  Ontology free = translate_dl(D, TranslateMode::Free);
  EXPECT_EQ(depth(free), 1);
  FragmentTag t = classify(free);
  EXPECT_TRUE(t.twoVar);
  EXPECT_EQ(t.depth, 1);
}

TEST(Classify, Example3IsUGF1Dichotomy) {
  Ontology O = parse_ontology(kExample3);
  FragmentTag t = classify(O);
  EXPECT_EQ(t.cls, "uGF(1)");
  EXPECT_EQ(t.status, Band::Dichotomy);
}

TEST(Classify, StableUnderRelationRenaming) {
  Ontology O1 = parse_ontology(kExample3);
  Ontology O2 = parse_ontology("(forall ((x y) (T x y)) (or (atom U x) (exists ((z) (W y z)) true)))");
  EXPECT_EQ(classify(O1).cls, classify(O2).cls);
  EXPECT_EQ(classify(O1).status, classify(O2).status);
}

TEST(Classify, CountingMinusDepthOne) {
  Ontology O = parse_ontology(
      "(forall ((x) (= x x)) (or (not (atom Hand x)) (exactly 5 ((y) (hasFinger x y)) true)))");
  FragmentTag t = classify(O);
  EXPECT_TRUE(t.counting);
  EXPECT_TRUE(t.minusRestriction);
  EXPECT_EQ(t.cls, "uGC2^-(1)");
  EXPECT_EQ(t.status, Band::Dichotomy);
}

TEST(Translate, ExistsTranslation) {
  DLOntology D;
  D.inclusions.push_back({c_name("A"), c_some(Role{"R"}, c_name("C"))});
  Ontology O = translate_dl(D);
  ASSERT_EQ(O.sentences.size(), 1u);
  std::string s = to_sexpr(O.sentences[0]);
  EXPECT_NE(s.find("(exists ((y) (R x y)) (atom C y))"), std::string::npos);
}

TEST(Translate, FunctionalityAndRoleInclusions) {
  DLOntology D;
  D.roleInclusions.push_back({Role{"R"}, Role{"S"}});
  D.functionalRoles.push_back(Role{"F"});
  Ontology O = translate_dl(D);
  EXPECT_TRUE(O.functional.count("F"));
  ASSERT_EQ(O.sentences.size(), 1u);
  EXPECT_EQ(to_sexpr(O.sentences[0]), "(forall ((x y) (R x y)) (atom S x y))");
  // a functional relation with two successors violates the axiom
  Interpretation bad(AtomSet{Atom{"F", {cst("a"), cst("b")}}, Atom{"F", {cst("a"), cst("c")}}});
  EXPECT_FALSE(models(bad, O));
  Interpretation good(AtomSet{Atom{"F", {cst("a"), cst("b")}}});
  EXPECT_TRUE(models(good, O));
}

TEST(Translate, DlDepthMatchesMinusModeDepth) {
  test_util::Rng rng(21);
  // small random DL ontologies: depth in minus mode must match dl_depth
  for (int trial = 0; trial < 30; ++trial) {
    auto concept_gen = [&](auto&& self, int d) -> ConceptPtr {
      if (d == 0 || rng.chance(0.3)) {
        int k = rng.range(0, 3);
        if (k == 0) return c_top();
        return c_name(std::string(1, static_cast<char>('A' + rng.range(0, 2))));
      }
      int k = rng.range(0, 4);
      Role r{rng.chance(0.5) ? "R" : "S", false};
      switch (k) {
        case 0: return c_some(r, self(self, d - 1));
        case 1: return c_all(r, self(self, d - 1));
        case 2: return c_not(self(self, d - 1));
        case 3: return c_and({self(self, d - 1), self(self, d - 1)});
        default: return c_atleast(rng.range(1, 3), r, self(self, d - 1));
      }
    };
    DLOntology D;
    D.inclusions.push_back({concept_gen(concept_gen, 2), concept_gen(concept_gen, 2)});
    EXPECT_EQ(depth(translate_dl(D, TranslateMode::Minus)), dl_depth(D));
  }
}

TEST(DlParser, RoundTripAndSugar) {
  DLOntology D = parse_dl("(ci (some R A) (all R (atmost 2 S top)))\n(ri R S)\n(func F)\n");
  EXPECT_EQ(D.inclusions.size(), 1u);
  EXPECT_EQ(D.roleInclusions.size(), 1u);
  EXPECT_EQ(D.functionalRoles.size(), 1u);
  DLOntology E = parse_dl("(ci A (exactly 5 hasFinger top))");
  EXPECT_EQ(dl_depth(E), 1);
  Ontology O = translate_dl(E);
  FragmentTag t = classify(O);
  EXPECT_TRUE(t.counting);
}

TEST(Eval, CountingStar) {
  Ontology O = parse_ontology("(forall ((x) (= x x)) (or (not (atleast 4 ((y) (R x y)) true)) (atom A x)))");
  AtomSet star3;
  for (int i = 1; i <= 3; ++i) star3.insert(Atom{"R", {cst("a"), cst("b" + std::to_string(i))}});
  EXPECT_TRUE(models(Interpretation(star3), O));  // antecedent false
  AtomSet star4 = star3;
  star4.insert(Atom{"R", {cst("a"), cst("b4")}});
  EXPECT_FALSE(models(Interpretation(star4), O));  // four successors, no A
  star4.insert(Atom{"A", {cst("a")}});
  EXPECT_TRUE(models(Interpretation(star4), O));
}

TEST(Eval, AgreesWithNaiveExpansionOnSmallStructures) {
  test_util::Rng rng(31);
  std::vector<Ontology> ontologies;
  ontologies.push_back(parse_ontology(kExample3));
  ontologies.push_back(parse_ontology(
      "(forall ((x) (A x)) (exists ((y) (R x y)) (atom B y)))"
      "(forall ((x y) (R x y)) (or (not (atom B y)) (eq x y)))"));
  ontologies.push_back(parse_ontology(
      "(forall ((x) (= x x)) (or (not (atleast 2 ((y) (R x y)) (atom B y))) (atom A x)))"));
  ontologies.push_back(parse_ontology(
      "(forall ((x y) (S x y)) (forall ((z) (R y z)) (or (atom A z) (not (atom B y)))))"));
  for (int trial = 0; trial < 60; ++trial) {
    Instance D = test_util::random_instance(rng, 5, 2, 7);
    auto A = D.interp();
    for (const auto& O : ontologies)
      for (const auto& s : O.sentences)
        EXPECT_EQ(eval_sentence(A, s), naive_eval_sentence(A, s)) << to_sexpr(s);
  }
}

TEST(Eval, DisjointUnionInvariance) {
  // for uGF sentences: true on the union iff true on every part
  test_util::Rng rng(47);
  Ontology O = parse_ontology(
      "(forall ((x y) (R x y)) (or (atom A x) (exists ((z) (S y z)) true)))"
      "(forall ((x) (A x)) (not (atom B x)))");
  for (int trial = 0; trial < 40; ++trial) {
    Instance D1 = test_util::random_instance(rng, 3, 2, 4);
    Instance D2 = test_util::random_instance(rng, 3, 2, 4);
    auto u = disjoint_union({D1.interp(), D2.interp()});
    for (const auto& s : O.sentences) {
      bool partwise = eval_sentence(D1.interp(), s) && eval_sentence(D2.interp(), s);
      EXPECT_EQ(eval_sentence(u.result, s), partwise);
    }
  }
}

TEST(SymbolSize, CountsUnaryCodedThresholds) {
  Ontology O1 = parse_ontology("(forall ((x) (= x x)) (atleast 2 ((y) (R x y)) true))");
  Ontology O2 = parse_ontology("(forall ((x) (= x x)) (atleast 7 ((y) (R x y)) true))");
  EXPECT_EQ(symbol_size(O2) - symbol_size(O1), 5);
}

}  // namespace
