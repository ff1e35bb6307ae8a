#pragma once

// Shared test helpers: a fully pinned RNG (so expected values frozen in the
// tests never drift across toolchains) and generators for small random
// instances, ontologies and programs.

#include <cstdint>
#include <string>
#include <vector>

#include "gomq/core.hpp"
#include "gomq/logic.hpp"

namespace test_util {

// splitmix64: tiny, deterministic, stdlib-independent
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, n)
  std::uint64_t below(std::uint64_t n) { return n ? next() % n : 0; }
  int range(int lo, int hi) { return lo + static_cast<int>(below(hi - lo + 1)); }
  bool chance(double p) { return next() < static_cast<std::uint64_t>(p * 18446744073709551615.0); }

 private:
  std::uint64_t state_;
};

inline std::string const_name(int i) { return std::string(1, static_cast<char>('a' + i % 6)) +
                                              (i >= 6 ? std::to_string(i / 6) : ""); }

// Random instance with up to maxConsts constants, relations of arity up to
// maxArity from a small pool, and the given number of atoms.
inline gomq::Instance random_instance(Rng& rng, int maxConsts, int maxArity, int atoms) {
  const char* rels1[] = {"A", "B", "C"};
  const char* rels2[] = {"R", "S"};
  const char* rels3[] = {"Q"};
  gomq::AtomSet facts;
  int n = rng.range(1, maxConsts);
  for (int i = 0; i < atoms; ++i) {
    int ar = rng.range(1, maxArity);
    std::string rel = ar == 1   ? rels1[rng.below(3)]
                      : ar == 2 ? rels2[rng.below(2)]
                                : rels3[0];
    gomq::Atom a{rel, {}};
    for (int k = 0; k < ar; ++k) a.args.push_back(gomq::cst(const_name(rng.range(0, n - 1))));
    facts.insert(std::move(a));
  }
  if (facts.empty()) facts.insert(gomq::Atom{"A", {gomq::cst("a")}});
  return gomq::Instance(facts);
}

}  // namespace test_util
