#include <cmath>
#include <string>

#include "divsplit/errors.hpp"
#include "divsplit/divergence.hpp"
#include "divsplit/rng.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace divsplit;

namespace {

using StrDist = FreqDist<std::string>;

StrDist dist(std::initializer_list<std::pair<const char*, std::int64_t>> items) {
  StrDist d;
  for (const auto& [k, n] : items) d.add(k, n);
  return d;
}

// Independent evaluation of the defining sum over the union support.
double naive_chernoff(const StrDist& p, const StrDist& q, double alpha) {
  if (p.empty() || q.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [k, n] : p.counts()) {
    const double pk = p.probability(k);
    const double qk = q.probability(k);
    if (pk > 0 && qk > 0) sum += std::pow(pk, alpha) * std::pow(qk, 1.0 - alpha);
  }
  return sum;
}

StrDist random_dist(Rng& rng) {
  StrDist d;
  const std::size_t keys = 1 + rng.index(8);
  for (std::size_t i = 0; i < keys; ++i) d.add("k" + std::to_string(rng.index(12)), 1 + rng.index(20));
  return d;
}

}  // namespace

TEST_CASE("chernoff hand-evaluated cases") {
  const auto half = dist({{"a", 1}, {"b", 1}});
  CHECK(chernoff(half, half, 0.5) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(chernoff(half, half, 0.1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(chernoff(dist({{"a", 1}}), dist({{"b", 1}}), 0.5) == 0.0);
  CHECK(std::abs(chernoff(half, dist({{"a", 1}}), 0.5) - std::sqrt(0.5)) < 1e-9);
  CHECK(std::abs(chernoff(half, dist({{"a", 1}}), 0.5) - 0.70710678) < 1e-8);
  // 0.5^0.9 and 0.5^0.1.
  CHECK(std::abs(chernoff(dist({{"a", 1}}), half, 0.1) - 0.53589) < 1e-5);
  CHECK(std::abs(chernoff(half, dist({{"a", 1}}), 0.1) - 0.93303) < 1e-5);
}

TEST_CASE("chernoff empty convention and alpha domain") {
  const StrDist empty;
  const auto a = dist({{"a", 3}});
  CHECK(chernoff(empty, a, 0.5) == 0.0);
  CHECK(chernoff(a, empty, 0.5) == 0.0);
  CHECK(chernoff(empty, empty, 0.5) == 0.0);
  CHECK_THROWS_AS(chernoff(a, a, 0.0), InvalidParameter);
  CHECK_THROWS_AS(chernoff(a, a, 1.0), InvalidParameter);
  CHECK_THROWS_AS(chernoff(a, a, -0.2), InvalidParameter);
}

TEST_CASE("chernoff properties over random pairs") {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto p = random_dist(rng);
    const auto q = random_dist(rng);
    const double alpha = 0.01 + 0.98 * rng.uniform();
    const double c = chernoff(p, q, alpha);
    CHECK(c >= 0.0);
    CHECK(c <= 1.0);
    CHECK(std::abs(c - naive_chernoff(p, q, alpha)) < 1e-12);
    CHECK(std::abs(c - chernoff(q, p, 1.0 - alpha)) < 1e-12);
    CHECK(std::abs(chernoff(p, p, alpha) - 1.0) < 1e-12);

    StrDist scaled;
    const auto factor = static_cast<std::int64_t>(2 + rng.index(5));
    for (const auto& [k, n] : p.counts()) scaled.add(k, n * factor);
    CHECK(std::abs(chernoff(scaled, q, alpha) - c) < 1e-12);
  }
}

TEST_CASE("atom and compound divergence on instances") {
  // U atoms {a:1, b:1} vs W atoms {a:2}: one verb and one noun atom each.
  const auto u = std::vector{fixtures::single_compound_instance("u", 1, 101, 0)};
  const auto w = std::vector{fixtures::single_compound_instance("w1", 1, 102, 0),
                             fixtures::single_compound_instance("w2", 1, 103, 0)};
  // U atoms {v1:1, n101:1}; W atoms {v1:2, n102:1, n103:1}: C = sqrt(.5 * .5).
  CHECK(std::abs(atom_divergence(u, w) - 0.5) < 1e-12);
  CHECK(compound_divergence(u, w) == 1.0);
  CHECK(atom_divergence(u, u) == doctest::Approx(0.0));
  CHECK(compound_divergence(w, w) == doctest::Approx(0.0));

  AtomDist au, aw;
  au.add({AtomKind::verb, 1});
  au.add({AtomKind::noun, 2});
  aw.add({AtomKind::verb, 1}, 2);
  CHECK(std::abs(atom_divergence(au, aw) - (1.0 - std::sqrt(0.5))) < 1e-9);
  CHECK(std::abs(atom_divergence(au, aw) - 0.29289) < 1e-5);

  CompoundDist cu, cw;
  cu.add({1, 1});
  cw.add({1, 1});
  cw.add({2, 2});
  CHECK(std::abs(compound_divergence(cu, cw) - 0.46411) < 1e-5);

  const std::vector<Instance> none;
  CHECK(atom_divergence(none, w) == 1.0);
  const auto pair = divergences(u, w);
  CHECK(pair.atom_divergence == doctest::Approx(0.5));
  CHECK(pair.compound_divergence == 1.0);
}

TEST_CASE("freq distributions aggregate multisets") {
  const auto a = fixtures::single_compound_instance("a", 1, 101, 0);
  const auto b = fixtures::single_compound_instance("b", 1, 101, 0);
  const std::vector<Instance> both{a, b};
  const auto fc = freq_compounds(both);
  CHECK(fc.count({1, 101}) == 2);
  CHECK(fc.total() == 2);
  CHECK(freq_atoms(both).total() == 4);
  CHECK(freq_atoms(std::vector<Instance>{}).total() == 0);

  const auto four = fixtures::single_compound_instance("c", 2, 102, 1);
  CHECK(freq_atoms(std::vector{four}).support() == 2);
  CHECK(freq_atoms(std::vector{four}).total() == 4);
}

TEST_CASE("with_instance add and remove") {
  const auto a = fixtures::single_compound_instance("a", 1, 101, 0);
  CompoundDist empty;
  const auto added = with_instance(empty, a, Direction::add);
  CHECK(added.count({1, 101}) == 1);
  CHECK(added.total() == 1);
  CHECK(with_instance(added, a, Direction::remove) == empty);
  CHECK_THROWS_AS(with_instance(empty, a, Direction::remove), IncrementalError);

  // A failed remove leaves the distribution untouched.
  AtomDist partial;
  partial.add({AtomKind::verb, 1});
  const auto before = partial;
  CHECK_THROWS_AS(apply_instance(partial, a, Direction::remove), IncrementalError);
  CHECK(partial == before);
}

TEST_CASE("incremental updates equal batch recomputation") {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const auto corpus = fixtures::random_corpus(1000 + trial, 50);
    std::vector<bool> in(corpus.size(), false);
    AtomDist atoms;
    CompoundDist compounds;
    for (int step = 0; step < 200; ++step) {
      const auto i = rng.index(corpus.size());
      const auto dir = in[i] ? Direction::remove : Direction::add;
      apply_instance(atoms, corpus[i], dir);
      apply_instance(compounds, corpus[i], dir);
      in[i] = !in[i];
    }
    std::vector<Instance> members;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (in[i]) members.push_back(corpus[i]);
    }
    CHECK(atoms == freq_atoms(members));
    CHECK(compounds == freq_compounds(members));
  }
}
