#include "divsplit/divergence.hpp"

#include <string>

namespace divsplit {

namespace {

template <class Key>
void apply_keys(FreqDist<Key>& dist, const std::vector<Key>& keys, Direction direction) {
  if (direction == Direction::add) {
    for (const auto& k : keys) dist.add(k);
    return;
  }
  // Validate first so a failed remove leaves the distribution intact.
  std::map<Key, std::int64_t> need;
  for (const auto& k : keys) ++need[k];
  for (const auto& [k, n] : need) {
    if (dist.count(k) < n) throw IncrementalError("instance is not part of the distribution");
  }
  for (const auto& [k, n] : need) dist.remove(k, n);
}

}  // namespace

AtomDist freq_atoms(std::span<const Instance> instances) {
  AtomDist dist;
  for (const auto& inst : instances) apply_instance(dist, inst, Direction::add);
  return dist;
}

CompoundDist freq_compounds(std::span<const Instance> instances) {
  CompoundDist dist;
  for (const auto& inst : instances) apply_instance(dist, inst, Direction::add);
  return dist;
}

void apply_instance(AtomDist& dist, const Instance& inst, Direction direction) {
  apply_keys(dist, inst.atoms, direction);
}

void apply_instance(CompoundDist& dist, const Instance& inst, Direction direction) {
  apply_keys(dist, inst.compounds, direction);
}

AtomDist with_instance(AtomDist dist, const Instance& inst, Direction direction) {
  apply_instance(dist, inst, direction);
  return dist;
}

CompoundDist with_instance(CompoundDist dist, const Instance& inst, Direction direction) {
  apply_instance(dist, inst, direction);
  return dist;
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw InvalidParameter("alpha must lie in (0, 1), got " + std::to_string(alpha));
  }
}

double atom_divergence(const AtomDist& u, const AtomDist& w) {
  return 1.0 - chernoff(u, w, kAtomAlpha);
}

double atom_divergence(std::span<const Instance> u, std::span<const Instance> w) {
  return atom_divergence(freq_atoms(u), freq_atoms(w));
}

double compound_divergence(const CompoundDist& u, const CompoundDist& w) {
  return 1.0 - chernoff(u, w, kCompoundAlpha);
}

double compound_divergence(std::span<const Instance> u, std::span<const Instance> w) {
  return compound_divergence(freq_compounds(u), freq_compounds(w));
}

DivergencePair divergences(std::span<const Instance> u, std::span<const Instance> w) {
  return {atom_divergence(u, w), compound_divergence(u, w)};
}

}  // namespace divsplit
