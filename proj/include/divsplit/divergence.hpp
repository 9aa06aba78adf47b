#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>

#include "divsplit/corpus.hpp"
#include "divsplit/errors.hpp"

namespace divsplit {

inline constexpr double kAtomAlpha = 0.5;
inline constexpr double kCompoundAlpha = 0.1;

/// Sparse frequency distribution backed by integer counts.
template <class Key>
class FreqDist {
 public:
  using Counts = std::map<Key, std::int64_t>;

  void add(const Key& key, std::int64_t n = 1) {
    counts_[key] += n;
    total_ += n;
  }

  /// Throws IncrementalError if the key holds fewer than n.
  void remove(const Key& key, std::int64_t n = 1) {
    auto it = counts_.find(key);
    if (it == counts_.end() || it->second < n) {
      throw IncrementalError("removing a key that is not present often enough");
    }
    it->second -= n;
    total_ -= n;
    if (it->second == 0) counts_.erase(it);
  }

  std::int64_t count(const Key& key) const {
    auto it = counts_.find(key);
    return it == counts_.end() ? 0 : it->second;
  }

  double probability(const Key& key) const {
    return total_ > 0 ? static_cast<double>(count(key)) / static_cast<double>(total_) : 0.0;
  }

  std::int64_t total() const { return total_; }
  bool empty() const { return total_ == 0; }
  std::size_t support() const { return counts_.size(); }
  const Counts& counts() const { return counts_; }

  bool operator==(const FreqDist&) const = default;

 private:
  Counts counts_;
  std::int64_t total_ = 0;
};

using AtomDist = FreqDist<Atom>;
using CompoundDist = FreqDist<Compound>;

struct DivergencePair {
  double atom_divergence = 1.0;
  double compound_divergence = 1.0;
};

AtomDist freq_atoms(std::span<const Instance> instances);
CompoundDist freq_compounds(std::span<const Instance> instances);

enum class Direction { add, remove };

/// Mutating form of with_instance. On remove, the distribution is left
/// untouched if any key would underflow.
void apply_instance(AtomDist& dist, const Instance& inst, Direction direction);
void apply_instance(CompoundDist& dist, const Instance& inst, Direction direction);

AtomDist with_instance(AtomDist dist, const Instance& inst, Direction direction);
CompoundDist with_instance(CompoundDist dist, const Instance& inst, Direction direction);

void check_alpha(double alpha);

/// Chernoff coefficient sum_k p_k^alpha q_k^(1-alpha). Zero when either
/// distribution is empty.
template <class Key>
double chernoff(const FreqDist<Key>& p, const FreqDist<Key>& q, double alpha) {
  check_alpha(alpha);
  if (p.empty() || q.empty()) return 0.0;
  const double np = static_cast<double>(p.total());
  const double nq = static_cast<double>(q.total());
  // Only the shared support contributes; walk the smaller map.
  const bool p_smaller = p.support() <= q.support();
  const auto& small = p_smaller ? p.counts() : q.counts();
  const auto& large = p_smaller ? q : p;
  double sum = 0.0;
  for (const auto& [key, n] : small) {
    const std::int64_t m = large.count(key);
    if (m == 0) continue;
    const double pk = static_cast<double>(p_smaller ? n : m) / np;
    const double qk = static_cast<double>(p_smaller ? m : n) / nq;
    sum += std::exp(alpha * std::log(pk) + (1.0 - alpha) * std::log(qk));
  }
  return std::min(sum, 1.0);
}

/// 1 - C_0.5 over atom distributions.
double atom_divergence(const AtomDist& u, const AtomDist& w);
double atom_divergence(std::span<const Instance> u, std::span<const Instance> w);

/// 1 - C_0.1 over compound distributions; u plays the train role.
double compound_divergence(const CompoundDist& u, const CompoundDist& w);
double compound_divergence(std::span<const Instance> u, std::span<const Instance> w);

DivergencePair divergences(std::span<const Instance> u, std::span<const Instance> w);

}  // namespace divsplit
