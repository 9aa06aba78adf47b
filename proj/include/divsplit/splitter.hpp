#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "divsplit/corpus.hpp"
#include "divsplit/divergence.hpp"

namespace divsplit {

enum class SplitMode { mcd, random };

std::string_view to_string(SplitMode mode);
SplitMode parse_split_mode(std::string_view text);

struct SplitConfig {
  double atom_threshold = 0.02;
  double compound_threshold = 0.6;
  /// Probability that an iteration adds to train (mcd) or the train share
  /// of the shuffle (random).
  double train_fraction = 0.5;
  double val_fraction_of_heldout = 0.5;
  std::uint64_t seed = 0;
  SplitMode mode = SplitMode::mcd;
  bool strict_target_disjoint = false;
  /// Score only a seeded subsample of this many candidates per iteration.
  /// Zero scores the whole pool.
  std::size_t candidate_sample = 0;

  /// Throws InvalidParameter on out-of-range values.
  void validate() const;
};

enum class Side { train, heldout };

std::string_view to_string(Side side);

/// How the greedy loop picked an item.
enum class Pick { random, filtered, fallback };

std::string_view to_string(Pick pick);

struct TraceEntry {
  std::size_t iteration = 0;
  Side side = Side::train;
  Pick pick = Pick::random;
  std::string id;
  /// Train vs held-out after this item was added.
  DivergencePair divergences;
};

struct SplitAssignment {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
  /// Held-out ids removed by strict_filter.
  std::vector<std::string> dropped;
  /// Train vs val+test, computed from scratch.
  DivergencePair divergences;
  bool constraints_met = false;
  SplitConfig config;
  std::vector<TraceEntry> trace;
};

/// Greedy maximum-compound-divergence assignment. Each iteration flips a
/// seeded coin for the side; the first iteration adds a random item, later
/// ones add the item maximizing D_C among those keeping D_A below the
/// threshold (or among all items when none does). Ties go to the smallest id.
SplitAssignment generate_mcd_split(std::span<const Instance> instances, const SplitConfig& config);

/// Seeded shuffle cut at train_fraction, then the held-out cut.
SplitAssignment generate_random_split(std::span<const Instance> instances, const SplitConfig& config);

/// Dispatches on config.mode and applies strict_filter when requested.
SplitAssignment generate_split(std::span<const Instance> instances, const SplitConfig& config);

struct SplitRun {
  SplitAssignment assignment;
  std::size_t attempts = 0;
  std::uint64_t seed_used = 0;
};

/// Retries mcd generation with seed, seed+1, ... seed+retries until the
/// constraints hold. Returns the last attempt if none succeeds.
SplitRun split_with_retries(std::span<const Instance> instances, const SplitConfig& config,
                            std::size_t retries);

struct ConstraintReport {
  double d_a = 1.0;
  double d_c = 1.0;
  bool constraints_met = false;
  std::size_t target_compound_overlap_count = 0;
};

/// Recomputes both divergences from scratch and counts held-out instances
/// whose target compound occurs among the training compounds. Throws
/// CoverageError unless train, val, test and dropped partition the corpus.
ConstraintReport verify_constraints(const SplitAssignment& assignment,
                                    std::span<const Instance> instances, const SplitConfig& config);

/// Drops held-out instances whose target compound occurs in training.
SplitAssignment strict_filter(SplitAssignment assignment, std::span<const Instance> instances);

}  // namespace divsplit
