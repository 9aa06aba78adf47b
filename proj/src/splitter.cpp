#include "divsplit/splitter.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "divsplit/errors.hpp"
#include "divsplit/rng.hpp"

namespace divsplit {

std::string_view to_string(SplitMode mode) { return mode == SplitMode::mcd ? "mcd" : "random"; }

SplitMode parse_split_mode(std::string_view text) {
  if (text == "mcd") return SplitMode::mcd;
  if (text == "random") return SplitMode::random;
  throw InvalidParameter("unknown split mode '" + std::string(text) + "' (expected mcd or random)");
}

std::string_view to_string(Side side) { return side == Side::train ? "train" : "heldout"; }

std::string_view to_string(Pick pick) {
  switch (pick) {
    case Pick::random:
      return "random";
    case Pick::filtered:
      return "filtered";
    case Pick::fallback:
      return "fallback";
  }
  return "unknown";
}

void SplitConfig::validate() const {
  auto in_closed = [](double x) { return x >= 0.0 && x <= 1.0; };
  auto in_open = [](double x) { return x > 0.0 && x < 1.0; };
  if (!in_closed(atom_threshold)) throw InvalidParameter("atom threshold must lie in [0, 1]");
  if (!in_closed(compound_threshold)) throw InvalidParameter("compound threshold must lie in [0, 1]");
  if (!in_open(train_fraction)) throw InvalidParameter("train fraction must lie in (0, 1)");
  if (!in_open(val_fraction_of_heldout)) {
    throw InvalidParameter("validation fraction of held-out must lie in (0, 1)");
  }
}

namespace {

// Stream ids for Rng::split; one per independent random decision.
constexpr std::uint64_t kSideStream = 1;
constexpr std::uint64_t kFirstPickStream = 2;
constexpr std::uint64_t kHeldoutStream = 3;
constexpr std::uint64_t kSampleStream = 4;
constexpr std::uint64_t kShuffleStream = 5;

/// Indices of `instances` ordered by id; rejects duplicate ids.
std::vector<std::size_t> order_by_id(std::span<const Instance> instances) {
  std::vector<std::size_t> order(instances.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return instances[a].id < instances[b].id; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (instances[order[i]].id == instances[order[i - 1]].id) {
      throw InvalidParameter("duplicate instance id '" + instances[order[i]].id + "'");
    }
  }
  return order;
}

/// Counts of one key family (atoms or compounds) on both sides, with the raw
/// Chernoff sum S = sum_k u_k^a w_k^(1-a) over counts. The coefficient over
/// probabilities is S / (N_u^a N_w^(1-a)).
class ChernoffTracker {
 public:
  struct Entry {
    std::uint32_t key;
    std::int64_t count;
  };

  ChernoffTracker(double alpha, std::size_t keys, std::int64_t max_count)
      : alpha_(alpha), train_(keys, 0), heldout_(keys, 0) {
    pow_train_.resize(static_cast<std::size_t>(max_count) + 1);
    pow_heldout_.resize(static_cast<std::size_t>(max_count) + 1);
    for (std::size_t c = 0; c < pow_train_.size(); ++c) {
      pow_train_[c] = std::pow(static_cast<double>(c), alpha);
      pow_heldout_[c] = std::pow(static_cast<double>(c), 1.0 - alpha);
    }
  }

  /// Divergence 1 - C if `entries` (of total weight `weight`) joined `side`.
  double divergence_if_added(std::span<const Entry> entries, std::int64_t weight, Side side) const {
    double sum = sum_;
    std::int64_t n_train = n_train_;
    std::int64_t n_heldout = n_heldout_;
    for (const auto& e : entries) {
      const auto u = static_cast<std::size_t>(train_[e.key]);
      const auto w = static_cast<std::size_t>(heldout_[e.key]);
      const auto c = static_cast<std::size_t>(e.count);
      if (side == Side::train) {
        sum += (pow_train_[u + c] - pow_train_[u]) * pow_heldout_[w];
      } else {
        sum += pow_train_[u] * (pow_heldout_[w + c] - pow_heldout_[w]);
      }
    }
    (side == Side::train ? n_train : n_heldout) += weight;
    return to_divergence(sum, n_train, n_heldout);
  }

  void add(std::span<const Entry> entries, std::int64_t weight, Side side) {
    auto& counts = side == Side::train ? train_ : heldout_;
    for (const auto& e : entries) counts[e.key] += e.count;
    (side == Side::train ? n_train_ : n_heldout_) += weight;
    // Full recompute keeps the running sum free of accumulated drift.
    sum_ = 0.0;
    for (std::size_t k = 0; k < train_.size(); ++k) {
      sum_ += pow_train_[static_cast<std::size_t>(train_[k])] *
              pow_heldout_[static_cast<std::size_t>(heldout_[k])];
    }
  }

  double divergence() const { return to_divergence(sum_, n_train_, n_heldout_); }

 private:
  double to_divergence(double sum, std::int64_t n_train, std::int64_t n_heldout) const {
    if (n_train == 0 || n_heldout == 0) return 1.0;
    const double norm = std::pow(static_cast<double>(n_train), alpha_) *
                        std::pow(static_cast<double>(n_heldout), 1.0 - alpha_);
    return 1.0 - std::min(sum / norm, 1.0);
  }

  double alpha_;
  std::vector<std::int64_t> train_;
  std::vector<std::int64_t> heldout_;
  std::vector<double> pow_train_;
  std::vector<double> pow_heldout_;
  std::int64_t n_train_ = 0;
  std::int64_t n_heldout_ = 0;
  double sum_ = 0.0;
};

/// Instances re-encoded against dense key indices.
struct DenseCorpus {
  using Entry = ChernoffTracker::Entry;

  std::vector<std::vector<Entry>> atoms;
  std::vector<std::vector<Entry>> compounds;
  std::vector<std::int64_t> atom_weight;
  std::vector<std::int64_t> compound_weight;
  std::size_t atom_keys = 0;
  std::size_t compound_keys = 0;
  std::int64_t atom_total = 0;
  std::int64_t compound_total = 0;

  DenseCorpus(std::span<const Instance> instances, std::span<const std::size_t> order) {
    std::map<Atom, std::uint32_t> atom_ids;
    std::map<Compound, std::uint32_t> compound_ids;
    for (std::size_t idx : order) {
      for (const auto& a : instances[idx].atoms) atom_ids.emplace(a, 0);
      for (const auto& c : instances[idx].compounds) compound_ids.emplace(c, 0);
    }
    std::uint32_t next = 0;
    for (auto& [k, v] : atom_ids) v = next++;
    atom_keys = next;
    next = 0;
    for (auto& [k, v] : compound_ids) v = next++;
    compound_keys = next;

    for (std::size_t idx : order) {
      atoms.push_back(encode(instances[idx].atoms, atom_ids));
      compounds.push_back(encode(instances[idx].compounds, compound_ids));
      atom_weight.push_back(static_cast<std::int64_t>(instances[idx].atoms.size()));
      compound_weight.push_back(static_cast<std::int64_t>(instances[idx].compounds.size()));
      atom_total += atom_weight.back();
      compound_total += compound_weight.back();
    }
  }

 private:
  template <class Key>
  static std::vector<Entry> encode(const std::vector<Key>& keys, const std::map<Key, std::uint32_t>& ids) {
    std::vector<Entry> out;
    for (const auto& k : keys) {
      const std::uint32_t id = ids.at(k);
      if (!out.empty() && out.back().key == id) {
        ++out.back().count;
      } else {
        out.push_back({id, 1});
      }
    }
    return out;
  }
};

std::vector<std::string> ids_of(std::span<const Instance> instances, std::span<const std::size_t> order,
                                std::vector<std::size_t> positions) {
  std::sort(positions.begin(), positions.end());
  std::vector<std::string> out;
  out.reserve(positions.size());
  for (std::size_t p : positions) out.push_back(instances[order[p]].id);
  return out;
}

std::map<std::string, std::size_t> index_by_id(std::span<const Instance> instances) {
  std::map<std::string, std::size_t> out;
  for (std::size_t i = 0; i < instances.size(); ++i) out.emplace(instances[i].id, i);
  return out;
}

std::vector<Instance> gather(std::span<const Instance> instances, const std::map<std::string, std::size_t>& index,
                             std::initializer_list<const std::vector<std::string>*> lists) {
  std::vector<Instance> out;
  for (const auto* list : lists) {
    for (const auto& id : *list) {
      auto it = index.find(id);
      if (it == index.end()) throw CoverageError("unknown instance id '" + id + "'");
      out.push_back(instances[it->second]);
    }
  }
  return out;
}

bool meets(const DivergencePair& d, const SplitConfig& config) {
  return d.atom_divergence < config.atom_threshold && d.compound_divergence > config.compound_threshold;
}

/// Splits held-out positions into val/test and fills the final divergences.
SplitAssignment finish(std::span<const Instance> instances, std::span<const std::size_t> order,
                       const std::vector<std::size_t>& train, std::vector<std::size_t> heldout,
                       const SplitConfig& config, Rng heldout_rng) {
  std::sort(heldout.begin(), heldout.end());
  heldout_rng.shuffle(std::span<std::size_t>(heldout));
  const auto val_count = static_cast<std::size_t>(
      std::llround(static_cast<double>(heldout.size()) * config.val_fraction_of_heldout));

  SplitAssignment out;
  out.config = config;
  out.train = ids_of(instances, order, train);
  out.val = ids_of(instances, order, {heldout.begin(), heldout.begin() + static_cast<std::ptrdiff_t>(val_count)});
  out.test = ids_of(instances, order, {heldout.begin() + static_cast<std::ptrdiff_t>(val_count), heldout.end()});

  const auto index = index_by_id(instances);
  const auto train_set = gather(instances, index, {&out.train});
  const auto eval_set = gather(instances, index, {&out.val, &out.test});
  out.divergences = divergences(train_set, eval_set);
  out.constraints_met = meets(out.divergences, config);
  return out;
}

}  // namespace

SplitAssignment generate_mcd_split(std::span<const Instance> instances, const SplitConfig& config) {
  config.validate();
  if (instances.empty()) throw EmptyCorpus("cannot split an empty corpus");
  if (instances.size() < 2) throw InvalidParameter("a split needs at least 2 instances");

  const auto order = order_by_id(instances);
  const DenseCorpus dense(instances, order);
  ChernoffTracker atoms(kAtomAlpha, dense.atom_keys, dense.atom_total);
  ChernoffTracker compounds(kCompoundAlpha, dense.compound_keys, dense.compound_total);

  const Rng root(config.seed);
  Rng side_rng = root.split(kSideStream);
  Rng first_rng = root.split(kFirstPickStream);
  Rng sample_rng = root.split(kSampleStream);

  // Positions into `order`; kept sorted so the first best wins ties by id.
  std::vector<std::size_t> pool(order.size());
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  std::vector<std::size_t> train;
  std::vector<std::size_t> heldout;
  std::vector<TraceEntry> trace;
  trace.reserve(order.size());

  for (std::size_t iteration = 0; !pool.empty(); ++iteration) {
    const Side side = side_rng.bernoulli(config.train_fraction) ? Side::train : Side::heldout;
    std::size_t chosen = 0;  // index into pool
    Pick pick = Pick::random;

    if (iteration == 0) {
      chosen = first_rng.index(pool.size());
    } else {
      std::vector<std::size_t> candidates(pool.size());
      std::iota(candidates.begin(), candidates.end(), std::size_t{0});
      if (config.candidate_sample > 0 && candidates.size() > config.candidate_sample) {
        // Partial Fisher-Yates, then restore id order among the sampled.
        for (std::size_t i = 0; i < config.candidate_sample; ++i) {
          std::swap(candidates[i], candidates[i + sample_rng.index(candidates.size() - i)]);
        }
        candidates.resize(config.candidate_sample);
        std::sort(candidates.begin(), candidates.end());
      }

      // Ranked by D_C descending, then D_A ascending; candidates arrive in
      // id order so the first of equals wins.
      auto better = [](double d_c, double d_a, double best_c, double best_a) {
        if (d_c != best_c) return d_c > best_c;
        return d_a < best_a;
      };
      bool have_filtered = false;
      double filtered_c = -1.0, filtered_a = 2.0;
      std::size_t best_filtered_at = 0;
      double any_c = -1.0, any_a = 2.0;
      std::size_t best_any_at = 0;
      for (std::size_t c : candidates) {
        const std::size_t p = pool[c];
        const double d_a = atoms.divergence_if_added(dense.atoms[p], dense.atom_weight[p], side);
        const double d_c = compounds.divergence_if_added(dense.compounds[p], dense.compound_weight[p], side);
        if (better(d_c, d_a, any_c, any_a)) {
          any_c = d_c;
          any_a = d_a;
          best_any_at = c;
        }
        if (d_a < config.atom_threshold && better(d_c, d_a, filtered_c, filtered_a)) {
          have_filtered = true;
          filtered_c = d_c;
          filtered_a = d_a;
          best_filtered_at = c;
        }
      }
      chosen = have_filtered ? best_filtered_at : best_any_at;
      pick = have_filtered ? Pick::filtered : Pick::fallback;
    }

    const std::size_t p = pool[chosen];
    atoms.add(dense.atoms[p], dense.atom_weight[p], side);
    compounds.add(dense.compounds[p], dense.compound_weight[p], side);
    (side == Side::train ? train : heldout).push_back(p);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(chosen));

    trace.push_back({iteration, side, pick, instances[order[p]].id,
                     {atoms.divergence(), compounds.divergence()}});
  }

  SplitAssignment out = finish(instances, order, train, heldout, config, root.split(kHeldoutStream));
  out.trace = std::move(trace);
  return out;
}

SplitAssignment generate_random_split(std::span<const Instance> instances, const SplitConfig& config) {
  config.validate();
  if (instances.empty()) throw EmptyCorpus("cannot split an empty corpus");

  const auto order = order_by_id(instances);
  const Rng root(config.seed);
  std::vector<std::size_t> positions(order.size());
  std::iota(positions.begin(), positions.end(), std::size_t{0});
  Rng shuffle_rng = root.split(kShuffleStream);
  shuffle_rng.shuffle(std::span<std::size_t>(positions));

  const auto train_count = static_cast<std::size_t>(
      std::llround(static_cast<double>(positions.size()) * config.train_fraction));
  std::vector<std::size_t> train(positions.begin(), positions.begin() + static_cast<std::ptrdiff_t>(train_count));
  std::vector<std::size_t> heldout(positions.begin() + static_cast<std::ptrdiff_t>(train_count), positions.end());
  return finish(instances, order, train, heldout, config, root.split(kHeldoutStream));
}

SplitAssignment generate_split(std::span<const Instance> instances, const SplitConfig& config) {
  SplitAssignment out = config.mode == SplitMode::mcd ? generate_mcd_split(instances, config)
                                                      : generate_random_split(instances, config);
  if (config.strict_target_disjoint) out = strict_filter(std::move(out), instances);
  return out;
}

SplitRun split_with_retries(std::span<const Instance> instances, const SplitConfig& config,
                            std::size_t retries) {
  SplitRun run;
  const std::size_t attempts = config.mode == SplitMode::mcd ? retries + 1 : 1;
  for (std::size_t i = 0; i < attempts; ++i) {
    SplitConfig attempt = config;
    attempt.seed = config.seed + i;
    run.assignment = generate_split(instances, attempt);
    run.attempts = i + 1;
    run.seed_used = attempt.seed;
    if (run.assignment.constraints_met) break;
  }
  return run;
}

ConstraintReport verify_constraints(const SplitAssignment& assignment, std::span<const Instance> instances,
                                    const SplitConfig& config) {
  const auto index = index_by_id(instances);
  if (index.size() != instances.size()) throw CoverageError("corpus contains duplicate instance ids");

  std::set<std::string> seen;
  for (const auto* list : {&assignment.train, &assignment.val, &assignment.test, &assignment.dropped}) {
    for (const auto& id : *list) {
      if (!index.contains(id)) throw CoverageError("assignment names unknown instance id '" + id + "'");
      if (!seen.insert(id).second) throw CoverageError("instance id '" + id + "' is assigned twice");
    }
  }
  if (seen.size() != instances.size()) {
    std::string missing;
    for (const auto& [id, i] : index) {
      if (!seen.contains(id)) {
        missing += missing.empty() ? id : ", " + id;
      }
    }
    throw CoverageError("assignment does not cover instance ids: " + missing);
  }

  const auto train = gather(instances, index, {&assignment.train});
  const auto eval = gather(instances, index, {&assignment.val, &assignment.test});

  ConstraintReport report;
  report.d_a = atom_divergence(train, eval);
  report.d_c = compound_divergence(train, eval);
  report.constraints_met = meets({report.d_a, report.d_c}, config);
  const auto train_compounds = freq_compounds(train);
  for (const auto& inst : eval) {
    if (train_compounds.count(inst.target_compound) > 0) ++report.target_compound_overlap_count;
  }
  return report;
}

SplitAssignment strict_filter(SplitAssignment assignment, std::span<const Instance> instances) {
  const auto index = index_by_id(instances);
  const auto train = gather(instances, index, {&assignment.train});
  const auto train_compounds = freq_compounds(train);

  auto keep = [&](std::vector<std::string>& ids) {
    std::vector<std::string> kept;
    for (auto& id : ids) {
      const auto& inst = instances[index.at(id)];
      if (train_compounds.count(inst.target_compound) > 0) {
        assignment.dropped.push_back(std::move(id));
      } else {
        kept.push_back(std::move(id));
      }
    }
    ids = std::move(kept);
  };
  keep(assignment.val);
  keep(assignment.test);
  std::sort(assignment.dropped.begin(), assignment.dropped.end());

  const auto eval = gather(instances, index, {&assignment.val, &assignment.test});
  assignment.divergences = divergences(train, eval);
  assignment.constraints_met = meets(assignment.divergences, assignment.config);
  return assignment;
}

}  // namespace divsplit
