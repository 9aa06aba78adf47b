#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "divsplit/corpus.hpp"

namespace divsplit {

/// Planted-structure corpus. Compounds (v, n) are partitioned into groups by
/// (v + n) mod groups, so every group uses every verb and noun. Each video
/// stays inside one group and walks a fixed successor cycle over the group's
/// compounds, jumping to a random group compound with probability `noise`.
struct SynthConfig {
  std::size_t instances = 500;
  std::size_t verbs = 8;
  std::size_t nouns = 8;
  std::size_t groups = 4;
  double noise = 0.1;
  std::size_t min_video_length = 6;
  std::size_t max_video_length = 14;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthCorpus {
  Vocab vocab;
  std::vector<VideoUtterances> videos;
};

/// Videos such that extract_instances with default options yields exactly
/// config.instances instances.
SynthCorpus generate_synthetic(const SynthConfig& config);

/// Convenience: generate and extract.
std::vector<Instance> synthetic_instances(const SynthConfig& config);

}  // namespace divsplit
