#include "divsplit/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <string>

#include "divsplit/errors.hpp"
#include "divsplit/rng.hpp"

namespace divsplit {

void SynthConfig::validate() const {
  if (groups == 0 || verbs == 0 || nouns == 0) throw InvalidParameter("synth sizes must be positive");
  if (verbs % groups != 0 || nouns % groups != 0) {
    throw InvalidParameter("verb and noun counts must be multiples of the group count");
  }
  if (verbs / groups < 2) throw InvalidParameter("each group needs at least 2 verbs per noun");
  if (noise < 0.0 || noise > 1.0) throw InvalidParameter("noise must lie in [0, 1]");
  if (min_video_length < 4 || max_video_length < min_video_length) {
    throw InvalidParameter("video lengths must satisfy 4 <= min <= max");
  }
}

namespace {

std::string label(char prefix, std::size_t i, int width = 2) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%0*zu", prefix, width, i);
  return buf;
}

Vocab make_vocab(const SynthConfig& config) {
  Vocab v;
  // Pairs of neighbouring classes share a category.
  for (std::size_t i = 0; i < config.verbs; ++i) {
    v.verbs[label('v', i)] = static_cast<ClassId>(i);
    v.verb_categories[static_cast<ClassId>(i)] = static_cast<CategoryId>(i / 2);
  }
  for (std::size_t i = 0; i < config.nouns; ++i) {
    v.nouns[label('n', i)] = static_cast<ClassId>(i);
    v.noun_categories[static_cast<ClassId>(i)] = static_cast<CategoryId>(i / 2);
  }
  return v;
}

Utterance make_utterance(const Compound& c, const std::string& video_id, std::size_t index) {
  Utterance u;
  u.verb = {label('v', c.verb), c.verb};
  u.primary_noun = {label('n', c.noun), c.noun};
  u.all_nouns = {u.primary_noun};
  u.raw_text = u.verb.surface + " " + u.primary_noun.surface;
  u.text = u.raw_text;
  u.video_id = video_id;
  u.clip_id = video_id + "_" + label('c', index);
  return u;
}

std::size_t count_instances(const VideoUtterances& video) {
  return extract_instances(std::span<const VideoUtterances>(&video, 1)).instances.size();
}

}  // namespace

SynthCorpus generate_synthetic(const SynthConfig& config) {
  config.validate();
  SynthCorpus corpus;
  corpus.vocab = make_vocab(config);

  // Successor cycle per group: nouns in order, each with its group verbs.
  std::vector<std::vector<Compound>> cycles(config.groups);
  for (std::size_t n = 0; n < config.nouns; ++n) {
    for (std::size_t v = 0; v < config.verbs; ++v) {
      cycles[(v + n) % config.groups].push_back({static_cast<ClassId>(v), static_cast<ClassId>(n)});
    }
  }

  Rng rng(config.seed);
  std::size_t produced = 0;
  for (std::size_t video_index = 0; produced < config.instances; ++video_index) {
    const auto& cycle = cycles[rng.index(config.groups)];
    const std::size_t length =
        config.min_video_length + rng.index(config.max_video_length - config.min_video_length + 1);

    VideoUtterances video;
    video.video_id = label('V', video_index, 4);
    std::size_t pos = rng.index(cycle.size());
    for (std::size_t i = 0; i < length; ++i) {
      video.utterances.push_back(make_utterance(cycle[pos], video.video_id, i));
      if (rng.bernoulli(config.noise)) {
        pos = (pos + 1 + rng.index(cycle.size() - 1)) % cycle.size();
      } else {
        pos = (pos + 1) % cycle.size();
      }
    }

    // Dropping the last utterance removes at most one instance, so some
    // prefix hits the remaining budget exactly.
    const std::size_t remaining = config.instances - produced;
    std::size_t count = count_instances(video);
    while (count > remaining) {
      video.utterances.pop_back();
      count = count_instances(video);
    }
    produced += count;
    if (!video.utterances.empty()) corpus.videos.push_back(std::move(video));
  }
  std::sort(corpus.videos.begin(), corpus.videos.end(),
            [](const VideoUtterances& a, const VideoUtterances& b) { return a.video_id < b.video_id; });
  return corpus;
}

std::vector<Instance> synthetic_instances(const SynthConfig& config) {
  const auto corpus = generate_synthetic(config);
  return extract_instances(corpus.videos).instances;
}

}  // namespace divsplit
