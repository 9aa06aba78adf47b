#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "divsplit/corpus.hpp"
#include "divsplit/rng.hpp"

namespace fixtures {

using divsplit::ClassId;
using divsplit::Instance;
using divsplit::Token;
using divsplit::Utterance;

/// Kitchen vocabulary shared by the hand-built cases. Categories group
/// slice/dice/cut and paneer/parmesan so the category rule is exercised.
inline divsplit::Vocab kitchen_vocab() {
  divsplit::Vocab v;
  const std::vector<std::pair<std::string, ClassId>> verbs = {
      {"cut", 1},  {"slice", 2}, {"dice", 3},     {"wash", 4},  {"close", 5}, {"put_down", 6}, {"pick_up", 7},
      {"move", 8}, {"stir", 9},  {"crack", 10},   {"put", 11},  {"grab", 12}, {"lather", 13},  {"take", 14},
      {"place", 15}, {"sponge", 16}};
  const std::vector<std::pair<std::string, ClassId>> nouns = {
      {"celery", 101},  {"tap", 102},    {"knife", 103},     {"paneer", 104},      {"parmesan", 105},
      {"milk", 106},    {"bowl", 107},   {"frying_pan", 108}, {"spatula", 109},     {"jar", 110},
      {"egg", 111},     {"yoghurt", 112}, {"yogurt", 113},   {"wok", 114},         {"meat_pieces", 115},
      {"tins", 116},    {"sponge", 117}, {"mug", 118},       {"pan", 119},         {"salt", 120},
      {"dishwasher", 121}, {"olive_oil", 122}};
  for (const auto& [s, c] : verbs) v.verbs[s] = c;
  for (const auto& [s, c] : nouns) v.nouns[s] = c;
  for (const auto& [s, c] : verbs) v.verb_categories[c] = c;
  for (const auto& [s, c] : nouns) v.noun_categories[c] = c;
  // slice and dice share the cut category; paneer and parmesan share cheese.
  v.verb_categories[2] = 1;
  v.verb_categories[3] = 1;
  v.noun_categories[104] = 900;
  v.noun_categories[105] = 900;
  return v;
}

/// Utterance with surfaces resolved through `vocab`. `text` defaults to
/// "verb noun"; extra nouns join all_nouns after the primary noun.
inline Utterance utt(const divsplit::Vocab& vocab, const std::string& verb, const std::string& noun,
                     std::string text = {}, const std::vector<std::string>& extra_nouns = {}) {
  Utterance u;
  u.verb = {verb, vocab.verbs.at(verb)};
  u.primary_noun = {noun, vocab.nouns.at(noun)};
  u.all_nouns = {u.primary_noun};
  for (const auto& n : extra_nouns) u.all_nouns.push_back({n, vocab.nouns.at(n)});
  u.text = text.empty() ? verb + " " + noun : std::move(text);
  u.raw_text = u.text;
  return u;
}

/// Abstract utterance "vX nY" with classes X and Y.
inline Utterance abstract_utt(ClassId verb, ClassId noun) {
  Utterance u;
  u.verb = {"v" + std::to_string(verb), verb};
  u.primary_noun = {"n" + std::to_string(noun), noun};
  u.all_nouns = {u.primary_noun};
  u.text = u.raw_text = u.verb.surface + " " + u.primary_noun.surface;
  return u;
}

inline std::string padded_id(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%03zu", prefix, i);
  return buf;
}

/// Instance whose K+1 utterances all carry the single compound (verb, noun).
inline Instance single_compound_instance(const std::string& id, ClassId verb, ClassId noun,
                                         std::size_t k = 3) {
  std::vector<Utterance> ctx(k, abstract_utt(verb, noun));
  return divsplit::make_instance(id, id, std::move(ctx), abstract_utt(verb, noun));
}

/// Random corpus: each instance draws its K+1 compounds uniformly from a
/// verbs x nouns grid.
inline std::vector<Instance> random_corpus(std::uint64_t seed, std::size_t n, std::size_t verbs = 5,
                                           std::size_t nouns = 5, std::size_t k = 3) {
  divsplit::Rng rng(seed);
  std::vector<Instance> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Utterance> ctx;
    for (std::size_t j = 0; j < k; ++j) {
      ctx.push_back(abstract_utt(static_cast<ClassId>(rng.index(verbs)), static_cast<ClassId>(rng.index(nouns))));
    }
    auto target = abstract_utt(static_cast<ClassId>(rng.index(verbs)), static_cast<ClassId>(rng.index(nouns)));
    out.push_back(divsplit::make_instance(padded_id("r", i), "video", std::move(ctx), std::move(target)));
  }
  return out;
}

/// Small brute-force corpus: a V x N compound grid (V, N in {2, 3}) cycled
/// over 8 to 12 instances, one compound per instance.
inline std::vector<Instance> grid_corpus(std::uint64_t seed) {
  divsplit::Rng rng(seed);
  const std::size_t verbs = 2 + rng.index(2);
  const std::size_t nouns = 2 + rng.index(2);
  const std::size_t n = 8 + rng.index(5);
  std::vector<Instance> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t cell = i % (verbs * nouns);
    out.push_back(single_compound_instance(padded_id("g", i), static_cast<ClassId>(cell / nouns),
                                           static_cast<ClassId>(cell % nouns)));
  }
  return out;
}

/// Utterance given as (verb, noun, narration); an empty narration means
/// "verb noun".
struct Step {
  const char* verb;
  const char* noun;
  const char* text = "";
};

inline Instance kitchen_instance(const std::string& id, std::initializer_list<Step> steps) {
  const auto vocab = kitchen_vocab();
  std::vector<Utterance> all;
  for (const auto& s : steps) all.push_back(utt(vocab, s.verb, s.noun, s.text));
  Utterance target = all.back();
  all.pop_back();
  return divsplit::make_instance(id, "P01_01", std::move(all), std::move(target));
}

/// The five demonstrations and the query of the appendix prompt figures.
inline std::vector<Instance> figure_shots() {
  return {
      kitchen_instance("s1", {{"put_down", "bowl"}, {"move", "frying_pan"}, {"pick_up", "spatula"},
                              {"put_down", "spatula"}}),
      kitchen_instance("s2", {{"put_down", "bowl"}, {"move", "jar"}, {"pick_up", "egg"}, {"crack", "egg"}}),
      kitchen_instance("s3", {{"move", "yoghurt"}, {"put_down", "bowl"}, {"pick_up", "yogurt"},
                              {"put", "yoghurt"}}),
      kitchen_instance("s4", {{"put_down", "bowl"}, {"grab", "wok"}, {"move", "tap"}, {"lather", "wok"}}),
      kitchen_instance("s5", {{"put_down", "bowl"}, {"pick_up", "spatula"},
                              {"stir", "meat_pieces", "stir meat_pieces with spatula"}, {"put_down", "spatula"}}),
  };
}

inline Instance figure_query() {
  return kitchen_instance("q", {{"pick_up", "tins"}, {"put_down", "tins"}, {"move", "bowl"}, {"put_down", "bowl"}});
}

}  // namespace fixtures
