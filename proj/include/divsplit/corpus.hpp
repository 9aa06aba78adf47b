#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace divsplit {

using ClassId = std::uint32_t;
using CategoryId = std::uint32_t;

enum class AtomKind { verb, noun };

std::string_view to_string(AtomKind kind);

struct Token {
  std::string surface;
  ClassId class_id = 0;

  bool operator==(const Token&) const = default;
};

/// A verb class or a noun class. Verb and noun ids are separate spaces, so the
/// kind is part of the key.
struct Atom {
  AtomKind kind = AtomKind::verb;
  ClassId id = 0;

  auto operator<=>(const Atom&) const = default;
};

/// A (verb class, noun class) composition.
struct Compound {
  ClassId verb = 0;
  ClassId noun = 0;

  auto operator<=>(const Compound&) const = default;
};

/// One narrated clip.
struct Utterance {
  std::string raw_text;
  /// Lowercased narration with multiword tokens joined by underscores.
  std::string text;
  Token verb;
  Token primary_noun;
  /// Includes primary_noun.
  std::vector<Token> all_nouns;
  std::string clip_id;
  std::string video_id;
  /// Opaque media paths, carried through untouched.
  std::vector<std::string> media_refs;

  Compound compound() const { return {verb.class_id, primary_noun.class_id}; }

  bool operator==(const Utterance&) const = default;
};

enum class CompoundScope { all_utterances, target_only };

std::string_view to_string(CompoundScope scope);
CompoundScope parse_compound_scope(std::string_view text);

/// A microsegment: K context utterances followed by the target utterance.
struct Instance {
  std::string id;
  std::string video_id;
  std::vector<Utterance> context;
  Utterance target;
  /// Sorted multisets.
  std::vector<Atom> atoms;
  std::vector<Compound> compounds;
  Compound target_compound;

  bool operator==(const Instance&) const = default;
};

/// Builds an Instance and derives its atom and compound multisets.
Instance make_instance(std::string id, std::string video_id,
                       std::vector<Utterance> context, Utterance target,
                       CompoundScope scope = CompoundScope::all_utterances);

struct Vocab {
  std::map<std::string, ClassId> verbs;
  std::map<std::string, ClassId> nouns;
  std::map<ClassId, CategoryId> verb_categories;
  std::map<ClassId, CategoryId> noun_categories;

  bool has_class(AtomKind kind, ClassId id) const;
  std::optional<ClassId> lookup(AtomKind kind, std::string_view surface) const;
  std::optional<CategoryId> category(AtomKind kind, ClassId id) const;

  /// Throws VocabError unless every class named by a surface has a category.
  void validate() const;
};

/// Lowercases, trims, and joins internal whitespace and hyphens with '_'.
/// Throws InvalidToken on empty or all-whitespace input.
std::string normalize_token(std::string_view raw);

/// Normalizes each whitespace-separated word and rejoins with single spaces.
/// Empty input yields an empty string.
std::string normalize_text(std::string_view raw);

/// Normalizes a narration, fusing the utterance's multiword verb and noun
/// surfaces ("put down" -> "put_down") before per-word normalization.
std::string normalize_narration(std::string_view raw, const Token& verb,
                                std::span<const Token> nouns);

struct VideoUtterances {
  std::string video_id;
  std::vector<Utterance> utterances;
};

enum class AnnotationFormat { csv, jsonl };

/// Picks the format from the file extension (.jsonl/.json -> jsonl).
AnnotationFormat guess_format(const std::filesystem::path& path);

/// Reads an annotation table. Videos come back sorted by id, utterances in
/// temporal order (start_timestamp when present, otherwise file order).
std::vector<VideoUtterances> parse_annotations(const std::filesystem::path& path,
                                               AnnotationFormat format,
                                               const Vocab& vocab);

struct ExtractOptions {
  std::size_t window = 4;
  bool dedup = true;
  bool noun_filter = true;
  CompoundScope scope = CompoundScope::all_utterances;
};

struct IngestReport {
  std::size_t videos = 0;
  std::size_t utterances = 0;
  std::size_t duplicates_collapsed = 0;
  /// Windows before dedup and filtering.
  std::size_t raw_windows = 0;
  /// Windows after dedup, before the noun filter.
  std::size_t windows = 0;
  std::size_t dropped_by_noun_filter = 0;
  std::size_t skipped_short_videos = 0;
  std::size_t instances = 0;
};

struct ExtractResult {
  std::vector<Instance> instances;
  IngestReport report;
};

/// Collapses runs of consecutive utterances sharing (verb, primary noun)
/// classes to their first element.
std::vector<Utterance> dedup_consecutive(std::span<const Utterance> utterances);

/// True when the target's primary noun class is among the noun classes of
/// some context utterance.
bool target_noun_present(std::span<const Utterance> context, const Utterance& target);

ExtractResult extract_instances(std::span<const VideoUtterances> videos,
                                const ExtractOptions& options = {});

struct CorpusStats {
  std::size_t instances = 0;
  std::map<Atom, std::int64_t> atom_counts;
  std::map<Compound, std::int64_t> compound_counts;
  std::int64_t atom_total = 0;
  std::int64_t compound_total = 0;
};

CorpusStats corpus_stats(std::span<const Instance> instances);

}  // namespace divsplit
