#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "divsplit/corpus.hpp"

namespace divsplit {

/// Whitespace tokenization of normalize_text output.
std::vector<std::string> tokenize(std::string_view text);

struct TokenizedPair {
  std::vector<std::string> prediction;
  std::vector<std::string> reference;
};

/// Corpus-level BLEU-1 in [0, 100]: clipped unigram precision pooled over
/// the corpus times the brevity penalty min(1, exp(1 - r/c)).
double bleu1(std::span<const TokenizedPair> corpus);

/// Mean of per-pair BLEU-1; diagnostics only.
double sentence_bleu1(std::span<const TokenizedPair> corpus);

/// What is being predicted: the whole next utterance or one of its atoms.
enum class Task { nup, verb, noun };

std::string_view to_string(Task task);
Task parse_task(std::string_view text);

struct ParsedAtoms {
  std::optional<Token> verb;
  std::optional<Token> noun;
};

/// First word is the verb; the head noun is the longest underscore-joined run
/// of the following words found in the noun vocabulary.
ParsedAtoms parse_prediction(std::string_view text, const Vocab& vocab);

/// Longest underscore-joined prefix of `text` known to the vocabulary.
std::optional<Token> parse_atom(std::string_view text, AtomKind kind, const Vocab& vocab);

struct EvalRecord {
  std::string instance_id;
  std::string prediction_text;
  std::string reference_text;
  std::optional<Token> pred_verb;
  std::optional<Token> pred_noun;
  Token ref_verb;
  Token ref_noun;
  std::map<std::string, double> per_metric;
};

/// Percentage of records whose normalized texts are equal.
double exact_match(std::span<const EvalRecord> records);

struct CategoricalResult {
  double accuracy = 0.0;
  std::size_t oov = 0;
};

/// Percentage of records whose predicted verb and noun fall in the same
/// categories as the reference. With `only`, just that atom is compared.
/// Records whose texts match exactly count as correct without parsing.
CategoricalResult categorical_accuracy(std::span<const EvalRecord> records, const Vocab& vocab,
                                       std::optional<AtomKind> only = std::nullopt);

/// Most recent heuristic: the verb or primary noun of the last context
/// utterance.
Token mrh_predict(const Instance& instance, AtomKind kind);

/// Counts of target compound given the last context compound.
class CompoundMemorizer {
 public:
  static CompoundMemorizer fit(std::span<const Instance> train);

  /// "verb noun" of the most frequent target for this context, ties broken
  /// by surface; falls back to the most recent atoms for unseen contexts.
  std::string predict(const Instance& instance) const;

  /// Atom of the predicted compound.
  Token predict_atom(const Instance& instance, AtomKind kind) const;

  bool seen(const Instance& instance) const;

 private:
  struct Outcome {
    std::size_t count = 0;
    std::string surface;
    Token verb;
    Token noun;
  };
  std::optional<Outcome> best(const Instance& instance) const;

  std::map<Compound, std::map<Compound, Outcome>> table_;
};

/// The k pool instances with the largest noun-set plus verb-set overlap with
/// the query's context, most similar first, ties by id.
std::vector<Instance> select_fewshot(const Instance& query, std::span<const Instance> pool, std::size_t k);

/// |query nouns ∩ candidate nouns| + |query verbs ∩ candidate verbs|.
std::size_t fewshot_similarity(const Instance& query, const Instance& candidate);

enum class PromptTemplate { text_only, interleaved };

PromptTemplate parse_prompt_template(std::string_view text);

/// Instruction line, one line per shot, then the query line ending in "=>".
/// Lines are joined by '\n' with no trailing newline.
std::string render_prompt(const Instance& query, std::span<const Instance> shots, PromptTemplate tmpl);

struct AtomScores {
  double em = 0.0;
  double ca = 0.0;
};

struct MetricReport {
  Task task = Task::nup;
  double bleu1 = 0.0;
  double em = 0.0;
  double ca = 0.0;
  std::optional<AtomScores> verb;
  std::optional<AtomScores> noun;
  std::size_t oov = 0;
  std::size_t missing = 0;
  std::size_t n = 0;
};

/// Builds a record for `reference` scored on `task`. A missing prediction
/// becomes an empty prediction text.
EvalRecord make_record(const Instance& reference, std::string_view prediction, Task task, const Vocab& vocab);

/// Scores records built by make_record. `missing` is reported as given.
MetricReport evaluate_records(std::span<EvalRecord> records, Task task, const Vocab& vocab,
                              std::size_t missing = 0);

}  // namespace divsplit
