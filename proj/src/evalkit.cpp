#include "divsplit/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "divsplit/errors.hpp"

namespace divsplit {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream ss{std::string(text)};
  for (std::string word; ss >> word;) out.push_back(std::move(word));
  return out;
}

namespace {

struct UnigramCounts {
  std::size_t matches = 0;
  std::size_t candidate = 0;
  std::size_t reference = 0;
};

UnigramCounts unigram_counts(const TokenizedPair& pair) {
  std::map<std::string_view, std::size_t> ref_counts;
  for (const auto& w : pair.reference) ++ref_counts[w];
  std::map<std::string_view, std::size_t> pred_counts;
  for (const auto& w : pair.prediction) ++pred_counts[w];

  UnigramCounts out;
  out.candidate = pair.prediction.size();
  out.reference = pair.reference.size();
  for (const auto& [w, n] : pred_counts) {
    auto it = ref_counts.find(w);
    if (it != ref_counts.end()) out.matches += std::min(n, it->second);
  }
  return out;
}

double bleu_from_counts(const UnigramCounts& c) {
  if (c.candidate == 0 || c.matches == 0) return 0.0;
  const double precision = static_cast<double>(c.matches) / static_cast<double>(c.candidate);
  const double ratio = static_cast<double>(c.reference) / static_cast<double>(c.candidate);
  const double brevity = ratio < 1.0 ? 1.0 : std::exp(1.0 - ratio);
  return 100.0 * precision * brevity;
}

}  // namespace

double bleu1(std::span<const TokenizedPair> corpus) {
  UnigramCounts total;
  for (const auto& pair : corpus) {
    const auto c = unigram_counts(pair);
    total.matches += c.matches;
    total.candidate += c.candidate;
    total.reference += c.reference;
  }
  return bleu_from_counts(total);
}

double sentence_bleu1(std::span<const TokenizedPair> corpus) {
  if (corpus.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& pair : corpus) sum += bleu_from_counts(unigram_counts(pair));
  return sum / static_cast<double>(corpus.size());
}

std::string_view to_string(Task task) {
  switch (task) {
    case Task::nup:
      return "nup";
    case Task::verb:
      return "verb";
    case Task::noun:
      return "noun";
  }
  return "unknown";
}

Task parse_task(std::string_view text) {
  if (text == "nup") return Task::nup;
  if (text == "verb") return Task::verb;
  if (text == "noun") return Task::noun;
  throw InvalidParameter("unknown task '" + std::string(text) + "' (expected nup, verb or noun)");
}

namespace {

struct Match {
  Token token;
  std::size_t words = 0;
};

/// Longest run words[from..from+len) joined by '_' that the vocabulary knows.
std::optional<Match> longest_match(const std::vector<std::string>& words, std::size_t from, AtomKind kind,
                                   const Vocab& vocab) {
  for (std::size_t len = words.size() - from; len > 0; --len) {
    std::string joined = words[from];
    for (std::size_t i = from + 1; i < from + len; ++i) joined += "_" + words[i];
    if (auto id = vocab.lookup(kind, joined)) return Match{{joined, *id}, len};
  }
  return std::nullopt;
}

std::string safe_normalize_text(std::string_view text) {
  try {
    return normalize_text(text);
  } catch (const InvalidToken&) {
    return {};
  }
}

}  // namespace

std::optional<Token> parse_atom(std::string_view text, AtomKind kind, const Vocab& vocab) {
  const auto words = tokenize(safe_normalize_text(text));
  if (words.empty()) return std::nullopt;
  if (auto m = longest_match(words, 0, kind, vocab)) return m->token;
  return std::nullopt;
}

ParsedAtoms parse_prediction(std::string_view text, const Vocab& vocab) {
  ParsedAtoms out;
  const auto words = tokenize(safe_normalize_text(text));
  if (words.empty()) return out;
  // A verb written with spaces ("put down") is accepted as its fused form.
  // An unknown first word still occupies the verb slot.
  const auto verb = longest_match(words, 0, AtomKind::verb, vocab);
  if (verb) out.verb = verb->token;
  for (std::size_t from = verb ? verb->words : 1; from < words.size(); ++from) {
    if (auto noun = longest_match(words, from, AtomKind::noun, vocab)) {
      out.noun = noun->token;
      break;
    }
  }
  return out;
}

double exact_match(std::span<const EvalRecord> records) {
  if (records.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& r : records) {
    if (!r.reference_text.empty() && r.prediction_text == r.reference_text) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(records.size());
}

namespace {

std::optional<Token> resolve(const EvalRecord& r, AtomKind kind, const Vocab& vocab) {
  const auto& cached = kind == AtomKind::verb ? r.pred_verb : r.pred_noun;
  if (cached) return cached;
  const auto parsed = parse_prediction(r.prediction_text, vocab);
  if (auto t = kind == AtomKind::verb ? parsed.verb : parsed.noun) return t;
  return parse_atom(r.prediction_text, kind, vocab);
}

/// 1 correct, 0 wrong; sets `oov` when a needed prediction atom is unknown.
bool category_correct(const EvalRecord& r, const Vocab& vocab, std::optional<AtomKind> only, bool& oov) {
  oov = false;
  if (!r.reference_text.empty() && r.prediction_text == r.reference_text) return true;
  if (r.prediction_text.empty()) return false;
  bool correct = true;
  for (AtomKind kind : {AtomKind::verb, AtomKind::noun}) {
    if (only && *only != kind) continue;
    const auto pred = resolve(r, kind, vocab);
    if (!pred) {
      oov = true;
      return false;
    }
    const auto& ref = kind == AtomKind::verb ? r.ref_verb : r.ref_noun;
    const auto pc = vocab.category(kind, pred->class_id);
    const auto rc = vocab.category(kind, ref.class_id);
    if (!pc || !rc || *pc != *rc) correct = false;
  }
  return correct;
}

}  // namespace

CategoricalResult categorical_accuracy(std::span<const EvalRecord> records, const Vocab& vocab,
                                       std::optional<AtomKind> only) {
  CategoricalResult out;
  if (records.empty()) return out;
  std::size_t hits = 0;
  for (const auto& r : records) {
    bool oov = false;
    if (category_correct(r, vocab, only, oov)) ++hits;
    if (oov) ++out.oov;
  }
  out.accuracy = 100.0 * static_cast<double>(hits) / static_cast<double>(records.size());
  return out;
}

Token mrh_predict(const Instance& instance, AtomKind kind) {
  if (instance.context.empty()) throw InvalidParameter("instance '" + instance.id + "' has no context");
  const auto& last = instance.context.back();
  return kind == AtomKind::verb ? last.verb : last.primary_noun;
}

CompoundMemorizer CompoundMemorizer::fit(std::span<const Instance> train) {
  CompoundMemorizer model;
  for (const auto& inst : train) {
    if (inst.context.empty()) continue;
    auto& outcome = model.table_[inst.context.back().compound()][inst.target.compound()];
    const std::string surface = inst.target.verb.surface + " " + inst.target.primary_noun.surface;
    // A class may appear under several surfaces; keep the smallest.
    if (outcome.count == 0 || surface < outcome.surface) {
      outcome.surface = surface;
      outcome.verb = inst.target.verb;
      outcome.noun = inst.target.primary_noun;
    }
    ++outcome.count;
  }
  return model;
}

std::optional<CompoundMemorizer::Outcome> CompoundMemorizer::best(const Instance& instance) const {
  if (instance.context.empty()) return std::nullopt;
  auto it = table_.find(instance.context.back().compound());
  if (it == table_.end()) return std::nullopt;
  const Outcome* top = nullptr;
  for (const auto& [compound, outcome] : it->second) {
    if (!top || outcome.count > top->count ||
        (outcome.count == top->count && outcome.surface < top->surface)) {
      top = &outcome;
    }
  }
  return *top;
}

bool CompoundMemorizer::seen(const Instance& instance) const { return best(instance).has_value(); }

std::string CompoundMemorizer::predict(const Instance& instance) const {
  if (auto b = best(instance)) return b->verb.surface + " " + b->noun.surface;
  return mrh_predict(instance, AtomKind::verb).surface + " " + mrh_predict(instance, AtomKind::noun).surface;
}

Token CompoundMemorizer::predict_atom(const Instance& instance, AtomKind kind) const {
  if (auto b = best(instance)) return kind == AtomKind::verb ? b->verb : b->noun;
  return mrh_predict(instance, kind);
}

namespace {

struct AtomSets {
  std::set<ClassId> verbs;
  std::set<ClassId> nouns;

  void add(const Utterance& u) {
    verbs.insert(u.verb.class_id);
    nouns.insert(u.primary_noun.class_id);
    for (const auto& t : u.all_nouns) nouns.insert(t.class_id);
  }
};

AtomSets context_sets(const Instance& inst) {
  AtomSets s;
  for (const auto& u : inst.context) s.add(u);
  return s;
}

AtomSets all_sets(const Instance& inst) {
  AtomSets s = context_sets(inst);
  s.add(inst.target);
  return s;
}

std::size_t intersection_size(const std::set<ClassId>& a, const std::set<ClassId>& b) {
  std::size_t n = 0;
  for (ClassId x : a) n += b.count(x);
  return n;
}

std::size_t similarity(const AtomSets& query, const AtomSets& candidate) {
  return intersection_size(query.nouns, candidate.nouns) + intersection_size(query.verbs, candidate.verbs);
}

}  // namespace

std::size_t fewshot_similarity(const Instance& query, const Instance& candidate) {
  return similarity(context_sets(query), all_sets(candidate));
}

std::vector<Instance> select_fewshot(const Instance& query, std::span<const Instance> pool, std::size_t k) {
  if (k > pool.size()) {
    throw InvalidParameter("requested " + std::to_string(k) + " shots from a pool of " +
                           std::to_string(pool.size()));
  }
  const AtomSets q = context_sets(query);
  std::vector<std::pair<std::size_t, std::size_t>> scored;  // (score, pool index)
  scored.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) scored.emplace_back(similarity(q, all_sets(pool[i])), i);
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(),
                    [&](const auto& a, const auto& b) {
                      if (a.first != b.first) return a.first > b.first;
                      return pool[a.second].id < pool[b.second].id;
                    });
  std::vector<Instance> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(pool[scored[i].second]);
  return out;
}

PromptTemplate parse_prompt_template(std::string_view text) {
  if (text == "text" || text == "text-only") return PromptTemplate::text_only;
  if (text == "interleaved") return PromptTemplate::interleaved;
  throw InvalidParameter("unknown template '" + std::string(text) + "' (expected text or interleaved)");
}

namespace {

std::string display(const Utterance& u) {
  std::string text = u.text.empty() ? u.verb.surface + " " + u.primary_noun.surface : u.text;
  std::replace(text.begin(), text.end(), '_', ' ');
  return text;
}

std::string example_line(const Instance& inst, PromptTemplate tmpl, bool with_target) {
  std::string line;
  for (std::size_t i = 0; i < inst.context.size(); ++i) {
    if (i) line += " . ";
    line += display(inst.context[i]);
    if (tmpl == PromptTemplate::interleaved) line += " <Image " + std::to_string(i + 1) + ">";
  }
  line += " =>";
  if (with_target) line += " " + display(inst.target);
  return line;
}

}  // namespace

std::string render_prompt(const Instance& query, std::span<const Instance> shots, PromptTemplate tmpl) {
  const std::string k = std::to_string(query.context.size());
  std::string out =
      tmpl == PromptTemplate::text_only
          ? "Predict the next narration given " + k + " sequential previous narrations from a cooking video"
          : "Predict the next action narration given " + k +
                " sequential previous actions (image-narration pairs) in a cooking video.";
  for (const auto& shot : shots) out += "\n" + example_line(shot, tmpl, true);
  out += "\n" + example_line(query, tmpl, false);
  return out;
}

EvalRecord make_record(const Instance& reference, std::string_view prediction, Task task, const Vocab& vocab) {
  EvalRecord r;
  r.instance_id = reference.id;
  r.ref_verb = reference.target.verb;
  r.ref_noun = reference.target.primary_noun;
  switch (task) {
    case Task::nup: {
      r.reference_text = safe_normalize_text(reference.target.text.empty()
                                                 ? r.ref_verb.surface + " " + r.ref_noun.surface
                                                 : reference.target.text);
      r.prediction_text = safe_normalize_text(prediction);
      const auto parsed = parse_prediction(r.prediction_text, vocab);
      r.pred_verb = parsed.verb;
      r.pred_noun = parsed.noun;
      break;
    }
    case Task::verb:
    case Task::noun: {
      const AtomKind kind = task == Task::verb ? AtomKind::verb : AtomKind::noun;
      r.reference_text = kind == AtomKind::verb ? r.ref_verb.surface : r.ref_noun.surface;
      try {
        r.prediction_text = normalize_token(prediction);
      } catch (const InvalidToken&) {
        r.prediction_text.clear();
      }
      (kind == AtomKind::verb ? r.pred_verb : r.pred_noun) = parse_atom(r.prediction_text, kind, vocab);
      break;
    }
  }
  return r;
}

MetricReport evaluate_records(std::span<EvalRecord> records, Task task, const Vocab& vocab, std::size_t missing) {
  MetricReport out;
  out.task = task;
  out.n = records.size();
  out.missing = missing;
  if (records.empty()) return out;

  std::vector<TokenizedPair> pairs;
  pairs.reserve(records.size());
  for (auto& r : records) pairs.push_back({tokenize(r.prediction_text), tokenize(r.reference_text)});
  out.bleu1 = bleu1(pairs);
  out.em = exact_match(records);

  std::optional<AtomKind> only;
  if (task == Task::verb) only = AtomKind::verb;
  if (task == Task::noun) only = AtomKind::noun;
  const auto ca = categorical_accuracy(records, vocab, only);
  out.ca = ca.accuracy;
  out.oov = ca.oov;

  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& r = records[i];
    bool oov = false;
    r.per_metric["bleu1"] = bleu1(std::span<const TokenizedPair>(&pairs[i], 1));
    r.per_metric["em"] = exact_match(std::span<const EvalRecord>(&r, 1));
    r.per_metric["ca"] = category_correct(r, vocab, only, oov) ? 100.0 : 0.0;
  }

  auto atom_scores = [&](AtomKind kind) {
    AtomScores s;
    std::size_t em_hits = 0;
    for (const auto& r : records) {
      const auto& pred = kind == AtomKind::verb ? r.pred_verb : r.pred_noun;
      const auto& ref = kind == AtomKind::verb ? r.ref_verb : r.ref_noun;
      if (pred && pred->surface == ref.surface) ++em_hits;
    }
    s.em = 100.0 * static_cast<double>(em_hits) / static_cast<double>(records.size());
    s.ca = categorical_accuracy(records, vocab, kind).accuracy;
    return s;
  };
  if (task == Task::nup) {
    out.verb = atom_scores(AtomKind::verb);
    out.noun = atom_scores(AtomKind::noun);
  } else if (task == Task::verb) {
    out.verb = AtomScores{out.em, out.ca};
  } else {
    out.noun = AtomScores{out.em, out.ca};
  }
  return out;
}

}  // namespace divsplit
