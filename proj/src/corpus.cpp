#include "divsplit/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "divsplit/corpus_io.hpp"
#include "divsplit/errors.hpp"

namespace divsplit {

std::string_view to_string(AtomKind kind) {
  return kind == AtomKind::verb ? "verb" : "noun";
}

std::string_view to_string(CompoundScope scope) {
  return scope == CompoundScope::all_utterances ? "all" : "target-only";
}

CompoundScope parse_compound_scope(std::string_view text) {
  if (text == "all") return CompoundScope::all_utterances;
  if (text == "target-only") return CompoundScope::target_only;
  throw InvalidParameter("unknown compound scope '" + std::string(text) +
                         "' (expected all or target-only)");
}

Instance make_instance(std::string id, std::string video_id,
                       std::vector<Utterance> context, Utterance target,
                       CompoundScope scope) {
  Instance inst;
  inst.id = std::move(id);
  inst.video_id = std::move(video_id);
  inst.context = std::move(context);
  inst.target = std::move(target);
  inst.target_compound = inst.target.compound();

  auto add = [&](const Utterance& u, bool with_compound) {
    inst.atoms.push_back({AtomKind::verb, u.verb.class_id});
    inst.atoms.push_back({AtomKind::noun, u.primary_noun.class_id});
    if (with_compound) inst.compounds.push_back(u.compound());
  };
  const bool all = scope == CompoundScope::all_utterances;
  for (const auto& u : inst.context) add(u, all);
  add(inst.target, true);

  std::sort(inst.atoms.begin(), inst.atoms.end());
  std::sort(inst.compounds.begin(), inst.compounds.end());
  return inst;
}

bool Vocab::has_class(AtomKind kind, ClassId id) const {
  const auto& cats = kind == AtomKind::verb ? verb_categories : noun_categories;
  return cats.contains(id);
}

std::optional<ClassId> Vocab::lookup(AtomKind kind, std::string_view surface) const {
  const auto& table = kind == AtomKind::verb ? verbs : nouns;
  auto it = table.find(std::string(surface));
  if (it == table.end()) return std::nullopt;
  return it->second;
}

std::optional<CategoryId> Vocab::category(AtomKind kind, ClassId id) const {
  const auto& cats = kind == AtomKind::verb ? verb_categories : noun_categories;
  auto it = cats.find(id);
  if (it == cats.end()) return std::nullopt;
  return it->second;
}

void Vocab::validate() const {
  for (AtomKind kind : {AtomKind::verb, AtomKind::noun}) {
    const auto& table = kind == AtomKind::verb ? verbs : nouns;
    for (const auto& [surface, id] : table) {
      if (!has_class(kind, id)) {
        throw VocabError(std::string(to_string(kind)) + " '" + surface + "' has class " +
                         std::to_string(id) + " without a category");
      }
    }
  }
}

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::vector<std::string_view> split_words(std::string_view text) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) words.push_back(text.substr(i, j - i));
    i = j;
  }
  return words;
}

}  // namespace

std::string normalize_token(std::string_view raw) {
  const auto words = split_words(raw);
  if (words.empty()) throw InvalidToken("empty token");
  std::string out;
  for (const auto word : words) {
    if (!out.empty()) out += '_';
    for (char c : word) {
      out += c == '-' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  return out;
}

std::string normalize_text(std::string_view raw) {
  std::string out;
  for (const auto word : split_words(raw)) {
    if (!out.empty()) out += ' ';
    out += normalize_token(word);
  }
  return out;
}

std::string normalize_narration(std::string_view raw, const Token& verb,
                                std::span<const Token> nouns) {
  // Word-level view with hyphens already folded, then fuse each multiword
  // surface that appears as a run of consecutive words.
  std::vector<std::string> words;
  for (const auto word : split_words(raw)) words.push_back(normalize_token(word));

  auto fuse = [&words](const std::string& surface) {
    if (surface.find('_') == std::string::npos) return;
    std::vector<std::string> parts;
    std::stringstream ss(surface);
    for (std::string part; std::getline(ss, part, '_');) parts.push_back(part);
    if (parts.size() < 2 || parts.size() > words.size()) return;
    for (std::size_t i = 0; i + parts.size() <= words.size(); ++i) {
      if (std::equal(parts.begin(), parts.end(), words.begin() + static_cast<std::ptrdiff_t>(i))) {
        words[i] = surface;
        words.erase(words.begin() + static_cast<std::ptrdiff_t>(i + 1),
                    words.begin() + static_cast<std::ptrdiff_t>(i + parts.size()));
      }
    }
  };
  fuse(verb.surface);
  for (const auto& noun : nouns) fuse(noun.surface);

  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

AnnotationFormat guess_format(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".jsonl" || ext == ".json" || ext == ".ndjson") return AnnotationFormat::jsonl;
  return AnnotationFormat::csv;
}

namespace {

constexpr const char* kRequiredColumns[] = {"video_id", "narration",   "verb",      "verb_class",
                                            "noun",     "noun_class",  "all_nouns", "all_noun_classes"};

/// "HH:MM:SS.fff" or plain seconds.
std::optional<double> parse_timestamp(const std::string& text) {
  if (text.empty()) return std::nullopt;
  double seconds = 0.0;
  std::size_t start = 0;
  while (true) {
    const auto colon = text.find(':', start);
    const auto piece = text.substr(start, colon == std::string::npos ? std::string::npos : colon - start);
    char* end = nullptr;
    const double value = std::strtod(piece.c_str(), &end);
    if (piece.empty() || end != piece.c_str() + piece.size()) return std::nullopt;
    seconds = seconds * 60.0 + value;
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  return seconds;
}

ClassId parse_class(const std::string& text, const std::string& column, std::size_t row) {
  char* end = nullptr;
  const long value = std::strtol(text.c_str(), &end, 10);
  if (text.empty() || end != text.c_str() + text.size() || value < 0) {
    throw SchemaError("row " + std::to_string(row) + ": column '" + column +
                      "' is not a non-negative integer: '" + text + "'");
  }
  return static_cast<ClassId>(value);
}

struct RawRow {
  std::size_t row = 0;
  std::map<std::string, std::string> scalars;
  std::vector<std::string> all_nouns;
  std::vector<std::string> all_noun_classes;
  std::vector<std::string> media_refs;
};

Token make_token(AtomKind kind, const std::string& surface, ClassId id, const Vocab& vocab,
                 std::size_t row) {
  Token token;
  try {
    token.surface = normalize_token(surface);
  } catch (const InvalidToken&) {
    throw SchemaError("row " + std::to_string(row) + ": empty " + std::string(to_string(kind)));
  }
  token.class_id = id;
  if (!vocab.has_class(kind, id)) {
    throw VocabError("row " + std::to_string(row) + ": unknown " + std::string(to_string(kind)) +
                     " class " + std::to_string(id));
  }
  if (auto known = vocab.lookup(kind, token.surface); known && *known != id) {
    throw VocabError("row " + std::to_string(row) + ": " + std::string(to_string(kind)) + " '" +
                     token.surface + "' has class " + std::to_string(id) + " but the vocabulary says " +
                     std::to_string(*known));
  }
  return token;
}

Utterance make_utterance(const RawRow& r, const Vocab& vocab) {
  const auto& s = r.scalars;
  Utterance u;
  u.video_id = s.at("video_id");
  u.raw_text = s.at("narration");
  u.verb = make_token(AtomKind::verb, s.at("verb"), parse_class(s.at("verb_class"), "verb_class", r.row),
                      vocab, r.row);
  u.primary_noun = make_token(AtomKind::noun, s.at("noun"),
                              parse_class(s.at("noun_class"), "noun_class", r.row), vocab, r.row);
  if (r.all_nouns.size() != r.all_noun_classes.size()) {
    throw SchemaError("row " + std::to_string(r.row) +
                      ": all_nouns and all_noun_classes differ in length");
  }
  for (std::size_t i = 0; i < r.all_nouns.size(); ++i) {
    u.all_nouns.push_back(make_token(AtomKind::noun, r.all_nouns[i],
                                     parse_class(r.all_noun_classes[i], "all_noun_classes", r.row),
                                     vocab, r.row));
  }
  const bool has_primary = std::any_of(u.all_nouns.begin(), u.all_nouns.end(), [&](const Token& t) {
    return t.class_id == u.primary_noun.class_id;
  });
  if (!has_primary) u.all_nouns.insert(u.all_nouns.begin(), u.primary_noun);
  u.text = normalize_narration(u.raw_text, u.verb, u.all_nouns);

  auto id_it = s.find("narration_id");
  u.clip_id = (id_it != s.end() && !id_it->second.empty()) ? id_it->second
                                                           : u.video_id + "_row" + std::to_string(r.row);
  u.media_refs = r.media_refs;
  return u;
}

std::vector<RawRow> read_csv_rows(std::istream& in) {
  std::vector<std::string> header;
  if (!read_csv_record(in, header)) throw SchemaError("annotation file is empty");
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < header.size(); ++i) index[header[i]] = i;
  for (const char* col : kRequiredColumns) {
    if (!index.contains(col)) throw SchemaError(std::string("missing column '") + col + "'");
  }

  std::vector<RawRow> rows;
  std::vector<std::string> fields;
  std::size_t row = 1;
  while (read_csv_record(in, fields)) {
    ++row;
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != header.size()) {
      throw SchemaError("row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                        " fields, found " + std::to_string(fields.size()));
    }
    RawRow r;
    r.row = row;
    for (const auto& [name, i] : index) {
      if (name == "all_nouns") {
        r.all_nouns = parse_list_literal(fields[i]);
      } else if (name == "all_noun_classes") {
        r.all_noun_classes = parse_list_literal(fields[i]);
      } else if (name == "media_refs") {
        r.media_refs = parse_list_literal(fields[i]);
      } else {
        r.scalars[name] = fields[i];
      }
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string scalar_string(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return "";
  return v.dump();
}

std::vector<std::string> list_strings(const nlohmann::json& v) {
  if (v.is_string()) return parse_list_literal(v.get<std::string>());
  if (!v.is_array()) throw SchemaError("expected a list, found " + v.dump());
  std::vector<std::string> out;
  for (const auto& e : v) out.push_back(scalar_string(e));
  return out;
}

std::vector<RawRow> read_jsonl_rows(std::istream& in) {
  std::vector<RawRow> rows;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError("row " + std::to_string(row) + ": " + e.what());
    }
    for (const char* col : kRequiredColumns) {
      if (!j.contains(col)) {
        throw SchemaError("row " + std::to_string(row) + ": missing column '" + col + "'");
      }
    }
    RawRow r;
    r.row = row;
    for (const auto& [key, value] : j.items()) {
      if (key == "all_nouns") {
        r.all_nouns = list_strings(value);
      } else if (key == "all_noun_classes") {
        r.all_noun_classes = list_strings(value);
      } else if (key == "media_refs") {
        r.media_refs = list_strings(value);
      } else {
        r.scalars[key] = scalar_string(value);
      }
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace

std::vector<VideoUtterances> parse_annotations(const std::filesystem::path& path,
                                               AnnotationFormat format, const Vocab& vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open annotations '" + path.string() + "'");
  const auto rows = format == AnnotationFormat::csv ? read_csv_rows(in) : read_jsonl_rows(in);

  struct Keyed {
    double start;
    std::size_t order;
    Utterance utterance;
  };
  std::map<std::string, std::vector<Keyed>> by_video;
  std::size_t order = 0;
  for (const auto& r : rows) {
    Utterance u = make_utterance(r, vocab);
    double start = 0.0;
    if (auto it = r.scalars.find("start_timestamp"); it != r.scalars.end()) {
      auto parsed = parse_timestamp(it->second);
      if (!parsed) {
        throw SchemaError("row " + std::to_string(r.row) + ": bad start_timestamp '" + it->second + "'");
      }
      start = *parsed;
    }
    by_video[u.video_id].push_back({start, order++, std::move(u)});
  }

  std::vector<VideoUtterances> videos;
  for (auto& [video_id, items] : by_video) {
    std::stable_sort(items.begin(), items.end(), [](const Keyed& a, const Keyed& b) {
      return a.start < b.start;
    });
    VideoUtterances v;
    v.video_id = video_id;
    for (auto& item : items) v.utterances.push_back(std::move(item.utterance));
    videos.push_back(std::move(v));
  }
  return videos;
}

std::vector<Utterance> dedup_consecutive(std::span<const Utterance> utterances) {
  std::vector<Utterance> out;
  for (const auto& u : utterances) {
    if (!out.empty() && out.back().compound() == u.compound()) continue;
    out.push_back(u);
  }
  return out;
}

bool target_noun_present(std::span<const Utterance> context, const Utterance& target) {
  const ClassId noun = target.primary_noun.class_id;
  return std::any_of(context.begin(), context.end(), [noun](const Utterance& u) {
    if (u.primary_noun.class_id == noun) return true;
    return std::any_of(u.all_nouns.begin(), u.all_nouns.end(),
                       [noun](const Token& t) { return t.class_id == noun; });
  });
}

ExtractResult extract_instances(std::span<const VideoUtterances> videos,
                                const ExtractOptions& options) {
  if (options.window < 2) throw InvalidParameter("window must be at least 2");
  ExtractResult result;
  auto& report = result.report;
  const std::size_t w = options.window;

  for (const auto& video : videos) {
    ++report.videos;
    report.utterances += video.utterances.size();
    if (video.utterances.size() >= w) report.raw_windows += video.utterances.size() - w + 1;

    const std::vector<Utterance> seq =
        options.dedup ? dedup_consecutive(video.utterances)
                      : std::vector<Utterance>(video.utterances.begin(), video.utterances.end());
    report.duplicates_collapsed += video.utterances.size() - seq.size();
    if (seq.size() < w) {
      ++report.skipped_short_videos;
      continue;
    }
    for (std::size_t start = 0; start + w <= seq.size(); ++start) {
      ++report.windows;
      const std::span<const Utterance> context(seq.data() + start, w - 1);
      const Utterance& target = seq[start + w - 1];
      if (options.noun_filter && !target_noun_present(context, target)) {
        ++report.dropped_by_noun_filter;
        continue;
      }
      result.instances.push_back(make_instance(video.video_id + "/" + seq[start].clip_id, video.video_id,
                                               {context.begin(), context.end()}, target, options.scope));
    }
  }
  report.instances = result.instances.size();
  return result;
}

CorpusStats corpus_stats(std::span<const Instance> instances) {
  CorpusStats stats;
  stats.instances = instances.size();
  for (const auto& inst : instances) {
    for (const auto& a : inst.atoms) ++stats.atom_counts[a];
    for (const auto& c : inst.compounds) ++stats.compound_counts[c];
    stats.atom_total += static_cast<std::int64_t>(inst.atoms.size());
    stats.compound_total += static_cast<std::int64_t>(inst.compounds.size());
  }
  return stats;
}

}  // namespace divsplit
