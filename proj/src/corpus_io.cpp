#include "divsplit/corpus_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "divsplit/errors.hpp"

namespace divsplit {

namespace {

std::map<std::string, ClassId> surface_map(const nlohmann::json& doc, const char* key) {
  std::map<std::string, ClassId> out;
  if (!doc.contains(key) || !doc.at(key).is_object()) {
    throw SchemaError(std::string("vocab is missing object '") + key + "'");
  }
  for (const auto& [surface, id] : doc.at(key).items()) {
    if (!id.is_number_unsigned()) {
      throw SchemaError(std::string("vocab '") + key + "." + surface + "' is not a class id");
    }
    out[normalize_token(surface)] = id.get<ClassId>();
  }
  return out;
}

std::map<ClassId, CategoryId> category_map(const nlohmann::json& doc, const char* key) {
  std::map<ClassId, CategoryId> out;
  if (!doc.contains(key) || !doc.at(key).is_object()) {
    throw SchemaError(std::string("vocab is missing object '") + key + "'");
  }
  for (const auto& [cls, cat] : doc.at(key).items()) {
    ClassId id = 0;
    try {
      std::size_t used = 0;
      id = static_cast<ClassId>(std::stoul(cls, &used));
      if (used != cls.size()) throw std::invalid_argument(cls);
    } catch (const std::exception&) {
      throw SchemaError(std::string("vocab '") + key + "' key '" + cls + "' is not a class id");
    }
    if (!cat.is_number_unsigned()) {
      throw SchemaError(std::string("vocab '") + key + "." + cls + "' is not a category id");
    }
    out[id] = cat.get<CategoryId>();
  }
  return out;
}

ordered_json token_to_json(const Token& t) {
  ordered_json j;
  j["surface"] = t.surface;
  j["class"] = t.class_id;
  return j;
}

Token token_from_json(const nlohmann::json& j) {
  return {j.at("surface").get<std::string>(), j.at("class").get<ClassId>()};
}

}  // namespace

Vocab vocab_from_json(const nlohmann::json& doc) {
  Vocab v;
  v.verbs = surface_map(doc, "verbs");
  v.nouns = surface_map(doc, "nouns");
  v.verb_categories = category_map(doc, "verb_categories");
  v.noun_categories = category_map(doc, "noun_categories");
  v.validate();
  return v;
}

ordered_json vocab_to_json(const Vocab& vocab) {
  ordered_json j;
  j["verbs"] = ordered_json::object();
  for (const auto& [s, id] : vocab.verbs) j["verbs"][s] = id;
  j["nouns"] = ordered_json::object();
  for (const auto& [s, id] : vocab.nouns) j["nouns"][s] = id;
  j["verb_categories"] = ordered_json::object();
  for (const auto& [id, cat] : vocab.verb_categories) j["verb_categories"][std::to_string(id)] = cat;
  j["noun_categories"] = ordered_json::object();
  for (const auto& [id, cat] : vocab.noun_categories) j["noun_categories"][std::to_string(id)] = cat;
  return j;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Vocab load_vocab(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("vocab '" + path.string() + "': " + e.what());
  }
  return vocab_from_json(doc);
}

void save_vocab(const Vocab& vocab, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  out << vocab_to_json(vocab).dump(2) << '\n';
}

ordered_json utterance_to_json(const Utterance& u) {
  ordered_json j;
  j["clip_id"] = u.clip_id;
  j["video_id"] = u.video_id;
  j["raw_text"] = u.raw_text;
  j["text"] = u.text;
  j["verb"] = token_to_json(u.verb);
  j["noun"] = token_to_json(u.primary_noun);
  j["all_nouns"] = ordered_json::array();
  for (const auto& t : u.all_nouns) j["all_nouns"].push_back(token_to_json(t));
  if (!u.media_refs.empty()) j["media_refs"] = u.media_refs;
  return j;
}

Utterance utterance_from_json(const nlohmann::json& j) {
  Utterance u;
  u.clip_id = j.at("clip_id").get<std::string>();
  u.video_id = j.at("video_id").get<std::string>();
  u.raw_text = j.at("raw_text").get<std::string>();
  u.text = j.at("text").get<std::string>();
  u.verb = token_from_json(j.at("verb"));
  u.primary_noun = token_from_json(j.at("noun"));
  for (const auto& t : j.at("all_nouns")) u.all_nouns.push_back(token_from_json(t));
  if (j.contains("media_refs")) u.media_refs = j.at("media_refs").get<std::vector<std::string>>();
  return u;
}

ordered_json instance_to_json(const Instance& inst) {
  ordered_json j;
  j["id"] = inst.id;
  j["video_id"] = inst.video_id;
  j["context"] = ordered_json::array();
  for (const auto& u : inst.context) j["context"].push_back(utterance_to_json(u));
  j["target"] = utterance_to_json(inst.target);
  ordered_json verbs = ordered_json::array();
  ordered_json nouns = ordered_json::array();
  for (const auto& a : inst.atoms) (a.kind == AtomKind::verb ? verbs : nouns).push_back(a.id);
  j["atoms"] = {{"verb", verbs}, {"noun", nouns}};
  j["compounds"] = ordered_json::array();
  for (const auto& c : inst.compounds) j["compounds"].push_back({c.verb, c.noun});
  j["target_compound"] = {inst.target_compound.verb, inst.target_compound.noun};
  return j;
}

Instance instance_from_json(const nlohmann::json& j) {
  try {
    Instance inst;
    inst.id = j.at("id").get<std::string>();
    inst.video_id = j.at("video_id").get<std::string>();
    for (const auto& u : j.at("context")) inst.context.push_back(utterance_from_json(u));
    inst.target = utterance_from_json(j.at("target"));
    for (const auto& id : j.at("atoms").at("verb")) inst.atoms.push_back({AtomKind::verb, id.get<ClassId>()});
    for (const auto& id : j.at("atoms").at("noun")) inst.atoms.push_back({AtomKind::noun, id.get<ClassId>()});
    for (const auto& c : j.at("compounds")) inst.compounds.push_back({c.at(0).get<ClassId>(), c.at(1).get<ClassId>()});
    const auto& tc = j.at("target_compound");
    inst.target_compound = {tc.at(0).get<ClassId>(), tc.at(1).get<ClassId>()};
    std::sort(inst.atoms.begin(), inst.atoms.end());
    std::sort(inst.compounds.begin(), inst.compounds.end());
    return inst;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed instance record: ") + e.what());
  }
}

void write_instances_jsonl(std::span<const Instance> instances, std::ostream& out) {
  for (const auto& inst : instances) out << instance_to_json(inst).dump() << '\n';
}

void write_instances_jsonl(std::span<const Instance> instances, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot write '" + path.string() + "'");
  write_instances_jsonl(instances, out);
}

std::vector<Instance> read_instances_jsonl(std::istream& in) {
  std::vector<Instance> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(instance_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError("line " + std::to_string(row) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Instance> read_instances_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open '" + path.string() + "'");
  return read_instances_jsonl(in);
}

namespace {

ordered_json annotation_row(const Utterance& u, double start_seconds) {
  ordered_json j;
  j["narration_id"] = u.clip_id;
  j["video_id"] = u.video_id;
  j["start_timestamp"] = start_seconds;
  j["narration"] = u.raw_text;
  j["verb"] = u.verb.surface;
  j["verb_class"] = u.verb.class_id;
  j["noun"] = u.primary_noun.surface;
  j["noun_class"] = u.primary_noun.class_id;
  ordered_json nouns = ordered_json::array();
  ordered_json classes = ordered_json::array();
  for (const auto& t : u.all_nouns) {
    nouns.push_back(t.surface);
    classes.push_back(t.class_id);
  }
  j["all_nouns"] = nouns;
  j["all_noun_classes"] = classes;
  return j;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void write_annotations_jsonl(std::span<const VideoUtterances> videos, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot write '" + path.string() + "'");
  for (const auto& v : videos) {
    for (std::size_t i = 0; i < v.utterances.size(); ++i) {
      out << annotation_row(v.utterances[i], static_cast<double>(i)).dump() << '\n';
    }
  }
}

void write_annotations_csv(std::span<const VideoUtterances> videos, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot write '" + path.string() + "'");
  out << "narration_id,video_id,start_timestamp,narration,verb,verb_class,noun,noun_class,all_nouns,"
         "all_noun_classes\n";
  for (const auto& v : videos) {
    for (std::size_t i = 0; i < v.utterances.size(); ++i) {
      const auto& u = v.utterances[i];
      std::string nouns = "[";
      std::string classes = "[";
      for (std::size_t k = 0; k < u.all_nouns.size(); ++k) {
        if (k) {
          nouns += ", ";
          classes += ", ";
        }
        nouns += "'" + u.all_nouns[k].surface + "'";
        classes += std::to_string(u.all_nouns[k].class_id);
      }
      nouns += "]";
      classes += "]";
      out << csv_escape(u.clip_id) << ',' << csv_escape(u.video_id) << ',' << i << ','
          << csv_escape(u.raw_text) << ',' << csv_escape(u.verb.surface) << ',' << u.verb.class_id << ','
          << csv_escape(u.primary_noun.surface) << ',' << u.primary_noun.class_id << ','
          << csv_escape(nouns) << ',' << csv_escape(classes) << '\n';
    }
  }
}

bool read_csv_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  if (in.peek() == std::char_traits<char>::eof()) return false;
  std::string field;
  bool quoted = false;
  char c = 0;
  while (in.get(c)) {
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      field += c;
    }
  }
  if (quoted) throw SchemaError("unterminated quoted CSV field");
  fields.push_back(std::move(field));
  return true;
}

std::vector<std::string> parse_list_literal(std::string_view text) {
  auto trim = [](std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return std::string_view{};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  };
  text = trim(text);
  if (text.empty()) return {};
  if (text.front() == '[') {
    if (text.back() != ']') throw SchemaError("unterminated list '" + std::string(text) + "'");
    text = text.substr(1, text.size() - 2);
  }
  std::vector<std::string> out;
  std::string item;
  char quote = 0;
  bool had_item = false;
  for (char c : text) {
    if (quote) {
      if (c == quote) {
        quote = 0;
      } else {
        item += c;
      }
    } else if (c == '\'' || c == '"') {
      quote = c;
      had_item = true;
    } else if (c == ',') {
      out.emplace_back(trim(item));
      item.clear();
      had_item = false;
    } else {
      item += c;
      if (c != ' ') had_item = true;
    }
  }
  if (quote) throw SchemaError("unterminated quote in list '" + std::string(text) + "'");
  if (had_item || !item.empty()) out.emplace_back(trim(item));
  return out;
}

}  // namespace divsplit
