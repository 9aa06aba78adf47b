#include "divsplit/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "divsplit/corpus.hpp"
#include "divsplit/corpus_io.hpp"
#include "divsplit/divergence.hpp"
#include "divsplit/errors.hpp"
#include "divsplit/evalkit.hpp"
#include "divsplit/splitter.hpp"
#include "divsplit/synth.hpp"

namespace divsplit::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kWeightingNote =
    "distributions weight every atom and compound occurrence once (raw multiset counts)";
constexpr const char* kNormalizationNote =
    "texts are lowercased, hyphens and multiword tokens joined with '_', whitespace collapsed";

double round6(double x) { return std::round(x * 1e6) / 1e6; }

/// Writes a JSON document with a trailing newline.
void write_json(const fs::path& path, const ordered_json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot write '" + path.string() + "'");
  out << doc.dump(2) << '\n';
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw SchemaError("cannot create directory '" + dir.string() + "': " + ec.message());
}

/// Argv plus resolved configuration, enough to replay the command.
struct Manifest {
  std::string command;
  std::vector<std::string> argv;
  ordered_json config = ordered_json::object();
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;

  void write(const fs::path& path) const {
    ordered_json j;
    j["command"] = command;
    j["argv"] = argv;
    j["config"] = config;
    j["seed"] = seed;
    ordered_json digests = ordered_json::object();
    for (const auto& in : inputs) {
      if (fs::is_directory(in)) {
        for (const char* name : {"train.jsonl", "val.jsonl", "test.jsonl"}) {
          const auto p = fs::path(in) / name;
          if (fs::exists(p)) digests[p.string()] = "fnv1a64:" + file_digest(p.string());
        }
      } else if (fs::exists(in)) {
        digests[in] = "fnv1a64:" + file_digest(in);
      }
    }
    j["inputs"] = digests;
    j["tool_version"] = std::string(kToolVersion);
    write_json(path, j);
  }
};

fs::path manifest_for_file(const fs::path& out) { return fs::path(out.string() + ".manifest.json"); }

std::vector<Instance> read_split_file(const fs::path& dir, const char* name) {
  const auto path = dir / name;
  if (!fs::exists(path)) throw SchemaError("missing split file '" + path.string() + "'");
  return read_instances_jsonl(path);
}

struct Splits {
  std::vector<Instance> train;
  std::vector<Instance> val;
  std::vector<Instance> test;

  std::vector<Instance> eval() const {
    std::vector<Instance> out = val;
    out.insert(out.end(), test.begin(), test.end());
    return out;
  }

  std::vector<Instance> select(const std::string& which) const {
    if (which == "train") return train;
    if (which == "val") return val;
    if (which == "test") return test;
    if (which == "eval") return eval();
    throw InvalidParameter("unknown split '" + which + "' (expected train, val, test or eval)");
  }

  const Instance* find(const std::string& id) const {
    for (const auto* list : {&train, &val, &test}) {
      for (const auto& inst : *list) {
        if (inst.id == id) return &inst;
      }
    }
    return nullptr;
  }
};

Splits load_splits(const fs::path& dir) {
  return {read_split_file(dir, "train.jsonl"), read_split_file(dir, "val.jsonl"),
          read_split_file(dir, "test.jsonl")};
}

// ---------------------------------------------------------------- ingest

struct IngestArgs {
  std::string annotations;
  std::string vocab;
  std::string format = "auto";
  std::size_t window = 4;
  bool no_dedup = false;
  bool no_noun_filter = false;
  std::string compounds = "all";
  std::string out;
};

int cmd_ingest(const IngestArgs& a, Manifest manifest, std::ostream& out) {
  const Vocab vocab = load_vocab(a.vocab);
  const AnnotationFormat format = a.format == "auto"  ? guess_format(a.annotations)
                                  : a.format == "csv" ? AnnotationFormat::csv
                                                      : AnnotationFormat::jsonl;
  const auto videos = parse_annotations(a.annotations, format, vocab);

  ExtractOptions options;
  options.window = a.window;
  options.dedup = !a.no_dedup;
  options.noun_filter = !a.no_noun_filter;
  options.scope = parse_compound_scope(a.compounds);
  const auto result = extract_instances(videos, options);

  ensure_dir(a.out);
  write_instances_jsonl(result.instances, fs::path(a.out) / "corpus.jsonl");

  const auto& r = result.report;
  ordered_json report;
  report["videos"] = r.videos;
  report["utterances"] = r.utterances;
  report["duplicates_collapsed"] = r.duplicates_collapsed;
  report["raw_windows"] = r.raw_windows;
  report["windows"] = r.windows;
  report["dropped_by_noun_filter"] = r.dropped_by_noun_filter;
  report["skipped_short_videos"] = r.skipped_short_videos;
  report["instances"] = r.instances;
  report["window"] = options.window;
  report["dedup"] = options.dedup;
  report["noun_filter"] = options.noun_filter;
  report["compounds"] = std::string(to_string(options.scope));
  report["weighting"] = kWeightingNote;
  write_json(fs::path(a.out) / "ingest_report.json", report);

  manifest.config = {{"window", options.window},
                     {"dedup", options.dedup},
                     {"noun_filter", options.noun_filter},
                     {"compounds", std::string(to_string(options.scope))},
                     {"format", format == AnnotationFormat::csv ? "csv" : "jsonl"}};
  manifest.inputs = {a.annotations, a.vocab};
  manifest.write(fs::path(a.out) / "manifest.json");

  out << "ingested " << r.instances << " instances from " << r.videos << " videos\n";
  return kExitOk;
}

// ----------------------------------------------------------------- split

struct SplitArgs {
  std::string corpus;
  std::string mode = "mcd";
  std::uint64_t seed = 0;
  double atom_threshold = 0.02;
  double compound_threshold = 0.6;
  double train_fraction = 0.5;
  double val_fraction = 0.5;
  std::size_t retries = 10;
  std::size_t candidate_sample = 0;
  bool strict = false;
  bool no_trace = false;
  std::string out;
};

ordered_json config_json(const SplitConfig& c) {
  ordered_json j;
  j["mode"] = std::string(to_string(c.mode));
  j["atom_threshold"] = c.atom_threshold;
  j["compound_threshold"] = c.compound_threshold;
  j["train_fraction"] = c.train_fraction;
  j["val_fraction_of_heldout"] = c.val_fraction_of_heldout;
  j["strict_target_disjoint"] = c.strict_target_disjoint;
  j["candidate_sample"] = c.candidate_sample;
  return j;
}

int cmd_split(const SplitArgs& a, Manifest manifest, std::ostream& out) {
  const auto instances = read_instances_jsonl(fs::path(a.corpus));
  if (instances.empty()) throw EmptyCorpus("corpus '" + a.corpus + "' has no instances");

  SplitConfig config;
  config.mode = parse_split_mode(a.mode);
  config.seed = a.seed;
  config.atom_threshold = a.atom_threshold;
  config.compound_threshold = a.compound_threshold;
  config.train_fraction = a.train_fraction;
  config.val_fraction_of_heldout = a.val_fraction;
  config.strict_target_disjoint = a.strict;
  config.candidate_sample = a.candidate_sample;
  config.validate();

  const SplitRun run = split_with_retries(instances, config, a.retries);
  const auto& assignment = run.assignment;
  const ConstraintReport check = verify_constraints(assignment, instances, config);

  std::map<std::string, const Instance*> by_id;
  for (const auto& inst : instances) by_id[inst.id] = &inst;
  auto write_split = [&](const std::vector<std::string>& ids, const char* name) {
    std::vector<Instance> chosen;
    chosen.reserve(ids.size());
    for (const auto& id : ids) chosen.push_back(*by_id.at(id));
    write_instances_jsonl(chosen, fs::path(a.out) / name);
  };
  ensure_dir(a.out);
  write_split(assignment.train, "train.jsonl");
  write_split(assignment.val, "val.jsonl");
  write_split(assignment.test, "test.jsonl");

  if (!a.no_trace) {
    std::ofstream trace(fs::path(a.out) / "trace.jsonl", std::ios::binary);
    for (const auto& t : assignment.trace) {
      ordered_json j;
      j["iteration"] = t.iteration;
      j["side"] = std::string(to_string(t.side));
      j["pick"] = std::string(to_string(t.pick));
      j["id"] = t.id;
      j["d_a"] = round6(t.divergences.atom_divergence);
      j["d_c"] = round6(t.divergences.compound_divergence);
      trace << j.dump() << '\n';
    }
  }

  ordered_json report;
  report["d_a"] = round6(check.d_a);
  report["d_c"] = round6(check.d_c);
  report["constraints_met"] = check.constraints_met;
  report["sizes"] = {{"train", assignment.train.size()},
                     {"val", assignment.val.size()},
                     {"test", assignment.test.size()},
                     {"dropped", assignment.dropped.size()}};
  report["seed"] = run.seed_used;
  report["attempts"] = run.attempts;
  report["config"] = config_json(config);
  report["dropped_ids"] = assignment.dropped;
  report["target_compound_overlap_count"] = check.target_compound_overlap_count;
  report["weighting"] = kWeightingNote;
  write_json(fs::path(a.out) / "report.json", report);

  manifest.config = config_json(config);
  manifest.config["retries"] = a.retries;
  manifest.seed = a.seed;
  manifest.inputs = {a.corpus};
  manifest.write(fs::path(a.out) / "manifest.json");

  out << std::fixed << std::setprecision(6) << "d_a=" << check.d_a << " d_c=" << check.d_c
      << " constraints_met=" << (check.constraints_met ? "true" : "false") << " attempts=" << run.attempts
      << "\n";
  if (config.mode == SplitMode::random || check.constraints_met) return kExitOk;
  return kExitConstraintsUnmet;
}

// ---------------------------------------------------------------- report

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

/// Canonical (smallest) surface per class, collected from the splits.
struct Surfaces {
  std::map<ClassId, std::string> verbs;
  std::map<ClassId, std::string> nouns;

  void add(const Utterance& u) {
    keep(verbs, u.verb);
    keep(nouns, u.primary_noun);
  }
  static void keep(std::map<ClassId, std::string>& m, const Token& t) {
    auto [it, inserted] = m.try_emplace(t.class_id, t.surface);
    if (!inserted && t.surface < it->second) it->second = t.surface;
  }
  std::string atom(const Atom& a) const {
    const auto& m = a.kind == AtomKind::verb ? verbs : nouns;
    return std::string(to_string(a.kind)) + ":" + m.at(a.id);
  }
  std::string compound(const Compound& c) const { return verbs.at(c.verb) + " " + nouns.at(c.noun); }
};

template <class Key, class Label>
void write_distribution(const fs::path& path, const std::map<Key, std::int64_t>& train,
                        const std::map<Key, std::int64_t>& val, const std::map<Key, std::int64_t>& test,
                        Label label) {
  std::set<Key> keys;
  for (const auto* m : {&train, &val, &test}) {
    for (const auto& [k, n] : *m) keys.insert(k);
  }
  auto count = [](const std::map<Key, std::int64_t>& m, const Key& k) {
    auto it = m.find(k);
    return it == m.end() ? std::int64_t{0} : it->second;
  };
  struct Row {
    std::string key;
    std::int64_t train, val, test;
  };
  std::vector<Row> rows;
  for (const auto& k : keys) rows.push_back({label(k), count(train, k), count(val, k), count(test, k)});
  std::sort(rows.begin(), rows.end(), [](const Row& x, const Row& y) {
    if (x.train != y.train) return x.train > y.train;
    return x.key < y.key;
  });
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot write '" + path.string() + "'");
  out << "key,train,val,test\n";
  for (const auto& r : rows) out << csv_field(r.key) << ',' << r.train << ',' << r.val << ',' << r.test << '\n';
}

int cmd_report(const std::string& splits_dir, const std::string& out_dir, Manifest manifest, std::ostream& out) {
  const Splits s = load_splits(splits_dir);
  Surfaces surfaces;
  for (const auto* list : {&s.train, &s.val, &s.test}) {
    for (const auto& inst : *list) {
      for (const auto& u : inst.context) surfaces.add(u);
      surfaces.add(inst.target);
    }
  }
  const auto train = corpus_stats(s.train);
  const auto val = corpus_stats(s.val);
  const auto test = corpus_stats(s.test);

  ensure_dir(out_dir);
  write_distribution(fs::path(out_dir) / "atom_dist.csv", train.atom_counts, val.atom_counts, test.atom_counts,
                     [&](const Atom& a) { return surfaces.atom(a); });
  write_distribution(fs::path(out_dir) / "compound_dist.csv", train.compound_counts, val.compound_counts,
                     test.compound_counts, [&](const Compound& c) { return surfaces.compound(c); });

  ordered_json summary;
  for (const auto& [name, st] : {std::pair{"train", &train}, std::pair{"val", &val}, std::pair{"test", &test}}) {
    summary[name] = {{"instances", st->instances},
                     {"atom_total", st->atom_total},
                     {"compound_total", st->compound_total},
                     {"distinct_atoms", st->atom_counts.size()},
                     {"distinct_compounds", st->compound_counts.size()}};
  }
  const auto eval = s.eval();
  const auto d = divergences(s.train, eval);
  summary["d_a"] = round6(d.atom_divergence);
  summary["d_c"] = round6(d.compound_divergence);
  summary["weighting"] = kWeightingNote;
  write_json(fs::path(out_dir) / "summary.json", summary);

  manifest.inputs = {splits_dir};
  manifest.write(fs::path(out_dir) / "manifest.json");
  out << "wrote distributions for " << (train.instances + val.instances + test.instances) << " instances\n";
  return kExitOk;
}

// -------------------------------------------------------------- baseline

struct BaselineArgs {
  std::string splits;
  std::string which = "mrh";
  std::string task = "nup";
  std::string split = "eval";
  std::string out;
};

int cmd_baseline(const BaselineArgs& a, Manifest manifest, std::ostream& out) {
  const Splits s = load_splits(a.splits);
  const Task task = parse_task(a.task);
  if (a.which != "mrh" && a.which != "memorizer") {
    throw InvalidParameter("unknown baseline '" + a.which + "' (expected mrh or memorizer)");
  }
  std::optional<CompoundMemorizer> memorizer;
  if (a.which == "memorizer") {
    if (s.train.empty()) throw EmptyCorpus("memorizer needs a non-empty train split");
    memorizer = CompoundMemorizer::fit(s.train);
  }

  auto predict = [&](const Instance& inst) -> std::string {
    switch (task) {
      case Task::nup:
        if (memorizer) return memorizer->predict(inst);
        return mrh_predict(inst, AtomKind::verb).surface + " " + mrh_predict(inst, AtomKind::noun).surface;
      case Task::verb:
      case Task::noun: {
        const AtomKind kind = task == Task::verb ? AtomKind::verb : AtomKind::noun;
        return memorizer ? memorizer->predict_atom(inst, kind).surface : mrh_predict(inst, kind).surface;
      }
    }
    return {};
  };

  const fs::path out_path(a.out);
  if (out_path.has_parent_path()) ensure_dir(out_path.parent_path());
  std::ofstream file(out_path, std::ios::binary);
  if (!file) throw SchemaError("cannot write '" + a.out + "'");
  const auto targets = s.select(a.split);
  for (const auto& inst : targets) {
    ordered_json j;
    j["instance_id"] = inst.id;
    j["prediction"] = predict(inst);
    file << j.dump() << '\n';
  }
  file.close();

  manifest.config = {{"which", a.which}, {"task", a.task}, {"split", a.split}};
  manifest.inputs = {a.splits};
  manifest.write(manifest_for_file(out_path));
  out << "wrote " << targets.size() << " predictions\n";
  return kExitOk;
}

// -------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string predictions;
  std::string splits;
  std::string vocab;
  std::string task = "nup";
  std::string split = "test";
  std::string out;
  bool sentence_bleu = false;
};

int cmd_evaluate(const EvaluateArgs& a, Manifest manifest, std::ostream& out) {
  const Vocab vocab = load_vocab(a.vocab);
  const Splits s = load_splits(a.splits);
  const Task task = parse_task(a.task);
  const auto references = s.select(a.split);

  std::set<std::string> known;
  for (const auto* list : {&s.train, &s.val, &s.test}) {
    for (const auto& inst : *list) known.insert(inst.id);
  }

  std::map<std::string, std::string> predictions;
  std::vector<std::string> unknown;
  {
    std::ifstream in(a.predictions, std::ios::binary);
    if (!in) throw SchemaError("cannot open predictions '" + a.predictions + "'");
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
      ++row;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
        const auto id = j.at("instance_id").get<std::string>();
        if (!known.contains(id)) {
          unknown.push_back(id);
          continue;
        }
        predictions[id] = j.at("prediction").get<std::string>();
      } catch (const nlohmann::json::exception& e) {
        throw SchemaError("predictions line " + std::to_string(row) + ": " + e.what());
      }
    }
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto& id : unknown) list += (list.empty() ? "" : ", ") + id;
    throw CoverageError("predictions name unknown instance ids: " + list);
  }

  std::vector<EvalRecord> records;
  std::size_t missing = 0;
  for (const auto& ref : references) {
    auto it = predictions.find(ref.id);
    if (it == predictions.end()) ++missing;
    records.push_back(make_record(ref, it == predictions.end() ? "" : it->second, task, vocab));
  }
  const MetricReport m = evaluate_records(records, task, vocab, missing);

  auto atom_json = [](const std::optional<AtomScores>& a) -> ordered_json {
    if (!a) return nullptr;
    return {{"em", round6(a->em)}, {"ca", round6(a->ca)}};
  };
  ordered_json metrics;
  metrics["task"] = std::string(to_string(task));
  metrics["split"] = a.split;
  metrics["bleu1"] = round6(m.bleu1);
  metrics["em"] = round6(m.em);
  metrics["ca"] = round6(m.ca);
  metrics["per_atom"] = {{"verb", atom_json(m.verb)}, {"noun", atom_json(m.noun)}};
  metrics["oov"] = m.oov;
  metrics["missing"] = m.missing;
  metrics["n"] = m.n;
  if (a.sentence_bleu) {
    std::vector<TokenizedPair> pairs;
    for (const auto& r : records) pairs.push_back({tokenize(r.prediction_text), tokenize(r.reference_text)});
    metrics["sentence_bleu1"] = round6(sentence_bleu1(pairs));
  }
  metrics["normalization"] = kNormalizationNote;

  if (a.out.empty()) {
    out << metrics.dump(2) << '\n';
  } else {
    const fs::path out_path(a.out);
    if (out_path.has_parent_path()) ensure_dir(out_path.parent_path());
    write_json(out_path, metrics);
    manifest.config = {{"task", a.task}, {"split", a.split}, {"sentence_bleu", a.sentence_bleu}};
    manifest.inputs = {a.predictions, a.splits, a.vocab};
    manifest.write(manifest_for_file(out_path));
    out << std::fixed << std::setprecision(2) << "bleu1=" << m.bleu1 << " em=" << m.em << " ca=" << m.ca
        << " n=" << m.n << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- prompt

struct PromptArgs {
  std::string splits;
  std::string query_id;
  std::size_t k = 5;
  std::string tmpl = "text";
  std::string out;
};

int cmd_prompt(const PromptArgs& a, Manifest manifest, std::ostream& out) {
  const Splits s = load_splits(a.splits);
  const Instance* query = s.find(a.query_id);
  if (!query) throw CoverageError("unknown query id '" + a.query_id + "'");
  const auto shots = select_fewshot(*query, s.train, a.k);
  const std::string prompt = render_prompt(*query, shots, parse_prompt_template(a.tmpl));

  const fs::path out_path(a.out);
  if (out_path.has_parent_path()) ensure_dir(out_path.parent_path());
  std::ofstream file(out_path, std::ios::binary);
  if (!file) throw SchemaError("cannot write '" + a.out + "'");
  file << prompt << '\n';
  file.close();

  manifest.config = {{"query_id", a.query_id}, {"k", a.k}, {"template", a.tmpl}};
  manifest.inputs = {a.splits};
  manifest.write(manifest_for_file(out_path));
  out << "wrote prompt with " << shots.size() << " shots\n";
  return kExitOk;
}

// ----------------------------------------------------------------- synth

struct SynthArgs {
  SynthConfig config;
  std::string out;
};

int cmd_synth(const SynthArgs& a, Manifest manifest, std::ostream& out) {
  const auto corpus = generate_synthetic(a.config);
  ensure_dir(a.out);
  write_annotations_csv(corpus.videos, fs::path(a.out) / "annotations.csv");
  save_vocab(corpus.vocab, fs::path(a.out) / "vocab.json");

  const auto& c = a.config;
  manifest.config = {{"instances", c.instances},
                     {"verbs", c.verbs},
                     {"nouns", c.nouns},
                     {"groups", c.groups},
                     {"noise", c.noise},
                     {"min_video_length", c.min_video_length},
                     {"max_video_length", c.max_video_length}};
  manifest.seed = c.seed;
  manifest.write(fs::path(a.out) / "manifest.json");
  out << "wrote " << corpus.videos.size() << " videos\n";
  return kExitOk;
}

// ---------------------------------------------------------------- driver

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, int depth);

int replay(const std::string& manifest_path, std::ostream& out, std::ostream& err, int depth) {
  if (depth > 0) throw InvalidParameter("a replayed manifest cannot itself be a replay");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("manifest '" + manifest_path + "': " + e.what());
  }
  if (!doc.contains("argv") || !doc["argv"].is_array()) throw SchemaError("manifest has no argv");
  return dispatch(doc["argv"].get<std::vector<std::string>>(), out, err, depth + 1);
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, int depth) {
  CLI::App app{"Compositional train/val/test splits and next-utterance evaluation"};
  app.set_version_flag("--version", "divsplit " + std::string(kToolVersion));
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Extract microsegment instances from annotations");
  ingest_cmd->add_option("--annotations", ingest.annotations, "Annotation table (CSV or JSONL)")->required();
  ingest_cmd->add_option("--vocab", ingest.vocab, "Vocabulary JSON")->required();
  ingest_cmd->add_option("--format", ingest.format, "auto, csv or jsonl")
      ->check(CLI::IsMember({"auto", "csv", "jsonl"}));
  ingest_cmd->add_option("--window", ingest.window, "Clips per instance (context + target)");
  ingest_cmd->add_flag("--no-dedup", ingest.no_dedup, "Keep consecutive repeated actions");
  ingest_cmd->add_flag("--no-noun-filter", ingest.no_noun_filter, "Keep targets whose noun is not in context");
  ingest_cmd->add_option("--compounds", ingest.compounds, "all or target-only")
      ->check(CLI::IsMember({"all", "target-only"}));
  ingest_cmd->add_option("--out", ingest.out, "Output directory")->required();

  SplitArgs split;
  auto* split_cmd = app.add_subcommand("split", "Assign instances to train/val/test");
  split_cmd->add_option("--corpus", split.corpus, "corpus.jsonl")->required();
  split_cmd->add_option("--mode", split.mode, "mcd or random")->check(CLI::IsMember({"mcd", "random"}));
  split_cmd->add_option("--seed", split.seed, "Random seed")->envname("DIVSPLIT_SEED");
  split_cmd->add_option("--atom-threshold", split.atom_threshold, "Required D_A upper bound");
  split_cmd->add_option("--compound-threshold", split.compound_threshold, "Required D_C lower bound");
  split_cmd->add_option("--train-fraction", split.train_fraction, "Train side probability / share");
  split_cmd->add_option("--val-fraction", split.val_fraction, "Validation share of the held-out set");
  split_cmd->add_option("--retries", split.retries, "Extra seeds to try when constraints fail");
  split_cmd->add_option("--candidate-sample", split.candidate_sample, "Score N sampled candidates (0 = all)");
  split_cmd->add_flag("--strict", split.strict, "Drop held-out targets whose compound occurs in train");
  split_cmd->add_flag("--no-trace", split.no_trace, "Skip trace.jsonl");
  split_cmd->add_option("--out", split.out, "Output directory")->required();

  std::string report_splits, report_out;
  auto* report_cmd = app.add_subcommand("report", "Per-split atom and compound distributions");
  report_cmd->add_option("--splits", report_splits, "Split directory")->required();
  report_cmd->add_option("--out", report_out, "Output directory")->required();

  EvaluateArgs evaluate;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score predictions against a split");
  eval_cmd->add_option("--predictions", evaluate.predictions, "JSONL {instance_id, prediction}")->required();
  eval_cmd->add_option("--splits", evaluate.splits, "Split directory")->required();
  eval_cmd->add_option("--vocab", evaluate.vocab, "Vocabulary JSON")->required();
  eval_cmd->add_option("--task", evaluate.task, "nup, verb or noun")->check(CLI::IsMember({"nup", "verb", "noun"}));
  eval_cmd->add_option("--split", evaluate.split, "Reference split: test, val or eval")
      ->check(CLI::IsMember({"test", "val", "eval"}));
  eval_cmd->add_option("--out", evaluate.out, "metrics.json path (stdout when omitted)");
  eval_cmd->add_flag("--sentence-bleu", evaluate.sentence_bleu, "Also report mean sentence-level BLEU-1");

  BaselineArgs baseline;
  auto* base_cmd = app.add_subcommand("baseline", "Heuristic predictions for held-out instances");
  base_cmd->add_option("--splits", baseline.splits, "Split directory")->required();
  base_cmd->add_option("--which", baseline.which, "mrh or memorizer")->check(CLI::IsMember({"mrh", "memorizer"}));
  base_cmd->add_option("--task", baseline.task, "nup, verb or noun")->check(CLI::IsMember({"nup", "verb", "noun"}));
  base_cmd->add_option("--split", baseline.split, "Instances to predict: eval, val or test")
      ->check(CLI::IsMember({"test", "val", "eval"}));
  base_cmd->add_option("--out", baseline.out, "Predictions JSONL")->required();

  PromptArgs prompt;
  auto* prompt_cmd = app.add_subcommand("prompt", "Render a k-shot prompt for one instance");
  prompt_cmd->add_option("--splits", prompt.splits, "Split directory")->required();
  prompt_cmd->add_option("--query-id", prompt.query_id, "Instance id")->required();
  prompt_cmd->add_option("--k", prompt.k, "Number of shots from train");
  prompt_cmd->add_option("--template", prompt.tmpl, "text or interleaved")
      ->check(CLI::IsMember({"text", "interleaved"}));
  prompt_cmd->add_option("--out", prompt.out, "Prompt file")->required();

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Planted-structure synthetic annotations");
  synth_cmd->group("");
  synth_cmd->add_option("--instances", synth.config.instances);
  synth_cmd->add_option("--verbs", synth.config.verbs);
  synth_cmd->add_option("--nouns", synth.config.nouns);
  synth_cmd->add_option("--groups", synth.config.groups);
  synth_cmd->add_option("--noise", synth.config.noise);
  synth_cmd->add_option("--min-length", synth.config.min_video_length);
  synth_cmd->add_option("--max-length", synth.config.max_video_length);
  synth_cmd->add_option("--seed", synth.config.seed)->envname("DIVSPLIT_SEED");
  synth_cmd->add_option("--out", synth.out)->required();

  std::string manifest_path;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  replay_cmd->add_option("--manifest", manifest_path, "manifest.json")->required();

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  Manifest manifest;
  manifest.argv = args;
  if (!manifest.argv.empty()) manifest.argv[0] = "divsplit";

  if (*ingest_cmd) {
    manifest.command = "ingest";
    return cmd_ingest(ingest, manifest, out);
  }
  if (*split_cmd) {
    manifest.command = "split";
    return cmd_split(split, manifest, out);
  }
  if (*report_cmd) {
    manifest.command = "report";
    return cmd_report(report_splits, report_out, manifest, out);
  }
  if (*eval_cmd) {
    manifest.command = "evaluate";
    return cmd_evaluate(evaluate, manifest, out);
  }
  if (*base_cmd) {
    manifest.command = "baseline";
    return cmd_baseline(baseline, manifest, out);
  }
  if (*prompt_cmd) {
    manifest.command = "prompt";
    return cmd_prompt(prompt, manifest, out);
  }
  if (*synth_cmd) {
    manifest.command = "synth";
    return cmd_synth(synth, manifest, out);
  }
  return replay(manifest_path, out, err, depth);
}

}  // namespace

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open '" + path + "'");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 15];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << h;
  return ss.str();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err, 0);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed JSON: " << e.what() << '\n';
    return kExitInputError;
  }
}

}  // namespace divsplit::cli
