#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "divsplit/corpus.hpp"
#include "divsplit/corpus_io.hpp"
#include "divsplit/errors.hpp"
#include "divsplit/synth.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace divsplit;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("divsplit_test_corpus_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_text(const fs::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
  return path;
}

const char* kHeader = "narration_id,video_id,start_timestamp,narration,verb,verb_class,noun,noun_class,all_nouns,all_noun_classes\n";

std::vector<Utterance> video(std::initializer_list<std::pair<const char*, const char*>> steps) {
  const auto vocab = fixtures::kitchen_vocab();
  std::vector<Utterance> out;
  int i = 0;
  for (const auto& [v, n] : steps) {
    auto u = fixtures::utt(vocab, v, n);
    u.video_id = "P01_01";
    u.clip_id = "P01_01_" + std::to_string(i++);
    out.push_back(u);
  }
  return out;
}

}  // namespace

TEST_CASE("normalize_token joins multiword and hyphenated tokens") {
  CHECK(normalize_token("put-down") == "put_down");
  CHECK(normalize_token("olive oil") == "olive_oil");
  CHECK(normalize_token("knife") == "knife");
  CHECK(normalize_token("  Frying   Pan ") == "frying_pan");
  CHECK_THROWS_AS(normalize_token(""), InvalidToken);
  CHECK_THROWS_AS(normalize_token("   "), InvalidToken);
}

TEST_CASE("normalize_narration fuses the annotated multiword atoms") {
  const auto vocab = fixtures::kitchen_vocab();
  const Token verb{"put_down", 6};
  const std::vector<Token> nouns{{"frying_pan", 108}};
  CHECK(normalize_narration("Put down frying pan", verb, nouns) == "put_down frying_pan");
  CHECK(normalize_text("  Cut   the Celery ") == "cut the celery");
  CHECK(normalize_text("") == "");
}

TEST_CASE("parse_annotations maps fields and orders by timestamp") {
  const auto dir = scratch_dir("parse");
  const auto vocab = fixtures::kitchen_vocab();
  std::string csv = kHeader;
  csv += "a_2,A,00:00:05.00,wash tap,wash,4,tap,102,['tap'],[102]\n";
  csv += "a_1,A,00:00:01.50,slice celery,slice,2,celery,101,\"['celery', 'knife']\",\"[101, 103]\"\n";
  csv += "b_1,B,00:00:00.00,put-down bowl,put-down,6,bowl,107,['bowl'],[107]\n";
  const auto path = write_text(dir / "ann.csv", csv);

  const auto videos = parse_annotations(path, AnnotationFormat::csv, vocab);
  REQUIRE(videos.size() == 2);
  CHECK(videos[0].video_id == "A");
  REQUIRE(videos[0].utterances.size() == 2);
  const auto& first = videos[0].utterances[0];
  CHECK(first.clip_id == "a_1");
  CHECK(first.verb == Token{"slice", 2});
  CHECK(first.primary_noun == Token{"celery", 101});
  CHECK(first.all_nouns.size() == 2);
  CHECK(first.all_nouns[1] == Token{"knife", 103});
  CHECK(videos[0].utterances[1].clip_id == "a_2");
  CHECK(videos[1].utterances[0].verb == Token{"put_down", 6});
  CHECK(videos[1].utterances[0].text == "put_down bowl");
}

TEST_CASE("parse_annotations reports schema and vocabulary errors") {
  const auto dir = scratch_dir("errors");
  const auto vocab = fixtures::kitchen_vocab();

  SUBCASE("missing column names the column") {
    const auto path = write_text(dir / "missing.csv",
                                 "video_id,narration,verb,verb_class,noun,all_nouns,all_noun_classes\n"
                                 "A,cut celery,cut,1,celery,['celery'],[101]\n");
    try {
      parse_annotations(path, AnnotationFormat::csv, vocab);
      FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
      CHECK(std::string(e.what()).find("noun_class") != std::string::npos);
    }
  }
  SUBCASE("unknown class id reports the file row") {
    const auto path = write_text(dir / "unknown.csv", std::string(kHeader) +
                                                          "a_1,A,0,cut celery,cut,1,celery,101,['celery'],[101]\n"
                                                          "a_2,A,1,cut celery,cut,77,celery,101,['celery'],[101]\n");
    try {
      parse_annotations(path, AnnotationFormat::csv, vocab);
      FAIL("expected VocabError");
    } catch (const VocabError& e) {
      CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    }
  }
  SUBCASE("JSONL rows follow the same contract") {
    const auto path = write_text(dir / "ann.jsonl",
                                 R"({"video_id":"A","narration":"cut celery","verb":"cut","verb_class":1,)"
                                 R"("noun":"celery","all_nouns":["celery"],"all_noun_classes":[101]})"
                                 "\n");
    CHECK_THROWS_AS(parse_annotations(path, AnnotationFormat::jsonl, vocab), SchemaError);
  }
}

TEST_CASE("CSV records honour quoting") {
  std::istringstream in("a,\"b,c\",\"d \"\"e\"\"\"\n\"multi\nline\",x\n");
  std::vector<std::string> fields;
  REQUIRE(read_csv_record(in, fields));
  CHECK(fields == std::vector<std::string>{"a", "b,c", "d \"e\""});
  REQUIRE(read_csv_record(in, fields));
  CHECK(fields == std::vector<std::string>{"multi\nline", "x"});
  CHECK_FALSE(read_csv_record(in, fields));
  CHECK(parse_list_literal("['olive oil', 'pan']") == std::vector<std::string>{"olive oil", "pan"});
  CHECK(parse_list_literal("[1, 2]") == std::vector<std::string>{"1", "2"});
}

TEST_CASE("dedup collapses consecutive repeats and is idempotent") {
  const auto raw = video({{"stir", "pan"}, {"stir", "pan"}, {"take", "salt"}});
  const auto once = dedup_consecutive(raw);
  REQUIRE(once.size() == 2);
  CHECK(once[0].clip_id == "P01_01_0");
  CHECK(once[1].verb.surface == "take");
  CHECK(dedup_consecutive(once) == once);

  const auto alternating = video({{"stir", "pan"}, {"take", "salt"}, {"stir", "pan"}});
  CHECK(dedup_consecutive(alternating).size() == 3);
}

TEST_CASE("windowing yields n - w + 1 instances per video") {
  const auto utts = video({{"wash", "celery"}, {"close", "tap"}, {"put_down", "celery"}, {"cut", "celery"},
                           {"wash", "celery"}, {"cut", "celery"}});
  std::vector<VideoUtterances> videos{{"P01_01", utts}};
  ExtractOptions opt;
  opt.noun_filter = false;
  auto r = extract_instances(videos, opt);
  CHECK(r.instances.size() == 3);
  CHECK(r.report.raw_windows == 3);
  CHECK(r.instances[0].id == "P01_01/P01_01_0");
  CHECK(r.instances[0].context.size() == 3);

  opt.window = 2;
  CHECK(extract_instances(std::vector<VideoUtterances>{{"P01_01", std::vector(utts.begin(), utts.begin() + 5)}}, opt)
            .instances.size() == 4);

  opt.window = 7;
  r = extract_instances(videos, opt);
  CHECK(r.instances.empty());
  CHECK(r.report.skipped_short_videos == 1);

  opt.window = 1;
  CHECK_THROWS_AS(extract_instances(videos, opt), InvalidParameter);
}

TEST_CASE("noun filter keeps targets whose noun class occurs in context") {
  const auto vocab = fixtures::kitchen_vocab();
  const std::vector<Utterance> ctx{fixtures::utt(vocab, "wash", "celery"), fixtures::utt(vocab, "close", "tap")};
  CHECK(target_noun_present(ctx, fixtures::utt(vocab, "cut", "celery")));
  CHECK_FALSE(target_noun_present(ctx, fixtures::utt(vocab, "cut", "knife")));
  // Secondary nouns count for the filter.
  const std::vector<Utterance> ctx2{fixtures::utt(vocab, "wash", "celery", "", {"knife"})};
  CHECK(target_noun_present(ctx2, fixtures::utt(vocab, "cut", "knife")));

  // Soundness over an extracted synthetic corpus.
  SynthConfig cfg;
  cfg.instances = 120;
  cfg.seed = 9;
  const auto syn = generate_synthetic(cfg);
  ExtractOptions opt;
  opt.noun_filter = false;
  const auto all = extract_instances(syn.videos, opt);
  const auto kept = extract_instances(syn.videos);
  std::size_t pass = 0;
  for (const auto& inst : all.instances) pass += target_noun_present(inst.context, inst.target) ? 1 : 0;
  CHECK(pass == kept.instances.size());
  CHECK(kept.report.dropped_by_noun_filter == all.instances.size() - pass);
  for (const auto& inst : kept.instances) CHECK(target_noun_present(inst.context, inst.target));
}

TEST_CASE("instance atoms and compounds follow the scope") {
  const auto vocab = fixtures::kitchen_vocab();
  const std::vector<Utterance> ctx{fixtures::utt(vocab, "wash", "celery"), fixtures::utt(vocab, "close", "tap"),
                                   fixtures::utt(vocab, "put_down", "celery")};
  const auto target = fixtures::utt(vocab, "cut", "celery");
  const auto all = make_instance("i", "v", ctx, target);
  CHECK(all.atoms.size() == 8);
  CHECK(all.compounds.size() == 4);
  CHECK(all.target_compound == Compound{1, 101});
  CHECK(std::find(all.compounds.begin(), all.compounds.end(), all.target_compound) != all.compounds.end());

  const auto only = make_instance("i", "v", ctx, target, CompoundScope::target_only);
  REQUIRE(only.compounds.size() == 1);
  CHECK(only.compounds[0] == Compound{1, 101});
  CHECK(only.atoms.size() == 8);
}

TEST_CASE("corpus_stats counts compounds and atoms") {
  const auto a = fixtures::single_compound_instance("a", 1, 101, 0);
  const auto b = fixtures::single_compound_instance("b", 1, 101, 0);
  const std::vector<Instance> two{a, b};
  const auto stats = corpus_stats(two);
  CHECK(stats.instances == 2);
  CHECK(stats.compound_counts.at(Compound{1, 101}) == 2);
  CHECK(stats.atom_total == 2 * stats.compound_total);
}

TEST_CASE("instance JSONL round-trips byte-identically") {
  const auto corpus = synthetic_instances({.instances = 40, .seed = 4});
  std::ostringstream first;
  write_instances_jsonl(corpus, first);
  std::istringstream in(first.str());
  const auto back = read_instances_jsonl(in);
  CHECK(back == corpus);
  std::ostringstream second;
  write_instances_jsonl(back, second);
  CHECK(second.str() == first.str());
}

TEST_CASE("ingestion is deterministic and survives a CSV round trip") {
  const auto dir = scratch_dir("roundtrip");
  const auto syn = generate_synthetic({.instances = 60, .seed = 11});
  write_annotations_csv(syn.videos, dir / "a.csv");
  write_annotations_jsonl(syn.videos, dir / "a.jsonl");
  const auto from_csv = extract_instances(parse_annotations(dir / "a.csv", AnnotationFormat::csv, syn.vocab));
  const auto from_jsonl =
      extract_instances(parse_annotations(dir / "a.jsonl", AnnotationFormat::jsonl, syn.vocab));
  const auto direct = extract_instances(syn.videos);
  CHECK(from_csv.instances.size() == 60);
  CHECK(from_csv.instances == from_jsonl.instances);
  std::ostringstream x, y;
  write_instances_jsonl(from_csv.instances, x);
  write_instances_jsonl(direct.instances, y);
  CHECK(x.str() == y.str());
}

TEST_CASE("vocab JSON round trip and validation") {
  const auto vocab = fixtures::kitchen_vocab();
  const auto again = vocab_from_json(nlohmann::json::parse(vocab_to_json(vocab).dump()));
  CHECK(again.verbs == vocab.verbs);
  CHECK(again.noun_categories == vocab.noun_categories);
  auto broken = vocab;
  broken.verb_categories.erase(1);
  CHECK_THROWS_AS(broken.validate(), VocabError);
  CHECK_THROWS_AS(load_vocab("/nonexistent/vocab.json"), SchemaError);
}
