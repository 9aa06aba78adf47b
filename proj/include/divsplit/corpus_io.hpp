#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "divsplit/corpus.hpp"
#include "json.hpp"

namespace divsplit {

using ordered_json = nlohmann::ordered_json;

/// Vocab document: {verbs: {surface: class}, nouns: {...},
/// verb_categories: {class: category}, noun_categories: {...}}.
Vocab vocab_from_json(const nlohmann::json& doc);
ordered_json vocab_to_json(const Vocab& vocab);
Vocab load_vocab(const std::filesystem::path& path);
void save_vocab(const Vocab& vocab, const std::filesystem::path& path);

ordered_json utterance_to_json(const Utterance& u);
Utterance utterance_from_json(const nlohmann::json& j);

ordered_json instance_to_json(const Instance& inst);
Instance instance_from_json(const nlohmann::json& j);

/// One instance per line, keys in a fixed order.
void write_instances_jsonl(std::span<const Instance> instances, std::ostream& out);
void write_instances_jsonl(std::span<const Instance> instances,
                           const std::filesystem::path& path);

std::vector<Instance> read_instances_jsonl(std::istream& in);
std::vector<Instance> read_instances_jsonl(const std::filesystem::path& path);

/// Annotation rows as JSONL, one utterance per line with EK-100 field names.
void write_annotations_jsonl(std::span<const VideoUtterances> videos,
                             const std::filesystem::path& path);

/// Same rows as CSV; list columns use the bracketed list form.
void write_annotations_csv(std::span<const VideoUtterances> videos,
                           const std::filesystem::path& path);

/// Splits one CSV record (RFC 4180 quoting). Returns false at end of input.
bool read_csv_record(std::istream& in, std::vector<std::string>& fields);

/// Parses "['a', 'b']", "[1, 2]" or a JSON array into its string elements.
std::vector<std::string> parse_list_literal(std::string_view text);

std::string read_file(const std::filesystem::path& path);

}  // namespace divsplit
