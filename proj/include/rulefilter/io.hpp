#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rulefilter/core.hpp"

namespace rulefilter::io {

// Corpus lines: {"id": int, "text": str, "label": int|null}.
std::vector<Instance> read_instances_jsonl(const std::filesystem::path& path);
std::vector<Instance> parse_instances_jsonl(const std::string& content,
                                            const std::string& source = "<string>");
std::string instances_to_jsonl(std::span<const Instance> instances,
                               bool include_gold = true);
void write_instances_jsonl(const std::filesystem::path& path,
                           std::span<const Instance> instances,
                           bool include_gold = true);

// Rule lines: {"id": int, "pattern": [str, ...], "label": int, "origin": str}.
RuleSet read_rules_jsonl(const std::filesystem::path& path);
RuleSet parse_rules_jsonl(const std::string& content,
                          const std::string& source = "<string>");
std::string rules_to_jsonl(const RuleSet& rules);
void write_rules_jsonl(const std::filesystem::path& path, const RuleSet& rules);

// A split corpus on disk: labeled.jsonl, unlabeled.jsonl, validation.jsonl and
// test.jsonl. Gold labels are never written to unlabeled.jsonl.
inline constexpr const char* kLabeledFile = "labeled.jsonl";
inline constexpr const char* kUnlabeledFile = "unlabeled.jsonl";
inline constexpr const char* kValidationFile = "validation.jsonl";
inline constexpr const char* kTestFile = "test.jsonl";

Corpus read_corpus_dir(const std::filesystem::path& dir,
                       std::optional<int> num_classes = std::nullopt);
void write_corpus_dir(const std::filesystem::path& dir, const Corpus& corpus);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

// Hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

}  // namespace rulefilter::io
