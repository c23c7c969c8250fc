#include "rulefilter/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "rulefilter/errors.hpp"

namespace rulefilter::io {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

template <typename Fn>
void for_each_json_line(const std::string& content, const std::string& source,
                        Fn&& fn) {
  std::istringstream in(content);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!obj.is_object()) {
      throw DataError(source + ":" + std::to_string(lineno) +
                      ": expected a JSON object");
    }
    try {
      fn(obj);
    } catch (const json::exception& e) {
      throw DataError(source + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const ConfigError& e) {
      throw DataError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
  if (!out) throw DataError("write failed for " + path.string());
}

std::vector<Instance> parse_instances_jsonl(const std::string& content,
                                            const std::string& source) {
  std::vector<Instance> out;
  for_each_json_line(content, source, [&](const json& obj) {
    std::optional<Label> gold;
    if (obj.contains("label") && !obj.at("label").is_null()) {
      gold = obj.at("label").get<Label>();
    }
    out.push_back(Instance::from_text(obj.at("id").get<InstanceId>(),
                                      obj.at("text").get<std::string>(), gold));
  });
  return out;
}

std::vector<Instance> read_instances_jsonl(const std::filesystem::path& path) {
  return parse_instances_jsonl(read_text_file(path), path.string());
}

std::string instances_to_jsonl(std::span<const Instance> instances,
                               bool include_gold) {
  std::string out;
  for (const auto& inst : instances) {
    ordered_json obj;
    obj["id"] = inst.id;
    obj["text"] = inst.text;
    if (include_gold && inst.gold) {
      obj["label"] = *inst.gold;
    } else {
      obj["label"] = nullptr;
    }
    out += obj.dump();
    out.push_back('\n');
  }
  return out;
}

void write_instances_jsonl(const std::filesystem::path& path,
                           std::span<const Instance> instances, bool include_gold) {
  write_text_file(path, instances_to_jsonl(instances, include_gold));
}

RuleSet parse_rules_jsonl(const std::string& content, const std::string& source) {
  RuleSet out;
  for_each_json_line(content, source, [&](const json& obj) {
    Rule r;
    r.id = obj.at("id").get<RuleId>();
    r.pattern = obj.at("pattern").get<std::vector<std::string>>();
    r.label = obj.at("label").get<Label>();
    r.origin = obj.contains("origin")
                   ? parse_rule_origin(obj.at("origin").get<std::string>())
                   : RuleOrigin::external;
    out.add(std::move(r));
  });
  return out;
}

RuleSet read_rules_jsonl(const std::filesystem::path& path) {
  return parse_rules_jsonl(read_text_file(path), path.string());
}

std::string rules_to_jsonl(const RuleSet& rules) {
  std::string out;
  for (const auto& r : rules) {
    ordered_json obj;
    obj["id"] = r.id;
    obj["pattern"] = r.pattern;
    obj["label"] = r.label;
    obj["origin"] = std::string(to_string(r.origin));
    out += obj.dump();
    out.push_back('\n');
  }
  return out;
}

void write_rules_jsonl(const std::filesystem::path& path, const RuleSet& rules) {
  write_text_file(path, rules_to_jsonl(rules));
}

Corpus read_corpus_dir(const std::filesystem::path& dir,
                       std::optional<int> num_classes) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw DataError(dir.string() + " is not a directory");
  auto load = [&](const char* name) {
    auto p = dir / name;
    return fs::exists(p) ? read_instances_jsonl(p) : std::vector<Instance>{};
  };
  Corpus c;
  c.labeled = load(kLabeledFile);
  c.unlabeled = load(kUnlabeledFile);
  c.validation = load(kValidationFile);
  c.test = load(kTestFile);
  // Anything that slipped into the unlabeled file keeps no gold in memory.
  for (auto& inst : c.unlabeled) inst.gold.reset();
  if (num_classes) {
    c.num_classes = *num_classes;
  } else {
    int k = 2;
    for (const auto* part : {&c.labeled, &c.validation, &c.test}) {
      k = std::max(k, infer_num_classes(*part));
    }
    c.num_classes = k;
  }
  c.validate();
  return c;
}

void write_corpus_dir(const std::filesystem::path& dir, const Corpus& corpus) {
  std::filesystem::create_directories(dir);
  write_instances_jsonl(dir / kLabeledFile, corpus.labeled);
  write_instances_jsonl(dir / kUnlabeledFile, corpus.unlabeled, false);
  write_instances_jsonl(dir / kValidationFile, corpus.validation);
  write_instances_jsonl(dir / kTestFile, corpus.test);
}

std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(),
                 nullptr) != 1) {
    throw InvariantError("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

}  // namespace rulefilter::io
