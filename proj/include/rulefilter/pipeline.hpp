#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "rulefilter/core.hpp"
#include "rulefilter/eval.hpp"
#include "rulefilter/filtering.hpp"
#include "rulefilter/induction.hpp"
#include "rulefilter/stats.hpp"

namespace rulefilter {

// The test partition is an absolute count taken first; the labeled and
// validation fractions then apply to the remaining pool, rounded to nearest.
struct SplitConfig {
  double labeled_fraction = 0.05;
  double validation_fraction = 0.05;
  std::size_t test_count = 500;
  std::uint64_t seed = 0;

  void validate() const;
};

// Seeded partition of a flat corpus. Only gold-labeled instances can land in
// labeled, validation or test; every other instance becomes unlabeled and
// loses its gold label. Partitions keep input order. Throws DataError when
// there are not enough gold labels for the quotas.
Corpus split_corpus(std::span<const Instance> instances, const SplitConfig& cfg,
                    std::optional<int> num_classes = std::nullopt);

enum class InductionMethod { stump, classifier, both };

std::string_view to_string(InductionMethod m);
InductionMethod parse_induction_method(std::string_view name);

InducedRules induce_rules(const Corpus& corpus, InductionMethod method,
                          const StumpConfig& stump, const ClassifierConfig& classifier);

std::string_view to_string(AbstainPolicy p);
AbstainPolicy parse_abstain_policy(std::string_view name);

struct PipelineConfig {
  std::filesystem::path corpus;  // flat JSONL file or a split directory
  std::filesystem::path output_dir;
  std::optional<int> num_classes;
  SplitConfig split;  // its seed drives all randomness
  InductionMethod induction = InductionMethod::stump;
  StumpConfig stump;
  ClassifierConfig classifier;
  FilterConfig filter;
  std::vector<FilterVariant> variants{FilterVariant::gc, FilterVariant::pca};
  bool tune = false;
  AbstainPolicy policy = AbstainPolicy::abstain_as_wrong;
};

nlohmann::json config_to_json(const PipelineConfig& cfg);
PipelineConfig config_from_json(const nlohmann::json& j);

struct ArtifactRecord {
  std::string name;
  std::filesystem::path path;
  std::string sha256;
};

struct RunManifest {
  PipelineConfig config;
  std::map<std::string, std::string> input_hashes;
  std::map<std::string, std::size_t> partition_sizes;
  std::vector<ArtifactRecord> artifacts;
  std::map<std::string, double> timings_ms;

  nlohmann::json to_json() const;
  // name -> sha256 over every artifact; timings excluded.
  std::map<std::string, std::string> artifact_hashes() const;
};

// induce -> stats -> filter -> aggregate -> evaluate. A failing stage is
// rethrown with the stage name prepended, keeping the error category.
RunManifest run_pipeline(const PipelineConfig& cfg);

RunManifest read_manifest(const std::filesystem::path& path);

// Report builders shared by the pipeline and the CLI subcommands.

nlohmann::json induction_metadata(const InducedRules& induced, InductionMethod method);

struct NamedSelection {
  std::string name;
  std::vector<std::size_t> members;  // positions in the candidate set
};

// Per-rule statistics of the candidates and per-set statistics of each named
// selection. Agreement is emitted with both the |U| and the overlap
// denominator.
nlohmann::json stats_report(const RuleSet& candidates, const Corpus& corpus,
                            std::span<const NamedSelection> selections);

nlohmann::json trace_to_json(const Selection& sel, FilterVariant variant,
                             const FilterConfig& cfg);
nlohmann::json eval_to_json(const EvalReport& rep);
std::string predictions_to_jsonl(const FiringMatrix& fm, const AggregatedLabels& agg);

std::string eval_csv_header();
std::string eval_csv_row(std::string_view variant, std::string_view aggregator,
                         const EvalReport& rep, const TestPrecision& precision,
                         std::size_t num_rules);

// Positions of the committed rules within the candidate set, matched by id.
std::vector<std::size_t> positions_in(const RuleSet& candidates, const RuleSet& committed);

}  // namespace rulefilter
