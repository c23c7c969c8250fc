#include "rulefilter/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <type_traits>

#include "rulefilter/errors.hpp"
#include "rulefilter/io.hpp"
#include "rulefilter/synthetic.hpp"

namespace rulefilter {

using nlohmann::json;
namespace fs = std::filesystem;

void SplitConfig::validate() const {
  if (!(labeled_fraction >= 0.0) || !(validation_fraction >= 0.0)) {
    throw ConfigError("split fractions must be nonnegative");
  }
  if (labeled_fraction + validation_fraction > 1.0) {
    throw ConfigError("split fractions must sum to at most 1");
  }
}

Corpus split_corpus(std::span<const Instance> instances, const SplitConfig& cfg,
                    std::optional<int> num_classes) {
  cfg.validate();
  const std::size_t total = instances.size();
  if (cfg.test_count > total) {
    throw DataError("test quota " + std::to_string(cfg.test_count) + " exceeds corpus size " +
                    std::to_string(total));
  }
  const std::size_t pool = total - cfg.test_count;
  const auto n_labeled = static_cast<std::size_t>(std::llround(cfg.labeled_fraction * pool));
  const auto n_validation =
      static_cast<std::size_t>(std::llround(cfg.validation_fraction * pool));

  std::vector<std::size_t> gold_positions;
  for (std::size_t i = 0; i < total; ++i) {
    if (instances[i].gold) gold_positions.push_back(i);
  }
  const std::size_t needed = cfg.test_count + n_labeled + n_validation;
  if (needed > gold_positions.size()) {
    throw DataError("insufficient labeled data: split needs " + std::to_string(needed) +
                    " gold labels, corpus has " + std::to_string(gold_positions.size()));
  }

  std::mt19937_64 rng(cfg.seed);
  seeded_shuffle(gold_positions, rng);

  enum Part : unsigned char { kUnlabeled, kLabeled, kValidation, kTest };
  std::vector<Part> part(total, kUnlabeled);
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < cfg.test_count; ++i) part[gold_positions[cursor++]] = kTest;
  for (std::size_t i = 0; i < n_labeled; ++i) part[gold_positions[cursor++]] = kLabeled;
  for (std::size_t i = 0; i < n_validation; ++i) part[gold_positions[cursor++]] = kValidation;

  Corpus c;
  c.num_classes = num_classes ? *num_classes : infer_num_classes(instances);
  for (std::size_t i = 0; i < total; ++i) {
    switch (part[i]) {
      case kLabeled:
        c.labeled.push_back(instances[i]);
        break;
      case kValidation:
        c.validation.push_back(instances[i]);
        break;
      case kTest:
        c.test.push_back(instances[i]);
        break;
      case kUnlabeled:
        c.unlabeled.push_back(instances[i]);
        c.unlabeled.back().gold.reset();
        break;
    }
  }
  c.validate();
  return c;
}

std::string_view to_string(InductionMethod m) {
  switch (m) {
    case InductionMethod::stump:
      return "stump";
    case InductionMethod::classifier:
      return "classifier";
    case InductionMethod::both:
      return "both";
  }
  return "stump";
}

InductionMethod parse_induction_method(std::string_view name) {
  if (name == "stump") return InductionMethod::stump;
  if (name == "classifier") return InductionMethod::classifier;
  if (name == "both") return InductionMethod::both;
  throw ConfigError("unknown induction method '" + std::string(name) +
                    "' (expected stump, classifier or both)");
}

InducedRules induce_rules(const Corpus& corpus, InductionMethod method,
                          const StumpConfig& stump, const ClassifierConfig& classifier) {
  if (method == InductionMethod::stump) return induce_stumps(corpus, stump);
  if (method == InductionMethod::classifier) return induce_classifier_rules(corpus, classifier);

  auto out = induce_stumps(corpus, stump);
  auto extra = induce_classifier_rules(corpus, classifier,
                                       static_cast<RuleId>(out.rules.size()));
  for (std::size_t i = 0; i < extra.rules.size(); ++i) {
    out.rules.add(extra.rules[i]);
    out.info.push_back(extra.info[i]);
  }
  out.vocab_size = std::max(out.vocab_size, extra.vocab_size);
  out.warnings.insert(out.warnings.end(), extra.warnings.begin(), extra.warnings.end());
  return out;
}

std::string_view to_string(AbstainPolicy p) {
  return p == AbstainPolicy::covered_only ? "covered_only" : "abstain_as_wrong";
}

AbstainPolicy parse_abstain_policy(std::string_view name) {
  if (name == "covered_only") return AbstainPolicy::covered_only;
  if (name == "abstain_as_wrong") return AbstainPolicy::abstain_as_wrong;
  throw ConfigError("unknown abstain policy '" + std::string(name) + "'");
}

json config_to_json(const PipelineConfig& cfg) {
  json j;
  j["corpus"] = cfg.corpus.string();
  j["output_dir"] = cfg.output_dir.string();
  j["num_classes"] = cfg.num_classes ? json(*cfg.num_classes) : json(nullptr);
  j["split"] = {{"labeled_fraction", cfg.split.labeled_fraction},
                {"validation_fraction", cfg.split.validation_fraction},
                {"test_count", cfg.split.test_count},
                {"seed", cfg.split.seed}};
  j["induction"] = std::string(to_string(cfg.induction));
  j["stump"] = {{"ngram_max", cfg.stump.ngram_max},
                {"min_support", cfg.stump.min_support},
                {"max_candidates", cfg.stump.max_candidates}};
  j["classifier"] = {{"top_p", cfg.classifier.top_p},
                     {"l2", cfg.classifier.l2},
                     {"epochs", cfg.classifier.epochs},
                     {"learning_rate", cfg.classifier.learning_rate}};
  j["filter"] = {{"k", cfg.filter.k},
                 {"w", cfg.filter.w},
                 {"gamma", cfg.filter.gamma},
                 {"lambda", cfg.filter.lambda},
                 {"lazy", cfg.filter.lazy},
                 {"pca_coeffs",
                  {cfg.filter.pca.precision, cfg.filter.pca.coverage, cfg.filter.pca.agreement}}};
  json variants = json::array();
  for (auto v : cfg.variants) variants.push_back(std::string(to_string(v)));
  j["variants"] = variants;
  j["tune"] = cfg.tune;
  j["policy"] = std::string(to_string(cfg.policy));
  return j;
}

PipelineConfig config_from_json(const json& j) {
  try {
    PipelineConfig cfg;
    cfg.corpus = j.at("corpus").get<std::string>();
    cfg.output_dir = j.at("output_dir").get<std::string>();
    if (!j.at("num_classes").is_null()) cfg.num_classes = j.at("num_classes").get<int>();
    const auto& s = j.at("split");
    cfg.split.labeled_fraction = s.at("labeled_fraction").get<double>();
    cfg.split.validation_fraction = s.at("validation_fraction").get<double>();
    cfg.split.test_count = s.at("test_count").get<std::size_t>();
    cfg.split.seed = s.at("seed").get<std::uint64_t>();
    cfg.induction = parse_induction_method(j.at("induction").get<std::string>());
    const auto& st = j.at("stump");
    cfg.stump.ngram_max = st.at("ngram_max").get<int>();
    cfg.stump.min_support = st.at("min_support").get<int>();
    cfg.stump.max_candidates = st.at("max_candidates").get<std::size_t>();
    const auto& c = j.at("classifier");
    cfg.classifier.top_p = c.at("top_p").get<std::size_t>();
    cfg.classifier.l2 = c.at("l2").get<double>();
    cfg.classifier.epochs = c.at("epochs").get<int>();
    cfg.classifier.learning_rate = c.at("learning_rate").get<double>();
    const auto& f = j.at("filter");
    cfg.filter.k = f.at("k").get<std::size_t>();
    cfg.filter.w = f.at("w").get<double>();
    cfg.filter.gamma = f.at("gamma").get<double>();
    cfg.filter.lambda = f.at("lambda").get<double>();
    cfg.filter.lazy = f.at("lazy").get<bool>();
    const auto coeffs = f.at("pca_coeffs").get<std::vector<double>>();
    if (coeffs.size() != 3) throw ConfigError("pca_coeffs needs three values");
    cfg.filter.pca = {coeffs[0], coeffs[1], coeffs[2]};
    cfg.variants.clear();
    for (const auto& v : j.at("variants")) {
      cfg.variants.push_back(parse_filter_variant(v.get<std::string>()));
    }
    cfg.tune = j.at("tune").get<bool>();
    cfg.policy = parse_abstain_policy(j.at("policy").get<std::string>());
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid pipeline config: ") + e.what());
  }
}

json RunManifest::to_json() const {
  json j;
  j["config"] = config_to_json(config);
  j["input_hashes"] = input_hashes;
  j["partition_sizes"] = partition_sizes;
  json arts = json::array();
  for (const auto& a : artifacts) {
    arts.push_back({{"name", a.name}, {"path", a.path.string()}, {"sha256", a.sha256}});
  }
  j["artifacts"] = arts;
  j["timings_ms"] = timings_ms;
  return j;
}

std::map<std::string, std::string> RunManifest::artifact_hashes() const {
  std::map<std::string, std::string> out;
  for (const auto& a : artifacts) out[a.name] = a.sha256;
  return out;
}

RunManifest read_manifest(const fs::path& path) {
  json j;
  try {
    j = json::parse(io::read_text_file(path));
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  RunManifest m;
  try {
    m.config = config_from_json(j.at("config"));
    m.input_hashes = j.at("input_hashes").get<std::map<std::string, std::string>>();
    m.partition_sizes = j.at("partition_sizes").get<std::map<std::string, std::size_t>>();
    for (const auto& a : j.at("artifacts")) {
      m.artifacts.push_back({a.at("name").get<std::string>(),
                             a.at("path").get<std::string>(),
                             a.at("sha256").get<std::string>()});
    }
    m.timings_ms = j.at("timings_ms").get<std::map<std::string, double>>();
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return m;
}

json induction_metadata(const InducedRules& induced, InductionMethod method) {
  json j;
  j["method"] = std::string(to_string(method));
  j["vocab_size"] = induced.vocab_size;
  j["num_rules"] = induced.rules.size();
  j["warnings"] = induced.warnings;
  json rules = json::array();
  for (std::size_t i = 0; i < induced.rules.size(); ++i) {
    const auto& r = induced.rules[i];
    const auto& info = induced.info[i];
    json e = {{"id", r.id},
              {"pattern", r.pattern_text()},
              {"label", r.label},
              {"support", info.support},
              {"labeled_precision", info.labeled_precision}};
    if (info.weight) e["weight"] = *info.weight;
    rules.push_back(e);
  }
  j["rules"] = rules;
  return j;
}

json stats_report(const RuleSet& candidates, const Corpus& corpus,
                  std::span<const NamedSelection> selections) {
  const CorpusStats stats(candidates, corpus.labeled, corpus.unlabeled);
  std::optional<FiringMatrix> test_fm;
  std::vector<Label> test_gold;
  if (!corpus.test.empty()) {
    test_fm = build_firing_matrix(candidates, corpus.test);
    test_gold = gold_labels(corpus.test);
  }

  json rules = json::array();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& r = candidates[i];
    const auto& st = stats.rule(i);
    json e = {{"id", r.id},
              {"pattern", r.pattern_text()},
              {"label", r.label},
              {"origin", std::string(to_string(r.origin))},
              {"precision_labeled", st.precision},
              {"no_fire", st.no_fire},
              {"labeled_coverage", st.labeled_coverage},
              {"unlabeled_coverage", st.unlabeled_coverage},
              {"fires_labeled", st.fires_labeled},
              {"fires_unlabeled", st.fires_unlabeled}};
    if (test_fm) {
      const std::size_t col[] = {i};
      e["precision_test"] = test_set_precision(test_fm->select_columns(col), test_gold).value;
    } else {
      e["precision_test"] = nullptr;
    }
    rules.push_back(e);
  }

  json sets = json::array();
  for (const auto& sel : selections) {
    const auto ss = stats.set(sel.members);
    json ids = json::array();
    for (auto i : sel.members) ids.push_back(candidates[i].id);

    // Pairwise means over unordered pairs within the set.
    double agree_u = 0.0, agree_overlap = 0.0, conflict_u = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < sel.members.size(); ++a) {
      for (std::size_t b = a + 1; b < sel.members.size(); ++b) {
        const auto p = stats.pair(sel.members[a], sel.members[b]);
        agree_u += p.agreement;
        conflict_u += p.conflict;
        agree_overlap += stats.agreement_given_overlap(sel.members[a], sel.members[b]);
        ++pairs;
      }
    }
    // Share of covered unlabeled points on which the set does not conflict.
    const double conflicted = 1.0 - ss.non_conflict;
    const double non_conflict_covered =
        ss.coverage > 0.0 ? (ss.coverage - conflicted) / ss.coverage : 1.0;

    json e = {{"name", sel.name},
              {"size", sel.members.size()},
              {"rule_ids", ids},
              {"coverage", ss.coverage},
              {"non_conflict", ss.non_conflict},
              {"non_conflict_given_covered", non_conflict_covered},
              {"avg_precision_labeled", ss.avg_precision},
              {"labeled_coverage", ss.labeled_coverage},
              {"mean_pair_agreement", pairs ? agree_u / pairs : 0.0},
              {"mean_pair_agreement_given_overlap", pairs ? agree_overlap / pairs : 0.0},
              {"mean_pair_conflict", pairs ? conflict_u / pairs : 0.0}};
    if (test_fm) {
      const auto tp = test_set_precision(test_fm->select_columns(sel.members), test_gold);
      e["precision_test"] = tp.value;
      e["precision_test_no_fire"] = tp.no_fire;
    } else {
      e["precision_test"] = nullptr;
    }
    sets.push_back(e);
  }

  return {{"unlabeled_size", corpus.unlabeled.size()},
          {"labeled_size", corpus.labeled.size()},
          {"test_size", corpus.test.size()},
          {"rules", rules},
          {"sets", sets}};
}

json trace_to_json(const Selection& sel, FilterVariant variant, const FilterConfig& cfg) {
  json steps = json::array();
  for (const auto& s : sel.trace.steps) {
    steps.push_back({{"rule_id", s.rule},
                     {"gain", s.gain},
                     {"scratch_gain", s.scratch_gain},
                     {"objective", s.objective},
                     {"negative_gain", s.negative_gain}});
  }
  return {{"variant", std::string(to_string(variant))},
          {"k", cfg.k},
          {"w", cfg.w},
          {"gamma", cfg.gamma},
          {"lambda", cfg.lambda},
          {"steps", steps}};
}

json eval_to_json(const EvalReport& rep) {
  json classes = json::array();
  for (const auto& c : rep.per_class) {
    classes.push_back({{"label", c.label},
                       {"tp", c.tp},
                       {"fp", c.fp},
                       {"fn", c.fn},
                       {"precision", c.precision},
                       {"recall", c.recall},
                       {"f1", c.f1}});
  }
  return {{"macro_f1", rep.macro_f1},
          {"micro_precision", rep.micro_precision},
          {"coverage", rep.coverage},
          {"instances", rep.instances},
          {"per_class", classes}};
}

std::string predictions_to_jsonl(const FiringMatrix& fm, const AggregatedLabels& agg) {
  std::string out;
  for (std::size_t r = 0; r < fm.rows(); ++r) {
    json line = {{"id", fm.row_ids()[r]}, {"label", agg.labels[r]}};
    out += line.dump();
    out.push_back('\n');
  }
  return out;
}

std::string eval_csv_header() {
  return "variant,aggregator,macro_f1,micro_precision,coverage,test_precision,num_rules\n";
}

std::string eval_csv_row(std::string_view variant, std::string_view aggregator,
                         const EvalReport& rep, const TestPrecision& precision,
                         std::size_t num_rules) {
  std::ostringstream os;
  os << std::setprecision(6) << std::fixed;
  os << variant << ',' << aggregator << ',' << rep.macro_f1 << ',' << rep.micro_precision << ','
     << rep.coverage << ',' << precision.value << ',' << num_rules << '\n';
  return os.str();
}

std::vector<std::size_t> positions_in(const RuleSet& candidates, const RuleSet& committed) {
  std::vector<std::size_t> out;
  for (const auto& r : committed) {
    auto pos = candidates.index_of(r.id);
    if (!pos) {
      throw DataError("committed rule " + std::to_string(r.id) + " is not a candidate");
    }
    out.push_back(*pos);
  }
  return out;
}

namespace {

template <typename Fn>
auto run_stage(const char* name, RunManifest& manifest, Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  auto record = [&] {
    manifest.timings_ms[name] =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
  };
  auto prefix = [&](const std::exception& e) {
    return std::string("stage '") + name + "': " + e.what();
  };
  try {
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      record();
    } else {
      auto result = fn();
      record();
      return result;
    }
  } catch (const ConfigError& e) {
    throw ConfigError(prefix(e));
  } catch (const DataError& e) {
    throw DataError(prefix(e));
  } catch (const InvariantError& e) {
    throw InvariantError(prefix(e));
  } catch (const std::exception& e) {
    throw InvariantError(prefix(e));
  }
}

class ArtifactWriter {
 public:
  ArtifactWriter(fs::path root, RunManifest& manifest)
      : root_(std::move(root)), manifest_(manifest) {}

  void write(const std::string& name, const std::string& content) {
    io::write_text_file(root_ / name, content);
    manifest_.artifacts.push_back({name, name, io::sha256_hex(content)});
  }

 private:
  fs::path root_;
  RunManifest& manifest_;
};

}  // namespace

RunManifest run_pipeline(const PipelineConfig& cfg) {
  RunManifest manifest;
  manifest.config = cfg;
  cfg.filter.validate();
  if (cfg.variants.empty()) throw ConfigError("pipeline needs at least one filter variant");
  if (cfg.output_dir.empty()) throw ConfigError("pipeline needs an output directory");
  fs::create_directories(cfg.output_dir);
  ArtifactWriter out(cfg.output_dir, manifest);

  const Corpus corpus = run_stage("load", manifest, [&] {
    if (fs::is_directory(cfg.corpus)) {
      for (const char* f : {io::kLabeledFile, io::kUnlabeledFile, io::kValidationFile,
                            io::kTestFile}) {
        if (fs::exists(cfg.corpus / f)) {
          manifest.input_hashes[f] = io::sha256_hex(io::read_text_file(cfg.corpus / f));
        }
      }
      return io::read_corpus_dir(cfg.corpus, cfg.num_classes);
    }
    const auto content = io::read_text_file(cfg.corpus);
    manifest.input_hashes[cfg.corpus.filename().string()] = io::sha256_hex(content);
    auto c = split_corpus(io::parse_instances_jsonl(content, cfg.corpus.string()), cfg.split,
                          cfg.num_classes);
    out.write("split/labeled.jsonl", io::instances_to_jsonl(c.labeled));
    out.write("split/unlabeled.jsonl", io::instances_to_jsonl(c.unlabeled, false));
    out.write("split/validation.jsonl", io::instances_to_jsonl(c.validation));
    out.write("split/test.jsonl", io::instances_to_jsonl(c.test));
    return c;
  });
  manifest.partition_sizes = {{"labeled", corpus.labeled.size()},
                              {"unlabeled", corpus.unlabeled.size()},
                              {"validation", corpus.validation.size()},
                              {"test", corpus.test.size()}};

  const InducedRules induced = run_stage("induce", manifest, [&] {
    auto r = induce_rules(corpus, cfg.induction, cfg.stump, cfg.classifier);
    out.write("candidate_rules.jsonl", io::rules_to_jsonl(r.rules));
    out.write("induction_meta.json", induction_metadata(r, cfg.induction).dump(2) + "\n");
    return r;
  });
  const RuleSet& candidates = induced.rules;
  if (candidates.empty()) {
    throw DataError("stage 'induce': no candidate rules were induced");
  }

  FilterConfig filter = cfg.filter;
  const CorpusStats stats = run_stage("stats", manifest, [&] {
    return CorpusStats(candidates, corpus.labeled, corpus.unlabeled);
  });
  if (cfg.tune) {
    run_stage("tune", manifest, [&] {
      const auto t = tune_weights(candidates, corpus, WeightGrid::standard(), filter);
      filter.w = t.w;
      filter.gamma = t.gamma;
      json points = json::array();
      for (const auto& p : t.points) {
        points.push_back({{"w", p.w}, {"gamma", p.gamma}, {"macro_f1", p.macro_f1}});
      }
      out.write("tuning.json",
                json{{"w", t.w}, {"gamma", t.gamma}, {"macro_f1", t.macro_f1}, {"points", points}}
                        .dump(2) +
                    "\n");
    });
  }

  const auto ids = candidates.ids();
  std::vector<NamedSelection> selections;
  run_stage("filter", manifest, [&] {
    for (auto variant : cfg.variants) {
      Selection sel;
      if (variant == FilterVariant::gc) {
        sel = fair_gc_select(ids, build_similarity_matrix(stats, filter.w, filter.gamma), filter);
      } else {
        sel = fair_pca_select(ids, CorpusStatsOracle(stats), filter);
      }
      const std::string v(to_string(variant));
      out.write("committed_" + v + ".jsonl", io::rules_to_jsonl(candidates.subset(sel.chosen)));
      out.write("trace_" + v + ".json", trace_to_json(sel, variant, filter).dump(2) + "\n");
      selections.push_back({v, sel.chosen});
    }
  });

  run_stage("report", manifest, [&] {
    std::vector<NamedSelection> with_all = selections;
    std::vector<std::size_t> everything(candidates.size());
    std::iota(everything.begin(), everything.end(), 0);
    with_all.push_back({"candidates", everything});
    out.write("stats.json", stats_report(candidates, corpus, with_all).dump(2) + "\n");
  });

  const auto test_fm = build_firing_matrix(candidates, corpus.test);
  std::vector<AggregatedLabels> aggregated;
  run_stage("aggregate", manifest, [&] {
    for (const auto& sel : selections) {
      const auto fm = test_fm.select_columns(sel.members);
      aggregated.push_back(majority_vote(fm));
      out.write("predictions_" + sel.name + ".jsonl", predictions_to_jsonl(fm, aggregated.back()));
    }
  });

  run_stage("evaluate", manifest, [&] {
    const auto gold = gold_labels(corpus.test);
    json reports;
    std::string csv = eval_csv_header();
    for (std::size_t i = 0; i < selections.size(); ++i) {
      const auto rep = macro_f1(aggregated[i].labels, gold, corpus.num_classes, cfg.policy);
      const auto tp = test_set_precision(test_fm.select_columns(selections[i].members), gold);
      json r = eval_to_json(rep);
      r["test_precision"] = tp.value;
      r["num_rules"] = selections[i].members.size();
      r["policy"] = std::string(to_string(cfg.policy));
      reports[selections[i].name] = r;
      csv += eval_csv_row(selections[i].name, "majority_vote", rep, tp,
                          selections[i].members.size());
    }
    out.write("eval.json", reports.dump(2) + "\n");
    out.write("eval.csv", csv);
  });

  io::write_text_file(cfg.output_dir / "manifest.json", manifest.to_json().dump(2) + "\n");
  return manifest;
}

}  // namespace rulefilter
