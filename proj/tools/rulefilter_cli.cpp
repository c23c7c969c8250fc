// rulefilter: induce labeling rules from a small labeled corpus, filter them
// with submodular selection, and evaluate the committed set.

#include <algorithm>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rulefilter/core.hpp"
#include "rulefilter/errors.hpp"
#include "rulefilter/eval.hpp"
#include "rulefilter/filtering.hpp"
#include "rulefilter/induction.hpp"
#include "rulefilter/io.hpp"
#include "rulefilter/pipeline.hpp"
#include "rulefilter/stats.hpp"
#include "rulefilter/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rulefilter;

namespace {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

const std::vector<std::string> kSubcommands = {"gen-synthetic", "split",     "induce",
                                               "stats",         "filter",    "aggregate",
                                               "evaluate",      "pipeline"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Lines of "key = value" (or "key value"); '#' and ';' start comments.
std::vector<std::string> config_file_args(const fs::path& path) {
  std::istringstream in(io::read_text_file(path));
  std::vector<std::string> args;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';' || line[0] == '[') continue;
    auto sep = line.find('=');
    if (sep == std::string::npos) sep = line.find_first_of(" \t");
    std::string key = trim(line.substr(0, sep));
    std::string value = sep == std::string::npos ? "true" : trim(line.substr(sep + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    std::replace(key.begin(), key.end(), '_', '-');
    args.push_back("--" + key + "=" + value);
  }
  return args;
}

// Splices options from a --config file in right after the subcommand name so
// that flags given on the command line, which come later, take precedence.
std::vector<std::string> expand_args(int argc, char** argv) {
  std::vector<std::string> raw(argv + 1, argv + argc);
  std::optional<std::string> config;
  std::vector<std::string> kept;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == "--config" && i + 1 < raw.size()) {
      config = raw[++i];
    } else if (raw[i].rfind("--config=", 0) == 0) {
      config = raw[i].substr(9);
    } else {
      kept.push_back(raw[i]);
    }
  }
  if (!config) return kept;
  auto from_file = config_file_args(*config);
  auto sub = std::find_if(kept.begin(), kept.end(), [](const std::string& a) {
    return std::find(kSubcommands.begin(), kSubcommands.end(), a) != kSubcommands.end();
  });
  const auto at = sub == kept.end() ? kept.begin() : sub + 1;
  kept.insert(at, from_file.begin(), from_file.end());
  return kept;
}

struct SplitOptions {
  double labeled_fraction = 0.05;
  double validation_fraction = 0.05;
  std::size_t test_count = 500;
  std::uint64_t seed = 0;

  void add_to(CLI::App* app) {
    app->add_option("--labeled-frac", labeled_fraction, "Labeled share of the non-test pool")
        ->capture_default_str();
    app->add_option("--validation-frac", validation_fraction,
                    "Validation share of the non-test pool")
        ->capture_default_str();
    app->add_option("--test-count", test_count, "Absolute size of the test split")
        ->capture_default_str();
    app->add_option("--seed", seed, "Seed for the shuffle")->capture_default_str();
  }
  SplitConfig resolve() const {
    return {labeled_fraction, validation_fraction, test_count, seed};
  }
};

struct InductionOptions {
  std::string method = "stump";
  StumpConfig stump;
  ClassifierConfig classifier;

  void add_to(CLI::App* app) {
    app->add_option("--method", method, "stump, classifier or both")
        ->check(CLI::IsMember({"stump", "classifier", "both"}))
        ->capture_default_str();
    app->add_option("--ngram-max", stump.ngram_max)->capture_default_str();
    app->add_option("--min-support", stump.min_support)->capture_default_str();
    app->add_option("--max-candidates", stump.max_candidates)->capture_default_str();
    app->add_option("--top-p", classifier.top_p, "Rules taken from classifier weights")
        ->capture_default_str();
    app->add_option("--l2", classifier.l2)->capture_default_str();
    app->add_option("--epochs", classifier.epochs)->capture_default_str();
    app->add_option("--lr", classifier.learning_rate)->capture_default_str();
  }
};

struct FilterOptions {
  std::string variant = "gc";
  FilterConfig cfg;
  std::vector<double> pca_coeffs;
  std::optional<double> pca_strict_w;
  bool tune = false;

  void add_to(CLI::App* app, bool variant_option = true) {
    if (variant_option) {
      app->add_option("--variant", variant, "gc or pca")
          ->check(CLI::IsMember({"gc", "pca"}))
          ->capture_default_str();
    }
    app->add_option("--k", cfg.k, "Rule budget")->capture_default_str();
    app->add_option("--w", cfg.w, "Coverage weight in the similarity score")
        ->capture_default_str();
    app->add_option("--gamma", cfg.gamma, "Agreement weight in the similarity score")
        ->capture_default_str();
    app->add_option("--lambda", cfg.lambda, "Graph-cut diversity trade-off in [0,1]")
        ->capture_default_str();
    app->add_option("--pca-coeffs", pca_coeffs,
                    "Precision, coverage and agreement coefficients (default 1,1,1)")
        ->expected(3)
        ->delimiter(',');
    app->add_option("--pca-strict-w", pca_strict_w,
                    "Use coefficients (w, 1-w, gamma) with this w in [0,1]");
    app->add_flag("--lazy", cfg.lazy, "Lazy greedy for the graph-cut objective");
    app->add_flag("--tune", tune, "Grid-search w and gamma on the validation set");
  }

  FilterConfig resolve() const {
    FilterConfig out = cfg;
    out.variant = parse_filter_variant(variant);
    if (pca_strict_w && !pca_coeffs.empty()) {
      throw ConfigError("--pca-coeffs and --pca-strict-w are mutually exclusive");
    }
    if (pca_strict_w) out.pca = PcaCoefficients::strict(*pca_strict_w, cfg.gamma);
    if (!pca_coeffs.empty()) out.pca = {pca_coeffs[0], pca_coeffs[1], pca_coeffs[2]};
    out.validate();
    return out;
  }
};

const std::vector<Instance>& partition(const Corpus& c, const std::string& name) {
  if (name == "test") return c.test;
  if (name == "validation") return c.validation;
  if (name == "labeled") return c.labeled;
  if (name == "unlabeled") return c.unlabeled;
  throw ConfigError("unknown split '" + name + "'");
}

void emit(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
  } else {
    io::write_text_file(path, content);
  }
}

std::optional<int> classes_opt(int classes) {
  return classes > 0 ? std::optional<int>(classes) : std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Induce, filter and evaluate labeling rules for weak supervision"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::function<void()> action;

  auto add_config = [](CLI::App* sub) {
    sub->add_option("--config", "File of 'key = value' lines mirroring the flags");
  };

  // gen-synthetic
  SyntheticConfig syn;
  std::string syn_out, syn_flat;
  auto* gen = app.add_subcommand("gen-synthetic", "Write a planted-token synthetic corpus");
  add_config(gen);
  gen->add_option("--classes", syn.num_classes)->capture_default_str();
  gen->add_option("--planted", syn.planted_per_class, "Planted tokens per class")
      ->capture_default_str();
  gen->add_option("--noise", syn.noise_vocab, "Noise vocabulary size")->capture_default_str();
  gen->add_option("--noise-per-instance", syn.noise_per_instance)->capture_default_str();
  gen->add_option("--p-signal", syn.p_signal)->capture_default_str();
  gen->add_option("--labeled", syn.labeled)->capture_default_str();
  gen->add_option("--unlabeled", syn.unlabeled)->capture_default_str();
  gen->add_option("--validation", syn.validation)->capture_default_str();
  gen->add_option("--test", syn.test)->capture_default_str();
  gen->add_option("--seed", syn.seed)->capture_default_str();
  auto* gen_out_opt = gen->add_option("--out", syn_out, "Directory for the split corpus");
  gen->add_option("--flat", syn_flat, "Single JSONL file with every gold label")
      ->excludes(gen_out_opt);
  gen->callback([&] {
    action = [&] {
      if (syn_out.empty() && syn_flat.empty()) throw ConfigError("give --out or --flat");
      const auto corpus = gen_synthetic(syn);
      if (!syn_flat.empty()) {
        io::write_instances_jsonl(syn_flat, flatten(corpus));
      } else {
        io::write_corpus_dir(syn_out, corpus);
      }
    };
  });

  // split
  SplitOptions split_opts;
  std::string split_in, split_out;
  int split_classes = 0;
  auto* split = app.add_subcommand("split", "Partition a JSONL corpus into labeled/unlabeled/"
                                            "validation/test files");
  add_config(split);
  split->add_option("--corpus", split_in, "Input JSONL corpus")->required();
  split->add_option("--out", split_out, "Output directory")->required();
  split->add_option("--classes", split_classes, "Number of classes (default: inferred)");
  split_opts.add_to(split);
  split->callback([&] {
    action = [&] {
      const auto content = io::read_text_file(split_in);
      const auto corpus = split_corpus(io::parse_instances_jsonl(content, split_in),
                                       split_opts.resolve(), classes_opt(split_classes));
      io::write_corpus_dir(split_out, corpus);
      const json sizes = {{"labeled", corpus.labeled.size()},
                          {"unlabeled", corpus.unlabeled.size()},
                          {"validation", corpus.validation.size()},
                          {"test", corpus.test.size()}};
      const json manifest = {{"input", split_in},
                             {"input_sha256", io::sha256_hex(content)},
                             {"seed", split_opts.seed},
                             {"labeled_fraction", split_opts.labeled_fraction},
                             {"validation_fraction", split_opts.validation_fraction},
                             {"test_count", split_opts.test_count},
                             {"num_classes", corpus.num_classes},
                             {"sizes", sizes}};
      io::write_text_file(fs::path(split_out) / "split_manifest.json", manifest.dump(2) + "\n");
    };
  });

  // induce
  InductionOptions ind_opts;
  std::string ind_corpus, ind_out, ind_meta;
  int ind_classes = 0;
  auto* induce = app.add_subcommand("induce", "Induce candidate rules from the labeled split");
  add_config(induce);
  induce->add_option("--corpus", ind_corpus, "Split corpus directory")->required();
  induce->add_option("--out", ind_out, "Rule JSONL output")->required();
  induce->add_option("--meta", ind_meta, "Metadata JSON (default: <out>.meta.json)");
  induce->add_option("--classes", ind_classes);
  ind_opts.add_to(induce);
  induce->callback([&] {
    action = [&] {
      const auto corpus = io::read_corpus_dir(ind_corpus, classes_opt(ind_classes));
      const auto method = parse_induction_method(ind_opts.method);
      const auto induced = induce_rules(corpus, method, ind_opts.stump, ind_opts.classifier);
      for (const auto& w : induced.warnings) std::cerr << "warning: " << w << "\n";
      io::write_rules_jsonl(ind_out, induced.rules);
      const std::string meta = ind_meta.empty() ? ind_out + ".meta.json" : ind_meta;
      io::write_text_file(meta, induction_metadata(induced, method).dump(2) + "\n");
    };
  });

  // stats
  std::string st_corpus, st_rules, st_out;
  std::vector<std::string> st_committed;
  int st_classes = 0;
  auto* stats = app.add_subcommand("stats", "Report rule and rule-set statistics");
  add_config(stats);
  stats->add_option("--corpus", st_corpus, "Split corpus directory")->required();
  stats->add_option("--rules", st_rules, "Candidate rule JSONL")->required();
  stats->add_option("--committed", st_committed, "Committed rule JSONL files (repeatable)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  stats->add_option("--out", st_out, "JSON report path (default: stdout)");
  stats->add_option("--classes", st_classes);
  stats->callback([&] {
    action = [&] {
      const auto corpus = io::read_corpus_dir(st_corpus, classes_opt(st_classes));
      const auto candidates = io::read_rules_jsonl(st_rules);
      std::vector<NamedSelection> sets;
      for (const auto& path : st_committed) {
        sets.push_back({fs::path(path).stem().string(),
                        positions_in(candidates, io::read_rules_jsonl(path))});
      }
      emit(st_out, stats_report(candidates, corpus, sets).dump(2) + "\n");
    };
  });

  // filter
  FilterOptions flt_opts;
  std::string flt_rules, flt_corpus, flt_out, flt_trace;
  int flt_classes = 0;
  auto* filter = app.add_subcommand("filter", "Select a committed rule subset");
  add_config(filter);
  filter->add_option("--rules", flt_rules, "Candidate rule JSONL")->required();
  filter->add_option("--corpus", flt_corpus, "Split corpus directory")->required();
  filter->add_option("--out", flt_out, "Committed rule JSONL")->required();
  filter->add_option("--trace", flt_trace, "Selection trace JSON (default: <out>.trace.json)");
  filter->add_option("--classes", flt_classes);
  flt_opts.add_to(filter);
  filter->callback([&] {
    action = [&] {
      auto cfg = flt_opts.resolve();
      const auto corpus = io::read_corpus_dir(flt_corpus, classes_opt(flt_classes));
      const auto candidates = io::read_rules_jsonl(flt_rules);
      if (candidates.empty()) throw DataError("candidate rule file is empty");
      if (flt_opts.tune) {
        const auto t = tune_weights(candidates, corpus, WeightGrid::standard(), cfg);
        cfg.w = t.w;
        cfg.gamma = t.gamma;
        std::cerr << "tuned w=" << t.w << " gamma=" << t.gamma
                  << " validation macro-F1=" << t.macro_f1 << "\n";
      }
      const CorpusStats cs(candidates, corpus.labeled, corpus.unlabeled);
      const auto ids = candidates.ids();
      const Selection sel =
          cfg.variant == FilterVariant::gc
              ? fair_gc_select(ids, build_similarity_matrix(cs, cfg.w, cfg.gamma), cfg)
              : fair_pca_select(ids, CorpusStatsOracle(cs), cfg);
      io::write_rules_jsonl(flt_out, candidates.subset(sel.chosen));
      const std::string trace = flt_trace.empty() ? flt_out + ".trace.json" : flt_trace;
      io::write_text_file(trace, trace_to_json(sel, cfg.variant, cfg).dump(2) + "\n");
    };
  });

  // aggregate
  std::string agg_rules, agg_corpus, agg_split = "test", agg_out;
  int agg_classes = 0;
  auto* aggregate = app.add_subcommand("aggregate", "Majority-vote labels from a rule set");
  add_config(aggregate);
  aggregate->add_option("--rules", agg_rules, "Rule JSONL")->required();
  aggregate->add_option("--corpus", agg_corpus, "Split corpus directory")->required();
  aggregate->add_option("--split", agg_split, "Partition to label")
      ->check(CLI::IsMember({"test", "validation", "labeled", "unlabeled"}))
      ->capture_default_str();
  aggregate->add_option("--out", agg_out, "Predictions JSONL (default: stdout)");
  aggregate->add_option("--classes", agg_classes);
  aggregate->callback([&] {
    action = [&] {
      const auto corpus = io::read_corpus_dir(agg_corpus, classes_opt(agg_classes));
      const auto rules = io::read_rules_jsonl(agg_rules);
      const auto fm = build_firing_matrix(rules, partition(corpus, agg_split));
      emit(agg_out, predictions_to_jsonl(fm, majority_vote(fm)));
    };
  });

  // evaluate
  std::string ev_pred, ev_corpus, ev_split = "test", ev_policy = "abstain_as_wrong", ev_out,
                                  ev_csv, ev_rules, ev_name = "run";
  int ev_classes = 0;
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against gold labels");
  add_config(evaluate);
  evaluate->add_option("--predictions", ev_pred, "Predictions JSONL")->required();
  evaluate->add_option("--corpus", ev_corpus, "Split corpus directory")->required();
  evaluate->add_option("--split", ev_split)
      ->check(CLI::IsMember({"test", "validation", "labeled"}))
      ->capture_default_str();
  evaluate->add_option("--policy", ev_policy)
      ->check(CLI::IsMember({"abstain_as_wrong", "covered_only"}))
      ->capture_default_str();
  evaluate->add_option("--rules", ev_rules, "Rule JSONL, for rule micro-precision");
  evaluate->add_option("--name", ev_name, "Variant name for the CSV row")->capture_default_str();
  evaluate->add_option("--out", ev_out, "Report JSON (default: stdout)");
  evaluate->add_option("--csv", ev_csv, "Also write a one-row CSV here");
  evaluate->add_option("--classes", ev_classes);
  evaluate->callback([&] {
    action = [&] {
      const auto corpus = io::read_corpus_dir(ev_corpus, classes_opt(ev_classes));
      const auto& part = partition(corpus, ev_split);
      const auto gold = gold_labels(part);

      std::map<InstanceId, Label> by_id;
      std::istringstream in(io::read_text_file(ev_pred));
      std::string line;
      while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        try {
          const auto j = json::parse(line);
          by_id[j.at("id").get<InstanceId>()] = j.at("label").get<Label>();
        } catch (const json::exception& e) {
          throw DataError(ev_pred + ": " + e.what());
        }
      }
      std::vector<Label> predicted;
      for (const auto& inst : part) {
        auto it = by_id.find(inst.id);
        if (it == by_id.end()) {
          throw DataError("no prediction for instance " + std::to_string(inst.id));
        }
        predicted.push_back(it->second);
      }
      const auto rep = macro_f1(predicted, gold, corpus.num_classes,
                                parse_abstain_policy(ev_policy));
      TestPrecision tp;
      std::size_t num_rules = 0;
      auto report = eval_to_json(rep);
      report["policy"] = ev_policy;
      if (!ev_rules.empty()) {
        const auto rules = io::read_rules_jsonl(ev_rules);
        tp = test_set_precision(rules, part);
        num_rules = rules.size();
        report["test_precision"] = tp.value;
        report["test_precision_no_fire"] = tp.no_fire;
        report["num_rules"] = num_rules;
      }
      emit(ev_out, report.dump(2) + "\n");
      if (!ev_csv.empty()) {
        io::write_text_file(ev_csv, eval_csv_header() +
                                        eval_csv_row(ev_name, "majority_vote", rep, tp, num_rules));
      }
    };
  });

  // pipeline
  PipelineConfig pipe;
  SplitOptions pipe_split;
  InductionOptions pipe_ind;
  FilterOptions pipe_filter;
  std::vector<std::string> pipe_variants{"gc", "pca"};
  std::string pipe_corpus, pipe_out, pipe_policy = "abstain_as_wrong", pipe_manifest;
  int pipe_classes = 0;
  auto* pipeline = app.add_subcommand("pipeline", "Run induce, stats, filter, aggregate and "
                                                  "evaluate end to end");
  add_config(pipeline);
  auto* corpus_opt =
      pipeline->add_option("--corpus", pipe_corpus, "Flat JSONL corpus or split directory");
  pipeline->add_option("--out", pipe_out, "Output directory")->required();
  pipeline->add_option("--from-manifest", pipe_manifest,
                       "Re-run with the config recorded in a manifest")
      ->excludes(corpus_opt);
  pipeline->add_option("--variants", pipe_variants, "Filter variants to run")
      ->delimiter(',')
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)
      ->expected(1, 2)
      ->check(CLI::IsMember({"gc", "pca"}));
  pipeline->add_option("--policy", pipe_policy)
      ->check(CLI::IsMember({"abstain_as_wrong", "covered_only"}))
      ->capture_default_str();
  pipeline->add_option("--classes", pipe_classes);
  pipe_split.add_to(pipeline);
  pipe_ind.add_to(pipeline);
  pipe_filter.add_to(pipeline, false);
  pipeline->callback([&] {
    action = [&] {
      if (!pipe_manifest.empty()) {
        pipe = read_manifest(pipe_manifest).config;
      } else {
        if (pipe_corpus.empty()) throw ConfigError("give --corpus or --from-manifest");
        pipe.corpus = pipe_corpus;
        pipe.num_classes = classes_opt(pipe_classes);
        pipe.split = pipe_split.resolve();
        pipe.induction = parse_induction_method(pipe_ind.method);
        pipe.stump = pipe_ind.stump;
        pipe.classifier = pipe_ind.classifier;
        pipe.filter = pipe_filter.resolve();
        pipe.tune = pipe_filter.tune;
        pipe.policy = parse_abstain_policy(pipe_policy);
        pipe.variants.clear();
        for (const auto& v : pipe_variants) pipe.variants.push_back(parse_filter_variant(v));
      }
      pipe.output_dir = pipe_out;
      const auto manifest = run_pipeline(pipe);
      std::cout << "wrote " << manifest.artifacts.size() << " artifacts to " << pipe_out << "\n";
    };
  });

  try {
    // CLI11 consumes a vector of arguments from the back.
    auto args = expand_args(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }

  try {
    if (action) action();
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const InvariantError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
}
