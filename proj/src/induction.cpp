#include "rulefilter/induction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "rulefilter/errors.hpp"

namespace rulefilter {

void StumpConfig::validate() const {
  if (ngram_max < 1) throw ConfigError("ngram_max must be >= 1");
  if (min_support < 1) throw ConfigError("min_support must be >= 1");
  if (max_candidates < 1) throw ConfigError("max_candidates must be >= 1");
}

void ClassifierConfig::validate() const {
  if (l2 < 0.0) throw ConfigError("l2 must be nonnegative");
  if (epochs < 0) throw ConfigError("epochs must be nonnegative");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
}

namespace {

struct NgramCounts {
  std::vector<std::string> tokens;
  std::size_t first_seen = 0;
  std::vector<std::size_t> per_class;  // index k-1 for class k
  std::size_t support = 0;
};

// Support and precision of a single-token or n-gram rule on the labeled set.
RuleInductionInfo labeled_info(const Rule& rule, std::span<const Instance> labeled) {
  RuleInductionInfo info;
  info.id = rule.id;
  std::size_t correct = 0;
  for (const auto& inst : labeled) {
    if (apply_rule(rule, inst) == kAbstain) continue;
    ++info.support;
    if (inst.gold && *inst.gold == rule.label) ++correct;
  }
  info.labeled_precision =
      info.support == 0 ? 0.0 : static_cast<double>(correct) / info.support;
  return info;
}

}  // namespace

InducedRules induce_stumps(const Corpus& corpus, const StumpConfig& cfg,
                           RuleId first_id) {
  cfg.validate();
  if (corpus.labeled.empty()) throw DataError("stump induction needs labeled data");
  const int k = corpus.num_classes;

  std::unordered_map<std::string, std::size_t> index;
  std::vector<NgramCounts> grams;
  std::unordered_set<std::size_t> in_doc;
  std::unordered_set<std::string> vocab;

  for (const auto& inst : corpus.labeled) {
    if (!inst.gold || *inst.gold < 1 || *inst.gold > k) {
      throw DataError("labeled instance " + std::to_string(inst.id) +
                      " lacks a valid gold label");
    }
    in_doc.clear();
    const auto& toks = inst.tokens;
    for (const auto& t : toks) vocab.insert(t);
    for (std::size_t start = 0; start < toks.size(); ++start) {
      std::string key;
      for (int n = 1; n <= cfg.ngram_max && start + n <= toks.size(); ++n) {
        if (n > 1) key.push_back(' ');
        key += toks[start + n - 1];
        auto [it, fresh] = index.emplace(key, grams.size());
        if (fresh) {
          NgramCounts g;
          g.tokens.assign(toks.begin() + start, toks.begin() + start + n);
          g.first_seen = grams.size();
          g.per_class.assign(k, 0);
          grams.push_back(std::move(g));
        }
        if (in_doc.insert(it->second).second) {
          auto& g = grams[it->second];
          ++g.per_class[*inst.gold - 1];
          ++g.support;
        }
      }
    }
  }

  struct Candidate {
    std::size_t gram;
    Label label;
    std::size_t correct;
    std::size_t support;
  };
  std::vector<Candidate> cands;
  for (std::size_t i = 0; i < grams.size(); ++i) {
    const auto& g = grams[i];
    if (g.support < static_cast<std::size_t>(cfg.min_support)) continue;
    auto best = std::max_element(g.per_class.begin(), g.per_class.end());
    cands.push_back({i, static_cast<Label>(best - g.per_class.begin()) + 1, *best,
                     g.support});
  }
  // Exact rational comparison of precision; grams are stored in first-seen order.
  std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    auto lhs = a.correct * b.support;
    auto rhs = b.correct * a.support;
    if (lhs != rhs) return lhs > rhs;
    return a.support > b.support;
  });
  if (cands.size() > cfg.max_candidates) cands.resize(cfg.max_candidates);

  InducedRules out;
  out.vocab_size = vocab.size();
  RuleId next = first_id;
  for (const auto& c : cands) {
    Rule r{next++, grams[c.gram].tokens, c.label, RuleOrigin::stump};
    RuleInductionInfo info;
    info.id = r.id;
    info.support = c.support;
    info.labeled_precision = static_cast<double>(c.correct) / c.support;
    out.info.push_back(info);
    out.rules.add(std::move(r));
  }
  return out;
}

Features featurize(std::span<const Instance> instances,
                   std::optional<std::span<const std::string>> vocab) {
  Features f;
  std::unordered_map<std::string_view, Eigen::Index> column;
  if (vocab) {
    f.vocab.assign(vocab->begin(), vocab->end());
  } else {
    std::unordered_set<std::string_view> seen;
    for (const auto& inst : instances) {
      for (const auto& t : inst.tokens) {
        if (seen.insert(t).second) f.vocab.push_back(t);
      }
    }
  }
  for (std::size_t i = 0; i < f.vocab.size(); ++i) {
    column.emplace(f.vocab[i], static_cast<Eigen::Index>(i));
  }
  f.x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(instances.size()),
                              static_cast<Eigen::Index>(f.vocab.size()));
  for (std::size_t r = 0; r < instances.size(); ++r) {
    for (const auto& t : instances[r].tokens) {
      auto it = column.find(t);
      if (it != column.end()) f.x(static_cast<Eigen::Index>(r), it->second) = 1.0;
    }
  }
  return f;
}

Eigen::MatrixXd one_hot(std::span<const Label> labels, int num_classes) {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()),
                                            num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 1 || labels[i] > num_classes) {
      throw DataError("label " + std::to_string(labels[i]) + " outside 1.." +
                      std::to_string(num_classes));
    }
    y(static_cast<Eigen::Index>(i), labels[i] - 1) = 1.0;
  }
  return y;
}

namespace {

Eigen::MatrixXd logits(const Eigen::MatrixXd& weights, const Eigen::VectorXd& bias,
                       const Eigen::MatrixXd& x) {
  Eigen::MatrixXd z = x * weights.transpose();
  z.rowwise() += bias.transpose();
  return z;
}

// log(1 + e^z) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

double logistic_loss(const Eigen::MatrixXd& weights, const Eigen::VectorXd& bias,
                     const Eigen::MatrixXd& x, const Eigen::MatrixXd& targets,
                     double l2) {
  const Eigen::MatrixXd z = logits(weights, bias, x);
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index k = 0; k < z.cols(); ++k) {
      total += softplus(z(i, k)) - targets(i, k) * z(i, k);
    }
  }
  const double n = std::max<Eigen::Index>(1, x.rows());
  return total / n + 0.5 * l2 * weights.squaredNorm();
}

LogisticGradient logistic_gradient(const Eigen::MatrixXd& weights,
                                   const Eigen::VectorXd& bias,
                                   const Eigen::MatrixXd& x,
                                   const Eigen::MatrixXd& targets, double l2) {
  Eigen::MatrixXd residual = logits(weights, bias, x).unaryExpr(&sigmoid) - targets;
  const double n = std::max<Eigen::Index>(1, x.rows());
  LogisticGradient g;
  g.weights = residual.transpose() * x / n + l2 * weights;
  g.bias = residual.colwise().sum().transpose() / n;
  return g;
}

LinearModel train_linear_classifier(const Eigen::MatrixXd& x,
                                    std::span<const Label> labels, int num_classes,
                                    const ClassifierConfig& cfg) {
  cfg.validate();
  if (static_cast<std::size_t>(x.rows()) != labels.size()) {
    throw DataError("feature rows and labels differ in length");
  }
  std::unordered_set<Label> distinct(labels.begin(), labels.end());
  if (distinct.size() < 2) {
    throw DataError("classifier training needs at least two distinct classes");
  }
  const Eigen::MatrixXd targets = one_hot(labels, num_classes);

  LinearModel m;
  m.weights = Eigen::MatrixXd::Zero(num_classes, x.cols());
  m.bias = Eigen::VectorXd::Zero(num_classes);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    m.loss_history.push_back(logistic_loss(m.weights, m.bias, x, targets, cfg.l2));
    auto g = logistic_gradient(m.weights, m.bias, x, targets, cfg.l2);
    m.weights -= cfg.learning_rate * g.weights;
    m.bias -= cfg.learning_rate * g.bias;
  }
  m.loss_history.push_back(logistic_loss(m.weights, m.bias, x, targets, cfg.l2));
  return m;
}

std::vector<Label> predict(const LinearModel& model, const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd z = logits(model.weights, model.bias, x);
  std::vector<Label> out(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < z.cols(); ++k) {
      if (z(i, k) > z(i, best)) best = k;
    }
    out[static_cast<std::size_t>(i)] = static_cast<Label>(best) + 1;
  }
  return out;
}

InducedRules induce_classifier_rules(const Corpus& corpus,
                                     const ClassifierConfig& cfg, RuleId first_id) {
  cfg.validate();
  if (corpus.labeled.empty()) {
    throw DataError("classifier induction needs labeled data");
  }
  InducedRules out;
  auto feats = featurize(corpus.labeled);
  out.vocab_size = feats.vocab.size();
  if (cfg.top_p == 0) return out;

  const auto labels = gold_labels(corpus.labeled);
  const auto model =
      train_linear_classifier(feats.x, labels, corpus.num_classes, cfg);

  struct Entry {
    double weight;
    Eigen::Index feature;
    Eigen::Index cls;
  };
  std::vector<Entry> positive;
  for (Eigen::Index i = 0; i < model.weights.cols(); ++i) {
    for (Eigen::Index k = 0; k < model.weights.rows(); ++k) {
      if (model.weights(k, i) > 0.0) positive.push_back({model.weights(k, i), i, k});
    }
  }
  // positive is already in (feature, class) order, so a stable sort keeps ties there.
  std::stable_sort(positive.begin(), positive.end(),
                   [](const Entry& a, const Entry& b) { return a.weight > b.weight; });
  if (positive.size() < cfg.top_p) {
    out.warnings.push_back("only " + std::to_string(positive.size()) +
                           " positive weights available for top_p=" +
                           std::to_string(cfg.top_p));
  } else {
    positive.resize(cfg.top_p);
  }

  RuleId next = first_id;
  for (const auto& e : positive) {
    Rule r{next++, {feats.vocab[static_cast<std::size_t>(e.feature)]},
           static_cast<Label>(e.cls) + 1, RuleOrigin::classifier_weight};
    auto info = labeled_info(r, corpus.labeled);
    info.weight = e.weight;
    out.info.push_back(info);
    out.rules.add(std::move(r));
  }
  return out;
}

}  // namespace rulefilter
