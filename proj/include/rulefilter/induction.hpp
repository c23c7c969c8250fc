#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rulefilter/core.hpp"

namespace rulefilter {

struct StumpConfig {
  int ngram_max = 2;
  int min_support = 2;             // minimum labeled firings
  std::size_t max_candidates = 100;

  void validate() const;
};

struct ClassifierConfig {
  std::size_t top_p = 20;
  double l2 = 1e-3;
  int epochs = 300;
  double learning_rate = 0.1;

  void validate() const;
};

// Per-rule bookkeeping written to the induction sidecar.
struct RuleInductionInfo {
  RuleId id = 0;
  std::size_t support = 0;         // labeled instances the rule fires on
  double labeled_precision = 0.0;
  std::optional<double> weight;    // classifier weight, classifier rules only
};

struct InducedRules {
  RuleSet rules;
  std::vector<RuleInductionInfo> info;  // parallel to rules
  std::size_t vocab_size = 0;
  std::vector<std::string> warnings;
};

// One rule per n-gram (n <= ngram_max) that fires on at least min_support
// labeled instances, labeled with the majority gold class of those instances
// (ties to the lowest class). Candidates are ranked by labeled precision, then
// labeled support, then first occurrence; the top max_candidates are kept and
// numbered from first_id.
InducedRules induce_stumps(const Corpus& corpus, const StumpConfig& cfg,
                           RuleId first_id = 0);

struct Features {
  Eigen::MatrixXd x;  // instances x vocab, binary presence
  std::vector<std::string> vocab;
};

// Binary unigram presence. Without a vocab, one is built from the instances in
// first-occurrence order; with one, unseen tokens are dropped.
Features featurize(std::span<const Instance> instances,
                   std::optional<std::span<const std::string>> vocab = std::nullopt);

// One-vs-rest logistic regression: row k of weights scores class k+1.
struct LinearModel {
  Eigen::MatrixXd weights;  // K x vocab
  Eigen::VectorXd bias;     // K
  std::vector<double> loss_history;  // loss before each epoch, then final
};

// Mean over instances of the summed per-class binary cross-entropy, plus
// (l2/2)*||W||^2. targets is the N x K one-hot matrix.
double logistic_loss(const Eigen::MatrixXd& weights, const Eigen::VectorXd& bias,
                     const Eigen::MatrixXd& x, const Eigen::MatrixXd& targets,
                     double l2);

struct LogisticGradient {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
};

LogisticGradient logistic_gradient(const Eigen::MatrixXd& weights,
                                   const Eigen::VectorXd& bias,
                                   const Eigen::MatrixXd& x,
                                   const Eigen::MatrixXd& targets, double l2);

Eigen::MatrixXd one_hot(std::span<const Label> labels, int num_classes);

// Full-batch gradient descent from zero weights. Throws DataError when fewer
// than two distinct classes are present.
LinearModel train_linear_classifier(const Eigen::MatrixXd& x,
                                    std::span<const Label> labels, int num_classes,
                                    const ClassifierConfig& cfg);

std::vector<Label> predict(const LinearModel& model, const Eigen::MatrixXd& x);

// Takes the top_p strictly positive weights w[k][i] and emits the rule
// (vocab[i] -> class k+1) for each. Ties go to the lower feature index, then
// the lower class.
InducedRules induce_classifier_rules(const Corpus& corpus,
                                     const ClassifierConfig& cfg,
                                     RuleId first_id = 0);

}  // namespace rulefilter
