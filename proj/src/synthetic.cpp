#include "rulefilter/synthetic.hpp"

#include <limits>

#include "rulefilter/errors.hpp"

namespace rulefilter {

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  if (n == 0) throw InvariantError("uniform_index over an empty range");
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t range = n;
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return static_cast<std::size_t>(x % range);
}

double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void SyntheticConfig::validate() const {
  if (num_classes < 2) throw ConfigError("synthetic corpus needs at least 2 classes");
  if (planted_per_class < 0 || noise_vocab < 0 || noise_per_instance < 0) {
    throw ConfigError("token counts must be nonnegative");
  }
  if (noise_per_instance > 0 && noise_vocab == 0) {
    throw ConfigError("noise tokens requested but the noise vocabulary is empty");
  }
  if (!(p_signal >= 0.0 && p_signal <= 1.0)) throw ConfigError("p_signal must lie in [0, 1]");
}

std::string planted_token(Label cls, int index) {
  return "sig" + std::to_string(cls) + "x" + std::to_string(index);
}

std::string noise_token(int index) { return "noise" + std::to_string(index); }

namespace {

Instance draw_instance(const SyntheticConfig& cfg, std::mt19937_64& rng, InstanceId id) {
  const Label cls = static_cast<Label>(uniform_index(rng, cfg.num_classes)) + 1;
  std::vector<std::string> tokens;
  for (int j = 0; j < cfg.planted_per_class; ++j) {
    if (uniform_unit(rng) < cfg.p_signal) tokens.push_back(planted_token(cls, j));
  }
  for (int j = 0; j < cfg.noise_per_instance; ++j) {
    tokens.push_back(noise_token(static_cast<int>(uniform_index(rng, cfg.noise_vocab))));
  }
  seeded_shuffle(tokens, rng);
  std::string text;
  for (const auto& t : tokens) {
    if (!text.empty()) text.push_back(' ');
    text += t;
  }
  return Instance::from_text(id, std::move(text), cls);
}

}  // namespace

Corpus gen_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  Corpus c;
  c.num_classes = cfg.num_classes;
  InstanceId next = 0;
  auto fill = [&](std::vector<Instance>& part, std::size_t n) {
    part.reserve(n);
    for (std::size_t i = 0; i < n; ++i) part.push_back(draw_instance(cfg, rng, next++));
  };
  fill(c.labeled, cfg.labeled);
  fill(c.unlabeled, cfg.unlabeled);
  fill(c.validation, cfg.validation);
  fill(c.test, cfg.test);
  return c;
}

std::vector<Instance> flatten(const Corpus& corpus) {
  std::vector<Instance> all;
  for (const auto* part : {&corpus.labeled, &corpus.unlabeled, &corpus.validation, &corpus.test}) {
    all.insert(all.end(), part->begin(), part->end());
  }
  return all;
}

}  // namespace rulefilter
