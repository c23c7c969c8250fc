#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rulefilter/core.hpp"

namespace rulefilter {

// Platform-independent draws from a 64-bit Mersenne Twister; the standard
// distributions are implementation-defined, these are not.
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n);
double uniform_unit(std::mt19937_64& rng);

template <typename T>
void seeded_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[uniform_index(rng, i)]);
  }
}

// Each instance draws a class uniformly, includes each of that class's
// planted tokens with probability p_signal, and adds noise_per_instance
// tokens drawn uniformly from a shared noise vocabulary.
struct SyntheticConfig {
  int num_classes = 2;
  int planted_per_class = 3;
  int noise_vocab = 20;
  int noise_per_instance = 5;
  double p_signal = 0.8;
  std::size_t labeled = 1000;
  std::size_t unlabeled = 1000;
  std::size_t validation = 100;
  std::size_t test = 500;
  std::uint64_t seed = 42;

  void validate() const;
};

std::string planted_token(Label cls, int index);
std::string noise_token(int index);

// Every instance, unlabeled ones included, carries its gold label in memory.
Corpus gen_synthetic(const SyntheticConfig& cfg);

// All partitions concatenated in labeled, unlabeled, validation, test order.
std::vector<Instance> flatten(const Corpus& corpus);

}  // namespace rulefilter
