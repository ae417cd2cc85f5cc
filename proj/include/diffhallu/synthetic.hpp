#ifndef DIFFHALLU_SYNTHETIC_HPP
#define DIFFHALLU_SYNTHETIC_HPP

#include <cstdint>
#include <vector>

#include "diffhallu/trace.hpp"

namespace diffhallu {

/// Knobs for the planted-signal generator. Hallucinated samples get higher
/// token entropy, weaker attribution to changed lines and more word
/// substitutions against the reference; every other recorded quantity is
/// label-independent noise.
struct SyntheticOptions {
  std::size_t n_samples = 400;
  std::uint64_t seed = 1;
  double hallucination_rate = 0.5;
  /// Share of samples labeled unsure/uninformative instead.
  double unlabeled_rate = 0.0;
  double entropy_shift = 0.18;
  double changed_attr_shift = 0.2;  // log-scale drop of changed-row attribution
  double substitution_shift = 0.14;
  std::string attribution_model = "synthetic-lm";
  std::string embedding_model = "synthetic-embed";
};

/// Schema-valid traces with labels and languages filled in, deterministic in
/// the seed.
std::vector<GenerationTrace> make_synthetic_traces(const SyntheticOptions& options);

}  // namespace diffhallu

#endif  // DIFFHALLU_SYNTHETIC_HPP
