#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fcm/corpus.hpp"
#include "fcm/linalg.hpp"
#include "fcm/model.hpp"
#include "fcm/ngram.hpp"
#include "fcm/rng.hpp"

namespace fcm {

class EmbeddingTable;

struct TrainConfig {
  Mode mode = Mode::Gated;
  double lr = 0.01;
  int epochs = 5;
  int batch_size = 64;
  int n_min = 3;
  int n_max = 5;
  int min_ngram_support = 3;
  std::uint64_t min_word_count = 100;
  std::size_t contexts_per_instance = 20;
  std::uint64_t seed = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool exclude_target = true;
  bool lowercase = true;

  // Throws std::invalid_argument on out-of-range values.
  void validate() const;

  std::map<std::string, std::string> to_map() const;
  static TrainConfig from_map(const std::map<std::string, std::string>& values);
  static TrainConfig from_map(const std::map<std::string, std::string>& values,
                              TrainConfig base);
  // "key value" or "key = value" lines; '#' starts a comment.
  static TrainConfig load(std::istream& in);
  static TrainConfig load(std::istream& in, TrainConfig base);
};

// Gradient of the batch loss for every parameter group. The n-gram table part
// is sparse: rows absent from the map have an exactly zero gradient.
struct GradientSet {
  std::unordered_map<std::uint32_t, Vec> ngram_rows;
  Matrix transform;
  Vec gate_weight;
  double gate_bias = 0.0;
  double single_logit = 0.0;
};

// Glorot-uniform for the n-gram table, the context transform and the gate
// weights; the gate bias and the single mixing logit start at zero, so the
// single-parameter mixing weight starts at 0.5.
FcmParameters init_params(std::size_t dim, std::size_t vocab_size, Mode mode,
                          Rng& rng);

// Mean squared distance between the forward result and the table vector of
// each instance word. Throws when the batch is empty or a word is not in the
// table.
double loss_batch(std::span<const TrainingInstance> batch,
                  const FcmParameters& params, const NgramVocabulary& vocab,
                  const EmbeddingTable& table,
                  const ForwardOptions& options = {});

// Batch loss and its exact gradient. The mixing weight is treated as a
// constant whenever it is pinned by the mode or by an empty context.
std::pair<double, GradientSet> gradients(std::span<const TrainingInstance> batch,
                                         const FcmParameters& params,
                                         const NgramVocabulary& vocab,
                                         const EmbeddingTable& table,
                                         const ForwardOptions& options = {});

// Compares the analytic gradient of a single-instance batch against central
// finite differences on a sampled set of coordinates (at least min_coords,
// covering every parameter group and every touched n-gram row) and returns
// the largest relative error.
double grad_check(const FcmParameters& params, const TrainingInstance& instance,
                  const NgramVocabulary& vocab, const EmbeddingTable& table,
                  double eps = 1e-5, std::size_t min_coords = 200,
                  std::uint64_t seed = 42, const ForwardOptions& options = {});

struct AdamState {
  Matrix ngram_m, ngram_v;
  std::vector<std::uint64_t> ngram_steps;  // per-row update counts
  Matrix transform_m, transform_v;
  Vec gate_weight_m, gate_weight_v;
  double gate_bias_m = 0.0, gate_bias_v = 0.0;
  double single_logit_m = 0.0, single_logit_v = 0.0;

  static AdamState like(const FcmParameters& params);
};

// One Adam update. Dense groups use the global step index t for bias
// correction; n-gram rows are updated lazily, each keeping its own step
// count, so untouched rows stay bit-identical.
void adam_step(FcmParameters& params, const GradientSet& grads, AdamState& state,
               std::uint64_t t, const TrainConfig& config);

struct TrainResult {
  FcmParameters params;
  NgramVocabulary vocab;
  std::vector<double> epoch_loss;  // mean batch loss per epoch
};

// Full training run: selects trainable words (corpus count >= min_word_count
// and present in the table), builds the n-gram vocabulary over them,
// initializes parameters from the seed and optimizes with Adam over freshly
// sampled instances each epoch.
TrainResult train(const TrainConfig& config, const EmbeddingTable& table,
                  const CorpusIndex& corpus);

}  // namespace fcm
