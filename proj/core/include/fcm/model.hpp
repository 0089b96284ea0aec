#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fcm/linalg.hpp"
#include "fcm/ngram.hpp"

namespace fcm {

class EmbeddingTable;

// How the surface-form and context estimates are combined:
//   FormOnly        result = form estimate (alpha fixed at 0)
//   ContextOnly     result = transformed context average (alpha fixed at 1)
//   SingleParameter alpha = sigmoid of one learned scalar
//   Gated           alpha = sigmoid of a learned linear gate over the raw
//                   context average and the form estimate
enum class Mode { FormOnly, ContextOnly, SingleParameter, Gated };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& name);

// All learnable state. The n-gram table row 0 belongs to the unknown id.
struct FcmParameters {
  Mode mode = Mode::Gated;
  std::size_t dim = 0;
  Matrix ngram_table;    // vocabulary size x dim
  Matrix transform;      // dim x dim, applied to the raw context average
  Vec gate_weight;       // 2 * dim, context half first, then form half
  double gate_bias = 0.0;
  double single_logit = 0.0;

  double single_alpha() const;

  bool operator==(const FcmParameters& other) const = default;
};

struct ForwardOptions {
  // Drop the target word's own occurrences from its context average.
  bool exclude_target = true;
};

struct ForwardTrace {
  Vec form;            // n-gram average
  Vec context_raw;     // context average before the linear transform
  Vec context;         // transform * context_raw
  double alpha = 0.0;
  std::size_t context_word_count = 0;  // occurrences averaged into context_raw
  Vec result;
  std::vector<std::uint32_t> gram_ids;  // extraction-order multiset
};

double sigmoid(double x);

// Mean of the n-gram table rows selected by ids (with multiplicity).
// Throws when ids is empty.
Vec form_embedding(std::span<const std::uint32_t> gram_ids,
                   const FcmParameters& params);

// Mean of the table vectors of all in-table context word occurrences, and the
// number of occurrences averaged. Returns a zero vector and 0 when nothing in
// the contexts is covered by the table.
std::pair<Vec, std::size_t> context_embedding(
    const std::vector<std::vector<std::string>>& contexts,
    const std::string& target, const EmbeddingTable& table,
    bool exclude_target = true);

// sigmoid(w . [context_raw ; form] + b). The gate reads the raw context
// average, not the transformed one.
double gate_alpha(std::span<const double> context_raw,
                  std::span<const double> form, const FcmParameters& params);

// Full inference for one word. When no context occurrence is covered by the
// table and the mode is not FormOnly, alpha is forced to 0 so the result
// falls back to the form estimate.
ForwardTrace forward(const std::string& word,
                     const std::vector<std::vector<std::string>>& contexts,
                     const FcmParameters& params, const NgramVocabulary& vocab,
                     const EmbeddingTable& table,
                     const ForwardOptions& options = {});

// A trained model bundled with everything needed to run it later: parameters,
// the n-gram vocabulary, and the training configuration as flat key-values.
struct Checkpoint {
  FcmParameters params;
  NgramVocabulary vocab;
  std::map<std::string, std::string> config;
};

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

namespace detail {

// context_embedding with one token occurrence masked out; used by ablation.
std::pair<Vec, std::size_t> context_embedding_skip(
    const std::vector<std::vector<std::string>>& contexts,
    const std::string& target, const EmbeddingTable& table, bool exclude_target,
    std::size_t skip_sentence, std::size_t skip_token);

}  // namespace detail

}  // namespace fcm
