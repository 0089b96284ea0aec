#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fcm/rng.hpp"

namespace fcm {

class EmbeddingTable;

struct TokenizeOptions {
  bool lowercase = true;
};

// Splits a line into word tokens: alphanumeric runs with everything else
// acting as a separator. Lowercasing covers ASCII and Latin-1; see unicode.hpp
// for the exact character classes.
std::vector<std::string> tokenize(std::string_view line,
                                  const TokenizeOptions& options = {});

// Frequency counts and a word -> sentence index over a tokenized corpus.
// Tokens are interned; sentences are stored as id sequences. Sentence ids are
// assigned in input order; lines with no tokens are dropped.
class CorpusIndex {
 public:
  static CorpusIndex build(std::istream& corpus,
                           const TokenizeOptions& options = {});
  static CorpusIndex build_from_file(const std::string& path,
                                     const TokenizeOptions& options = {});
  static CorpusIndex build_from_sentences(
      const std::vector<std::vector<std::string>>& sentences);

  std::size_t sentence_count() const { return sentences_.size(); }
  std::size_t vocabulary_size() const { return words_.size(); }

  // Distinct words in first-seen order.
  const std::vector<std::string>& words() const { return words_; }

  bool contains(const std::string& word) const {
    return ids_.find(word) != ids_.end();
  }

  // Total number of occurrences; 0 for words never seen.
  std::uint64_t frequency(const std::string& word) const;

  // Ids of the sentences containing the word, ascending and distinct.
  // Throws if the word is absent.
  const std::vector<std::uint32_t>& occurrences(const std::string& word) const;

  std::vector<std::string> sentence(std::size_t id) const;

 private:
  void add_sentence(std::vector<std::uint32_t> token_ids);
  std::uint32_t intern(const std::string& token);

  std::vector<std::string> words_;
  std::unordered_map<std::string, std::uint32_t> ids_;
  std::vector<std::uint64_t> freq_;
  std::vector<std::vector<std::uint32_t>> occurrences_;
  std::vector<std::vector<std::uint32_t>> sentences_;
};

// How many training instances a word with this corpus count contributes per
// epoch: one per hundred occurrences, capped at five.
int instances_per_word(std::uint64_t count);

// Samples `m` context sentences for the word: without replacement when the
// word appears in at least m distinct sentences, with replacement otherwise.
// Throws if the word is absent from the index.
std::vector<std::vector<std::string>> sample_context_set(
    const std::string& word, const CorpusIndex& index, std::size_t m, Rng& rng);

struct TrainingInstance {
  std::string word;
  std::vector<std::vector<std::string>> contexts;
  int epoch_tag = 0;
};

// Emits one epoch's training instances lazily in seeded-shuffle order. A word
// qualifies when its corpus count reaches min_count and the embedding table
// contains it; it then contributes instances_per_word(count) instances, each
// with freshly sampled contexts.
class TrainingStream {
 public:
  TrainingStream(const CorpusIndex& index, const EmbeddingTable& table,
                 std::uint64_t min_count, std::size_t contexts_per_instance,
                 int epoch_tag, Rng rng);

  // Total number of instances this epoch.
  std::size_t size() const { return word_ids_.size(); }

  std::optional<TrainingInstance> next();

 private:
  const CorpusIndex* index_;
  std::size_t contexts_per_instance_;
  int epoch_tag_;
  Rng rng_;
  std::vector<std::uint32_t> word_ids_;
  std::size_t pos_ = 0;
};

// Drains a TrainingStream into a vector; convenient for tests and small runs.
std::vector<TrainingInstance> build_training_set(
    const CorpusIndex& index, const EmbeddingTable& table,
    std::uint64_t min_count, std::size_t contexts_per_instance, int epoch_tag,
    Rng rng);

}  // namespace fcm
