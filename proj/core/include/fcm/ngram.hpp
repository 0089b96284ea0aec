#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace fcm {

// Padded character n-gram extraction. A word is treated as a sequence of
// Unicode code points with a start pad prepended and an end pad appended;
// each pad counts as a single symbol. N-grams are carried as UTF-8 byte
// strings in which the pads appear as the control bytes 0x01/0x02, which the
// tokenizer never emits, so they cannot collide with corpus text.
inline constexpr char kStartPad = '\x01';
inline constexpr char kEndPad = '\x02';

// All n-grams of length n_min..n_max of the padded word, as a multiset in a
// fixed order: by length, then by position. A word of l symbols yields
// l + 3 - n grams of length n (none when n > l + 2).
std::vector<std::string> extract_ngrams(const std::string& word, int n_min,
                                        int n_max);

// Pads rendered as "<s>" / "<e>" for display and serialization.
std::string escape_ngram(const std::string& gram);
std::string unescape_ngram(const std::string& text);

// Maps n-grams to dense ids. Id 0 is reserved for unknown n-grams, so every
// non-empty word has a surface-form embedding even if none of its n-grams
// were seen in training.
class NgramVocabulary {
 public:
  static constexpr std::uint32_t kUnkId = 0;

  NgramVocabulary() : NgramVocabulary(3, 5, 3) {}
  NgramVocabulary(int n_min, int n_max, int min_word_support);

  int n_min() const { return n_min_; }
  int n_max() const { return n_max_; }
  int min_word_support() const { return min_word_support_; }

  // Number of ids including the unknown id.
  std::size_t size() const { return grams_.size(); }

  std::uint32_t id_of(const std::string& gram) const {
    const auto it = ids_.find(gram);
    return it == ids_.end() ? kUnkId : it->second;
  }

  // The n-gram for a non-unknown id; throws on 0 or out of range.
  const std::string& gram(std::uint32_t id) const;

  // Assigns the next dense id if the gram has none yet; returns its id.
  std::uint32_t insert(const std::string& gram);

  void save(std::ostream& out) const;
  static NgramVocabulary load(std::istream& in);

 private:
  int n_min_;
  int n_max_;
  int min_word_support_;
  std::unordered_map<std::string, std::uint32_t> ids_;
  std::vector<std::string> grams_;  // grams_[0] is the unknown placeholder
};

// Two passes over the distinct words: count, for each n-gram, the number of
// distinct words containing it, then assign dense ids in first-seen order to
// the n-grams supported by at least min_word_support words.
NgramVocabulary build_ngram_vocab(const std::vector<std::string>& words,
                                  int n_min = 3, int n_max = 5,
                                  int min_word_support = 3);

std::vector<std::uint32_t> map_ngrams(const std::vector<std::string>& grams,
                                      const NgramVocabulary& vocab);

}  // namespace fcm
