#include "fcm/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <stdexcept>
#include <unordered_set>

#include "fcm/embedding_store.hpp"
#include "fcm/unicode.hpp"

namespace fcm {

std::vector<std::string> tokenize(std::string_view line,
                                  const TokenizeOptions& options) {
  std::vector<std::string> out;
  std::string current;
  std::size_t i = 0;
  while (i < line.size()) {
    const auto d = decode_utf8_at(line, i);
    i += static_cast<std::size_t>(d.length);
    if (is_word_char(d.cp)) {
      append_utf8(current, options.lowercase ? to_lower_cp(d.cp) : d.cp);
    } else if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

std::uint32_t CorpusIndex::intern(const std::string& token) {
  const auto it = ids_.find(token);
  if (it != ids_.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(words_.size());
  words_.push_back(token);
  ids_.emplace(token, id);
  freq_.push_back(0);
  occurrences_.emplace_back();
  return id;
}

void CorpusIndex::add_sentence(std::vector<std::uint32_t> token_ids) {
  if (token_ids.empty()) return;
  const auto sentence_id = static_cast<std::uint32_t>(sentences_.size());
  for (const auto id : token_ids) {
    ++freq_[id];
    auto& occ = occurrences_[id];
    if (occ.empty() || occ.back() != sentence_id) occ.push_back(sentence_id);
  }
  sentences_.push_back(std::move(token_ids));
}

CorpusIndex CorpusIndex::build(std::istream& corpus,
                               const TokenizeOptions& options) {
  CorpusIndex index;
  std::string line;
  while (std::getline(corpus, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::uint32_t> ids;
    for (const auto& token : tokenize(line, options))
      ids.push_back(index.intern(token));
    index.add_sentence(std::move(ids));
  }
  return index;
}

CorpusIndex CorpusIndex::build_from_file(const std::string& path,
                                         const TokenizeOptions& options) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("corpus: cannot open " + path);
  return build(in, options);
}

CorpusIndex CorpusIndex::build_from_sentences(
    const std::vector<std::vector<std::string>>& sentences) {
  CorpusIndex index;
  for (const auto& sentence : sentences) {
    std::vector<std::uint32_t> ids;
    ids.reserve(sentence.size());
    for (const auto& token : sentence) {
      if (token.empty())
        throw std::invalid_argument("corpus: empty token in sentence");
      ids.push_back(index.intern(token));
    }
    index.add_sentence(std::move(ids));
  }
  return index;
}

std::uint64_t CorpusIndex::frequency(const std::string& word) const {
  const auto it = ids_.find(word);
  return it == ids_.end() ? 0 : freq_[it->second];
}

const std::vector<std::uint32_t>& CorpusIndex::occurrences(
    const std::string& word) const {
  const auto it = ids_.find(word);
  if (it == ids_.end())
    throw std::out_of_range("corpus: word not in index: " + word);
  return occurrences_[it->second];
}

std::vector<std::string> CorpusIndex::sentence(std::size_t id) const {
  if (id >= sentences_.size())
    throw std::out_of_range("corpus: sentence id out of range");
  std::vector<std::string> out;
  out.reserve(sentences_[id].size());
  for (const auto token_id : sentences_[id]) out.push_back(words_[token_id]);
  return out;
}

int instances_per_word(std::uint64_t count) {
  return static_cast<int>(std::min<std::uint64_t>(count / 100, 5));
}

std::vector<std::vector<std::string>> sample_context_set(
    const std::string& word, const CorpusIndex& index, std::size_t m, Rng& rng) {
  const auto& occ = index.occurrences(word);
  std::vector<std::uint32_t> picked;
  picked.reserve(m);
  if (occ.size() >= m) {
    // Floyd's algorithm: a uniform m-subset without copying the full list.
    std::unordered_set<std::uint32_t> chosen;
    for (std::size_t j = occ.size() - m; j < occ.size(); ++j) {
      const auto t = static_cast<std::size_t>(rng.below(j + 1));
      if (chosen.insert(occ[t]).second) {
        picked.push_back(occ[t]);
      } else {
        chosen.insert(occ[j]);
        picked.push_back(occ[j]);
      }
    }
  } else {
    for (std::size_t i = 0; i < m; ++i)
      picked.push_back(occ[static_cast<std::size_t>(rng.below(occ.size()))]);
  }
  std::vector<std::vector<std::string>> contexts;
  contexts.reserve(picked.size());
  for (const auto sid : picked) contexts.push_back(index.sentence(sid));
  return contexts;
}

TrainingStream::TrainingStream(const CorpusIndex& index,
                               const EmbeddingTable& table,
                               std::uint64_t min_count,
                               std::size_t contexts_per_instance, int epoch_tag,
                               Rng rng)
    : index_(&index),
      contexts_per_instance_(contexts_per_instance),
      epoch_tag_(epoch_tag),
      rng_(rng) {
  const auto& words = index.words();
  for (std::uint32_t id = 0; id < words.size(); ++id) {
    const auto count = index.frequency(words[id]);
    if (count < min_count || !table.contains(words[id])) continue;
    const int n = instances_per_word(count);
    for (int i = 0; i < n; ++i) word_ids_.push_back(id);
  }
  rng_.shuffle(word_ids_);
}

std::optional<TrainingInstance> TrainingStream::next() {
  if (pos_ >= word_ids_.size()) return std::nullopt;
  const auto& word = index_->words()[word_ids_[pos_++]];
  TrainingInstance instance;
  instance.word = word;
  instance.contexts =
      sample_context_set(word, *index_, contexts_per_instance_, rng_);
  instance.epoch_tag = epoch_tag_;
  return instance;
}

std::vector<TrainingInstance> build_training_set(
    const CorpusIndex& index, const EmbeddingTable& table,
    std::uint64_t min_count, std::size_t contexts_per_instance, int epoch_tag,
    Rng rng) {
  TrainingStream stream(index, table, min_count, contexts_per_instance,
                        epoch_tag, rng);
  std::vector<TrainingInstance> out;
  out.reserve(stream.size());
  while (auto instance = stream.next()) out.push_back(std::move(*instance));
  return out;
}

}  // namespace fcm
