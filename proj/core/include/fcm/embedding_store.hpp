#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace fcm {

// Immutable word -> vector table defining the target embedding space.
// Row norms are cached at construction so cosine scans do not recompute them.
class EmbeddingTable {
 public:
  EmbeddingTable(std::vector<std::string> words, std::vector<double> data,
                 std::size_t dim);

  std::size_t size() const { return words_.size(); }
  std::size_t dim() const { return dim_; }

  bool contains(const std::string& word) const {
    return index_.find(word) != index_.end();
  }

  std::optional<std::size_t> index_of(const std::string& word) const {
    const auto it = index_.find(word);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  // Throws if the word is absent.
  std::span<const double> vector(const std::string& word) const;

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }

  const std::string& word(std::size_t i) const { return words_[i]; }
  double row_norm(std::size_t i) const { return norms_[i]; }

  // Number of words that appeared more than once in the source file; the last
  // occurrence wins. Callers surface this as a warning.
  std::size_t duplicate_count() const { return duplicates_; }
  void set_duplicate_count(std::size_t n) { duplicates_ = n; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> data_;  // size() * dim_, row-major
  std::vector<double> norms_;
  std::size_t dim_;
  std::size_t duplicates_ = 0;
};

// Text format: one word per line followed by its components, space-separated.
// An optional first line "<count> <dim>" is recognized and skipped. Duplicate
// words keep the last occurrence; the count is recorded on the table.
EmbeddingTable load_embeddings(std::istream& in);
EmbeddingTable load_embeddings_file(const std::string& path);

// Writes a "<count> <dim>" header and one row per word with enough digits
// that loading the output reproduces every value exactly.
void save_embeddings(const EmbeddingTable& table, std::ostream& out);
void save_embeddings_file(const EmbeddingTable& table, const std::string& path);

// Cosine of the angle between u and v; 0 if either vector has zero norm.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

struct Neighbor {
  std::string word;
  double similarity;
};

// Top-n words by cosine similarity to the query, descending; ties broken by
// table insertion order. Words in `exclude` are skipped.
std::vector<Neighbor> nearest_neighbors(
    const EmbeddingTable& table, std::span<const double> query, std::size_t top_n,
    const std::unordered_set<std::string>& exclude = {});

}  // namespace fcm
