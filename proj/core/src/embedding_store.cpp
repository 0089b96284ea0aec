#include "fcm/embedding_store.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <queue>
#include <sstream>
#include <stdexcept>

#include "fcm/linalg.hpp"

namespace fcm {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

bool parse_size(std::string_view s, std::size_t& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

[[noreturn]] void fail(std::size_t line_no, const std::string& what) {
  throw std::runtime_error("embeddings: line " + std::to_string(line_no) + ": " +
                           what);
}

}  // namespace

EmbeddingTable::EmbeddingTable(std::vector<std::string> words,
                               std::vector<double> data, std::size_t dim)
    : words_(std::move(words)), data_(std::move(data)), dim_(dim) {
  if (dim_ == 0) throw std::invalid_argument("embedding table: dimension is zero");
  if (data_.size() != words_.size() * dim_)
    throw std::invalid_argument("embedding table: data size does not match");
  index_.reserve(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (!index_.emplace(words_[i], i).second)
      throw std::invalid_argument("embedding table: duplicate word " + words_[i]);
  }
  norms_.resize(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) norms_[i] = norm(row(i));
}

std::span<const double> EmbeddingTable::vector(const std::string& word) const {
  const auto idx = index_of(word);
  if (!idx) throw std::out_of_range("embedding table: unknown word " + word);
  return row(*idx);
}

EmbeddingTable load_embeddings(std::istream& in) {
  std::vector<std::string> words;
  std::unordered_map<std::string, std::size_t> index;
  std::vector<double> data;
  std::size_t dim = 0;
  std::size_t line_no = 0;
  std::size_t duplicates = 0;
  bool first_content = true;

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = split_fields(line);
    if (fields.empty()) continue;
    if (first_content) {
      first_content = false;
      std::size_t count = 0, header_dim = 0;
      if (fields.size() == 2 && parse_size(fields[0], count) &&
          parse_size(fields[1], header_dim)) {
        dim = header_dim;
        continue;
      }
    }
    if (fields.size() < 2) fail(line_no, "expected a word and at least one value");
    const std::size_t k = fields.size() - 1;
    if (dim == 0) {
      dim = k;
    } else if (k != dim) {
      fail(line_no, "expected " + std::to_string(dim) + " values, got " +
                        std::to_string(k));
    }
    std::vector<double> row(k);
    for (std::size_t i = 0; i < k; ++i) {
      double v = 0.0;
      if (!parse_double(fields[i + 1], v))
        fail(line_no, "non-numeric value '" + std::string(fields[i + 1]) + "'");
      if (!std::isfinite(v))
        fail(line_no, "non-finite value '" + std::string(fields[i + 1]) + "'");
      row[i] = v;
    }
    std::string word(fields[0]);
    const auto it = index.find(word);
    if (it != index.end()) {
      ++duplicates;
      std::copy(row.begin(), row.end(), data.begin() + it->second * dim);
    } else {
      index.emplace(std::move(word), words.size());
      words.emplace_back(fields[0]);
      data.insert(data.end(), row.begin(), row.end());
    }
  }
  if (words.empty()) throw std::runtime_error("embeddings: empty input");

  EmbeddingTable table(std::move(words), std::move(data), dim);
  table.set_duplicate_count(duplicates);
  return table;
}

EmbeddingTable load_embeddings_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("embeddings: cannot open " + path);
  return load_embeddings(in);
}

void save_embeddings(const EmbeddingTable& table, std::ostream& out) {
  out << table.size() << ' ' << table.dim() << '\n';
  char buf[64];
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.word(i);
    for (const double v : table.row(i)) {
      std::snprintf(buf, sizeof(buf), " %.17g", v);
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("embeddings: write failed");
}

void save_embeddings_file(const EmbeddingTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("embeddings: cannot open " + path + " for writing");
  save_embeddings(table, out);
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw std::invalid_argument("cosine_similarity: dimension mismatch");
  const double nu = norm(u);
  const double nv = norm(v);
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return dot(u, v) / (nu * nv);
}

std::vector<Neighbor> nearest_neighbors(
    const EmbeddingTable& table, std::span<const double> query, std::size_t top_n,
    const std::unordered_set<std::string>& exclude) {
  if (query.size() != table.dim())
    throw std::invalid_argument("nearest_neighbors: dimension mismatch");
  if (top_n == 0) return {};

  const double qn = norm(query);
  using Entry = std::pair<double, std::size_t>;  // similarity, table index
  const auto better = [](const Entry& a, const Entry& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  };
  // Top of the queue is the worst kept entry.
  std::priority_queue<Entry, std::vector<Entry>, decltype(better)> worst(better);
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (!exclude.empty() && exclude.count(table.word(i))) continue;
    const double rn = table.row_norm(i);
    const double sim =
        (qn == 0.0 || rn == 0.0) ? 0.0 : dot(query, table.row(i)) / (qn * rn);
    if (worst.size() < top_n) {
      worst.emplace(sim, i);
    } else if (better({sim, i}, worst.top())) {
      worst.pop();
      worst.emplace(sim, i);
    }
  }

  std::vector<Entry> kept;
  kept.reserve(worst.size());
  while (!worst.empty()) {
    kept.push_back(worst.top());
    worst.pop();
  }
  std::sort(kept.begin(), kept.end(), better);
  std::vector<Neighbor> out;
  out.reserve(kept.size());
  for (const auto& [sim, idx] : kept) out.push_back({table.word(idx), sim});
  return out;
}

}  // namespace fcm
