#include "fcm/model.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fcm/embedding_store.hpp"

namespace fcm {

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::FormOnly: return "form";
    case Mode::ContextOnly: return "context";
    case Mode::SingleParameter: return "single";
    case Mode::Gated: return "gated";
  }
  throw std::logic_error("to_string: bad mode");
}

Mode mode_from_string(const std::string& name) {
  if (name == "form") return Mode::FormOnly;
  if (name == "context") return Mode::ContextOnly;
  if (name == "single") return Mode::SingleParameter;
  if (name == "gated") return Mode::Gated;
  throw std::invalid_argument("unknown mode '" + name +
                              "' (expected form, context, single or gated)");
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double FcmParameters::single_alpha() const { return sigmoid(single_logit); }

Vec form_embedding(std::span<const std::uint32_t> gram_ids,
                   const FcmParameters& params) {
  if (gram_ids.empty())
    throw std::invalid_argument("form_embedding: no n-grams");
  Vec out(params.dim, 0.0);
  for (const auto id : gram_ids) {
    if (id >= params.ngram_table.rows)
      throw std::out_of_range("form_embedding: n-gram id out of range");
    axpy(1.0, params.ngram_table.row(id), out);
  }
  scale(out, 1.0 / static_cast<double>(gram_ids.size()));
  return out;
}

namespace {

// Shared by context_embedding and the ablation path, which removes a single
// token occurrence (skip_sentence/skip_token) from the average.
std::pair<Vec, std::size_t> context_embedding_masked(
    const std::vector<std::vector<std::string>>& contexts,
    const std::string& target, const EmbeddingTable& table, bool exclude_target,
    std::size_t skip_sentence, std::size_t skip_token) {
  Vec sum(table.dim(), 0.0);
  std::size_t count = 0;
  for (std::size_t s = 0; s < contexts.size(); ++s) {
    for (std::size_t t = 0; t < contexts[s].size(); ++t) {
      if (s == skip_sentence && t == skip_token) continue;
      const auto& token = contexts[s][t];
      if (exclude_target && token == target) continue;
      const auto idx = table.index_of(token);
      if (!idx) continue;
      axpy(1.0, table.row(*idx), sum);
      ++count;
    }
  }
  if (count > 0) scale(sum, 1.0 / static_cast<double>(count));
  return {std::move(sum), count};
}

constexpr std::size_t kNoSkip = static_cast<std::size_t>(-1);

}  // namespace

std::pair<Vec, std::size_t> context_embedding(
    const std::vector<std::vector<std::string>>& contexts,
    const std::string& target, const EmbeddingTable& table,
    bool exclude_target) {
  return context_embedding_masked(contexts, target, table, exclude_target,
                                  kNoSkip, kNoSkip);
}

namespace detail {

std::pair<Vec, std::size_t> context_embedding_skip(
    const std::vector<std::vector<std::string>>& contexts,
    const std::string& target, const EmbeddingTable& table, bool exclude_target,
    std::size_t skip_sentence, std::size_t skip_token) {
  return context_embedding_masked(contexts, target, table, exclude_target,
                                  skip_sentence, skip_token);
}

}  // namespace detail

double gate_alpha(std::span<const double> context_raw,
                  std::span<const double> form, const FcmParameters& params) {
  const std::size_t k = params.dim;
  if (context_raw.size() != k || form.size() != k)
    throw std::invalid_argument("gate_alpha: dimension mismatch");
  if (params.gate_weight.size() != 2 * k)
    throw std::invalid_argument("gate_alpha: gate weight has wrong size");
  double z = params.gate_bias;
  for (std::size_t i = 0; i < k; ++i) z += params.gate_weight[i] * context_raw[i];
  for (std::size_t i = 0; i < k; ++i) z += params.gate_weight[k + i] * form[i];
  return sigmoid(z);
}

ForwardTrace forward(const std::string& word,
                     const std::vector<std::vector<std::string>>& contexts,
                     const FcmParameters& params, const NgramVocabulary& vocab,
                     const EmbeddingTable& table, const ForwardOptions& options) {
  if (word.empty()) throw std::invalid_argument("forward: empty word");

  ForwardTrace trace;
  trace.gram_ids =
      map_ngrams(extract_ngrams(word, vocab.n_min(), vocab.n_max()), vocab);
  trace.form = form_embedding(trace.gram_ids, params);

  auto [context_raw, count] =
      context_embedding(contexts, word, table, options.exclude_target);
  trace.context_raw = std::move(context_raw);
  trace.context_word_count = count;
  trace.context = matvec(params.transform, trace.context_raw);

  double alpha = 0.0;
  switch (params.mode) {
    case Mode::FormOnly: alpha = 0.0; break;
    case Mode::ContextOnly: alpha = 1.0; break;
    case Mode::SingleParameter: alpha = params.single_alpha(); break;
    case Mode::Gated:
      alpha = gate_alpha(trace.context_raw, trace.form, params);
      break;
  }
  if (count == 0) alpha = 0.0;
  trace.alpha = alpha;

  trace.result.assign(params.dim, 0.0);
  axpy(alpha, trace.context, trace.result);
  axpy(1.0 - alpha, trace.form, trace.result);
  return trace;
}

namespace {

constexpr char kMagic[8] = {'F', 'C', 'M', 'C', 'K', 'P', 'T', '\x01'};

void write_u64(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(bytes, 8);
}

std::uint64_t read_u64(std::istream& in) {
  char bytes[8];
  in.read(bytes, 8);
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i]))
         << (8 * i);
  return v;
}

void write_f64(std::ostream& out, double v) {
  write_u64(out, std::bit_cast<std::uint64_t>(v));
}

double read_f64(std::istream& in) {
  return std::bit_cast<double>(read_u64(in));
}

void write_str(std::ostream& out, const std::string& s) {
  write_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_str(std::istream& in, std::uint64_t max_len = 1ull << 32) {
  const auto len = read_u64(in);
  if (len > max_len) throw std::runtime_error("checkpoint: corrupt string length");
  std::string s(static_cast<std::size_t>(len), '\0');
  in.read(s.data(), static_cast<std::streamsize>(len));
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return s;
}

void write_matrix(std::ostream& out, const Matrix& m) {
  write_u64(out, m.rows);
  write_u64(out, m.cols);
  for (const double v : m.data) write_f64(out, v);
}

Matrix read_matrix(std::istream& in) {
  const auto rows = read_u64(in);
  const auto cols = read_u64(in);
  if (rows > (1ull << 32) || cols > (1ull << 20))
    throw std::runtime_error("checkpoint: corrupt matrix header");
  Matrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
  for (double& v : m.data) v = read_f64(in);
  return m;
}

}  // namespace

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  out.write(kMagic, sizeof(kMagic));
  write_str(out, "f64");
  write_str(out, to_string(checkpoint.params.mode));
  write_u64(out, checkpoint.params.dim);

  std::ostringstream vocab_text;
  checkpoint.vocab.save(vocab_text);
  write_str(out, vocab_text.str());

  write_matrix(out, checkpoint.params.ngram_table);
  write_matrix(out, checkpoint.params.transform);
  write_u64(out, checkpoint.params.gate_weight.size());
  for (const double v : checkpoint.params.gate_weight) write_f64(out, v);
  write_f64(out, checkpoint.params.gate_bias);
  write_f64(out, checkpoint.params.single_logit);

  write_u64(out, checkpoint.config.size());
  for (const auto& [key, value] : checkpoint.config) {
    write_str(out, key);
    write_str(out, value);
  }
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: " + path + " is not a checkpoint file");
  if (read_str(in) != "f64")
    throw std::runtime_error("checkpoint: unsupported precision");

  Checkpoint checkpoint;
  checkpoint.params.mode = mode_from_string(read_str(in));
  checkpoint.params.dim = static_cast<std::size_t>(read_u64(in));

  std::istringstream vocab_text(read_str(in));
  checkpoint.vocab = NgramVocabulary::load(vocab_text);

  checkpoint.params.ngram_table = read_matrix(in);
  checkpoint.params.transform = read_matrix(in);
  const auto gate_size = read_u64(in);
  if (gate_size != 2 * checkpoint.params.dim)
    throw std::runtime_error("checkpoint: corrupt gate weight size");
  checkpoint.params.gate_weight.resize(static_cast<std::size_t>(gate_size));
  for (double& v : checkpoint.params.gate_weight) v = read_f64(in);
  checkpoint.params.gate_bias = read_f64(in);
  checkpoint.params.single_logit = read_f64(in);

  const auto config_size = read_u64(in);
  if (config_size > (1ull << 20))
    throw std::runtime_error("checkpoint: corrupt config size");
  for (std::uint64_t i = 0; i < config_size; ++i) {
    std::string key = read_str(in);
    checkpoint.config[std::move(key)] = read_str(in);
  }

  const auto& p = checkpoint.params;
  if (p.ngram_table.cols != p.dim || p.transform.rows != p.dim ||
      p.transform.cols != p.dim ||
      p.ngram_table.rows != checkpoint.vocab.size())
    throw std::runtime_error("checkpoint: inconsistent shapes");
  return checkpoint;
}

}  // namespace fcm
