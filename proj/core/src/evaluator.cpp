#include "fcm/evaluator.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include "fcm/embedding_store.hpp"
#include "fcm/linalg.hpp"
#include "fcm/rng.hpp"

namespace fcm {

namespace {

// Runs fn(0..n-1); each index writes only its own output slot, so the
// schedule cannot affect results. The first exception wins and is rethrown.
void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& fn) {
  const auto capped =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n);
  if (capped <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  std::vector<std::thread> threads;
  threads.reserve(capped);
  for (std::size_t w = 0; w < capped; ++w) {
    threads.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<double> mid_ranks(std::span<const double> xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

[[noreturn]] void fail_line(const std::string& what_file, std::size_t line_no,
                            const std::string& what) {
  throw std::runtime_error(what_file + ": line " + std::to_string(line_no) +
                           ": " + what);
}

}  // namespace

std::size_t rank_of(std::span<const double> inferred, const std::string& word,
                    const EmbeddingTable& table) {
  if (inferred.size() != table.dim())
    throw std::invalid_argument("rank_of: dimension mismatch");
  const auto target = table.index_of(word);
  if (!target) throw std::out_of_range("rank_of: word not in table: " + word);

  const double qn = norm(inferred);
  const auto similarity = [&](std::size_t i) {
    const double rn = table.row_norm(i);
    return (qn == 0.0 || rn == 0.0) ? 0.0 : dot(inferred, table.row(i)) / (qn * rn);
  };
  const double target_sim = similarity(*target);
  std::size_t greater = 0;
  for (std::size_t i = 0; i < table.size(); ++i)
    if (similarity(i) > target_sim) ++greater;
  return greater + 1;
}

RankSummary summarize_ranks(std::vector<std::size_t> ranks) {
  if (ranks.empty())
    throw std::invalid_argument("summarize_ranks: empty rank list");
  std::sort(ranks.begin(), ranks.end());
  const std::size_t n = ranks.size();
  RankSummary summary;
  summary.median = (n % 2 == 1)
                       ? static_cast<double>(ranks[n / 2])
                       : (static_cast<double>(ranks[n / 2 - 1]) +
                          static_cast<double>(ranks[n / 2])) /
                             2.0;
  double sum = 0.0;
  for (const auto r : ranks) sum += 1.0 / static_cast<double>(r);
  summary.mrr = sum / static_cast<double>(n);
  return summary;
}

double spearman_rho(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size())
    throw std::invalid_argument("spearman_rho: length mismatch");
  if (xs.size() < 2)
    throw std::invalid_argument("spearman_rho: need at least two points");
  const auto rx = mid_ranks(xs);
  const auto ry = mid_ranks(ys);
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = rx[i] - mx;
    const double dy = ry[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw std::domain_error("spearman_rho: degenerate input (zero rank variance)");
  return sxy / std::sqrt(sxx * syy);
}

DnResult eval_dn(const std::vector<DnRecord>& records,
                 const FcmParameters& params, const NgramVocabulary& vocab,
                 const EmbeddingTable& table, const DnOptions& options) {
  if (records.empty()) throw std::invalid_argument("eval_dn: no records");
  DnResult result;
  result.ranks.resize(records.size());
  std::vector<std::size_t> ranks(records.size());
  const ForwardOptions forward_options{options.exclude_self};
  parallel_for(records.size(), options.workers, [&](std::size_t i) {
    const auto& record = records[i];
    const auto trace = forward(record.word, {record.definition}, params, vocab,
                               table, forward_options);
    ranks[i] = rank_of(trace.result, record.word, table);
    result.ranks[i] = {record.word, ranks[i]};
  });
  result.summary = summarize_ranks(ranks);
  return result;
}

CrwResult eval_crw(const std::vector<CrwPair>& pairs,
                   const FcmParameters& params, const NgramVocabulary& vocab,
                   const EmbeddingTable& table,
                   const std::vector<std::size_t>& context_counts,
                   const CrwOptions& options) {
  if (pairs.empty()) throw std::invalid_argument("eval_crw: no pairs");
  if (context_counts.empty())
    throw std::invalid_argument("eval_crw: no context counts");
  for (const auto n : context_counts)
    if (n < 1)
      throw std::invalid_argument("eval_crw: context counts must be >= 1");
  for (const auto& pair : pairs) {
    if (!table.contains(pair.w1) && pair.contexts1.empty())
      throw std::runtime_error("eval_crw: word '" + pair.w1 +
                               "' has no table vector and no contexts");
    if (!table.contains(pair.w2) && pair.contexts2.empty())
      throw std::runtime_error("eval_crw: word '" + pair.w2 +
                               "' has no table vector and no contexts");
  }

  // The shuffle for a word depends only on the seed and the word, so the same
  // word gets the same context order in every pair and for every count.
  const Rng base(options.seed);
  struct Prepared {
    std::vector<std::vector<std::string>> shuffled1, shuffled2;
    bool w1_in_table = false;
  };
  std::vector<Prepared> prepared(pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    prepared[p].w1_in_table = table.contains(pairs[p].w1);
    if (!prepared[p].w1_in_table) {
      prepared[p].shuffled1 = pairs[p].contexts1;
      Rng rng = base.child(pairs[p].w1);
      rng.shuffle(prepared[p].shuffled1);
    }
    prepared[p].shuffled2 = pairs[p].contexts2;
    Rng rng = base.child(pairs[p].w2);
    rng.shuffle(prepared[p].shuffled2);
  }

  const ForwardOptions forward_options{options.exclude_target};
  std::vector<std::vector<double>> scores(
      context_counts.size(), std::vector<double>(pairs.size(), 0.0));
  std::vector<double> humans(pairs.size());

  parallel_for(pairs.size(), options.workers, [&](std::size_t p) {
    const auto& pair = pairs[p];
    humans[p] = pair.score;
    const auto prefix = [](const std::vector<std::vector<std::string>>& all,
                           std::size_t n) {
      const auto take = std::min(n, all.size());
      return std::vector<std::vector<std::string>>(all.begin(),
                                                   all.begin() + take);
    };
    for (std::size_t ci = 0; ci < context_counts.size(); ++ci) {
      const std::size_t n = context_counts[ci];
      const auto v2 = forward(pair.w2, prefix(prepared[p].shuffled2, n), params,
                              vocab, table, forward_options)
                          .result;
      Vec v1;
      if (prepared[p].w1_in_table) {
        const auto row = table.vector(pair.w1);
        v1.assign(row.begin(), row.end());
      } else {
        v1 = forward(pair.w1, prefix(prepared[p].shuffled1, n), params, vocab,
                     table, forward_options)
                 .result;
      }
      scores[ci][p] = cosine_similarity(v1, v2);
    }
  });

  CrwResult result;
  for (std::size_t ci = 0; ci < context_counts.size(); ++ci)
    result.rho_by_count.emplace_back(context_counts[ci],
                                     spearman_rho(scores[ci], humans));
  return result;
}

double contribution(const std::string& word,
                    const std::vector<std::vector<std::string>>& contexts,
                    const FcmParameters& params, const NgramVocabulary& vocab,
                    const EmbeddingTable& table, const AblationElement& element,
                    const ForwardOptions& options) {
  const auto base = forward(word, contexts, params, vocab, table, options);

  Vec edited_form = base.form;
  Vec edited_context_raw = base.context_raw;
  std::size_t edited_count = base.context_word_count;

  if (element.kind == AblationElement::Kind::NgramOccurrence) {
    if (element.gram_index >= base.gram_ids.size())
      throw std::out_of_range("contribution: n-gram occurrence out of range");
    if (base.gram_ids.size() == 1)
      throw std::invalid_argument(
          "contribution: cannot remove the word's only n-gram");
    auto ids = base.gram_ids;
    ids.erase(ids.begin() + static_cast<std::ptrdiff_t>(element.gram_index));
    edited_form = form_embedding(ids, params);
  } else {
    if (element.sentence >= contexts.size() ||
        element.token >= contexts[element.sentence].size())
      throw std::out_of_range("contribution: context token out of range");
    std::tie(edited_context_raw, edited_count) = detail::context_embedding_skip(
        contexts, word, table, options.exclude_target, element.sentence,
        element.token);
  }

  const Vec edited_context = matvec(params.transform, edited_context_raw);
  double alpha = 0.0;
  switch (params.mode) {
    case Mode::FormOnly: alpha = 0.0; break;
    case Mode::ContextOnly: alpha = 1.0; break;
    case Mode::SingleParameter: alpha = params.single_alpha(); break;
    case Mode::Gated:
      alpha = gate_alpha(edited_context_raw, edited_form, params);
      break;
  }
  if (edited_count == 0) alpha = 0.0;

  Vec edited(params.dim, 0.0);
  axpy(alpha, edited_context, edited);
  axpy(1.0 - alpha, edited_form, edited);
  if (edited == base.result) return 0.0;
  return 1.0 - cosine_similarity(base.result, edited);
}

std::vector<std::pair<long long, std::size_t>> rank_difference_buckets(
    const std::map<std::string, std::size_t>& combined,
    const std::map<std::string, std::size_t>& single) {
  if (combined.size() != single.size())
    throw std::invalid_argument("rank_difference_buckets: word sets differ");
  static constexpr std::array<long long, 9> kBuckets = {
      -10000, -1000, -100, -10, 0, 10, 100, 1000, 10000};
  // Visit order by ascending magnitude implements the tie rule: a later
  // bucket replaces the best one only when strictly closer.
  static constexpr std::array<int, 9> kVisit = {4, 3, 5, 2, 6, 1, 7, 0, 8};

  std::array<std::size_t, 9> counts{};
  for (const auto& [word, combined_rank] : combined) {
    const auto it = single.find(word);
    if (it == single.end())
      throw std::invalid_argument("rank_difference_buckets: word sets differ");
    const long long d = static_cast<long long>(combined_rank) -
                        static_cast<long long>(it->second);
    int best = kVisit[0];
    long long best_dist = kBuckets[best] >= d ? kBuckets[best] - d : d - kBuckets[best];
    for (std::size_t v = 1; v < kVisit.size(); ++v) {
      const int idx = kVisit[v];
      const long long dist =
          kBuckets[idx] >= d ? kBuckets[idx] - d : d - kBuckets[idx];
      if (dist < best_dist) {
        best = idx;
        best_dist = dist;
      }
    }
    ++counts[static_cast<std::size_t>(best)];
  }

  std::vector<std::pair<long long, std::size_t>> out;
  out.reserve(kBuckets.size());
  for (std::size_t i = 0; i < kBuckets.size(); ++i)
    out.emplace_back(kBuckets[i], counts[i]);
  return out;
}

std::vector<DnRecord> load_dn_records(std::istream& in,
                                      const TokenizeOptions& options) {
  std::vector<DnRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0)
      fail_line("dn records", line_no, "expected 'word<TAB>definition'");
    DnRecord record;
    record.word = line.substr(0, tab);
    record.definition = tokenize(line.substr(tab + 1), options);
    out.push_back(std::move(record));
  }
  if (out.empty()) throw std::runtime_error("dn records: empty input");
  return out;
}

std::vector<DnRecord> load_dn_file(const std::string& path,
                                   const TokenizeOptions& options) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("dn records: cannot open " + path);
  return load_dn_records(in, options);
}

std::vector<CrwPair> load_crw_pairs(std::istream& in) {
  std::vector<CrwPair> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? std::string::npos
                                                : line.find('\t', tab1 + 1);
    if (tab1 == std::string::npos || tab2 == std::string::npos || tab1 == 0 ||
        tab2 == tab1 + 1)
      fail_line("crw pairs", line_no, "expected 'word1<TAB>word2<TAB>score'");
    CrwPair pair;
    pair.w1 = line.substr(0, tab1);
    pair.w2 = line.substr(tab1 + 1, tab2 - tab1 - 1);
    const std::string score_text = line.substr(tab2 + 1);
    const auto res = std::from_chars(
        score_text.data(), score_text.data() + score_text.size(), pair.score);
    if (res.ec != std::errc() || res.ptr != score_text.data() + score_text.size())
      fail_line("crw pairs", line_no, "bad score '" + score_text + "'");
    out.push_back(std::move(pair));
  }
  if (out.empty()) throw std::runtime_error("crw pairs: empty input");
  return out;
}

std::vector<CrwPair> load_crw_pairs_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("crw pairs: cannot open " + path);
  return load_crw_pairs(in);
}

void attach_crw_contexts(std::vector<CrwPair>& pairs, const std::string& dir,
                         const EmbeddingTable& table,
                         const TokenizeOptions& options) {
  namespace fs = std::filesystem;
  std::unordered_map<std::string, std::vector<std::vector<std::string>>> cache;
  const auto contexts_for =
      [&](const std::string& word) -> const std::vector<std::vector<std::string>>& {
    const auto it = cache.find(word);
    if (it != cache.end()) return it->second;
    std::vector<std::vector<std::string>> contexts;
    const fs::path path = fs::path(dir) / (word + ".txt");
    if (fs::exists(path)) {
      std::ifstream in(path);
      if (!in)
        throw std::runtime_error("crw contexts: cannot open " + path.string());
      std::string line;
      while (std::getline(in, line)) {
        auto tokens = tokenize(line, options);
        if (!tokens.empty()) contexts.push_back(std::move(tokens));
      }
    }
    return cache.emplace(word, std::move(contexts)).first->second;
  };

  for (auto& pair : pairs) {
    pair.contexts1 = contexts_for(pair.w1);
    pair.contexts2 = contexts_for(pair.w2);
    if (!table.contains(pair.w1) && pair.contexts1.empty())
      throw std::runtime_error("crw contexts: word '" + pair.w1 +
                               "' has no table vector and no context file in " +
                               dir);
    if (!table.contains(pair.w2) && pair.contexts2.empty())
      throw std::runtime_error("crw contexts: word '" + pair.w2 +
                               "' has no table vector and no context file in " +
                               dir);
  }
}

}  // namespace fcm
