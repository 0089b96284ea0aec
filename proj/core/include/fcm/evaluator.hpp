#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fcm/corpus.hpp"
#include "fcm/model.hpp"

namespace fcm {

class EmbeddingTable;

// Rank of the word's own table vector among all table words when ordered by
// cosine similarity to the inferred vector: one plus the number of words
// strictly more similar. Throws if the word is absent from the table.
std::size_t rank_of(std::span<const double> inferred, const std::string& word,
                    const EmbeddingTable& table);

struct RankSummary {
  double median = 0.0;
  double mrr = 0.0;
};

// Median (mean of the two middle values for even counts) and mean reciprocal
// rank. Throws on an empty list.
RankSummary summarize_ranks(std::vector<std::size_t> ranks);

// Spearman rank correlation using mid-ranks for ties. Throws on length
// mismatch, fewer than two points, or zero rank variance on either side.
double spearman_rho(std::span<const double> xs, std::span<const double> ys);

struct DnRecord {
  std::string word;
  std::vector<std::string> definition;
};

struct DnOptions {
  bool exclude_self = true;  // mask the word inside its own definition
  int workers = 1;
};

struct DnResult {
  RankSummary summary;
  std::vector<std::pair<std::string, std::size_t>> ranks;  // per record
};

// Definitional nonce protocol: each word is inferred from its single
// definition sentence and ranked against the full table.
DnResult eval_dn(const std::vector<DnRecord>& records,
                 const FcmParameters& params, const NgramVocabulary& vocab,
                 const EmbeddingTable& table, const DnOptions& options = {});

struct CrwPair {
  std::string w1, w2;
  double score = 0.0;  // human similarity judgement
  std::vector<std::vector<std::string>> contexts1, contexts2;
};

struct CrwOptions {
  std::uint64_t seed = 1;
  bool exclude_target = true;
  int workers = 1;
};

struct CrwResult {
  std::vector<std::pair<std::size_t, double>> rho_by_count;
};

// Contextual rare-word protocol. For each context count n, the rare side w2
// is inferred from the first n sentences of a per-word seeded shuffle of its
// contexts, so smaller counts are nested prefixes of larger ones. The partner
// w1 uses its table vector when it has one and is inferred the same way
// otherwise. Model scores are cosines, correlated with the human scores.
CrwResult eval_crw(const std::vector<CrwPair>& pairs,
                   const FcmParameters& params, const NgramVocabulary& vocab,
                   const EmbeddingTable& table,
                   const std::vector<std::size_t>& context_counts,
                   const CrwOptions& options = {});

struct AblationElement {
  enum class Kind { NgramOccurrence, ContextToken };
  Kind kind = Kind::NgramOccurrence;
  std::size_t gram_index = 0;  // index into the extraction-order multiset
  std::size_t sentence = 0;    // coordinates of a context token
  std::size_t token = 0;
};

// One minus the cosine between the original forward result and the result
// with one element removed: a single n-gram occurrence or a single context
// token occurrence. Throws when the element is out of range or when removing
// the word's only n-gram.
double contribution(const std::string& word,
                    const std::vector<std::vector<std::string>>& contexts,
                    const FcmParameters& params, const NgramVocabulary& vocab,
                    const EmbeddingTable& table, const AblationElement& element,
                    const ForwardOptions& options = {});

// Buckets {0, +-10, +-100, +-1000, +-10000}. Each word's rank difference
// (combined minus single) falls into the closest bucket; ties go to the
// smaller magnitude. Returns counts in ascending bucket order. Throws when
// the two maps do not cover the same words.
std::vector<std::pair<long long, std::size_t>> rank_difference_buckets(
    const std::map<std::string, std::size_t>& combined,
    const std::map<std::string, std::size_t>& single);

// "word<TAB>definition sentence" per line; definitions pass through the
// corpus tokenizer.
std::vector<DnRecord> load_dn_records(std::istream& in,
                                      const TokenizeOptions& options = {});
std::vector<DnRecord> load_dn_file(const std::string& path,
                                   const TokenizeOptions& options = {});

// "word1<TAB>word2<TAB>score" per line.
std::vector<CrwPair> load_crw_pairs(std::istream& in);
std::vector<CrwPair> load_crw_pairs_file(const std::string& path);

// Reads <dir>/<word>.txt (one sentence per line) for each pair word that has
// such a file. Throws if a word has neither a table vector nor a context
// file.
void attach_crw_contexts(std::vector<CrwPair>& pairs, const std::string& dir,
                         const EmbeddingTable& table,
                         const TokenizeOptions& options = {});

}  // namespace fcm
