#include "fcm/ngram.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "fcm/unicode.hpp"

namespace fcm {

namespace {

// Sentinel symbols above the Unicode range, so they cannot be produced by
// decoding word text.
constexpr std::uint32_t kStartSym = 0x110000;
constexpr std::uint32_t kEndSym = 0x110001;

void append_symbol(std::string& out, std::uint32_t sym) {
  if (sym == kStartSym) {
    out.push_back(kStartPad);
  } else if (sym == kEndSym) {
    out.push_back(kEndPad);
  } else {
    append_utf8(out, sym);
  }
}

[[noreturn]] void fail_load(std::size_t line_no, const std::string& what) {
  throw std::runtime_error("ngram vocabulary: line " + std::to_string(line_no) +
                           ": " + what);
}

}  // namespace

std::vector<std::string> extract_ngrams(const std::string& word, int n_min,
                                        int n_max) {
  if (word.empty()) throw std::invalid_argument("extract_ngrams: empty word");
  if (n_min < 1 || n_max < n_min)
    throw std::invalid_argument("extract_ngrams: invalid n-gram range");

  std::vector<std::uint32_t> padded;
  padded.push_back(kStartSym);
  for (const std::uint32_t cp : decode_utf8(word)) padded.push_back(cp);
  padded.push_back(kEndSym);

  const int len = static_cast<int>(padded.size());
  std::vector<std::string> grams;
  for (int n = n_min; n <= n_max && n <= len; ++n) {
    for (int i = 0; i + n <= len; ++i) {
      std::string gram;
      for (int k = 0; k < n; ++k)
        append_symbol(gram, padded[static_cast<std::size_t>(i + k)]);
      grams.push_back(std::move(gram));
    }
  }
  return grams;
}

std::string escape_ngram(const std::string& gram) {
  std::string out;
  out.reserve(gram.size());
  for (const char c : gram) {
    if (c == kStartPad) {
      out += "<s>";
    } else if (c == kEndPad) {
      out += "<e>";
    } else {
      out.push_back(c);
    }
  }
  return out;
}

std::string unescape_ngram(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text.compare(i, 3, "<s>") == 0) {
      out.push_back(kStartPad);
      i += 3;
    } else if (text.compare(i, 3, "<e>") == 0) {
      out.push_back(kEndPad);
      i += 3;
    } else {
      out.push_back(text[i]);
      ++i;
    }
  }
  return out;
}

NgramVocabulary::NgramVocabulary(int n_min, int n_max, int min_word_support)
    : n_min_(n_min), n_max_(n_max), min_word_support_(min_word_support) {
  if (n_min < 1 || n_max < n_min)
    throw std::invalid_argument("ngram vocabulary: invalid n-gram range");
  if (min_word_support < 1)
    throw std::invalid_argument("ngram vocabulary: min_word_support must be >= 1");
  grams_.emplace_back();  // unknown id
}

const std::string& NgramVocabulary::gram(std::uint32_t id) const {
  if (id == kUnkId || id >= grams_.size())
    throw std::out_of_range("ngram vocabulary: no gram for id " +
                            std::to_string(id));
  return grams_[id];
}

std::uint32_t NgramVocabulary::insert(const std::string& gram) {
  const auto it = ids_.find(gram);
  if (it != ids_.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(grams_.size());
  grams_.push_back(gram);
  ids_.emplace(gram, id);
  return id;
}

void NgramVocabulary::save(std::ostream& out) const {
  out << "ngram-vocab\t1\n";
  out << "n_min\t" << n_min_ << '\n';
  out << "n_max\t" << n_max_ << '\n';
  out << "min_word_support\t" << min_word_support_ << '\n';
  out << "count\t" << grams_.size() - 1 << '\n';
  for (std::uint32_t id = 1; id < grams_.size(); ++id)
    out << id << '\t' << escape_ngram(grams_[id]) << '\n';
  if (!out) throw std::runtime_error("ngram vocabulary: write failed");
}

NgramVocabulary NgramVocabulary::load(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  const auto next_line = [&]() -> std::string& {
    if (!std::getline(in, line)) fail_load(line_no + 1, "unexpected end of input");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  };
  const auto expect_kv = [&](const std::string& key) -> std::string {
    const std::string& l = next_line();
    const auto tab = l.find('\t');
    if (tab == std::string::npos || l.substr(0, tab) != key)
      fail_load(line_no, "expected '" + key + "<TAB>...'");
    return l.substr(tab + 1);
  };

  if (expect_kv("ngram-vocab") != "1") fail_load(line_no, "unsupported version");
  int n_min = 0, n_max = 0, support = 0;
  std::size_t count = 0;
  try {
    n_min = std::stoi(expect_kv("n_min"));
    n_max = std::stoi(expect_kv("n_max"));
    support = std::stoi(expect_kv("min_word_support"));
    count = static_cast<std::size_t>(std::stoull(expect_kv("count")));
  } catch (const std::logic_error&) {
    fail_load(line_no, "malformed integer field");
  }

  NgramVocabulary vocab(n_min, n_max, support);
  for (std::size_t i = 0; i < count; ++i) {
    const std::string& l = next_line();
    const auto tab = l.find('\t');
    if (tab == std::string::npos) fail_load(line_no, "expected 'id<TAB>ngram'");
    std::uint32_t id = 0;
    try {
      id = static_cast<std::uint32_t>(std::stoul(l.substr(0, tab)));
    } catch (const std::logic_error&) {
      fail_load(line_no, "malformed id");
    }
    if (id != i + 1) fail_load(line_no, "ids must be dense and ascending from 1");
    const std::string gram = unescape_ngram(l.substr(tab + 1));
    if (gram.empty()) fail_load(line_no, "empty n-gram");
    if (vocab.insert(gram) != id) fail_load(line_no, "duplicate n-gram");
  }
  return vocab;
}

NgramVocabulary build_ngram_vocab(const std::vector<std::string>& words,
                                  int n_min, int n_max, int min_word_support) {
  NgramVocabulary vocab(n_min, n_max, min_word_support);

  std::vector<std::string> distinct;
  {
    std::unordered_set<std::string> seen;
    distinct.reserve(words.size());
    for (const auto& w : words)
      if (seen.insert(w).second) distinct.push_back(w);
  }

  std::unordered_map<std::string, std::uint32_t> support;
  std::unordered_set<std::string> in_word;
  for (const auto& w : distinct) {
    in_word.clear();
    for (auto& g : extract_ngrams(w, n_min, n_max)) in_word.insert(std::move(g));
    for (const auto& g : in_word) ++support[g];
  }

  const auto min_support = static_cast<std::uint32_t>(min_word_support);
  for (const auto& w : distinct) {
    for (const auto& g : extract_ngrams(w, n_min, n_max)) {
      const auto it = support.find(g);
      if (it != support.end() && it->second >= min_support) vocab.insert(g);
    }
  }
  return vocab;
}

std::vector<std::uint32_t> map_ngrams(const std::vector<std::string>& grams,
                                      const NgramVocabulary& vocab) {
  std::vector<std::uint32_t> ids;
  ids.reserve(grams.size());
  for (const auto& g : grams) ids.push_back(vocab.id_of(g));
  return ids;
}

}  // namespace fcm
