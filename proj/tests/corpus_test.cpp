#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fcm/corpus.hpp"
#include "fcm/embedding_store.hpp"
#include "fcm/rng.hpp"
#include "support/synthetic.hpp"

using Sentences = std::vector<std::vector<std::string>>;

TEST_CASE("tokenize strips punctuation and lowercases") {
  const auto tokens = fcm::tokenize("A cardigan, knitted!");
  CHECK(tokens == std::vector<std::string>{"a", "cardigan", "knitted"});
}

TEST_CASE("tokenize can keep case") {
  fcm::TokenizeOptions options;
  options.lowercase = false;
  CHECK(fcm::tokenize("A cardigan, knitted!", options) ==
        std::vector<std::string>{"A", "cardigan", "knitted"});
}

TEST_CASE("tokenize keeps digits inside words") {
  CHECK(fcm::tokenize("mp3 players-2go") ==
        std::vector<std::string>{"mp3", "players", "2go"});
}

TEST_CASE("tokenize handles accented words") {
  CHECK(fcm::tokenize("F\xc3\x9c\xc3\x9f" "E gr\xc3\xb6\xc3\x9f" "er") ==
        std::vector<std::string>{"f\xc3\xbc\xc3\x9f" "e",
                                 "gr\xc3\xb6\xc3\x9f" "er"});
}

TEST_CASE("tokenize splits on apostrophes and returns empty for blank input") {
  CHECK(fcm::tokenize("don't") == std::vector<std::string>{"don", "t"});
  CHECK(fcm::tokenize("  \t ").empty());
  CHECK(fcm::tokenize("").empty());
}

TEST_CASE("index counts frequencies and drops empty lines") {
  std::stringstream corpus("the cat sat\n\nthe mat\nCat naps.\n");
  const auto index = fcm::CorpusIndex::build(corpus);
  CHECK(index.sentence_count() == 3);
  CHECK(index.vocabulary_size() == 5);
  CHECK(index.frequency("the") == 2);
  CHECK(index.frequency("cat") == 2);
  CHECK(index.frequency("dog") == 0);
  CHECK(index.contains("naps"));
  CHECK(index.words().front() == "the");
}

TEST_CASE("occurrences are distinct ascending sentence ids") {
  Sentences sentences = {{"a", "b", "a"}, {"c"}, {"a", "c"}};
  const auto index = fcm::CorpusIndex::build_from_sentences(sentences);
  CHECK(index.occurrences("a") == std::vector<std::uint32_t>{0, 2});
  CHECK(index.occurrences("c") == std::vector<std::uint32_t>{1, 2});
  CHECK(index.frequency("a") == 3);
  CHECK_THROWS(index.occurrences("missing"));
  CHECK(index.sentence(0) == std::vector<std::string>{"a", "b", "a"});
}

TEST_CASE("empty tokens are rejected when building from sentences") {
  Sentences bad = {{"a", ""}};
  CHECK_THROWS(fcm::CorpusIndex::build_from_sentences(bad));
}

TEST_CASE("instance counts floor at one hundred occurrences and cap at five") {
  CHECK(fcm::instances_per_word(0) == 0);
  CHECK(fcm::instances_per_word(99) == 0);
  CHECK(fcm::instances_per_word(100) == 1);
  CHECK(fcm::instances_per_word(250) == 2);
  CHECK(fcm::instances_per_word(499) == 4);
  CHECK(fcm::instances_per_word(500) == 5);
  CHECK(fcm::instances_per_word(10000) == 5);
}

namespace {

// `distinct` sentences containing the word, plus filler sentences without it.
fcm::CorpusIndex word_in_sentences(const std::string& word,
                                   std::size_t distinct) {
  Sentences sentences;
  for (std::size_t i = 0; i < distinct; ++i)
    sentences.push_back({word, "filler" + std::to_string(i)});
  sentences.push_back({"other"});
  return fcm::CorpusIndex::build_from_sentences(sentences);
}

}  // namespace

TEST_CASE("context sampling without replacement when enough sentences exist") {
  const auto index = word_in_sentences("w", 30);
  fcm::Rng rng(5);
  const auto contexts = fcm::sample_context_set("w", index, 20, rng);
  REQUIRE(contexts.size() == 20);

  std::set<std::vector<std::string>> unique(contexts.begin(), contexts.end());
  CHECK(unique.size() == 20);
  for (const auto& sentence : contexts)
    CHECK(std::find(sentence.begin(), sentence.end(), "w") != sentence.end());
}

TEST_CASE("context sampling falls back to replacement when short") {
  const auto index = word_in_sentences("w", 4);
  fcm::Rng rng(5);
  const auto contexts = fcm::sample_context_set("w", index, 20, rng);
  REQUIRE(contexts.size() == 20);
  std::set<std::vector<std::string>> unique(contexts.begin(), contexts.end());
  CHECK(unique.size() <= 4);
  CHECK_THROWS(fcm::sample_context_set("missing", index, 5, rng));
}

TEST_CASE("context sampling is seed-deterministic") {
  const auto index = word_in_sentences("w", 30);
  fcm::Rng r1(7), r2(7), r3(8);
  CHECK(fcm::sample_context_set("w", index, 10, r1) ==
        fcm::sample_context_set("w", index, 10, r2));
  CHECK(fcm::sample_context_set("w", index, 10, r1) !=
        fcm::sample_context_set("w", index, 10, r3));
}

namespace {

struct StreamWorld {
  fcm::CorpusIndex index;
  fcm::EmbeddingTable table;
};

// "hot" appears 250 times, "warm" 120, "cold" 40, "ghost" 150 but only the
// first three are in the table.
StreamWorld make_stream_world() {
  Sentences sentences;
  auto repeat = [&](const std::string& word, int times) {
    for (int i = 0; i < times; ++i)
      sentences.push_back({word, "pad" + std::to_string(i % 7)});
  };
  repeat("hot", 250);
  repeat("warm", 120);
  repeat("cold", 40);
  repeat("ghost", 150);
  auto index = fcm::CorpusIndex::build_from_sentences(sentences);

  const std::vector<std::string> words = {"hot", "warm", "cold"};
  std::vector<double> data = {1.0, 0.0, 0.0, 1.0, 0.5, 0.5};
  return StreamWorld{std::move(index),
                     fcm::EmbeddingTable(words, std::move(data), 2)};
}

}  // namespace

TEST_CASE("training stream sizes follow frequency and table membership") {
  const auto world = make_stream_world();
  fcm::TrainingStream stream(world.index, world.table, 100, 20, 3,
                             fcm::Rng(42));
  CHECK(stream.size() == 3);  // hot twice, warm once

  std::map<std::string, int> counts;
  std::size_t produced = 0;
  while (auto instance = stream.next()) {
    ++produced;
    ++counts[instance->word];
    CHECK(instance->contexts.size() == 20);
    CHECK(instance->epoch_tag == 3);
    for (const auto& sentence : instance->contexts)
      CHECK(std::find(sentence.begin(), sentence.end(), instance->word) !=
            sentence.end());
  }
  CHECK(produced == 3);
  CHECK(counts["hot"] == 2);
  CHECK(counts["warm"] == 1);
  CHECK(counts.count("cold") == 0);
  CHECK(counts.count("ghost") == 0);
}

TEST_CASE("min count gates qualification") {
  const auto world = make_stream_world();
  fcm::TrainingStream strict(world.index, world.table, 130, 20, 0,
                             fcm::Rng(42));
  CHECK(strict.size() == 2);  // warm drops out, hot keeps two instances
}

TEST_CASE("training stream is seed-deterministic") {
  const auto world = make_stream_world();
  const auto a =
      fcm::build_training_set(world.index, world.table, 100, 8, 1, fcm::Rng(9));
  const auto b =
      fcm::build_training_set(world.index, world.table, 100, 8, 1, fcm::Rng(9));
  const auto c =
      fcm::build_training_set(world.index, world.table, 100, 8, 1, fcm::Rng(10));

  REQUIRE(a.size() == b.size());
  bool same = true;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].word == b[i].word);
    CHECK(a[i].contexts == b[i].contexts);
    if (i < c.size() && (a[i].word != c[i].word || a[i].contexts != c[i].contexts))
      same = false;
  }
  CHECK(!same);
}
