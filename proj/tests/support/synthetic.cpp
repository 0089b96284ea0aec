#include "synthetic.hpp"

#include <array>
#include <cmath>
#include <set>
#include <stdexcept>
#include <unordered_set>

#include "fcm/trainer.hpp"

namespace synth {

std::string random_word(fcm::Rng& rng, std::size_t min_len, std::size_t max_len,
                        std::string_view alphabet) {
  const std::size_t len = min_len + rng.below(max_len - min_len + 1);
  std::string word;
  word.reserve(len);
  for (std::size_t i = 0; i < len; ++i)
    word.push_back(alphabet[rng.below(alphabet.size())]);
  return word;
}

std::vector<std::string> distinct_words(fcm::Rng& rng, std::size_t count,
                                        std::size_t min_len,
                                        std::size_t max_len,
                                        std::string_view alphabet) {
  std::vector<std::string> words;
  std::unordered_set<std::string> seen;
  std::size_t attempts = 0;
  while (words.size() < count) {
    if (++attempts > count * 1000)
      throw std::runtime_error("distinct_words: alphabet exhausted");
    auto word = random_word(rng, min_len, max_len, alphabet);
    if (seen.insert(word).second) words.push_back(std::move(word));
  }
  return words;
}

fcm::Vec random_unit(fcm::Rng& rng, std::size_t dim) {
  while (true) {
    fcm::Vec v(dim);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    const double n = fcm::norm(v);
    if (n > 1e-3) {
      fcm::scale(v, 1.0 / n);
      return v;
    }
  }
}

fcm::EmbeddingTable random_table(const std::vector<std::string>& words,
                                 std::size_t dim, fcm::Rng& rng) {
  std::vector<double> data(words.size() * dim);
  for (auto& x : data) x = rng.uniform(-1.0, 1.0);
  return fcm::EmbeddingTable(words, std::move(data), dim);
}

RandomWorld make_random_world(std::size_t dim, std::uint64_t seed,
                              std::size_t n_words) {
  fcm::Rng rng(seed);
  auto words =
      distinct_words(rng, n_words, 4, 10, "abcdefghijklmnopqrstuvwxyz");
  auto table = random_table(words, dim, rng);
  auto vocab = fcm::build_ngram_vocab(words, 3, 5, 2);
  return RandomWorld{std::move(words), std::move(table), std::move(vocab)};
}

fcm::TrainingInstance random_instance(const RandomWorld& world, fcm::Rng& rng,
                                      std::size_t n_sentences,
                                      std::size_t max_tokens) {
  fcm::TrainingInstance instance;
  instance.word = world.words[rng.below(world.words.size())];
  for (std::size_t s = 0; s < n_sentences; ++s) {
    const std::size_t len = 1 + rng.below(max_tokens);
    std::vector<std::string> sentence;
    sentence.reserve(len);
    for (std::size_t t = 0; t < len; ++t) {
      const double r = rng.uniform();
      if (r < 0.75)
        sentence.push_back(world.words[rng.below(world.words.size())]);
      else if (r < 0.9)
        sentence.push_back(instance.word);
      else
        sentence.push_back("qx" + std::to_string(rng.below(1000)));
    }
    instance.contexts.push_back(std::move(sentence));
  }
  return instance;
}

fcm::FcmParameters random_params(fcm::Mode mode, std::size_t dim,
                                 std::size_t vocab_size, fcm::Rng& rng) {
  auto params = fcm::init_params(dim, vocab_size, mode, rng);
  params.single_logit = rng.uniform(-1.5, 1.5);
  params.gate_bias = rng.uniform(-1.0, 1.0);
  return params;
}

MimicryWorld make_mimicry_world(std::size_t n_words, std::size_t dim,
                                std::size_t occurrences, std::uint64_t seed) {
  fcm::Rng rng(seed);
  auto words = distinct_words(rng, n_words, 12, 16, "abcdefgh");
  std::vector<double> data;
  data.reserve(n_words * dim);
  for (std::size_t i = 0; i < n_words; ++i) {
    const auto v = random_unit(rng, dim);
    data.insert(data.end(), v.begin(), v.end());
  }
  fcm::EmbeddingTable table(words, std::move(data), dim);

  std::vector<std::uint32_t> slots;
  slots.reserve(n_words * occurrences);
  for (std::uint32_t w = 0; w < n_words; ++w)
    for (std::size_t i = 0; i < occurrences; ++i) slots.push_back(w);
  rng.shuffle(slots);

  std::vector<std::vector<std::string>> sentences;
  sentences.reserve(slots.size() / 8 + 1);
  for (std::size_t at = 0; at < slots.size(); at += 8) {
    std::vector<std::string> sentence;
    for (std::size_t i = at; i < std::min(at + 8, slots.size()); ++i)
      sentence.push_back(words[slots[i]]);
    sentences.push_back(std::move(sentence));
  }

  auto corpus = fcm::CorpusIndex::build_from_sentences(sentences);
  return MimicryWorld{std::move(words), std::move(table), std::move(corpus)};
}

namespace {

struct LatentLexicon {
  std::vector<std::string> surfaces;
  std::vector<fcm::Vec> targets;
  std::vector<std::vector<int>> parts;  // morpheme indices per word
};

// 900 ordered morpheme pairs plus 100 distinct triples, 1000 words total.
LatentLexicon make_latent_lexicon(fcm::Rng& rng,
                                  const std::vector<std::string>& morphemes,
                                  const std::vector<fcm::Vec>& mus) {
  const std::size_t dim = mus.front().size();
  LatentLexicon lex;
  auto add = [&](const std::vector<int>& part_ids) {
    std::string surface;
    fcm::Vec target(dim, 0.0);
    for (const int m : part_ids) {
      surface += morphemes[static_cast<std::size_t>(m)];
      fcm::axpy(1.0, mus[static_cast<std::size_t>(m)], target);
    }
    fcm::scale(target, 1.0 / static_cast<double>(part_ids.size()));
    lex.surfaces.push_back(std::move(surface));
    lex.targets.push_back(std::move(target));
    lex.parts.push_back(part_ids);
  };

  const int n = static_cast<int>(morphemes.size());
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) add({a, b});

  std::set<std::array<int, 3>> seen;
  while (seen.size() < 100) {
    std::array<int, 3> t = {static_cast<int>(rng.below(morphemes.size())),
                            static_cast<int>(rng.below(morphemes.size())),
                            static_cast<int>(rng.below(morphemes.size()))};
    if (seen.insert(t).second) add({t[0], t[1], t[2]});
  }
  return lex;
}

}  // namespace

CompositionalWorld make_compositional_world(std::uint64_t seed) {
  fcm::Rng rng(seed);
  constexpr std::size_t kDim = 16;
  const auto morphemes =
      distinct_words(rng, 30, 5, 5, "abcdefghijklmnopqrstuvwxyz");
  std::vector<fcm::Vec> mus;
  mus.reserve(morphemes.size());
  for (std::size_t i = 0; i < morphemes.size(); ++i)
    mus.push_back(random_unit(rng, kDim));

  auto lex = make_latent_lexicon(rng, morphemes, mus);

  std::vector<std::uint32_t> order(lex.surfaces.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);

  std::vector<std::string> train_words, heldout_words;
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& bucket = i < 950 ? train_words : heldout_words;
    bucket.push_back(lex.surfaces[order[i]]);
  }

  std::vector<double> data;
  data.reserve(lex.surfaces.size() * kDim);
  for (const auto& target : lex.targets)
    data.insert(data.end(), target.begin(), target.end());

  std::vector<std::vector<std::string>> sentences;
  sentences.reserve(train_words.size() * 50);
  for (const auto& word : train_words) {
    for (int s = 0; s < 50; ++s) {
      std::vector<std::string> sentence{word};
      for (int t = 0; t < 7; ++t)
        sentence.push_back(train_words[rng.below(train_words.size())]);
      sentences.push_back(std::move(sentence));
    }
  }

  return CompositionalWorld{
      std::move(train_words), std::move(heldout_words),
      fcm::EmbeddingTable(lex.surfaces, std::move(data), kDim),
      fcm::CorpusIndex::build_from_sentences(sentences)};
}

GateWorld make_gate_world(std::uint64_t seed) {
  fcm::Rng rng(seed);
  constexpr std::size_t kDim = 16;
  const auto morphemes = distinct_words(rng, 30, 5, 5, "ghijklmnopqrst");
  std::vector<fcm::Vec> mus;
  mus.reserve(morphemes.size());
  for (std::size_t i = 0; i < morphemes.size(); ++i)
    mus.push_back(random_unit(rng, kDim));

  auto lex = make_latent_lexicon(rng, morphemes, mus);

  std::vector<std::uint32_t> order(lex.surfaces.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);

  std::unordered_set<std::string> used(lex.surfaces.begin(),
                                       lex.surfaces.end());
  auto fresh_scramble = [&] {
    while (true) {
      auto word = random_word(rng, 10, 10, "abcdef");
      if (used.insert(word).second) return word;
    }
  };

  // Train words: even positions get a scrambled surface and contexts built
  // from words sharing a morpheme; odd positions keep their real surface and
  // get filler contexts.
  struct TrainWord {
    std::string surface;
    std::uint32_t latent;
    bool scrambled;
  };
  std::vector<TrainWord> train;
  train.reserve(950);
  for (std::size_t i = 0; i < 950; ++i) {
    const auto latent = order[i];
    const bool scrambled = i % 2 == 0;
    train.push_back({scrambled ? fresh_scramble() : lex.surfaces[latent],
                     latent, scrambled});
  }

  std::vector<std::vector<std::size_t>> by_morpheme(morphemes.size());
  for (std::size_t i = 0; i < train.size(); ++i)
    for (const int m : lex.parts[train[i].latent])
      by_morpheme[static_cast<std::size_t>(m)].push_back(i);

  const auto fillers = distinct_words(rng, 20, 8, 8, "uvwxyz");
  const auto psi = random_unit(rng, kDim);

  std::vector<std::string> table_words;
  std::vector<double> data;
  for (const auto& tw : train) {
    table_words.push_back(tw.surface);
    const auto& target = lex.targets[tw.latent];
    data.insert(data.end(), target.begin(), target.end());
  }
  for (const auto& filler : fillers) {
    table_words.push_back(filler);
    for (std::size_t d = 0; d < kDim; ++d)
      data.push_back(psi[d] + 0.05 * rng.uniform(-1.0, 1.0));
  }

  auto related_sentence = [&](const std::string& word, std::uint32_t latent) {
    std::vector<std::string> sentence{word};
    const auto& part_ids = lex.parts[latent];
    for (int t = 0; t < 7; ++t) {
      const auto& pool =
          by_morpheme[static_cast<std::size_t>(
              part_ids[rng.below(part_ids.size())])];
      sentence.push_back(train[pool[rng.below(pool.size())]].surface);
    }
    return sentence;
  };
  auto filler_sentence = [&](const std::string& word) {
    std::vector<std::string> sentence{word};
    for (int t = 0; t < 7; ++t)
      sentence.push_back(fillers[rng.below(fillers.size())]);
    return sentence;
  };

  std::vector<std::vector<std::string>> sentences;
  sentences.reserve(train.size() * 60);
  for (const auto& tw : train)
    for (int s = 0; s < 60; ++s)
      sentences.push_back(tw.scrambled ? related_sentence(tw.surface, tw.latent)
                                       : filler_sentence(tw.surface));

  GateWorld world{fcm::EmbeddingTable(std::move(table_words), std::move(data),
                                      kDim),
                  fcm::CorpusIndex::build_from_sentences(sentences),
                  {},
                  {},
                  {}};

  for (std::size_t i = 950; i < order.size(); ++i) {
    const auto latent = order[i];
    const bool scrambled = i < 975;
    const auto word = scrambled ? fresh_scramble() : lex.surfaces[latent];
    auto& bucket =
        scrambled ? world.context_informative : world.form_informative;
    bucket.push_back(word);
    auto& contexts = world.heldout_contexts[word];
    for (int s = 0; s < 10; ++s)
      contexts.push_back(scrambled ? related_sentence(word, latent)
                                   : filler_sentence(word));
  }
  return world;
}

}  // namespace synth
