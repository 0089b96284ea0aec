#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "fcm/model.hpp"
#include "fcm/embedding_store.hpp"
#include "fcm/ngram.hpp"
#include "fcm/rng.hpp"
#include "fcm/trainer.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "support/temp_dir.hpp"

namespace {

const synth::RandomWorld& world() {
  static const synth::RandomWorld w = synth::make_random_world(8, 31);
  return w;
}

fcm::FcmParameters params_for(fcm::Mode mode, std::uint64_t seed = 77) {
  fcm::Rng rng(seed);
  return synth::random_params(mode, world().table.dim(), world().vocab.size(),
                              rng);
}

}  // namespace

TEST_CASE("mode names round-trip") {
  for (const auto mode :
       {fcm::Mode::FormOnly, fcm::Mode::ContextOnly, fcm::Mode::SingleParameter,
        fcm::Mode::Gated})
    CHECK(fcm::mode_from_string(fcm::to_string(mode)) == mode);
  CHECK_THROWS(fcm::mode_from_string("sideways"));
}

TEST_CASE("sigmoid closed forms and saturation") {
  CHECK(fcm::sigmoid(0.0) == 0.5);
  CHECK(fcm::sigmoid(10.0) == doctest::Approx(0.9999546).epsilon(1e-6));
  CHECK(fcm::sigmoid(-10.0) == doctest::Approx(1.0 - 0.9999546).epsilon(1e-3));
  CHECK(fcm::sigmoid(1000.0) == 1.0);
  CHECK(fcm::sigmoid(-1000.0) == 0.0);
}

TEST_CASE("form embedding averages rows with multiplicity") {
  auto params = params_for(fcm::Mode::FormOnly);
  const std::vector<std::uint32_t> ids = {1, 1, 2};
  const auto v = fcm::form_embedding(ids, params);
  for (std::size_t d = 0; d < params.dim; ++d) {
    const double expected = (2.0 * params.ngram_table.at(1, d) +
                             params.ngram_table.at(2, d)) /
                            3.0;
    CHECK(v[d] == doctest::Approx(expected).epsilon(1e-15));
  }
  CHECK_THROWS(fcm::form_embedding({}, params));
}

TEST_CASE("context embedding averages occurrences and can exclude the target") {
  const auto& w = world();
  const auto& word = w.words[0];
  const auto& other = w.words[1];
  const std::vector<std::vector<std::string>> contexts = {
      {word, other, "zzznotinthetable"},
      {other, word},
  };

  const auto [with, count_with] =
      fcm::context_embedding(contexts, word, w.table, false);
  CHECK(count_with == 4);
  const auto [without, count_without] =
      fcm::context_embedding(contexts, word, w.table, true);
  CHECK(count_without == 2);

  const auto expected = w.table.vector(other);
  for (std::size_t d = 0; d < w.table.dim(); ++d)
    CHECK(without[d] == doctest::Approx(expected[d]).epsilon(1e-15));
}

TEST_CASE("context embedding is zero when nothing is covered") {
  const auto [v, count] = fcm::context_embedding({{"zzz", "qqq"}}, "word",
                                                 world().table, true);
  CHECK(count == 0);
  for (const double x : v) CHECK(x == 0.0);
}

TEST_CASE("a zero gate weight reduces alpha to sigmoid of the bias") {
  auto params = params_for(fcm::Mode::Gated);
  std::fill(params.gate_weight.begin(), params.gate_weight.end(), 0.0);
  params.gate_bias = 10.0;
  const fcm::Vec u(params.dim, 0.3);
  const fcm::Vec f(params.dim, -0.2);
  CHECK(fcm::gate_alpha(u, f, params) ==
        doctest::Approx(0.9999546).epsilon(1e-6));
}

TEST_CASE("the gate reads the raw context average, not the transformed one") {
  const auto& w = world();
  auto params = params_for(fcm::Mode::Gated);
  fcm::Rng rng(5);
  const auto instance = synth::random_instance(w, rng);

  const auto before = fcm::forward(instance.word, instance.contexts, params,
                                   w.vocab, w.table);
  for (std::size_t i = 0; i < params.transform.data.size(); ++i)
    params.transform.data[i] += 0.25;
  const auto after = fcm::forward(instance.word, instance.contexts, params,
                                  w.vocab, w.table);
  CHECK(before.alpha == after.alpha);
}

TEST_CASE("forward pins alpha by mode") {
  const auto& w = world();
  fcm::Rng rng(6);
  const auto instance = synth::random_instance(w, rng);

  const auto form = fcm::forward(instance.word, instance.contexts,
                                 params_for(fcm::Mode::FormOnly), w.vocab,
                                 w.table);
  CHECK(form.alpha == 0.0);

  const auto context = fcm::forward(instance.word, instance.contexts,
                                    params_for(fcm::Mode::ContextOnly), w.vocab,
                                    w.table);
  CHECK(context.alpha == 1.0);

  auto single_params = params_for(fcm::Mode::SingleParameter);
  const auto single = fcm::forward(instance.word, instance.contexts,
                                   single_params, w.vocab, w.table);
  CHECK(single.alpha == doctest::Approx(single_params.single_alpha()).epsilon(1e-15));
  CHECK(single_params.single_alpha() ==
        doctest::Approx(fcm::sigmoid(single_params.single_logit)).epsilon(1e-15));
}

TEST_CASE("uncovered contexts force alpha to zero") {
  const auto& w = world();
  const std::vector<std::vector<std::string>> junk = {{"zzz", "qqq", "xxx"}};
  for (const auto mode : {fcm::Mode::ContextOnly, fcm::Mode::SingleParameter,
                          fcm::Mode::Gated}) {
    const auto trace =
        fcm::forward(w.words[2], junk, params_for(mode), w.vocab, w.table);
    CHECK(trace.alpha == 0.0);
    CHECK(trace.context_word_count == 0);
    for (std::size_t d = 0; d < trace.result.size(); ++d)
      CHECK(trace.result[d] == trace.form[d]);
  }
}

TEST_CASE("forward combines the two estimates exactly") {
  const auto& w = world();
  fcm::Rng rng(7);
  for (int i = 0; i < 20; ++i) {
    const auto instance = synth::random_instance(w, rng);
    const auto params = params_for(fcm::Mode::Gated, 100 + i);
    const auto trace = fcm::forward(instance.word, instance.contexts, params,
                                    w.vocab, w.table);
    for (std::size_t d = 0; d < trace.result.size(); ++d) {
      const double expected =
          trace.alpha * trace.context[d] + (1.0 - trace.alpha) * trace.form[d];
      CHECK(trace.result[d] == doctest::Approx(expected).epsilon(1e-15));
    }
    CHECK(trace.gram_ids ==
          fcm::map_ngrams(fcm::extract_ngrams(instance.word, w.vocab.n_min(),
                                              w.vocab.n_max()),
                          w.vocab));
  }
}

TEST_CASE("forward matches the independent recomputation") {
  const auto& w = world();
  fcm::Rng rng(8);
  for (const auto mode : {fcm::Mode::FormOnly, fcm::Mode::ContextOnly,
                          fcm::Mode::SingleParameter, fcm::Mode::Gated}) {
    for (int i = 0; i < 5; ++i) {
      const auto instance = synth::random_instance(w, rng);
      const auto params = params_for(mode, 200 + i);
      const auto trace = fcm::forward(instance.word, instance.contexts, params,
                                      w.vocab, w.table);
      const auto expected = oracle::forward(instance.word, instance.contexts,
                                            params, w.vocab, w.table, true);
      CHECK(oracle::rel_err(trace.alpha, expected.alpha) < 1e-12);
      for (std::size_t d = 0; d < trace.result.size(); ++d)
        CHECK(oracle::rel_err(trace.result[d], expected.result[d]) < 1e-12);
    }
  }
}

TEST_CASE("skipping a context occurrence matches editing the input") {
  const auto& w = world();
  const auto& a = w.words[0];
  const auto& b = w.words[1];
  const auto& c = w.words[2];
  const std::vector<std::vector<std::string>> contexts = {{a, b, c}, {b, c}};

  const auto [skipped, n_skipped] = fcm::detail::context_embedding_skip(
      contexts, "target", w.table, true, 0, 1);
  const std::vector<std::vector<std::string>> edited = {{a, c}, {b, c}};
  const auto [direct, n_direct] =
      fcm::context_embedding(edited, "target", w.table, true);
  CHECK(n_skipped == n_direct);
  for (std::size_t d = 0; d < w.table.dim(); ++d)
    CHECK(skipped[d] == doctest::Approx(direct[d]).epsilon(1e-15));
}

TEST_CASE("checkpoints round-trip bit for bit") {
  const auto& w = world();
  testutil::TempDir dir;

  for (const auto mode : {fcm::Mode::SingleParameter, fcm::Mode::Gated}) {
    fcm::Checkpoint checkpoint;
    checkpoint.params = params_for(mode, 300);
    checkpoint.vocab = w.vocab;
    checkpoint.config = {{"mode", fcm::to_string(mode)}, {"lr", "0.01"}};

    const auto path = dir.file("model.bin");
    fcm::save_checkpoint(checkpoint, path);
    const auto loaded = fcm::load_checkpoint(path);

    CHECK(loaded.params == checkpoint.params);
    CHECK(loaded.config == checkpoint.config);
    REQUIRE(loaded.vocab.size() == w.vocab.size());
    for (std::uint32_t id = 1; id < w.vocab.size(); ++id)
      CHECK(loaded.vocab.gram(id) == w.vocab.gram(id));
  }
}

TEST_CASE("checkpoint loading rejects corrupt files") {
  const auto& w = world();
  testutil::TempDir dir;

  fcm::Checkpoint checkpoint;
  checkpoint.params = params_for(fcm::Mode::Gated, 301);
  checkpoint.vocab = w.vocab;
  const auto path = dir.file("model.bin");
  fcm::save_checkpoint(checkpoint, path);

  auto bytes = testutil::read_file(path);
  bytes[0] = 'X';
  const auto bad_magic = dir.write("bad_magic.bin", bytes);
  CHECK_THROWS(fcm::load_checkpoint(bad_magic));

  const auto truncated =
      dir.write("truncated.bin", testutil::read_file(path).substr(0, 64));
  CHECK_THROWS(fcm::load_checkpoint(truncated));

  CHECK_THROWS(fcm::load_checkpoint(dir.file("missing.bin")));
}
