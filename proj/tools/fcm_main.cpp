#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <CLI11.hpp>

#include "fcm/corpus.hpp"
#include "fcm/embedding_store.hpp"
#include "fcm/evaluator.hpp"
#include "fcm/model.hpp"
#include "fcm/ngram.hpp"
#include "fcm/rng.hpp"
#include "fcm/trainer.hpp"

namespace {

namespace fs = std::filesystem;
using namespace fcm;

// Thrown for bad invocations (exit code 2); everything else exits 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename F>
auto stage(const std::string& name, F&& f) {
  try {
    return f();
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    throw std::runtime_error(name + ": " + e.what());
  }
}

void require_file(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) throw UsageError(what + " not found: " + path);
  if (fs::is_directory(path)) throw UsageError(what + " is a directory: " + path);
}

void require_dir(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) throw UsageError(what + " not found: " + path);
  if (!fs::is_directory(path)) throw UsageError(what + " is not a directory: " + path);
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

EmbeddingTable load_table(const std::string& path) {
  auto table = stage("embeddings", [&] { return load_embeddings_file(path); });
  if (table.duplicate_count() > 0)
    std::cerr << "warning: " << table.duplicate_count()
              << " duplicate word(s) in " << path << ", last occurrence kept\n";
  return table;
}

TokenizeOptions tokenize_options_from(const Checkpoint& checkpoint) {
  TokenizeOptions options;
  const auto it = checkpoint.config.find("lowercase");
  if (it != checkpoint.config.end()) options.lowercase = it->second != "false";
  return options;
}

bool exclude_target_from(const Checkpoint& checkpoint) {
  const auto it = checkpoint.config.find("exclude_target");
  return it == checkpoint.config.end() || it->second != "false";
}

std::vector<std::vector<std::string>> read_context_sentences(
    const std::string& path, const TokenizeOptions& options) {
  std::vector<std::vector<std::string>> contexts;
  const auto read_from = [&](std::istream& in) {
    std::string line;
    while (std::getline(in, line)) {
      auto tokens = tokenize(line, options);
      if (!tokens.empty()) contexts.push_back(std::move(tokens));
    }
  };
  if (path == "-") {
    read_from(std::cin);
  } else {
    require_file(path, "contexts file");
    std::ifstream in(path);
    if (!in) throw std::runtime_error("contexts: cannot open " + path);
    read_from(in);
  }
  return contexts;
}

std::string normalize_word(const std::string& word,
                           const TokenizeOptions& options) {
  const auto tokens = tokenize(word, options);
  if (tokens.empty()) throw UsageError("word '" + word + "' has no token characters");
  if (tokens.size() > 1) throw UsageError("word '" + word + "' is not a single token");
  return tokens[0];
}

std::map<std::string, std::size_t> read_rank_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("rank csv: cannot open " + path);
  std::map<std::string, std::size_t> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line == "word,rank") continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos || comma == 0)
      throw std::runtime_error("rank csv: line " + std::to_string(line_no) +
                               ": expected 'word,rank'");
    try {
      out[line.substr(0, comma)] =
          static_cast<std::size_t>(std::stoull(line.substr(comma + 1)));
    } catch (const std::logic_error&) {
      throw std::runtime_error("rank csv: line " + std::to_string(line_no) +
                               ": bad rank");
    }
  }
  if (out.empty()) throw std::runtime_error("rank csv: empty input " + path);
  return out;
}

std::ofstream open_output(const std::string& path, const std::string& what) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(what + ": cannot open " + path + " for writing");
  return out;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string embeddings, corpus, config, out;
  std::string mode;
  double lr = 0.0;
  int epochs = 0, batch_size = 0, n_min = 0, n_max = 0, min_ngram_support = 0;
  std::uint64_t min_count = 0, seed = 0;
  std::size_t contexts_per_instance = 0;
  bool case_sensitive = false, include_target = false;
};

void run_train(const TrainArgs& args, const CLI::App& cmd) {
  require_file(args.embeddings, "embeddings file");
  require_file(args.corpus, "corpus file");

  TrainConfig config;
  if (!args.config.empty()) {
    require_file(args.config, "config file");
    std::ifstream in(args.config);
    if (!in) throw std::runtime_error("config: cannot open " + args.config);
    try {
      config = TrainConfig::load(in, config);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  try {
    if (cmd.count("--mode")) config.mode = mode_from_string(args.mode);
    if (cmd.count("--lr")) config.lr = args.lr;
    if (cmd.count("--epochs")) config.epochs = args.epochs;
    if (cmd.count("--batch-size")) config.batch_size = args.batch_size;
    if (cmd.count("--n-min")) config.n_min = args.n_min;
    if (cmd.count("--n-max")) config.n_max = args.n_max;
    if (cmd.count("--min-ngram-support"))
      config.min_ngram_support = args.min_ngram_support;
    if (cmd.count("--min-count")) config.min_word_count = args.min_count;
    if (cmd.count("--contexts-per-instance"))
      config.contexts_per_instance = args.contexts_per_instance;
    if (cmd.count("--seed")) config.seed = args.seed;
    if (cmd.count("--case-sensitive")) config.lowercase = !args.case_sensitive;
    if (cmd.count("--include-target")) config.exclude_target = !args.include_target;
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  const auto table = load_table(args.embeddings);
  const auto corpus = stage("corpus", [&] {
    return CorpusIndex::build_from_file(args.corpus, {config.lowercase});
  });
  auto result = stage("train", [&] { return train(config, table, corpus); });

  Checkpoint checkpoint{std::move(result.params), std::move(result.vocab),
                        config.to_map()};
  stage("checkpoint", [&] {
    save_checkpoint(checkpoint, args.out);
    return 0;
  });

  auto loss_csv = open_output(args.out + ".loss.csv", "loss csv");
  loss_csv << "epoch,loss\n";
  for (std::size_t i = 0; i < result.epoch_loss.size(); ++i)
    loss_csv << (i + 1) << ',' << format_value(result.epoch_loss[i]) << '\n';

  std::printf("epochs=%d final_loss=%.6g\n", config.epochs,
              result.epoch_loss.back());
}

// ---------------------------------------------------------------------------
// infer

struct InferArgs {
  std::string checkpoint, embeddings, word, contexts;
  bool trace = false;
};

void run_infer(const InferArgs& args) {
  require_file(args.checkpoint, "checkpoint file");
  const auto checkpoint =
      stage("checkpoint", [&] { return load_checkpoint(args.checkpoint); });
  const auto tokenize_options = tokenize_options_from(checkpoint);
  const std::string word = normalize_word(args.word, tokenize_options);

  if (!args.contexts.empty() && args.embeddings.empty())
    throw UsageError("--embeddings is required when --contexts is given");

  std::optional<EmbeddingTable> table;
  if (!args.embeddings.empty()) {
    require_file(args.embeddings, "embeddings file");
    table = load_table(args.embeddings);
  } else {
    table.emplace(std::vector<std::string>{}, std::vector<double>{},
                  checkpoint.params.dim);
  }

  std::vector<std::vector<std::string>> contexts;
  if (!args.contexts.empty())
    contexts = stage("contexts", [&] {
      return read_context_sentences(args.contexts, tokenize_options);
    });

  const ForwardOptions options{exclude_target_from(checkpoint)};
  const auto trace = stage("infer", [&] {
    return forward(word, contexts, checkpoint.params, checkpoint.vocab, *table,
                   options);
  });

  std::string line = word;
  for (const double v : trace.result) {
    line += ' ';
    line += format_value(v);
  }
  std::printf("%s\n", line.c_str());

  if (args.trace) {
    std::fprintf(stderr,
                 "alpha=%.6f context_words=%zu form_norm=%.6g context_norm=%.6g "
                 "ngrams=%zu\n",
                 trace.alpha, trace.context_word_count,
                 norm(trace.form), norm(trace.context), trace.gram_ids.size());
  }
}

// ---------------------------------------------------------------------------
// nn

struct NnArgs {
  std::string embeddings, word, query;
  std::size_t top = 10;
  std::vector<std::string> exclude;
  bool keep_query = false;
};

void run_nn(const NnArgs& args) {
  require_file(args.embeddings, "embeddings file");
  if (args.word.empty() == args.query.empty())
    throw UsageError("pass exactly one of --word or --query");
  const auto table = load_table(args.embeddings);

  std::unordered_set<std::string> exclude(args.exclude.begin(),
                                          args.exclude.end());

  const auto print_neighbors = [&](const std::string& label,
                                   std::span<const double> query) {
    const auto neighbors = nearest_neighbors(table, query, args.top, exclude);
    for (const auto& n : neighbors)
      std::printf("%s\t%s\t%.6f\n", label.c_str(), n.word.c_str(), n.similarity);
  };

  if (!args.word.empty()) {
    const auto row = stage("query", [&] { return table.vector(args.word); });
    if (!args.keep_query) exclude.insert(args.word);
    print_neighbors(args.word, row);
    return;
  }

  const auto queries = stage("query", [&] {
    require_file(args.query, "query file");
    return load_embeddings_file(args.query);
  });
  if (queries.dim() != table.dim())
    throw std::runtime_error("query: dimension " + std::to_string(queries.dim()) +
                             " does not match table dimension " +
                             std::to_string(table.dim()));
  for (std::size_t i = 0; i < queries.size(); ++i)
    print_neighbors(queries.word(i), queries.row(i));
}

// ---------------------------------------------------------------------------
// eval-dn

struct EvalDnArgs {
  std::string checkpoint, embeddings, records, out, compare_ranks, buckets_out;
  bool include_self = false;
  int workers = 1;
};

void run_eval_dn(const EvalDnArgs& args) {
  require_file(args.checkpoint, "checkpoint file");
  require_file(args.embeddings, "embeddings file");
  require_file(args.records, "records file");
  if (!args.compare_ranks.empty()) require_file(args.compare_ranks, "rank csv");

  const auto checkpoint =
      stage("checkpoint", [&] { return load_checkpoint(args.checkpoint); });
  const auto table = load_table(args.embeddings);
  const auto records = stage("records", [&] {
    return load_dn_file(args.records, tokenize_options_from(checkpoint));
  });

  DnOptions options;
  options.exclude_self = !args.include_self;
  options.workers = args.workers;
  const auto result = stage("eval", [&] {
    return eval_dn(records, checkpoint.params, checkpoint.vocab, table, options);
  });

  std::printf("median=%g mrr=%.5f\n", result.summary.median, result.summary.mrr);

  if (!args.out.empty()) {
    auto csv = open_output(args.out, "rank csv");
    csv << "word,rank\n";
    for (const auto& [word, rank] : result.ranks)
      csv << word << ',' << rank << '\n';
  }

  if (!args.compare_ranks.empty()) {
    const auto other = stage("rank csv", [&] { return read_rank_csv(args.compare_ranks); });
    std::map<std::string, std::size_t> ours;
    for (const auto& [word, rank] : result.ranks) ours[word] = rank;
    const auto buckets = stage("buckets", [&] {
      return rank_difference_buckets(ours, other);
    });
    for (const auto& [bucket, count] : buckets)
      std::printf("bucket=%lld count=%zu\n", bucket, count);
    if (!args.buckets_out.empty()) {
      auto csv = open_output(args.buckets_out, "bucket csv");
      csv << "bucket,count\n";
      for (const auto& [bucket, count] : buckets)
        csv << bucket << ',' << count << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// eval-crw

struct EvalCrwArgs {
  std::string checkpoint, embeddings, pairs, contexts_dir, out;
  std::vector<std::size_t> counts;
  std::uint64_t seed = 1;
  int workers = 1;
};

void run_eval_crw(const EvalCrwArgs& args) {
  require_file(args.checkpoint, "checkpoint file");
  require_file(args.embeddings, "embeddings file");
  require_file(args.pairs, "pairs file");
  require_dir(args.contexts_dir, "contexts directory");

  const auto checkpoint =
      stage("checkpoint", [&] { return load_checkpoint(args.checkpoint); });
  const auto table = load_table(args.embeddings);
  auto pairs = stage("pairs", [&] { return load_crw_pairs_file(args.pairs); });
  stage("contexts", [&] {
    attach_crw_contexts(pairs, args.contexts_dir, table,
                        tokenize_options_from(checkpoint));
    return 0;
  });

  CrwOptions options;
  options.seed = args.seed;
  options.exclude_target = exclude_target_from(checkpoint);
  options.workers = args.workers;
  const auto result = stage("eval", [&] {
    return eval_crw(pairs, checkpoint.params, checkpoint.vocab, table,
                    args.counts, options);
  });

  for (const auto& [n, rho] : result.rho_by_count)
    std::printf("n=%zu rho=%.5f\n", n, rho);

  if (!args.out.empty()) {
    auto csv = open_output(args.out, "result csv");
    csv << "n,rho\n";
    for (const auto& [n, rho] : result.rho_by_count) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.17g", rho);
      csv << n << ',' << buf << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// ablate

struct AblateArgs {
  std::string checkpoint, embeddings, word, contexts;
};

void run_ablate(const AblateArgs& args) {
  require_file(args.checkpoint, "checkpoint file");
  require_file(args.embeddings, "embeddings file");
  const auto checkpoint =
      stage("checkpoint", [&] { return load_checkpoint(args.checkpoint); });
  const auto tokenize_options = tokenize_options_from(checkpoint);
  const std::string word = normalize_word(args.word, tokenize_options);
  const auto table = load_table(args.embeddings);

  std::vector<std::vector<std::string>> contexts;
  if (!args.contexts.empty())
    contexts = stage("contexts", [&] {
      return read_context_sentences(args.contexts, tokenize_options);
    });

  const ForwardOptions options{exclude_target_from(checkpoint)};
  const auto base = stage("ablate", [&] {
    return forward(word, contexts, checkpoint.params, checkpoint.vocab, table,
                   options);
  });

  struct Row {
    std::string kind, position, label;
    double value;
  };
  std::vector<Row> rows;

  if (base.gram_ids.size() > 1) {
    const auto grams =
        extract_ngrams(word, checkpoint.vocab.n_min(), checkpoint.vocab.n_max());
    for (std::size_t i = 0; i < grams.size(); ++i) {
      AblationElement element;
      element.kind = AblationElement::Kind::NgramOccurrence;
      element.gram_index = i;
      const double value = contribution(word, contexts, checkpoint.params,
                                        checkpoint.vocab, table, element, options);
      rows.push_back({"ngram", std::to_string(i), escape_ngram(grams[i]), value});
    }
  } else {
    std::cerr << "warning: word has a single n-gram, skipping n-gram ablation\n";
  }

  for (std::size_t s = 0; s < contexts.size(); ++s) {
    for (std::size_t t = 0; t < contexts[s].size(); ++t) {
      AblationElement element;
      element.kind = AblationElement::Kind::ContextToken;
      element.sentence = s;
      element.token = t;
      const double value = contribution(word, contexts, checkpoint.params,
                                        checkpoint.vocab, table, element, options);
      rows.push_back({"context", std::to_string(s) + ":" + std::to_string(t),
                      contexts[s][t], value});
    }
  }

  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.value > b.value; });
  for (const auto& row : rows)
    std::printf("%s\t%s\t%s\t%.6f\n", row.kind.c_str(), row.position.c_str(),
                row.label.c_str(), row.value);
}

// ---------------------------------------------------------------------------
// grad-check

struct GradCheckArgs {
  std::string mode = "gated";
  std::size_t dim = 8;
  std::uint64_t seed = 42;
  int trials = 5;
  double eps = 1e-5;
  std::size_t min_coords = 200;
};

void run_grad_check(const GradCheckArgs& args) {
  const Mode mode = mode_from_string(args.mode);
  if (args.dim < 2) throw UsageError("--dim must be at least 2");
  if (args.trials < 1) throw UsageError("--trials must be at least 1");

  Rng rng(args.seed);
  static constexpr const char* kLetters = "abcdefghijklmnopqrstuvwxyz";
  const auto random_word = [&](std::size_t min_len, std::size_t max_len) {
    const auto len = min_len + rng.below(max_len - min_len + 1);
    std::string w;
    for (std::size_t i = 0; i < len; ++i) w.push_back(kLetters[rng.below(26)]);
    return w;
  };

  // A small random world: a table over random words, a vocabulary built from
  // them, and random parameters.
  std::vector<std::string> table_words;
  for (int i = 0; i < 30; ++i) table_words.push_back(random_word(4, 10));
  std::sort(table_words.begin(), table_words.end());
  table_words.erase(std::unique(table_words.begin(), table_words.end()),
                    table_words.end());
  std::vector<double> data;
  for (std::size_t i = 0; i < table_words.size() * args.dim; ++i)
    data.push_back(rng.uniform(-1.0, 1.0));
  const EmbeddingTable table(table_words, data, args.dim);
  const auto vocab = build_ngram_vocab(table_words, 3, 5, 2);

  double max_err = 0.0;
  for (int trial = 0; trial < args.trials; ++trial) {
    Rng trial_rng = rng.child(static_cast<std::uint64_t>(trial) + 1);
    auto params = init_params(args.dim, vocab.size(), mode, trial_rng);
    params.gate_bias = trial_rng.uniform(-0.5, 0.5);
    params.single_logit = trial_rng.uniform(-1.0, 1.0);

    TrainingInstance instance;
    instance.word = table_words[trial_rng.below(table_words.size())];
    for (int s = 0; s < 3; ++s) {
      std::vector<std::string> sentence;
      const auto len = 4 + trial_rng.below(7);
      for (std::size_t t = 0; t < len; ++t)
        sentence.push_back(table_words[trial_rng.below(table_words.size())]);
      sentence.push_back(instance.word);
      instance.contexts.push_back(std::move(sentence));
    }
    max_err = std::max(max_err, grad_check(params, instance, vocab, table,
                                           args.eps, args.min_coords,
                                           trial_rng.seed()));
  }

  std::printf("max_rel_err=%.3g\n", max_err);
  if (!(max_err < 1e-4)) throw std::runtime_error("gradient check failed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Embeddings for unseen words from surface form and context"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand(
      "train", "Fit the model so inferred vectors mimic a pretrained table");
  train_cmd->add_option("--embeddings", train_args.embeddings,
                        "pretrained embedding table (text format)")->required();
  train_cmd->add_option("--corpus", train_args.corpus,
                        "training corpus, one sentence per line")->required();
  train_cmd->add_option("--out", train_args.out, "checkpoint output path")
      ->required();
  train_cmd->add_option("--config", train_args.config,
                        "config file with key value lines");
  train_cmd->add_option("--mode", train_args.mode, "form|context|single|gated")
      ->check(CLI::IsMember({"form", "context", "single", "gated"}));
  train_cmd->add_option("--lr", train_args.lr, "Adam learning rate");
  train_cmd->add_option("--epochs", train_args.epochs, "training epochs");
  train_cmd->add_option("--batch-size", train_args.batch_size, "batch size");
  train_cmd->add_option("--n-min", train_args.n_min, "shortest n-gram length");
  train_cmd->add_option("--n-max", train_args.n_max, "longest n-gram length");
  train_cmd->add_option("--min-ngram-support", train_args.min_ngram_support,
                        "distinct words an n-gram needs for its own id");
  train_cmd->add_option("--min-count", train_args.min_count,
                        "minimum corpus count for a training word");
  train_cmd->add_option("--contexts-per-instance",
                        train_args.contexts_per_instance,
                        "context sentences sampled per training instance");
  train_cmd->add_option("--seed", train_args.seed, "random seed");
  train_cmd->add_flag("--case-sensitive", train_args.case_sensitive,
                      "do not lowercase corpus tokens");
  train_cmd->add_flag("--include-target", train_args.include_target,
                      "keep the target word inside its own context average");

  InferArgs infer_args;
  auto* infer_cmd =
      app.add_subcommand("infer", "Infer a vector for one word");
  infer_cmd->add_option("--checkpoint", infer_args.checkpoint, "trained model")
      ->required();
  infer_cmd->add_option("--embeddings", infer_args.embeddings,
                        "embedding table for context lookups");
  infer_cmd->add_option("--word", infer_args.word, "word to embed")->required();
  infer_cmd->add_option("--contexts", infer_args.contexts,
                        "file with one context sentence per line, or -");
  infer_cmd->add_flag("--trace", infer_args.trace,
                      "print mixing details to stderr");

  NnArgs nn_args;
  auto* nn_cmd =
      app.add_subcommand("nn", "Nearest neighbors in an embedding table");
  nn_cmd->add_option("--embeddings", nn_args.embeddings, "embedding table")
      ->required();
  nn_cmd->add_option("--word", nn_args.word, "table word to query");
  nn_cmd->add_option("--query", nn_args.query,
                     "file of labeled query vectors (text embedding format)");
  nn_cmd->add_option("--top", nn_args.top, "neighbors to print");
  nn_cmd->add_option("--exclude", nn_args.exclude, "words to skip")
      ->take_all();
  nn_cmd->add_flag("--keep-query", nn_args.keep_query,
                   "allow the queried word itself in the results");

  EvalDnArgs eval_dn_args;
  auto* eval_dn_cmd = app.add_subcommand(
      "eval-dn", "Rank words against the table from their definition sentence");
  eval_dn_cmd->add_option("--checkpoint", eval_dn_args.checkpoint, "trained model")
      ->required();
  eval_dn_cmd->add_option("--embeddings", eval_dn_args.embeddings,
                          "embedding table")->required();
  eval_dn_cmd->add_option("--records", eval_dn_args.records,
                          "TSV file: word<TAB>definition")->required();
  eval_dn_cmd->add_option("--out", eval_dn_args.out, "per-word rank CSV");
  eval_dn_cmd->add_flag("--include-self", eval_dn_args.include_self,
                        "keep the word inside its own definition");
  eval_dn_cmd->add_option("--workers", eval_dn_args.workers,
                          "threads for the record loop");
  eval_dn_cmd->add_option("--compare-ranks", eval_dn_args.compare_ranks,
                          "rank CSV from another run to bucket against");
  eval_dn_cmd->add_option("--buckets-out", eval_dn_args.buckets_out,
                          "bucket histogram CSV");

  EvalCrwArgs eval_crw_args;
  auto* eval_crw_cmd = app.add_subcommand(
      "eval-crw", "Correlate model scores with human rare-word judgements");
  eval_crw_cmd->add_option("--checkpoint", eval_crw_args.checkpoint,
                           "trained model")->required();
  eval_crw_cmd->add_option("--embeddings", eval_crw_args.embeddings,
                           "embedding table")->required();
  eval_crw_cmd->add_option("--pairs", eval_crw_args.pairs,
                           "TSV file: word1<TAB>word2<TAB>score")->required();
  eval_crw_cmd->add_option("--contexts-dir", eval_crw_args.contexts_dir,
                           "directory with <word>.txt context files")
      ->required();
  eval_crw_cmd->add_option("--counts", eval_crw_args.counts,
                           "context counts, e.g. 1,2,4,8")
      ->required()->delimiter(',');
  eval_crw_cmd->add_option("--seed", eval_crw_args.seed,
                           "seed for the context shuffles");
  eval_crw_cmd->add_option("--workers", eval_crw_args.workers,
                           "threads for the pair loop");
  eval_crw_cmd->add_option("--out", eval_crw_args.out, "per-count rho CSV");

  AblateArgs ablate_args;
  auto* ablate_cmd = app.add_subcommand(
      "ablate", "Contribution of each n-gram and context token to a vector");
  ablate_cmd->add_option("--checkpoint", ablate_args.checkpoint, "trained model")
      ->required();
  ablate_cmd->add_option("--embeddings", ablate_args.embeddings,
                         "embedding table")->required();
  ablate_cmd->add_option("--word", ablate_args.word, "word to analyze")
      ->required();
  ablate_cmd->add_option("--contexts", ablate_args.contexts,
                         "file with one context sentence per line, or -");

  GradCheckArgs grad_check_args;
  auto* grad_check_cmd = app.add_subcommand(
      "grad-check", "Compare analytic gradients against finite differences");
  grad_check_cmd->add_option("--mode", grad_check_args.mode,
                             "form|context|single|gated")
      ->check(CLI::IsMember({"form", "context", "single", "gated"}));
  grad_check_cmd->add_option("--dim", grad_check_args.dim, "embedding dimension");
  grad_check_cmd->add_option("--seed", grad_check_args.seed, "random seed");
  grad_check_cmd->add_option("--trials", grad_check_args.trials,
                             "random instances to check");
  grad_check_cmd->add_option("--eps", grad_check_args.eps,
                             "finite-difference step");
  grad_check_cmd->add_option("--min-coords", grad_check_args.min_coords,
                             "minimum coordinates to sample");

  train_cmd->callback([&] { run_train(train_args, *train_cmd); });
  infer_cmd->callback([&] { run_infer(infer_args); });
  nn_cmd->callback([&] { run_nn(nn_args); });
  eval_dn_cmd->callback([&] { run_eval_dn(eval_dn_args); });
  eval_crw_cmd->callback([&] { run_eval_crw(eval_crw_args); });
  ablate_cmd->callback([&] { run_ablate(ablate_args); });
  grad_check_cmd->callback([&] { run_grad_check(grad_check_args); });

  try {
    app.parse(argc, argv);
    return 0;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "fcm: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "fcm: " << e.what() << "\n";
    return 1;
  }
}
