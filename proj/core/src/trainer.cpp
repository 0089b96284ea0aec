#include "fcm/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <stdexcept>

#include "fcm/embedding_store.hpp"

namespace fcm {

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double_value(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size())
    throw std::invalid_argument("config: bad value for " + key + ": '" + value +
                                "'");
  return out;
}

long long parse_int_value(const std::string& key, const std::string& value) {
  long long out = 0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size())
    throw std::invalid_argument("config: bad value for " + key + ": '" + value +
                                "'");
  return out;
}

std::uint64_t parse_u64_value(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size())
    throw std::invalid_argument("config: bad value for " + key + ": '" + value +
                                "'");
  return out;
}

bool parse_bool_value(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw std::invalid_argument("config: bad value for " + key + ": '" + value +
                              "'");
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr))
    throw std::invalid_argument("config: lr must be positive");
  if (epochs < 1) throw std::invalid_argument("config: epochs must be >= 1");
  if (batch_size < 1)
    throw std::invalid_argument("config: batch_size must be >= 1");
  if (n_min < 1 || n_max < n_min)
    throw std::invalid_argument("config: need 1 <= n_min <= n_max");
  if (min_ngram_support < 1)
    throw std::invalid_argument("config: min_ngram_support must be >= 1");
  if (contexts_per_instance < 1)
    throw std::invalid_argument("config: contexts_per_instance must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw std::invalid_argument("config: beta1 and beta2 must be in [0, 1)");
  if (!(eps > 0.0)) throw std::invalid_argument("config: eps must be positive");
}

std::map<std::string, std::string> TrainConfig::to_map() const {
  std::map<std::string, std::string> m;
  m["mode"] = to_string(mode);
  m["lr"] = format_double(lr);
  m["epochs"] = std::to_string(epochs);
  m["batch_size"] = std::to_string(batch_size);
  m["n_min"] = std::to_string(n_min);
  m["n_max"] = std::to_string(n_max);
  m["min_ngram_support"] = std::to_string(min_ngram_support);
  m["min_word_count"] = std::to_string(min_word_count);
  m["contexts_per_instance"] = std::to_string(contexts_per_instance);
  m["seed"] = std::to_string(seed);
  m["beta1"] = format_double(beta1);
  m["beta2"] = format_double(beta2);
  m["eps"] = format_double(eps);
  m["exclude_target"] = exclude_target ? "true" : "false";
  m["lowercase"] = lowercase ? "true" : "false";
  return m;
}

TrainConfig TrainConfig::from_map(
    const std::map<std::string, std::string>& values) {
  return from_map(values, TrainConfig{});
}

TrainConfig TrainConfig::from_map(const std::map<std::string, std::string>& values,
                                  TrainConfig base) {
  for (const auto& [key, value] : values) {
    if (key == "mode") {
      base.mode = mode_from_string(value);
    } else if (key == "lr") {
      base.lr = parse_double_value(key, value);
    } else if (key == "epochs") {
      base.epochs = static_cast<int>(parse_int_value(key, value));
    } else if (key == "batch_size") {
      base.batch_size = static_cast<int>(parse_int_value(key, value));
    } else if (key == "n_min") {
      base.n_min = static_cast<int>(parse_int_value(key, value));
    } else if (key == "n_max") {
      base.n_max = static_cast<int>(parse_int_value(key, value));
    } else if (key == "min_ngram_support") {
      base.min_ngram_support = static_cast<int>(parse_int_value(key, value));
    } else if (key == "min_word_count") {
      base.min_word_count = parse_u64_value(key, value);
    } else if (key == "contexts_per_instance") {
      base.contexts_per_instance =
          static_cast<std::size_t>(parse_u64_value(key, value));
    } else if (key == "seed") {
      base.seed = parse_u64_value(key, value);
    } else if (key == "beta1") {
      base.beta1 = parse_double_value(key, value);
    } else if (key == "beta2") {
      base.beta2 = parse_double_value(key, value);
    } else if (key == "eps") {
      base.eps = parse_double_value(key, value);
    } else if (key == "exclude_target") {
      base.exclude_target = parse_bool_value(key, value);
    } else if (key == "lowercase") {
      base.lowercase = parse_bool_value(key, value);
    } else {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
  return base;
}

TrainConfig TrainConfig::load(std::istream& in) {
  return load(in, TrainConfig{});
}

TrainConfig TrainConfig::load(std::istream& in, TrainConfig base) {
  std::map<std::string, std::string> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    std::size_t sep = content.find('=');
    std::string key, value;
    if (sep != std::string::npos) {
      key = trim(content.substr(0, sep));
      value = trim(content.substr(sep + 1));
    } else {
      sep = content.find_first_of(" \t");
      if (sep == std::string::npos)
        throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                    ": expected 'key value'");
      key = trim(content.substr(0, sep));
      value = trim(content.substr(sep + 1));
    }
    if (key.empty() || value.empty())
      throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                  ": expected 'key value'");
    values[key] = value;
  }
  return from_map(values, base);
}

FcmParameters init_params(std::size_t dim, std::size_t vocab_size, Mode mode,
                          Rng& rng) {
  if (dim == 0) throw std::invalid_argument("init_params: dim must be positive");
  if (vocab_size == 0)
    throw std::invalid_argument("init_params: vocab_size must be positive");
  FcmParameters p;
  p.mode = mode;
  p.dim = dim;

  p.ngram_table = Matrix(vocab_size, dim);
  const double ngram_limit =
      std::sqrt(6.0 / static_cast<double>(vocab_size + dim));
  for (double& v : p.ngram_table.data) v = rng.uniform(-ngram_limit, ngram_limit);

  p.transform = Matrix(dim, dim);
  const double transform_limit = std::sqrt(6.0 / static_cast<double>(2 * dim));
  for (double& v : p.transform.data)
    v = rng.uniform(-transform_limit, transform_limit);

  const double gate_limit = std::sqrt(6.0 / static_cast<double>(2 * dim + 1));
  p.gate_weight.resize(2 * dim);
  for (double& v : p.gate_weight) v = rng.uniform(-gate_limit, gate_limit);

  p.gate_bias = 0.0;
  p.single_logit = 0.0;
  return p;
}

double loss_batch(std::span<const TrainingInstance> batch,
                  const FcmParameters& params, const NgramVocabulary& vocab,
                  const EmbeddingTable& table, const ForwardOptions& options) {
  if (batch.empty()) throw std::invalid_argument("loss_batch: empty batch");
  double total = 0.0;
  for (const auto& instance : batch) {
    const auto trace =
        forward(instance.word, instance.contexts, params, vocab, table, options);
    total += squared_distance(trace.result, table.vector(instance.word));
  }
  return total / static_cast<double>(batch.size());
}

std::pair<double, GradientSet> gradients(std::span<const TrainingInstance> batch,
                                         const FcmParameters& params,
                                         const NgramVocabulary& vocab,
                                         const EmbeddingTable& table,
                                         const ForwardOptions& options) {
  if (batch.empty()) throw std::invalid_argument("gradients: empty batch");
  const std::size_t k = params.dim;

  GradientSet g;
  g.transform = Matrix(k, k);
  g.gate_weight.assign(2 * k, 0.0);

  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  Vec gvec(k), df(k);

  for (const auto& instance : batch) {
    const auto trace =
        forward(instance.word, instance.contexts, params, vocab, table, options);
    const auto target = table.vector(instance.word);

    double instance_loss = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double r = trace.result[i] - target[i];
      instance_loss += r * r;
      gvec[i] = 2.0 * inv_batch * r;
    }
    total += instance_loss;

    const bool has_context = trace.context_word_count > 0;
    const double alpha = trace.alpha;

    if (has_context && params.mode != Mode::FormOnly)
      add_outer(g.transform, alpha, gvec, trace.context_raw);

    // The mixing weight is a learned function only in the gated and
    // single-parameter modes, and only when a context is present; otherwise
    // it is a constant with no gradient of its own.
    double dz = 0.0;
    if (has_context && (params.mode == Mode::Gated ||
                        params.mode == Mode::SingleParameter)) {
      double dalpha = 0.0;
      for (std::size_t i = 0; i < k; ++i)
        dalpha += gvec[i] * (trace.context[i] - trace.form[i]);
      dz = dalpha * alpha * (1.0 - alpha);
      if (params.mode == Mode::Gated) {
        for (std::size_t i = 0; i < k; ++i) {
          g.gate_weight[i] += dz * trace.context_raw[i];
          g.gate_weight[k + i] += dz * trace.form[i];
        }
        g.gate_bias += dz;
      } else {
        g.single_logit += dz;
      }
    }

    for (std::size_t i = 0; i < k; ++i) df[i] = (1.0 - alpha) * gvec[i];
    if (params.mode == Mode::Gated && has_context)
      for (std::size_t i = 0; i < k; ++i) df[i] += dz * params.gate_weight[k + i];

    const double inv_grams = 1.0 / static_cast<double>(trace.gram_ids.size());
    for (const auto id : trace.gram_ids)
      axpy(inv_grams, df, g.ngram_rows.try_emplace(id, Vec(k, 0.0)).first->second);
  }
  return {total * inv_batch, std::move(g)};
}

namespace {

double* coordinate(FcmParameters& p, int group, std::size_t i, std::size_t j) {
  switch (group) {
    case 0: return &p.ngram_table.at(i, j);
    case 1: return &p.transform.at(i, j);
    case 2: return &p.gate_weight[i];
    case 3: return &p.gate_bias;
    default: return &p.single_logit;
  }
}

}  // namespace

double grad_check(const FcmParameters& params, const TrainingInstance& instance,
                  const NgramVocabulary& vocab, const EmbeddingTable& table,
                  double eps, std::size_t min_coords, std::uint64_t seed,
                  const ForwardOptions& options) {
  const std::span<const TrainingInstance> batch(&instance, 1);
  const auto [loss, analytic] = gradients(batch, params, vocab, table, options);
  (void)loss;
  const std::size_t k = params.dim;

  struct Coord {
    int group;
    std::size_t i, j;
    double analytic;
  };
  std::vector<Coord> coords;
  for (const auto& [row, grad] : analytic.ngram_rows)
    for (std::size_t j = 0; j < k; ++j) coords.push_back({0, row, j, grad[j]});
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      coords.push_back({1, i, j, analytic.transform.at(i, j)});
  for (std::size_t i = 0; i < 2 * k; ++i)
    coords.push_back({2, i, 0, analytic.gate_weight[i]});
  coords.push_back({3, 0, 0, analytic.gate_bias});
  coords.push_back({4, 0, 0, analytic.single_logit});

  // Pad with coordinates of rows the instance never touches; their analytic
  // gradient must be exactly zero, which the comparison also verifies.
  Rng rng(seed);
  for (std::size_t guard = 0; coords.size() < min_coords && guard < 100000;
       ++guard) {
    const auto row =
        static_cast<std::uint32_t>(rng.below(params.ngram_table.rows));
    const auto j = static_cast<std::size_t>(rng.below(k));
    const auto it = analytic.ngram_rows.find(row);
    const double a = it == analytic.ngram_rows.end() ? 0.0 : it->second[j];
    coords.push_back({0, row, j, a});
  }

  FcmParameters work = params;
  double max_err = 0.0;
  for (const auto& c : coords) {
    double* theta = coordinate(work, c.group, c.i, c.j);
    const double original = *theta;
    *theta = original + eps;
    const double lp = loss_batch(batch, work, vocab, table, options);
    *theta = original - eps;
    const double lm = loss_batch(batch, work, vocab, table, options);
    *theta = original;
    const double numeric = (lp - lm) / (2.0 * eps);
    const double err = std::fabs(c.analytic - numeric) /
                       std::max({std::fabs(c.analytic), std::fabs(numeric), 1e-8});
    max_err = std::max(max_err, err);
  }
  return max_err;
}

AdamState AdamState::like(const FcmParameters& params) {
  AdamState s;
  s.ngram_m = Matrix(params.ngram_table.rows, params.ngram_table.cols);
  s.ngram_v = Matrix(params.ngram_table.rows, params.ngram_table.cols);
  s.ngram_steps.assign(params.ngram_table.rows, 0);
  s.transform_m = Matrix(params.transform.rows, params.transform.cols);
  s.transform_v = Matrix(params.transform.rows, params.transform.cols);
  s.gate_weight_m.assign(params.gate_weight.size(), 0.0);
  s.gate_weight_v.assign(params.gate_weight.size(), 0.0);
  return s;
}

void adam_step(FcmParameters& params, const GradientSet& grads, AdamState& state,
               std::uint64_t t, const TrainConfig& config) {
  if (t < 1) throw std::invalid_argument("adam_step: step index starts at 1");
  if (grads.transform.rows != params.transform.rows ||
      grads.transform.cols != params.transform.cols ||
      grads.gate_weight.size() != params.gate_weight.size())
    throw std::invalid_argument("adam_step: gradient shape mismatch");

  const auto update = [&](double& theta, double& m, double& v, double grad,
                          std::uint64_t steps) {
    m = config.beta1 * m + (1.0 - config.beta1) * grad;
    v = config.beta2 * v + (1.0 - config.beta2) * grad * grad;
    const double m_hat =
        m / (1.0 - std::pow(config.beta1, static_cast<double>(steps)));
    const double v_hat =
        v / (1.0 - std::pow(config.beta2, static_cast<double>(steps)));
    theta -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
  };

  for (std::size_t i = 0; i < params.transform.data.size(); ++i)
    update(params.transform.data[i], state.transform_m.data[i],
           state.transform_v.data[i], grads.transform.data[i], t);
  for (std::size_t i = 0; i < params.gate_weight.size(); ++i)
    update(params.gate_weight[i], state.gate_weight_m[i], state.gate_weight_v[i],
           grads.gate_weight[i], t);
  update(params.gate_bias, state.gate_bias_m, state.gate_bias_v, grads.gate_bias,
         t);
  update(params.single_logit, state.single_logit_m, state.single_logit_v,
         grads.single_logit, t);

  for (const auto& [row, grad] : grads.ngram_rows) {
    if (row >= params.ngram_table.rows)
      throw std::invalid_argument("adam_step: gradient row out of range");
    const auto steps = ++state.ngram_steps[row];
    for (std::size_t j = 0; j < params.ngram_table.cols; ++j)
      update(params.ngram_table.at(row, j), state.ngram_m.at(row, j),
             state.ngram_v.at(row, j), grad[j], steps);
  }
}

TrainResult train(const TrainConfig& config, const EmbeddingTable& table,
                  const CorpusIndex& corpus) {
  config.validate();

  std::vector<std::string> trainable;
  for (const auto& word : corpus.words()) {
    const auto count = corpus.frequency(word);
    if (count >= config.min_word_count && instances_per_word(count) > 0 &&
        table.contains(word))
      trainable.push_back(word);
  }
  if (trainable.empty())
    throw std::runtime_error(
        "train: no trainable words; a word needs at least 100 corpus "
        "occurrences (and min_word_count) plus a table embedding");

  auto vocab = build_ngram_vocab(trainable, config.n_min, config.n_max,
                                 config.min_ngram_support);

  Rng rng(config.seed);
  auto params = init_params(table.dim(), vocab.size(), config.mode, rng);
  auto state = AdamState::like(params);
  const ForwardOptions options{config.exclude_target};

  std::uint64_t t = 0;
  std::vector<double> history;
  history.reserve(static_cast<std::size_t>(config.epochs));
  std::vector<TrainingInstance> batch;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    TrainingStream stream(corpus, table, config.min_word_count,
                          config.contexts_per_instance, epoch,
                          rng.child(static_cast<std::uint64_t>(epoch)));
    double loss_sum = 0.0;
    std::size_t seen = 0;
    batch.clear();
    for (;;) {
      auto instance = stream.next();
      if (instance) batch.push_back(std::move(*instance));
      const bool flush = batch.size() == static_cast<std::size_t>(config.batch_size) ||
                         (!instance && !batch.empty());
      if (flush) {
        const auto [loss, grads] = gradients(batch, params, vocab, table, options);
        adam_step(params, grads, state, ++t, config);
        loss_sum += loss * static_cast<double>(batch.size());
        seen += batch.size();
        batch.clear();
      }
      if (!instance) break;
    }
    history.push_back(loss_sum / static_cast<double>(seen));
  }
  return {std::move(params), std::move(vocab), std::move(history)};
}

}  // namespace fcm
