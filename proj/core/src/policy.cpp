#include "rpl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "rpl/errors.hpp"

namespace rpl {

FeatureMap::FeatureMap(const TaskSpec& spec, int feature_dim)
    : spec_(spec), dim_(feature_dim), hash_slots_(feature_dim - kFixedSlots) {
  if (hash_slots_ < 1) {
    throw ConfigError("policy.feature_dim must be >= " + std::to_string(kFixedSlots + 1));
  }
}

void FeatureMap::featurize(const TaskInstance& instance, std::span<const Token> generated,
                           std::vector<double>& out) const {
  out.assign(dim_, 0.0);

  Token last = generated.empty() ? instance.prompt_tokens.back() : generated.back();
  out[last % hash_slots_] = 1.0;

  if (!generated.empty()) {
    int rel = 0, forb = 0;
    for (Token t : generated) {
      if (instance.is_relevant(t)) ++rel;
      if (instance.is_forbidden(t)) ++forb;
    }
    const double n = static_cast<double>(generated.size());
    out[hash_slots_ + 0] = rel / n;
    out[hash_slots_ + 1] = forb / n;
    out[hash_slots_ + 2] = gold_completeness(instance, generated);
  }

  int prompt_rel = 0;
  long prompt_sum = 0;
  for (Token t : instance.prompt_tokens) {
    if (instance.is_relevant(t)) ++prompt_rel;
    prompt_sum += t;
  }
  const double plen = static_cast<double>(instance.prompt_tokens.size());
  out[hash_slots_ + 3] = prompt_rel / plen;
  out[hash_slots_ + 4] = static_cast<double>(prompt_sum) / (plen * spec_.vocab_size);
  out[hash_slots_ + 5] = 1.0;
}

std::vector<double> FeatureMap::featurize(const TaskInstance& instance,
                                          std::span<const Token> generated) const {
  std::vector<double> out;
  featurize(instance, generated, out);
  return out;
}

PolicyParams PolicyParams::zeros(int vocab_size, int feature_dim) {
  PolicyParams p;
  p.vocab_size = vocab_size;
  p.feature_dim = feature_dim;
  p.weights.assign(static_cast<size_t>(vocab_size) * feature_dim, 0.0);
  return p;
}

ValueParams ValueParams::zeros(int feature_dim) {
  ValueParams v;
  v.feature_dim = feature_dim;
  v.weights.assign(feature_dim, 0.0);
  return v;
}

void SamplerConfig::validate(int vocab_size) const {
  if (top_k < 1) throw ConfigError("sampler.top_k must be >= 1");
  if (top_k > vocab_size) throw ConfigError("sampler.top_k must not exceed the vocabulary");
  if (!(temperature > 0.0)) throw ConfigError("sampler.temperature must be > 0");
}

void log_probs(const PolicyParams& params, std::span<const double> features,
               std::vector<double>& out) {
  if (static_cast<int>(features.size()) != params.feature_dim) {
    throw UsageError("log_probs: feature dimension mismatch");
  }
  out.resize(params.vocab_size);
  double max_logit = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < params.vocab_size; ++t) {
    const double* w = params.row(t);
    double logit = 0.0;
    for (int j = 0; j < params.feature_dim; ++j) logit += w[j] * features[j];
    out[t] = logit;
    max_logit = std::max(max_logit, logit);
  }
  double sum = 0.0;
  for (double& v : out) sum += std::exp(v - max_logit);
  const double log_z = max_logit + std::log(sum);
  for (double& v : out) v -= log_z;
}

std::vector<double> log_probs(const PolicyParams& params, std::span<const double> features) {
  std::vector<double> out;
  log_probs(params, features, out);
  return out;
}

namespace {

// Token ids of the k largest log-probs; ties resolve to the smaller id.
std::vector<int> top_k_tokens(std::span<const double> logp, int k) {
  std::vector<int> idx(logp.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](int a, int b) {
    if (logp[a] != logp[b]) return logp[a] > logp[b];
    return a < b;
  });
  idx.resize(k);
  return idx;
}

}  // namespace

Token sample_token(std::span<const double> logp, const SamplerConfig& sampler,
                   rng::Stream& stream) {
  sampler.validate(static_cast<int>(logp.size()));
  const auto top = top_k_tokens(logp, sampler.top_k);

  double max_scaled = -std::numeric_limits<double>::infinity();
  for (int t : top) max_scaled = std::max(max_scaled, logp[t] / sampler.temperature);
  std::vector<double> w(top.size());
  double total = 0.0;
  for (size_t i = 0; i < top.size(); ++i) {
    w[i] = std::exp(logp[top[i]] / sampler.temperature - max_scaled);
    total += w[i];
  }

  const double u = stream.uniform() * total;
  double acc = 0.0;
  for (size_t i = 0; i < top.size(); ++i) {
    acc += w[i];
    if (u < acc) return top[i];
  }
  return top.back();
}

Token greedy_token(std::span<const double> logp) {
  int best = 0;
  for (int t = 1; t < static_cast<int>(logp.size()); ++t) {
    if (logp[t] > logp[best]) best = t;
  }
  return best;
}

PolicyParams grad_log_prob(const PolicyParams& params, std::span<const double> features,
                           Token token) {
  if (token < 0 || token >= params.vocab_size) {
    throw UsageError("grad_log_prob: token out of range");
  }
  const auto logp = log_probs(params, features);
  PolicyParams grad = PolicyParams::zeros(params.vocab_size, params.feature_dim);
  for (int t = 0; t < params.vocab_size; ++t) {
    const double coef = (t == token ? 1.0 : 0.0) - std::exp(logp[t]);
    double* g = grad.row(t);
    for (int j = 0; j < params.feature_dim; ++j) g[j] = coef * features[j];
  }
  return grad;
}

double value_predict(const ValueParams& params, std::span<const double> features) {
  if (static_cast<int>(features.size()) != params.feature_dim) {
    throw UsageError("value_predict: feature dimension mismatch");
  }
  double v = 0.0;
  for (int j = 0; j < params.feature_dim; ++j) v += params.weights[j] * features[j];
  return v;
}

std::vector<Demo> make_gold_demos(const TaskSpec& spec,
                                  std::span<const TaskInstance> instances, uint64_t seed) {
  std::vector<Demo> demos;
  demos.reserve(instances.size());
  for (const auto& inst : instances) {
    auto stream = rng::derive_stream(seed, "sft.demo", static_cast<uint64_t>(inst.instance_id));
    Demo d;
    d.instance = inst;
    d.response = inst.required_set;
    stream.shuffle(d.response);
    const auto& rel = inst.relevant_set;
    while (static_cast<int>(d.response.size()) < spec.max_gen_len) {
      d.response.push_back(rel[stream.below(rel.size())]);
    }
    d.response.resize(spec.max_gen_len);
    demos.push_back(std::move(d));
  }
  return demos;
}

namespace {

// Accumulates coef * (one_hot(token) - softmax) (x) features into grad.
void accumulate_logprob_grad(PolicyParams& grad, std::span<const double> logp,
                             std::span<const double> features, Token token, double coef) {
  const int vocab = grad.vocab_size;
  const int dim = grad.feature_dim;
  for (int t = 0; t < vocab; ++t) {
    const double c = coef * ((t == token ? 1.0 : 0.0) - std::exp(logp[t]));
    double* g = grad.row(t);
    for (int j = 0; j < dim; ++j) g[j] += c * features[j];
  }
}

}  // namespace

PolicyParams sft_train(const TaskSpec& spec, const FeatureMap& features,
                       std::span<const Demo> demos, const SftConfig& config) {
  if (demos.empty()) throw UsageError("sft_train: demos must be non-empty");

  PolicyParams params = PolicyParams::zeros(spec.vocab_size, features.dim());
  auto stream = rng::derive_stream(config.seed, "sft.train");
  std::vector<double> f;
  std::vector<double> logp;

  for (int step = 0; step < config.steps; ++step) {
    const Demo& demo = demos[stream.below(demos.size())];
    PolicyParams grad = PolicyParams::zeros(params.vocab_size, params.feature_dim);
    const auto& resp = demo.response;
    for (size_t t = 0; t < resp.size(); ++t) {
      features.featurize(demo.instance, std::span<const Token>(resp.data(), t), f);
      log_probs(params, f, logp);
      accumulate_logprob_grad(grad, logp, f, resp[t], 1.0 / static_cast<double>(resp.size()));
    }
    for (size_t i = 0; i < params.weights.size(); ++i) {
      params.weights[i] += config.learning_rate * grad.weights[i];
    }
  }
  return params;
}

double mean_demo_nll(const PolicyParams& params, const FeatureMap& features,
                     std::span<const Demo> demos) {
  if (demos.empty()) throw UsageError("mean_demo_nll: demos must be non-empty");
  double total = 0.0;
  long count = 0;
  std::vector<double> f;
  std::vector<double> logp;
  for (const auto& demo : demos) {
    const auto& resp = demo.response;
    for (size_t t = 0; t < resp.size(); ++t) {
      features.featurize(demo.instance, std::span<const Token>(resp.data(), t), f);
      log_probs(params, f, logp);
      total -= logp[resp[t]];
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

PolicyParams snapshot_reference(const PolicyParams& params) { return params; }

namespace {

nlohmann::json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

void write_json_file(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace

void save_policy(const PolicyParams& params, const std::filesystem::path& path) {
  nlohmann::json j;
  j["rows"] = params.vocab_size;
  j["cols"] = params.feature_dim;
  j["data"] = params.weights;
  write_json_file(j, path);
}

PolicyParams load_policy(const std::filesystem::path& path) {
  const auto j = load_json_file(path);
  PolicyParams p;
  p.vocab_size = j.at("rows").get<int>();
  p.feature_dim = j.at("cols").get<int>();
  p.weights = j.at("data").get<std::vector<double>>();
  if (p.weights.size() != static_cast<size_t>(p.vocab_size) * p.feature_dim) {
    throw DataError("policy checkpoint shape mismatch in " + path.string());
  }
  return p;
}

void save_value(const ValueParams& params, const std::filesystem::path& path) {
  nlohmann::json j;
  j["rows"] = 1;
  j["cols"] = params.feature_dim;
  j["data"] = params.weights;
  write_json_file(j, path);
}

ValueParams load_value(const std::filesystem::path& path) {
  const auto j = load_json_file(path);
  ValueParams v;
  v.feature_dim = j.at("cols").get<int>();
  v.weights = j.at("data").get<std::vector<double>>();
  if (v.weights.size() != static_cast<size_t>(v.feature_dim)) {
    throw DataError("value checkpoint shape mismatch in " + path.string());
  }
  return v;
}

}  // namespace rpl
