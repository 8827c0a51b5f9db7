#ifndef RPL_POLICY_HPP_
#define RPL_POLICY_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "rpl/rng.hpp"
#include "rpl/task.hpp"

namespace rpl {

// Deterministic state features for the autoregressive policy. Layout:
//   [0, hash_slots)   hashed one-hot of the last emitted token (falls back
//                     to the last prompt token before any generation)
//   [h+0]             fraction of generated tokens in relevant_set
//   [h+1]             fraction of generated tokens in forbidden_set
//   [h+2]             required-set coverage so far (distinct)
//   [h+3]             fraction of prompt tokens in relevant_set
//   [h+4]             mean prompt token id / vocab_size
//   [h+5]             constant bias 1.0
// The token slot is hashed (token % hash_slots) so feature_dim is a free
// capacity knob independent of the vocabulary.
class FeatureMap {
 public:
  static constexpr int kFixedSlots = 6;

  FeatureMap(const TaskSpec& spec, int feature_dim);

  int dim() const { return dim_; }
  const TaskSpec& spec() const { return spec_; }

  void featurize(const TaskInstance& instance, std::span<const Token> generated,
                 std::vector<double>& out) const;
  std::vector<double> featurize(const TaskInstance& instance,
                                std::span<const Token> generated) const;

 private:
  TaskSpec spec_;
  int dim_;
  int hash_slots_;
};

struct PolicyParams {
  int vocab_size = 0;
  int feature_dim = 0;
  std::vector<double> weights;  // row-major, vocab_size x feature_dim

  static PolicyParams zeros(int vocab_size, int feature_dim);

  double* row(int token) { return weights.data() + static_cast<size_t>(token) * feature_dim; }
  const double* row(int token) const {
    return weights.data() + static_cast<size_t>(token) * feature_dim;
  }
  bool operator==(const PolicyParams&) const = default;
};

struct ValueParams {
  int feature_dim = 0;
  std::vector<double> weights;

  static ValueParams zeros(int feature_dim);
  bool operator==(const ValueParams&) const = default;
};

struct SamplerConfig {
  int top_k = 20;
  double temperature = 0.7;

  void validate(int vocab_size) const;
};

// Log-softmax of W.f over the vocabulary; exp-sums to 1 within 1e-12.
std::vector<double> log_probs(const PolicyParams& params, std::span<const double> features);
void log_probs(const PolicyParams& params, std::span<const double> features,
               std::vector<double>& out);

// Temperature-rescaled, renormalized top-k sampling.
Token sample_token(std::span<const double> log_probs, const SamplerConfig& sampler,
                   rng::Stream& stream);

// Deterministic argmax decode (ties go to the smallest token id).
Token greedy_token(std::span<const double> log_probs);

// d log pi(token | features) / dW = (one_hot(token) - softmax) (x) features.
PolicyParams grad_log_prob(const PolicyParams& params, std::span<const double> features,
                           Token token);

double value_predict(const ValueParams& params, std::span<const double> features);

// One gold-behavior demonstration: required tokens early, relevant filler after.
struct Demo {
  TaskInstance instance;
  std::vector<Token> response;
};

std::vector<Demo> make_gold_demos(const TaskSpec& spec,
                                  std::span<const TaskInstance> instances, uint64_t seed);

struct SftConfig {
  double learning_rate = 0.1;
  int steps = 500;
  uint64_t seed = 0;
};

// Gradient ascent on demo log-likelihood from a zero (uniform) init.
PolicyParams sft_train(const TaskSpec& spec, const FeatureMap& features,
                       std::span<const Demo> demos, const SftConfig& config);

double mean_demo_nll(const PolicyParams& params, const FeatureMap& features,
                     std::span<const Demo> demos);

// Deep copy for the frozen reference; params are plain values so this is a
// copy, named for intent at call sites.
PolicyParams snapshot_reference(const PolicyParams& params);

void save_policy(const PolicyParams& params, const std::filesystem::path& path);
PolicyParams load_policy(const std::filesystem::path& path);
void save_value(const ValueParams& params, const std::filesystem::path& path);
ValueParams load_value(const std::filesystem::path& path);

}  // namespace rpl

#endif  // RPL_POLICY_HPP_
