#include "rpl/shaping.hpp"

#include <algorithm>
#include <cmath>

#include "rpl/errors.hpp"

namespace rpl {

void ShapingConfig::validate() const {
  if (!(completeness_std > 0.0)) throw ConfigError("shaping.completeness_std must be > 0");
}

void KLPenaltyConfig::validate() const {
  if (beta < 0.0) throw ConfigError("ppo.kl_coefficient must be >= 0");
}

std::vector<double> assemble_rewards(const std::vector<Segment>& segments,
                                     const std::vector<bool>& relevance_labels,
                                     const std::vector<bool>& factuality_labels,
                                     double completeness_raw, const ShapingConfig& cfg) {
  if (relevance_labels.size() != segments.size() ||
      factuality_labels.size() != segments.size()) {
    throw UsageError("assemble_rewards: one relevance and one factuality label per segment");
  }
  if (segments.empty()) return {};

  const int total_len = segments.back().end;
  std::vector<double> rewards(total_len, 0.0);
  for (size_t i = 0; i < segments.size(); ++i) {
    double r = relevance_labels[i] ? cfg.relevance_pos : cfg.relevance_neg;
    r += factuality_labels[i] ? cfg.factuality_pos : cfg.factuality_neg;
    rewards[segments[i].end - 1] += r;
  }
  rewards[total_len - 1] += normalize_completeness(completeness_raw, cfg);
  return rewards;
}

double normalize_completeness(double raw, const ShapingConfig& cfg) {
  return ((raw - cfg.completeness_mean) / cfg.completeness_std + cfg.completeness_bias) *
         cfg.completeness_scale;
}

std::vector<double> kl_penalty(std::span<const double> logp_policy,
                               std::span<const double> logp_reference,
                               const KLPenaltyConfig& cfg) {
  if (logp_policy.size() != logp_reference.size()) {
    throw UsageError("kl_penalty: sequence length mismatch");
  }
  std::vector<double> out(logp_policy.size());
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = -cfg.beta * (logp_policy[i] - logp_reference[i]);
  }
  return out;
}

std::vector<double> whiten(std::span<const double> rewards) {
  if (rewards.empty()) return {};
  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= n;
  const double denom = std::max(std::sqrt(var), 1e-8);
  std::vector<double> out(rewards.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = (rewards[i] - mean) / denom;
  return out;
}

}  // namespace rpl
