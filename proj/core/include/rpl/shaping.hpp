#ifndef RPL_SHAPING_HPP_
#define RPL_SHAPING_HPP_

#include <span>
#include <vector>

#include "rpl/task.hpp"

namespace rpl {

struct ShapingConfig {
  double relevance_pos = 0.3;
  double relevance_neg = -0.3;
  double factuality_pos = 0.5;
  double factuality_neg = -0.5;
  double completeness_mean = -0.4468;
  double completeness_std = 8.3012;
  double completeness_bias = 0.0;
  double completeness_scale = 0.3;

  void validate() const;
};

struct KLPenaltyConfig {
  double beta = 0.3;

  void validate() const;
};

// Per-token shaped rewards. Each segment contributes its relevance and
// factuality constants at its final token; the normalized completeness
// score lands on the final token of the sequence; every other position
// receives 0 from shaping.
std::vector<double> assemble_rewards(const std::vector<Segment>& segments,
                                     const std::vector<bool>& relevance_labels,
                                     const std::vector<bool>& factuality_labels,
                                     double completeness_raw, const ShapingConfig& cfg);

double normalize_completeness(double raw, const ShapingConfig& cfg);

// Element-wise -beta * (logp_policy - logp_reference).
std::vector<double> kl_penalty(std::span<const double> logp_policy,
                               std::span<const double> logp_reference,
                               const KLPenaltyConfig& cfg);

// Zero mean, unit variance (population), with a 1e-8 floor on the
// standard deviation so constant batches map to zeros.
std::vector<double> whiten(std::span<const double> rewards);

}  // namespace rpl

#endif  // RPL_SHAPING_HPP_
