#ifndef RPL_REWARD_MODEL_HPP_
#define RPL_REWARD_MODEL_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "rpl/task.hpp"

namespace rpl {

// ---------------------------------------------------------------------------
// Feature map
//
// Reward models never see raw tokens or the gold sets. They see a random
// nonlinear projection (tanh random features) of the membership-count
// signature of a span: how many of its tokens are relevant / forbidden, how
// much of the required set it covers, and its length. Early training picks
// up the smooth decision rules; fitting per-signature exceptions (see
// ProxyLabeler below) takes far longer, which is what spreads a checkpoint
// family across an accuracy range.
// ---------------------------------------------------------------------------

struct RmFeatureConfig {
  int num_features = 64;
  double input_scale = 3.0;
  uint64_t projection_seed = 0;

  void validate() const;
};

struct SpanCounts {
  int relevant = 0;
  int forbidden = 0;
  int required_distinct = 0;
  int length = 0;
};

SpanCounts count_membership(const TaskInstance& instance, std::span<const Token> tokens);

// Identity of an item as the reward model perceives it: the quantized count
// signature, salted by axis. Proxy-label flips are keyed on this hash, so a
// classifier with enough capacity over the signature space can eventually
// reproduce them.
uint64_t item_cell_hash(Axis axis, const SpanCounts& counts);

class RmFeatureMap {
 public:
  RmFeatureMap(const RmFeatureConfig& cfg, const TaskSpec& spec, Axis axis);

  int dim() const { return static_cast<int>(bias_.size()) + 1; }
  Axis axis() const { return axis_; }
  const RmFeatureConfig& config() const { return cfg_; }

  void features(const TaskInstance& instance, std::span<const Token> tokens,
                std::vector<double>& out) const;
  std::vector<double> features(const TaskInstance& instance,
                               std::span<const Token> tokens) const;

 private:
  RmFeatureConfig cfg_;
  TaskSpec spec_;
  Axis axis_;
  std::vector<double> projection_;  // num_features x 4, row-major
  std::vector<double> bias_;
};

// ---------------------------------------------------------------------------
// Proxy labeler
//
// Training labels for reward models are the gold labels XOR a deterministic
// flip on a fixed fraction of item hashes. The hash space is partitioned
// into kBuckets buckets and exactly round(delta * kBuckets) of them flip, so
// the disagreement measure is pinned by construction. Because flips are a
// function of the item signature, a sufficiently trained reward model fits
// them — becoming more accurate on its training signal and worse as a proxy
// for gold. This is the controllable cause behind every "accuracy paradox"
// experiment in this repository.
// ---------------------------------------------------------------------------

struct ProxyLabelerConfig {
  double disagreement_frac = 0.15;
  uint64_t seed = 0;

  void validate() const;
};

class ProxyLabeler {
 public:
  static constexpr int kBuckets = 1000;

  explicit ProxyLabeler(const ProxyLabelerConfig& cfg);

  int bucket_of(uint64_t item_hash) const;
  bool flips_bucket(int bucket) const { return flipped_[bucket]; }
  bool flips(uint64_t item_hash) const { return flipped_[bucket_of(item_hash)]; }
  bool label(bool gold, uint64_t item_hash) const { return gold != flips(item_hash); }
  int flipped_bucket_count() const { return flipped_count_; }
  const ProxyLabelerConfig& config() const { return cfg_; }

 private:
  ProxyLabelerConfig cfg_;
  std::vector<bool> flipped_;
  int flipped_count_ = 0;
};

bool proxy_label(bool gold, uint64_t item_hash, const ProxyLabelerConfig& cfg);

// ---------------------------------------------------------------------------
// Noisy oracle: agrees with gold with probability `target_accuracy`,
// deterministically per item hash. Gives exact control of reward-model
// strength independent of any training dynamics.
// ---------------------------------------------------------------------------

struct NoisyOracleConfig {
  double target_accuracy = 1.0;
  uint64_t seed = 0;

  void validate() const;
};

bool noisy_oracle_agrees(uint64_t item_hash, const NoisyOracleConfig& cfg);

// ---------------------------------------------------------------------------
// Classifier
// ---------------------------------------------------------------------------

struct RMParams {
  std::vector<double> weights;

  bool operator==(const RMParams&) const = default;
};

struct Classification {
  double probability = 0.0;
  bool label = false;  // probability > 0.5; an exact 0.5 tie is "false"
};

Classification classify(const RMParams& params, const RmFeatureMap& features,
                        const TaskInstance& instance, std::span<const Token> tokens);

struct RmDatasetItem {
  int instance_index = 0;
  std::vector<Token> tokens;
  bool gold_label = false;
  bool proxy_label = false;
  uint64_t cell_hash = 0;
};

struct RmDataset {
  Axis axis = Axis::kRelevance;
  std::vector<TaskInstance> instances;
  std::vector<RmDatasetItem> items;
};

// Sequence-level completeness items are binarized at this coverage.
inline constexpr double kCompletenessLabelThreshold = 0.5;

struct RmCorpusConfig {
  int responses_per_instance = 4;
  uint64_t seed = 0;
};

// Samples responses per instance (half uniform over the alphabet, half
// biased toward relevant tokens so high-count signatures occur), scores
// them with the gold rules, and attaches proxy labels.
RmDataset build_rm_dataset(const TaskSpec& spec, std::span<const TaskInstance> instances,
                           Axis axis, const ProxyLabeler& labeler,
                           const RmCorpusConfig& corpus);

struct RmTrainConfig {
  double learning_rate = 0.15;
  int total_steps = 3200;
  int checkpoint_stride = 400;
  int minibatch = 32;
  uint64_t seed = 0;

  void validate() const;
};

struct RewardModelCheckpoint {
  int step = 0;
  RMParams params;
  double accuracy_proxy = 0.0;
  double accuracy_gold = 0.0;
  Axis axis = Axis::kRelevance;
};

// Logistic-loss SGD on proxy labels. Checkpoints at every stride multiple
// plus the final step, each measured against the held-out test items.
std::vector<RewardModelCheckpoint> train_with_checkpoints(const RmDataset& train_set,
                                                          const RmDataset& test_set,
                                                          const RmFeatureMap& features,
                                                          const RmTrainConfig& cfg);

double measure_accuracy(const RMParams& params, const RmFeatureMap& features,
                        const RmDataset& test_set, bool against_gold);

struct FamilyRow {
  int step = 0;
  double accuracy_proxy = 0.0;
  double accuracy_gold = 0.0;
};

// Rows sorted by step; this table is the reward-model strength axis of a sweep.
std::vector<FamilyRow> family_summary(std::span<const RewardModelCheckpoint> family);

struct FamilyData {
  Axis axis = Axis::kRelevance;
  RmFeatureConfig feature_config;
  std::vector<RewardModelCheckpoint> checkpoints;
};

void save_family(const FamilyData& family, const std::filesystem::path& dir);
FamilyData load_family(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Scorers: the uniform face every reward source presents to PPO rollouts and
// evaluation. Segment judgment serves the relevance/factuality axes; the raw
// sequence score serves completeness.
// ---------------------------------------------------------------------------

class AxisScorer {
 public:
  virtual ~AxisScorer() = default;

  virtual Axis axis() const = 0;
  virtual bool judge_segment(const TaskInstance& instance, const Segment& segment,
                             int ordinal) const = 0;
  virtual double score_sequence(const TaskInstance& instance,
                                std::span<const Token> response) const = 0;
};

class GoldScorer final : public AxisScorer {
 public:
  GoldScorer(const TaskSpec& spec, Axis axis) : spec_(spec), axis_(axis) {}

  Axis axis() const override { return axis_; }
  bool judge_segment(const TaskInstance&, const Segment&, int) const override;
  double score_sequence(const TaskInstance&, std::span<const Token>) const override;

 private:
  TaskSpec spec_;
  Axis axis_;
};

// Gold with per-item agreement `target_accuracy`; disagreement inverts the
// segment label, and reflects the coverage score around 1/2.
class NoisyOracleScorer final : public AxisScorer {
 public:
  NoisyOracleScorer(const TaskSpec& spec, Axis axis, const NoisyOracleConfig& cfg);

  Axis axis() const override { return axis_; }
  bool judge_segment(const TaskInstance&, const Segment&, int ordinal) const override;
  double score_sequence(const TaskInstance&, std::span<const Token>) const override;

 private:
  GoldScorer gold_;
  Axis axis_;
  NoisyOracleConfig cfg_;
};

class RmScorer final : public AxisScorer {
 public:
  RmScorer(RmFeatureMap features, RMParams params)
      : features_(std::move(features)), params_(std::move(params)) {}

  Axis axis() const override { return features_.axis(); }
  bool judge_segment(const TaskInstance&, const Segment&, int) const override;
  // Completeness reward models contribute their positive-class probability
  // as the raw score.
  double score_sequence(const TaskInstance&, std::span<const Token>) const override;

 private:
  RmFeatureMap features_;
  RMParams params_;
};

}  // namespace rpl

#endif  // RPL_REWARD_MODEL_HPP_
