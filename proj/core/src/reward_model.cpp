#include "rpl/reward_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "rpl/errors.hpp"
#include "rpl/rng.hpp"

namespace rpl {

void RmFeatureConfig::validate() const {
  if (num_features < 1) throw ConfigError("reward_model.num_features must be >= 1");
  if (!(input_scale > 0.0)) throw ConfigError("reward_model.input_scale must be > 0");
}

SpanCounts count_membership(const TaskInstance& instance, std::span<const Token> tokens) {
  SpanCounts c;
  c.length = static_cast<int>(tokens.size());
  std::vector<Token> seen_required;
  for (Token t : tokens) {
    if (instance.is_relevant(t)) ++c.relevant;
    if (instance.is_forbidden(t)) ++c.forbidden;
    if (instance.is_required(t) &&
        !std::binary_search(seen_required.begin(), seen_required.end(), t)) {
      seen_required.insert(
          std::lower_bound(seen_required.begin(), seen_required.end(), t), t);
    }
  }
  c.required_distinct = static_cast<int>(seen_required.size());
  return c;
}

uint64_t item_cell_hash(Axis axis, const SpanCounts& c) {
  uint64_t h = rng::mix(0x524d4954454d00ull, static_cast<uint64_t>(axis));
  h = rng::mix(h, static_cast<uint64_t>(c.relevant));
  h = rng::mix(h, static_cast<uint64_t>(c.forbidden));
  h = rng::mix(h, static_cast<uint64_t>(c.required_distinct));
  h = rng::mix(h, static_cast<uint64_t>(c.length));
  return h;
}

RmFeatureMap::RmFeatureMap(const RmFeatureConfig& cfg, const TaskSpec& spec, Axis axis)
    : cfg_(cfg), spec_(spec), axis_(axis) {
  cfg.validate();
  auto stream = rng::derive_stream(cfg.projection_seed, "rm.projection",
                                   static_cast<uint64_t>(axis));
  projection_.resize(static_cast<size_t>(cfg.num_features) * 4);
  for (auto& a : projection_) a = stream.normal() * cfg.input_scale;
  bias_.resize(cfg.num_features);
  for (auto& b : bias_) b = stream.normal();
}

void RmFeatureMap::features(const TaskInstance& instance, std::span<const Token> tokens,
                            std::vector<double>& out) const {
  const SpanCounts c = count_membership(instance, tokens);
  const double len = std::max(1, c.length);
  const double s[4] = {
      c.relevant / len,
      c.forbidden / len,
      instance.required_set.empty()
          ? 1.0
          : c.required_distinct / static_cast<double>(instance.required_set.size()),
      c.length / static_cast<double>(std::max(1, spec_.max_gen_len)),
  };
  out.resize(dim());
  for (int k = 0; k < cfg_.num_features; ++k) {
    const double* a = projection_.data() + static_cast<size_t>(k) * 4;
    out[k] = std::tanh(a[0] * s[0] + a[1] * s[1] + a[2] * s[2] + a[3] * s[3] + bias_[k]);
  }
  out[cfg_.num_features] = 1.0;
}

std::vector<double> RmFeatureMap::features(const TaskInstance& instance,
                                           std::span<const Token> tokens) const {
  std::vector<double> out;
  features(instance, tokens, out);
  return out;
}

void ProxyLabelerConfig::validate() const {
  if (disagreement_frac < 0.0 || disagreement_frac >= 1.0) {
    throw ConfigError("reward_model.disagreement_frac must be in [0, 1)");
  }
}

ProxyLabeler::ProxyLabeler(const ProxyLabelerConfig& cfg) : cfg_(cfg) {
  cfg.validate();
  flipped_count_ = static_cast<int>(std::lround(cfg.disagreement_frac * kBuckets));
  std::vector<int> order(kBuckets);
  std::iota(order.begin(), order.end(), 0);
  auto stream = rng::derive_stream(cfg.seed, "proxy.flips");
  stream.shuffle(order);
  flipped_.assign(kBuckets, false);
  for (int i = 0; i < flipped_count_; ++i) flipped_[order[i]] = true;
}

int ProxyLabeler::bucket_of(uint64_t item_hash) const {
  return static_cast<int>(rng::splitmix64(item_hash ^ rng::splitmix64(cfg_.seed)) %
                          static_cast<uint64_t>(kBuckets));
}

bool proxy_label(bool gold, uint64_t item_hash, const ProxyLabelerConfig& cfg) {
  return ProxyLabeler(cfg).label(gold, item_hash);
}

void NoisyOracleConfig::validate() const {
  if (target_accuracy < 0.0 || target_accuracy > 1.0) {
    throw ConfigError("oracle.target_accuracy must be in [0, 1]");
  }
}

bool noisy_oracle_agrees(uint64_t item_hash, const NoisyOracleConfig& cfg) {
  const uint64_t bits = rng::splitmix64(item_hash ^ rng::splitmix64(cfg.seed ^ 0x6f7261636c65ull));
  const double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
  return u < cfg.target_accuracy;
}

Classification classify(const RMParams& params, const RmFeatureMap& features,
                        const TaskInstance& instance, std::span<const Token> tokens) {
  std::vector<double> phi;
  features.features(instance, tokens, phi);
  if (params.weights.size() != phi.size()) {
    throw UsageError("classify: weight / feature dimension mismatch");
  }
  double z = 0.0;
  for (size_t i = 0; i < phi.size(); ++i) z += params.weights[i] * phi[i];
  Classification out;
  out.probability = 1.0 / (1.0 + std::exp(-z));
  out.label = out.probability > 0.5;
  return out;
}

namespace {

bool gold_label_for(const TaskSpec& spec, const TaskInstance& instance,
                    std::span<const Token> tokens, Axis axis) {
  switch (axis) {
    case Axis::kRelevance: {
      Segment seg;
      seg.tokens.assign(tokens.begin(), tokens.end());
      return gold_segment_relevant(instance, seg);
    }
    case Axis::kFactuality: {
      Segment seg;
      seg.tokens.assign(tokens.begin(), tokens.end());
      return gold_segment_factual(instance, seg);
    }
    case Axis::kCompleteness:
      return gold_completeness(instance, tokens) > kCompletenessLabelThreshold;
  }
  throw UsageError("gold_label_for: unknown axis");
  (void)spec;
}

}  // namespace

RmDataset build_rm_dataset(const TaskSpec& spec, std::span<const TaskInstance> instances,
                           Axis axis, const ProxyLabeler& labeler,
                           const RmCorpusConfig& corpus) {
  if (instances.empty()) throw UsageError("build_rm_dataset: instances must be non-empty");
  if (corpus.responses_per_instance < 1) {
    throw ConfigError("reward_model.responses_per_instance must be >= 1");
  }

  RmDataset ds;
  ds.axis = axis;
  ds.instances.assign(instances.begin(), instances.end());

  for (size_t idx = 0; idx < ds.instances.size(); ++idx) {
    const TaskInstance& inst = ds.instances[idx];
    auto stream = rng::derive_stream(corpus.seed, "rm.corpus",
                                     static_cast<uint64_t>(inst.instance_id));
    for (int r = 0; r < corpus.responses_per_instance; ++r) {
      // Alternate uniform and relevant-biased responses for cell coverage.
      const bool biased = (r % 2) == 1;
      std::vector<Token> resp(spec.max_gen_len);
      for (auto& t : resp) {
        if (biased && stream.uniform() < 0.6 && !inst.relevant_set.empty()) {
          t = inst.relevant_set[stream.below(inst.relevant_set.size())];
        } else {
          t = static_cast<Token>(stream.below(static_cast<uint64_t>(spec.vocab_size)));
        }
      }

      auto add_item = [&](std::span<const Token> span_tokens) {
        RmDatasetItem item;
        item.instance_index = static_cast<int>(idx);
        item.tokens.assign(span_tokens.begin(), span_tokens.end());
        item.gold_label = gold_label_for(spec, inst, span_tokens, axis);
        item.cell_hash = item_cell_hash(axis, count_membership(inst, span_tokens));
        item.proxy_label = labeler.label(item.gold_label, item.cell_hash);
        ds.items.push_back(std::move(item));
      };

      if (axis == Axis::kCompleteness) {
        add_item(resp);
      } else {
        for (const auto& seg : segment_response(resp, spec.segment_len)) {
          add_item(seg.tokens);
        }
      }
    }
  }
  return ds;
}

void RmTrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("reward_model.learning_rate must be > 0");
  if (total_steps < 0) throw ConfigError("reward_model.total_steps must be >= 0");
  if (checkpoint_stride < 1) throw ConfigError("reward_model.checkpoint_stride must be >= 1");
  if (minibatch < 1) throw ConfigError("reward_model.minibatch must be >= 1");
}

double measure_accuracy(const RMParams& params, const RmFeatureMap& features,
                        const RmDataset& test_set, bool against_gold) {
  if (test_set.items.empty()) throw UsageError("measure_accuracy: empty test set");
  long correct = 0;
  for (const auto& item : test_set.items) {
    const auto pred =
        classify(params, features, test_set.instances[item.instance_index], item.tokens);
    const bool want = against_gold ? item.gold_label : item.proxy_label;
    if (pred.label == want) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test_set.items.size());
}

std::vector<RewardModelCheckpoint> train_with_checkpoints(const RmDataset& train_set,
                                                          const RmDataset& test_set,
                                                          const RmFeatureMap& features,
                                                          const RmTrainConfig& cfg) {
  if (train_set.items.empty()) throw UsageError("train_with_checkpoints: empty dataset");
  cfg.validate();

  RMParams params;
  params.weights.assign(features.dim(), 0.0);

  auto stream = rng::derive_stream(cfg.seed, "rm.train");
  std::vector<double> phi;
  std::vector<double> grad(features.dim());

  std::vector<RewardModelCheckpoint> family;
  auto checkpoint_at = [&](int step) {
    RewardModelCheckpoint ck;
    ck.step = step;
    ck.params = params;
    ck.axis = train_set.axis;
    ck.accuracy_proxy = measure_accuracy(params, features, test_set, /*against_gold=*/false);
    ck.accuracy_gold = measure_accuracy(params, features, test_set, /*against_gold=*/true);
    family.push_back(std::move(ck));
  };

  for (int step = 1; step <= cfg.total_steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (int b = 0; b < cfg.minibatch; ++b) {
      const auto& item = train_set.items[stream.below(train_set.items.size())];
      features.features(train_set.instances[item.instance_index], item.tokens, phi);
      double z = 0.0;
      for (size_t i = 0; i < phi.size(); ++i) z += params.weights[i] * phi[i];
      const double p = 1.0 / (1.0 + std::exp(-z));
      const double err = p - (item.proxy_label ? 1.0 : 0.0);
      for (size_t i = 0; i < phi.size(); ++i) grad[i] += err * phi[i];
    }
    const double scale = cfg.learning_rate / cfg.minibatch;
    for (size_t i = 0; i < grad.size(); ++i) params.weights[i] -= scale * grad[i];

    if (step % cfg.checkpoint_stride == 0 || step == cfg.total_steps) {
      checkpoint_at(step);
    }
  }
  if (family.empty()) checkpoint_at(0);  // total_steps == 0
  return family;
}

std::vector<FamilyRow> family_summary(std::span<const RewardModelCheckpoint> family) {
  if (family.empty()) throw UsageError("family_summary: empty family");
  std::vector<FamilyRow> rows;
  rows.reserve(family.size());
  for (const auto& ck : family) {
    rows.push_back({ck.step, ck.accuracy_proxy, ck.accuracy_gold});
  }
  std::sort(rows.begin(), rows.end(),
            [](const FamilyRow& a, const FamilyRow& b) { return a.step < b.step; });
  return rows;
}

// ---- persistence ----

namespace {

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, int step) {
  char name[64];
  std::snprintf(name, sizeof(name), "checkpoint_%06d.json", step);
  return dir / name;
}

}  // namespace

void save_family(const FamilyData& family, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  nlohmann::json meta;
  meta["axis"] = to_string(family.axis);
  meta["feature_config"] = {{"num_features", family.feature_config.num_features},
                            {"input_scale", family.feature_config.input_scale},
                            {"projection_seed", family.feature_config.projection_seed}};
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& ck : family.checkpoints) steps.push_back(ck.step);
  meta["steps"] = steps;
  {
    std::ofstream out(dir / "family.json");
    if (!out) throw IoError("cannot write " + (dir / "family.json").string());
    out << meta.dump(2) << "\n";
  }

  for (const auto& ck : family.checkpoints) {
    nlohmann::json j;
    j["step"] = ck.step;
    j["axis"] = to_string(ck.axis);
    j["accuracy_proxy"] = ck.accuracy_proxy;
    j["accuracy_gold"] = ck.accuracy_gold;
    j["weights"] = ck.params.weights;
    std::ofstream out(checkpoint_path(dir, ck.step));
    if (!out) throw IoError("cannot write checkpoint in " + dir.string());
    out << j.dump(2) << "\n";
  }

  std::ofstream csv(dir / "family_summary.csv");
  if (!csv) throw IoError("cannot write " + (dir / "family_summary.csv").string());
  csv << "step,accuracy_proxy,accuracy_gold\n";
  char line[128];
  for (const auto& row : family_summary(family.checkpoints)) {
    std::snprintf(line, sizeof(line), "%d,%.17g,%.17g\n", row.step, row.accuracy_proxy,
                  row.accuracy_gold);
    csv << line;
  }
}

FamilyData load_family(const std::filesystem::path& dir) {
  std::ifstream in(dir / "family.json");
  if (!in) throw DataError("missing family.json in " + dir.string());
  nlohmann::json meta;
  try {
    in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed family.json in " + dir.string() + ": " + e.what());
  }

  FamilyData family;
  family.axis = axis_from_string(meta.at("axis").get<std::string>());
  const auto& fc = meta.at("feature_config");
  family.feature_config.num_features = fc.at("num_features").get<int>();
  family.feature_config.input_scale = fc.at("input_scale").get<double>();
  family.feature_config.projection_seed = fc.at("projection_seed").get<uint64_t>();

  for (int step : meta.at("steps").get<std::vector<int>>()) {
    std::ifstream ck_in(checkpoint_path(dir, step));
    if (!ck_in) throw DataError("missing checkpoint for step " + std::to_string(step));
    nlohmann::json j;
    try {
      ck_in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw DataError("malformed checkpoint JSON: " + std::string(e.what()));
    }
    RewardModelCheckpoint ck;
    ck.step = j.at("step").get<int>();
    ck.axis = axis_from_string(j.at("axis").get<std::string>());
    ck.accuracy_proxy = j.at("accuracy_proxy").get<double>();
    ck.accuracy_gold = j.at("accuracy_gold").get<double>();
    ck.params.weights = j.at("weights").get<std::vector<double>>();
    family.checkpoints.push_back(std::move(ck));
  }
  return family;
}

// ---- scorers ----

bool GoldScorer::judge_segment(const TaskInstance& instance, const Segment& segment,
                               int /*ordinal*/) const {
  switch (axis_) {
    case Axis::kRelevance: return gold_segment_relevant(instance, segment);
    case Axis::kFactuality: return gold_segment_factual(instance, segment);
    case Axis::kCompleteness: break;
  }
  throw UsageError("GoldScorer: segment judgment is undefined for the completeness axis");
}

double GoldScorer::score_sequence(const TaskInstance& instance,
                                  std::span<const Token> response) const {
  if (axis_ != Axis::kCompleteness) {
    throw UsageError("GoldScorer: sequence score is defined only for the completeness axis");
  }
  return gold_completeness(instance, response);
}

NoisyOracleScorer::NoisyOracleScorer(const TaskSpec& spec, Axis axis,
                                     const NoisyOracleConfig& cfg)
    : gold_(spec, axis), axis_(axis), cfg_(cfg) {
  cfg.validate();
}

namespace {

uint64_t oracle_item_hash(Axis axis, const TaskInstance& instance, int ordinal,
                          std::span<const Token> tokens) {
  uint64_t h = rng::mix(static_cast<uint64_t>(axis) + 1,
                        static_cast<uint64_t>(instance.instance_id));
  h = rng::mix(h, static_cast<uint64_t>(ordinal) + 0x517);
  for (Token t : tokens) h = rng::mix(h, static_cast<uint64_t>(t));
  return h;
}

}  // namespace

bool NoisyOracleScorer::judge_segment(const TaskInstance& instance, const Segment& segment,
                                      int ordinal) const {
  const bool gold = gold_.judge_segment(instance, segment, ordinal);
  const uint64_t h = oracle_item_hash(axis_, instance, ordinal, segment.tokens);
  return noisy_oracle_agrees(h, cfg_) ? gold : !gold;
}

double NoisyOracleScorer::score_sequence(const TaskInstance& instance,
                                         std::span<const Token> response) const {
  const double gold = gold_.score_sequence(instance, response);
  const uint64_t h = oracle_item_hash(axis_, instance, -1, response);
  return noisy_oracle_agrees(h, cfg_) ? gold : 1.0 - gold;
}

bool RmScorer::judge_segment(const TaskInstance& instance, const Segment& segment,
                             int /*ordinal*/) const {
  return classify(params_, features_, instance, segment.tokens).label;
}

double RmScorer::score_sequence(const TaskInstance& instance,
                                std::span<const Token> response) const {
  return classify(params_, features_, instance, response).probability;
}

}  // namespace rpl
