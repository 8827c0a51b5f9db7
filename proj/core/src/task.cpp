#include "rpl/task.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rpl/errors.hpp"
#include "rpl/rng.hpp"

namespace rpl {

std::string to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kValid: return "valid";
    case Split::kTest: return "test";
  }
  return "?";
}

std::string to_string(Axis a) {
  switch (a) {
    case Axis::kRelevance: return "relevance";
    case Axis::kFactuality: return "factuality";
    case Axis::kCompleteness: return "completeness";
  }
  return "?";
}

Axis axis_from_string(const std::string& name) {
  if (name == "relevance") return Axis::kRelevance;
  if (name == "factuality") return Axis::kFactuality;
  if (name == "completeness") return Axis::kCompleteness;
  throw UsageError("unknown axis: " + name);
}

int TaskSpec::relevant_pool_size() const {
  return std::max(1, static_cast<int>(std::lround(relevant_frac * vocab_size)));
}

int TaskSpec::forbidden_pool_size() const {
  return static_cast<int>(std::lround(forbidden_frac * vocab_size));
}

void TaskSpec::validate() const {
  if (vocab_size < 4) throw ConfigError("task.vocab_size must be >= 4");
  if (prompt_len < 1) throw ConfigError("task.prompt_len must be >= 1");
  if (segment_len < 1) throw ConfigError("task.segment_len must be >= 1");
  if (max_gen_len < segment_len) {
    throw ConfigError("task.max_gen_len must be >= task.segment_len");
  }
  if (relevant_frac <= 0.0 || relevant_frac > 1.0) {
    throw ConfigError("task.relevant_frac must be in (0, 1]");
  }
  if (forbidden_frac < 0.0 || forbidden_frac > 1.0) {
    throw ConfigError("task.forbidden_frac must be in [0, 1]");
  }
  if (relevant_frac + forbidden_frac > 1.0) {
    throw ConfigError("task.relevant_frac + task.forbidden_frac must not exceed 1");
  }
  if (relevant_pool_size() + forbidden_pool_size() > vocab_size) {
    throw ConfigError("task gold-set fractions exceed the vocabulary");
  }
  if (required_count < 0 || required_count > relevant_pool_size()) {
    throw ConfigError("task.required_count must be in [0, relevant pool size]");
  }
  for (int n : split_sizes) {
    if (n < 0) throw ConfigError("task.split_sizes entries must be non-negative");
  }
}

namespace {

bool sorted_contains(const std::vector<Token>& set, Token t) {
  return std::binary_search(set.begin(), set.end(), t);
}

}  // namespace

bool TaskInstance::is_relevant(Token t) const { return sorted_contains(relevant_set, t); }
bool TaskInstance::is_forbidden(Token t) const { return sorted_contains(forbidden_set, t); }
bool TaskInstance::is_required(Token t) const { return sorted_contains(required_set, t); }

TaskInstance generate_instance(const TaskSpec& spec, uint64_t seed, int instance_id) {
  spec.validate();

  // Seed-level pools: a seeded permutation of the alphabet, carved into a
  // relevant prefix and a forbidden middle. Shared across instances.
  std::vector<Token> perm(spec.vocab_size);
  std::iota(perm.begin(), perm.end(), 0);
  auto pool_stream = rng::derive_stream(seed, "task.pools");
  pool_stream.shuffle(perm);

  const int n_rel = spec.relevant_pool_size();
  const int n_forb = spec.forbidden_pool_size();

  TaskInstance inst;
  inst.instance_id = instance_id;
  inst.relevant_set.assign(perm.begin(), perm.begin() + n_rel);
  inst.forbidden_set.assign(perm.begin() + n_rel, perm.begin() + n_rel + n_forb);
  std::sort(inst.relevant_set.begin(), inst.relevant_set.end());
  std::sort(inst.forbidden_set.begin(), inst.forbidden_set.end());

  auto stream = rng::derive_stream(seed, "task.instance", static_cast<uint64_t>(instance_id));
  inst.prompt_tokens.resize(spec.prompt_len);
  for (auto& t : inst.prompt_tokens) {
    t = static_cast<Token>(stream.below(static_cast<uint64_t>(spec.vocab_size)));
  }

  std::vector<Token> rel = inst.relevant_set;
  stream.shuffle(rel);
  inst.required_set.assign(rel.begin(), rel.begin() + spec.required_count);
  std::sort(inst.required_set.begin(), inst.required_set.end());

  return inst;
}

std::vector<TaskInstance> make_splits(const TaskSpec& spec, uint64_t seed) {
  spec.validate();
  std::vector<TaskInstance> out;
  out.reserve(spec.split_sizes[0] + spec.split_sizes[1] + spec.split_sizes[2]);
  int id = 0;
  const Split order[3] = {Split::kTrain, Split::kValid, Split::kTest};
  for (int s = 0; s < 3; ++s) {
    for (int i = 0; i < spec.split_sizes[s]; ++i, ++id) {
      TaskInstance inst = generate_instance(spec, seed, id);
      inst.split = order[s];
      out.push_back(std::move(inst));
    }
  }
  return out;
}

std::vector<Segment> segment_response(std::span<const Token> response, int segment_len) {
  if (segment_len < 1) throw UsageError("segment_len must be >= 1");
  std::vector<Segment> segments;
  const int n = static_cast<int>(response.size());
  segments.reserve((n + segment_len - 1) / std::max(1, segment_len));
  for (int start = 0; start < n; start += segment_len) {
    Segment seg;
    seg.start = start;
    seg.end = std::min(n, start + segment_len);
    seg.tokens.assign(response.begin() + start, response.begin() + seg.end);
    segments.push_back(std::move(seg));
  }
  return segments;
}

bool gold_segment_relevant(const TaskInstance& instance, const Segment& seg) {
  int hits = 0;
  for (Token t : seg.tokens) {
    if (instance.is_relevant(t)) ++hits;
  }
  return 2 * hits > static_cast<int>(seg.tokens.size());
}

bool gold_segment_factual(const TaskInstance& instance, const Segment& seg) {
  for (Token t : seg.tokens) {
    if (instance.is_forbidden(t)) return false;
  }
  return true;
}

double gold_completeness(const TaskInstance& instance, std::span<const Token> response) {
  if (instance.required_set.empty()) return 1.0;
  std::vector<Token> seen;
  for (Token t : response) {
    if (instance.is_required(t) && !sorted_contains(seen, t)) {
      seen.insert(std::lower_bound(seen.begin(), seen.end(), t), t);
    }
  }
  return static_cast<double>(seen.size()) / static_cast<double>(instance.required_set.size());
}

GoldScore gold_score(const TaskSpec& spec, const TaskInstance& instance,
                     std::span<const Token> response, Axis axis) {
  GoldScore score;
  switch (axis) {
    case Axis::kRelevance:
    case Axis::kFactuality: {
      auto segments = segment_response(response, spec.segment_len);
      score.segment_flags.reserve(segments.size());
      for (const auto& seg : segments) {
        score.segment_flags.push_back(axis == Axis::kRelevance
                                          ? gold_segment_relevant(instance, seg)
                                          : gold_segment_factual(instance, seg));
      }
      return score;
    }
    case Axis::kCompleteness:
      score.coverage = gold_completeness(instance, response);
      return score;
  }
  throw UsageError("gold_score: unknown axis");
}

}  // namespace rpl
