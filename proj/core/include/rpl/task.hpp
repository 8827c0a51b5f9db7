#ifndef RPL_TASK_HPP_
#define RPL_TASK_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace rpl {

using Token = int;

enum class Split { kTrain, kValid, kTest };
enum class Axis { kRelevance, kFactuality, kCompleteness };

std::string to_string(Split s);
std::string to_string(Axis a);
Axis axis_from_string(const std::string& name);

// Synthetic QA-like generation task. A fixed token alphabet stands in for a
// tokenizer; per-instance gold sets define what counts as relevant text,
// factual violations, and required content.
struct TaskSpec {
  int vocab_size = 32;
  int prompt_len = 1024;
  int max_gen_len = 200;
  int segment_len = 4;
  double relevant_frac = 0.375;
  double forbidden_frac = 0.25;
  int required_count = 4;
  std::array<int, 3> split_sizes = {3853, 500, 948};  // train/valid/test

  int relevant_pool_size() const;
  int forbidden_pool_size() const;

  // Throws ConfigError naming the offending field.
  void validate() const;
};

struct TaskInstance {
  int instance_id = 0;
  std::vector<Token> prompt_tokens;
  std::vector<Token> relevant_set;   // sorted
  std::vector<Token> forbidden_set;  // sorted, disjoint from relevant_set
  std::vector<Token> required_set;   // sorted, subset of relevant_set
  Split split = Split::kTrain;

  bool is_relevant(Token t) const;
  bool is_forbidden(Token t) const;
  bool is_required(Token t) const;
};

// Half-open [start, end) slice of a response.
struct Segment {
  int start = 0;
  int end = 0;
  std::vector<Token> tokens;
};

// Gold judgments for one response. segment_flags is filled for the
// relevance/factuality axes; coverage for completeness.
struct GoldScore {
  std::vector<bool> segment_flags;
  double coverage = 0.0;
};

// Deterministic in (spec, seed, instance_id). The relevant/forbidden sets
// are carved from seed-level pools (a seeded permutation of the alphabet)
// rather than re-drawn per instance, so that token identity carries signal
// a linear policy can pick up; the required set is drawn per instance.
TaskInstance generate_instance(const TaskSpec& spec, uint64_t seed, int instance_id);

// split_sizes.0/.1/.2 instances tagged train/valid/test, ids 0..N-1.
std::vector<TaskInstance> make_splits(const TaskSpec& spec, uint64_t seed);

// Contiguous partition; all segments have length L except possibly the last.
std::vector<Segment> segment_response(std::span<const Token> response, int segment_len);

// Gold scoring rules:
//   relevance    — a segment is relevant iff strictly more than half of its
//                  tokens are in relevant_set (even-length ties resolve to
//                  "not relevant")
//   factuality   — a segment is factual iff it contains no forbidden token
//   completeness — |distinct response tokens ∩ required_set| / |required_set|
GoldScore gold_score(const TaskSpec& spec, const TaskInstance& instance,
                     std::span<const Token> response, Axis axis);

bool gold_segment_relevant(const TaskInstance& instance, const Segment& seg);
bool gold_segment_factual(const TaskInstance& instance, const Segment& seg);
double gold_completeness(const TaskInstance& instance, std::span<const Token> response);

}  // namespace rpl

#endif  // RPL_TASK_HPP_
