#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "gridsynth/agents.hpp"
#include "gridsynth/simulator.hpp"
#include "gridsynth/spec_format.hpp"

namespace gridsynth {

struct BenchCase {
  std::string id;
  ProblemSpec ground_truth;
  std::array<std::string, 3> paraphrases;
};

/// Every subdirectory of `dir` holding spec.json and paraphrase_{1,2,3}.txt,
/// sorted by directory name. Throws Error(IoError) on an incomplete case.
std::vector<BenchCase> load_cases(const std::string& dir);

enum class Strategy { DirectLLM, CodeAgentOnly, FullPipeline };

const char* to_string(Strategy s);
/// Accepts "direct", "code", "full" and the enumerator names.
std::optional<Strategy> parse_strategy(const std::string& name);

enum class OutcomeCategory { IncorrectExecution, CorrectNotChecked, IncorrectBlocked, CorrectChecked };

const char* to_string(OutcomeCategory c);

struct Categorization {
  OutcomeCategory category = OutcomeCategory::IncorrectExecution;
  bool correct = false;
  /// The checker blocked a spec that matches the ground truth.
  bool false_block = false;
};

/// Empty semantic difference against the ground truth.
bool spec_matches(const ProblemSpec& ground_truth, const ProblemSpec& produced);

/// Code agent alone: an unparseable answer is executed-and-wrong.
Categorization categorize_code_agent(const std::optional<ProblemSpec>& produced, const ProblemSpec& ground_truth);

Categorization categorize_pipeline(const AgentTranscript& transcript, const ProblemSpec& ground_truth);

/// Waypoint path from the planner prompt. Correct iff it starts in the
/// initial set and check_reach_avoid accepts its densified polyline.
Categorization categorize_direct(const std::optional<std::vector<Vec>>& waypoints, const ProblemSpec& ground_truth);

/// Parses a JSON array of [x, y] pairs from the first fenced block (or the
/// whole reply). nullopt if malformed or empty.
std::optional<std::vector<Vec>> parse_waypoints(const std::string& reply);

/// Straight-line interpolation with samples at most `spacing` apart.
Trajectory trajectory_from_waypoints(const std::vector<Vec>& waypoints, double spacing = 0.02);

struct ReportRow {
  std::string case_id;
  int paraphrase = 1;
  Strategy strategy = Strategy::FullPipeline;
  Categorization result;
  bool client_error = false;
  /// Transcript of the run as JSON.
  std::string transcript;
};

enum class CaseVerdict { Robust, Solved, Incorrect };

const char* to_string(CaseVerdict v);

/// Robust: all three correct; Solved: at least one; Incorrect: none.
CaseVerdict robustness(const std::array<bool, 3>& correct);

struct BenchReport {
  Strategy strategy = Strategy::FullPipeline;
  std::vector<ReportRow> rows;
  std::array<int, 4> category_counts{};
  int correct = 0;
  int false_blocks = 0;
  int client_errors = 0;
  /// Per case, in case order.
  std::vector<std::pair<std::string, CaseVerdict>> verdicts;
  int robust = 0;
  /// Cases with at least one correct paraphrase (robust ones included).
  int solved = 0;
  int incorrect = 0;

  int count(OutcomeCategory c) const { return category_counts[static_cast<std::size_t>(c)]; }
  std::string csv() const;
  std::string summary() const;
  /// Writes report.csv, summary.txt and transcripts.jsonl into `dir`.
  void write(const std::string& dir) const;
};

/// Rebuilds counts and verdicts from `rows`.
void tally(BenchReport& report);

BenchReport run_benchmark(const std::vector<BenchCase>& cases, Strategy strategy, LlmClient& client,
                          const PromptSet& prompts = PromptSet::defaults(), int k_max = 2);

}  // namespace gridsynth
