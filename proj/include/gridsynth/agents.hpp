#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gridsynth/llm_client.hpp"
#include "gridsynth/spec_format.hpp"

namespace gridsynth {

/// Prompt templates. Placeholders: {{NL}}, {{FEEDBACK}}, {{SPEC}}.
struct PromptSet {
  std::string code_agent;
  std::string code_agent_feedback;
  std::string checker_agent;
  std::string direct_planner;

  /// Reads code_agent.txt, code_agent_feedback.txt, checker_agent.txt and
  /// direct_planner.txt from `dir`. Throws Error(IoError).
  static PromptSet load(const std::string& dir);
  /// $GRIDSYNTH_PROMPTS if set, otherwise the installed asset directory.
  static std::string default_dir();
  static const PromptSet& defaults();
};

std::string render_template(std::string_view tmpl, const std::vector<std::pair<std::string, std::string>>& vars);

std::string build_code_prompt(const PromptSet& prompts, const std::string& nl);
/// Code prompt with the reviewer feedback section appended.
std::string build_code_prompt(const PromptSet& prompts, const std::string& nl, const std::string& feedback);
std::string build_checker_prompt(const PromptSet& prompts, const std::string& nl, const std::string& spec_text);
std::string build_planner_prompt(const PromptSet& prompts, const std::string& nl);

/// Body of the first ``` fenced block (language tag skipped), or nullopt.
std::optional<std::string> extract_fenced_block(std::string_view text);

struct CodeAgentResult {
  std::string prompt;
  std::string raw;
  /// Text handed to the parser: the fenced block, or the whole response
  /// when it has none.
  std::string document;
  std::optional<ProblemSpec> spec;
  std::string parse_error;
};

CodeAgentResult code_agent_generate(LlmClient& client, const PromptSet& prompts, const std::string& nl,
                                    const std::optional<std::string>& prior_feedback = std::nullopt);

struct CheckerVerdict {
  bool ok = false;
  std::string feedback;
};

/// "True" after trimming whitespace is ok; anything else is feedback.
CheckerVerdict interpret_checker_reply(std::string_view reply);

struct CheckerResult {
  std::string prompt;
  std::string raw;
  CheckerVerdict verdict;
};

CheckerResult checker_agent_validate(LlmClient& client, const PromptSet& prompts, const std::string& nl,
                                     const std::string& spec_text);

enum class PipelineOutcome { AcceptedSpec, BlockedWithFeedback, ParseFailure, ClientError };

const char* to_string(PipelineOutcome o);

struct AgentIteration {
  std::string code_prompt;
  std::string code_raw;
  std::optional<ProblemSpec> spec;
  std::string parse_error;
  std::string checker_prompt;
  std::string checker_raw;
  std::optional<CheckerVerdict> verdict;
};

struct AgentTranscript {
  std::string nl;
  std::vector<AgentIteration> iterations;
  PipelineOutcome outcome = PipelineOutcome::BlockedWithFeedback;
  /// Set iff outcome is AcceptedSpec.
  std::optional<ProblemSpec> spec;
  /// Last checker feedback or parse error; forwarded to the user on
  /// BlockedWithFeedback and ParseFailure.
  std::string feedback;
  std::string client_error;

  std::string to_json() const;
};

/// Code Agent / Checker Agent loop, at most k_max iterations. A parse
/// failure counts as a failed iteration whose feedback is the parser
/// message. When the last iteration failed to parse the outcome is
/// ParseFailure, when the checker rejected it BlockedWithFeedback.
/// Transport failures end the run with outcome ClientError.
AgentTranscript pipeline_run(LlmClient& client, const std::string& nl, int k_max = 2,
                             const PromptSet& prompts = PromptSet::defaults());

}  // namespace gridsynth
