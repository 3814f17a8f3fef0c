#include "gridsynth/agents.hpp"

#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "gridsynth/error.hpp"

#ifndef GRIDSYNTH_ASSET_DIR
#define GRIDSYNTH_ASSET_DIR "assets"
#endif

namespace gridsynth {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string_view trim(std::string_view s) {
  const char* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

}  // namespace

PromptSet PromptSet::load(const std::string& dir) {
  PromptSet p;
  p.code_agent = read_file(dir + "/code_agent.txt");
  p.code_agent_feedback = read_file(dir + "/code_agent_feedback.txt");
  p.checker_agent = read_file(dir + "/checker_agent.txt");
  p.direct_planner = read_file(dir + "/direct_planner.txt");
  return p;
}

std::string PromptSet::default_dir() {
  if (const char* env = std::getenv("GRIDSYNTH_PROMPTS"); env && *env) return env;
  return std::string(GRIDSYNTH_ASSET_DIR) + "/prompts";
}

const PromptSet& PromptSet::defaults() {
  static const PromptSet p = load(default_dir());
  return p;
}

std::string render_template(std::string_view tmpl, const std::vector<std::pair<std::string, std::string>>& vars) {
  std::string out;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const std::size_t open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) break;
    const std::size_t close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    const std::string_view name = tmpl.substr(open + 2, close - open - 2);
    out.append(tmpl.substr(pos, open - pos));
    bool found = false;
    for (const auto& [k, v] : vars) {
      if (k == name) {
        out += v;
        found = true;
        break;
      }
    }
    if (!found) out.append(tmpl.substr(open, close + 2 - open));
    pos = close + 2;
  }
  out.append(tmpl.substr(pos));
  return out;
}

std::string build_code_prompt(const PromptSet& prompts, const std::string& nl) {
  return render_template(prompts.code_agent, {{"NL", std::string(trim(nl))}});
}

std::string build_code_prompt(const PromptSet& prompts, const std::string& nl, const std::string& feedback) {
  return build_code_prompt(prompts, nl) + render_template(prompts.code_agent_feedback, {{"FEEDBACK", feedback}});
}

std::string build_checker_prompt(const PromptSet& prompts, const std::string& nl, const std::string& spec_text) {
  return render_template(prompts.checker_agent, {{"NL", std::string(trim(nl))}, {"SPEC", std::string(trim(spec_text))}});
}

std::string build_planner_prompt(const PromptSet& prompts, const std::string& nl) {
  return render_template(prompts.direct_planner, {{"NL", std::string(trim(nl))}});
}

std::optional<std::string> extract_fenced_block(std::string_view text) {
  const std::size_t open = text.find("```");
  if (open == std::string_view::npos) return std::nullopt;
  std::size_t body = text.find('\n', open + 3);
  if (body == std::string_view::npos) return std::nullopt;
  ++body;
  std::size_t close = text.find("```", body);
  if (close == std::string_view::npos) close = text.size();
  return std::string(text.substr(body, close - body));
}

CodeAgentResult code_agent_generate(LlmClient& client, const PromptSet& prompts, const std::string& nl,
                                    const std::optional<std::string>& prior_feedback) {
  CodeAgentResult r;
  r.prompt = prior_feedback ? build_code_prompt(prompts, nl, *prior_feedback) : build_code_prompt(prompts, nl);
  r.raw = client.complete(r.prompt);
  r.document = extract_fenced_block(r.raw).value_or(r.raw);
  try {
    r.spec = parse_spec(r.document);
  } catch (const SchemaError& e) {
    r.parse_error = std::string("schema error: ") + e.what();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ClientError) throw;
    r.parse_error = std::string(to_string(e.code())) + ": " + e.what();
  }
  return r;
}

CheckerVerdict interpret_checker_reply(std::string_view reply) {
  const std::string_view t = trim(reply);
  if (t == "True") return {true, ""};
  return {false, t.empty() ? std::string("(empty checker reply)") : std::string(reply)};
}

CheckerResult checker_agent_validate(LlmClient& client, const PromptSet& prompts, const std::string& nl,
                                     const std::string& spec_text) {
  CheckerResult r;
  r.prompt = build_checker_prompt(prompts, nl, spec_text);
  r.raw = client.complete(r.prompt);
  r.verdict = interpret_checker_reply(r.raw);
  return r;
}

const char* to_string(PipelineOutcome o) {
  switch (o) {
    case PipelineOutcome::AcceptedSpec: return "AcceptedSpec";
    case PipelineOutcome::BlockedWithFeedback: return "BlockedWithFeedback";
    case PipelineOutcome::ParseFailure: return "ParseFailure";
    case PipelineOutcome::ClientError: return "ClientError";
  }
  return "Unknown";
}

AgentTranscript pipeline_run(LlmClient& client, const std::string& nl, int k_max, const PromptSet& prompts) {
  if (k_max < 1) throw std::invalid_argument("k_max must be at least 1");
  AgentTranscript t;
  t.nl = nl;
  std::optional<std::string> feedback;
  try {
    for (int k = 0; k < k_max; ++k) {
      AgentIteration it;
      CodeAgentResult gen = code_agent_generate(client, prompts, nl, feedback);
      it.code_prompt = std::move(gen.prompt);
      it.code_raw = std::move(gen.raw);
      it.spec = std::move(gen.spec);
      it.parse_error = std::move(gen.parse_error);
      if (!it.spec) {
        feedback = it.parse_error;
        t.outcome = PipelineOutcome::ParseFailure;
        t.iterations.push_back(std::move(it));
        continue;
      }
      CheckerResult chk = checker_agent_validate(client, prompts, nl, gen.document);
      it.checker_prompt = std::move(chk.prompt);
      it.checker_raw = std::move(chk.raw);
      it.verdict = chk.verdict;
      const bool ok = chk.verdict.ok;
      std::optional<ProblemSpec> spec = it.spec;
      t.iterations.push_back(std::move(it));
      if (ok) {
        t.outcome = PipelineOutcome::AcceptedSpec;
        t.spec = std::move(spec);
        t.feedback.clear();
        return t;
      }
      feedback = chk.verdict.feedback;
      t.outcome = PipelineOutcome::BlockedWithFeedback;
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ClientError) throw;
    t.outcome = PipelineOutcome::ClientError;
    t.client_error = e.what();
    t.spec.reset();
    return t;
  }
  t.feedback = feedback.value_or("");
  return t;
}

std::string AgentTranscript::to_json() const {
  nlohmann::ordered_json j;
  j["nl"] = nl;
  j["outcome"] = to_string(outcome);
  j["iterations"] = nlohmann::ordered_json::array();
  for (const auto& it : iterations) {
    nlohmann::ordered_json e;
    e["code_agent_prompt"] = it.code_prompt;
    e["code_agent_output"] = it.code_raw;
    e["parsed"] = it.spec.has_value();
    if (!it.parse_error.empty()) e["parse_error"] = it.parse_error;
    if (it.verdict) {
      e["checker_prompt"] = it.checker_prompt;
      e["checker_output"] = it.checker_raw;
      e["verdict_ok"] = it.verdict->ok;
      e["feedback"] = it.verdict->feedback;
    }
    j["iterations"].push_back(std::move(e));
  }
  if (!feedback.empty()) j["feedback"] = feedback;
  if (!client_error.empty()) j["client_error"] = client_error;
  if (spec) j["spec"] = nlohmann::ordered_json::parse(serialize_spec(*spec));
  return j.dump(2) + "\n";
}

}  // namespace gridsynth
