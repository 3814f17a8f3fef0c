#include "gridsynth/bench.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "gridsynth/error.hpp"

namespace gridsynth {

namespace fs = std::filesystem;

namespace {

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + p.string());
  out << text;
}

}  // namespace

std::vector<BenchCase> load_cases(const std::string& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(ErrorCode::IoError, "no case directory " + dir);
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory()) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  std::vector<BenchCase> cases;
  for (const auto& d : dirs) {
    BenchCase c;
    c.id = d.filename().string();
    try {
      c.ground_truth = parse_spec(read_text(d / "spec.json"));
    } catch (const SchemaError& e) {
      throw Error(ErrorCode::IoError, "case " + c.id + ": " + e.what());
    }
    for (int i = 0; i < 3; ++i) {
      std::string text = read_text(d / ("paraphrase_" + std::to_string(i + 1) + ".txt"));
      while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
      c.paraphrases[i] = std::move(text);
    }
    cases.push_back(std::move(c));
  }
  return cases;
}

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::DirectLLM: return "DirectLLM";
    case Strategy::CodeAgentOnly: return "CodeAgentOnly";
    case Strategy::FullPipeline: return "FullPipeline";
  }
  return "Unknown";
}

std::optional<Strategy> parse_strategy(const std::string& name) {
  if (name == "direct" || name == "DirectLLM") return Strategy::DirectLLM;
  if (name == "code" || name == "CodeAgentOnly") return Strategy::CodeAgentOnly;
  if (name == "full" || name == "FullPipeline") return Strategy::FullPipeline;
  return std::nullopt;
}

const char* to_string(OutcomeCategory c) {
  switch (c) {
    case OutcomeCategory::IncorrectExecution: return "IncorrectExecution";
    case OutcomeCategory::CorrectNotChecked: return "CorrectNotChecked";
    case OutcomeCategory::IncorrectBlocked: return "IncorrectBlocked";
    case OutcomeCategory::CorrectChecked: return "CorrectChecked";
  }
  return "Unknown";
}

const char* to_string(CaseVerdict v) {
  switch (v) {
    case CaseVerdict::Robust: return "robust";
    case CaseVerdict::Solved: return "solved";
    case CaseVerdict::Incorrect: return "incorrect";
  }
  return "unknown";
}

bool spec_matches(const ProblemSpec& ground_truth, const ProblemSpec& produced) {
  try {
    return semantic_diff(ground_truth, produced).empty();
  } catch (const Error&) {
    return false;
  }
}

Categorization categorize_code_agent(const std::optional<ProblemSpec>& produced, const ProblemSpec& ground_truth) {
  Categorization c;
  c.correct = produced && spec_matches(ground_truth, *produced);
  c.category = c.correct ? OutcomeCategory::CorrectNotChecked : OutcomeCategory::IncorrectExecution;
  return c;
}

Categorization categorize_pipeline(const AgentTranscript& transcript, const ProblemSpec& ground_truth) {
  Categorization c;
  switch (transcript.outcome) {
    case PipelineOutcome::AcceptedSpec:
      c.correct = spec_matches(ground_truth, *transcript.spec);
      c.category = c.correct ? OutcomeCategory::CorrectChecked : OutcomeCategory::IncorrectExecution;
      break;
    case PipelineOutcome::BlockedWithFeedback:
    case PipelineOutcome::ParseFailure: {
      c.category = OutcomeCategory::IncorrectBlocked;
      const auto& last = transcript.iterations.back();
      c.false_block = last.spec && spec_matches(ground_truth, *last.spec);
      break;
    }
    case PipelineOutcome::ClientError:
      c.category = OutcomeCategory::IncorrectExecution;
      break;
  }
  return c;
}

std::optional<std::vector<Vec>> parse_waypoints(const std::string& reply) {
  const std::string doc = extract_fenced_block(reply).value_or(reply);
  try {
    auto j = nlohmann::json::parse(doc);
    if (!j.is_array() || j.empty()) return std::nullopt;
    std::vector<Vec> pts;
    for (const auto& p : j) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) return std::nullopt;
      Vec v{p[0].get<double>(), p[1].get<double>()};
      if (!std::isfinite(v[0]) || !std::isfinite(v[1])) return std::nullopt;
      pts.push_back(std::move(v));
    }
    return pts;
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

Trajectory trajectory_from_waypoints(const std::vector<Vec>& waypoints, double spacing) {
  Trajectory t;
  if (waypoints.empty()) return t;
  double time = 0;
  t.samples.push_back({time, waypoints.front(), {}});
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    const Vec& a = waypoints[i - 1];
    const Vec& b = waypoints[i];
    const double len = std::hypot(b[0] - a[0], b[1] - a[1]);
    const int pieces = std::max(1, static_cast<int>(std::ceil(len / spacing)));
    for (int k = 1; k <= pieces; ++k) {
      const double s = static_cast<double>(k) / pieces;
      time += len / pieces;
      t.samples.push_back({time, {a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])}, {}});
    }
  }
  t.t_final = time;
  return t;
}

Categorization categorize_direct(const std::optional<std::vector<Vec>>& waypoints, const ProblemSpec& ground_truth) {
  Categorization c;
  if (waypoints && !waypoints->empty()) {
    const HyperRect init = ground_truth.initial.as_rect(ground_truth.state_bounds);
    if (init.contains(waypoints->front())) {
      const Trajectory traj = trajectory_from_waypoints(*waypoints);
      c.correct = check_reach_avoid(traj, ground_truth).satisfied;
    }
  }
  c.category = c.correct ? OutcomeCategory::CorrectNotChecked : OutcomeCategory::IncorrectExecution;
  return c;
}

CaseVerdict robustness(const std::array<bool, 3>& correct) {
  const auto n = std::count(correct.begin(), correct.end(), true);
  if (n == 3) return CaseVerdict::Robust;
  if (n > 0) return CaseVerdict::Solved;
  return CaseVerdict::Incorrect;
}

void tally(BenchReport& r) {
  r.category_counts = {};
  r.correct = r.false_blocks = r.client_errors = 0;
  r.verdicts.clear();
  r.robust = r.solved = r.incorrect = 0;
  std::vector<std::string> order;
  std::map<std::string, std::array<bool, 3>> per_case;
  for (const auto& row : r.rows) {
    ++r.category_counts[static_cast<std::size_t>(row.result.category)];
    r.correct += row.result.correct;
    r.false_blocks += row.result.false_block;
    r.client_errors += row.client_error;
    auto [it, inserted] = per_case.try_emplace(row.case_id, std::array<bool, 3>{});
    if (inserted) order.push_back(row.case_id);
    if (row.paraphrase >= 1 && row.paraphrase <= 3) it->second[row.paraphrase - 1] = row.result.correct;
  }
  for (const auto& id : order) {
    const CaseVerdict v = robustness(per_case[id]);
    r.verdicts.emplace_back(id, v);
    if (v == CaseVerdict::Robust) ++r.robust;
    if (v != CaseVerdict::Incorrect) ++r.solved;
    else ++r.incorrect;
  }
}

std::string BenchReport::csv() const {
  std::string out = "case,paraphrase,strategy,category\n";
  for (const auto& row : rows)
    out += row.case_id + "," + std::to_string(row.paraphrase) + "," + to_string(row.strategy) + "," +
           to_string(row.result.category) + "\n";
  return out;
}

std::string BenchReport::summary() const {
  std::ostringstream os;
  os << "strategy " << to_string(strategy) << "\n";
  os << "runs " << rows.size() << "\n";
  for (OutcomeCategory c : {OutcomeCategory::IncorrectExecution, OutcomeCategory::CorrectNotChecked,
                            OutcomeCategory::IncorrectBlocked, OutcomeCategory::CorrectChecked})
    os << to_string(c) << " " << count(c) << "\n";
  os << "correct " << correct << "\n";
  os << "false_blocks " << false_blocks << "\n";
  os << "client_errors " << client_errors << "\n";
  os << "cases " << verdicts.size() << "\n";
  os << "robust " << robust << "\n";
  os << "solved " << solved << "\n";
  os << "incorrect " << incorrect << "\n";
  for (const auto& [id, v] : verdicts) os << "case " << id << " " << to_string(v) << "\n";
  return os.str();
}

void BenchReport::write(const std::string& dir) const {
  fs::create_directories(dir);
  write_text(fs::path(dir) / "report.csv", csv());
  write_text(fs::path(dir) / "summary.txt", summary());
  std::string jsonl;
  for (const auto& row : rows) {
    nlohmann::ordered_json j;
    j["case"] = row.case_id;
    j["paraphrase"] = row.paraphrase;
    j["category"] = to_string(row.result.category);
    if (row.result.false_block) j["false_block"] = true;
    if (row.client_error) j["client_error"] = true;
    j["transcript"] = nlohmann::ordered_json::parse(row.transcript);
    jsonl += j.dump() + "\n";
  }
  write_text(fs::path(dir) / "transcripts.jsonl", jsonl);
}

namespace {

ReportRow run_one(const BenchCase& c, int paraphrase, Strategy strategy, LlmClient& client, const PromptSet& prompts,
                  int k_max) {
  ReportRow row;
  row.case_id = c.id;
  row.paraphrase = paraphrase;
  row.strategy = strategy;
  const std::string& nl = c.paraphrases[paraphrase - 1];
  nlohmann::ordered_json t;
  try {
    switch (strategy) {
      case Strategy::FullPipeline: {
        const AgentTranscript tr = pipeline_run(client, nl, k_max, prompts);
        row.result = categorize_pipeline(tr, c.ground_truth);
        row.client_error = tr.outcome == PipelineOutcome::ClientError;
        row.transcript = tr.to_json();
        return row;
      }
      case Strategy::CodeAgentOnly: {
        const CodeAgentResult r = code_agent_generate(client, prompts, nl);
        row.result = categorize_code_agent(r.spec, c.ground_truth);
        t["prompt"] = r.prompt;
        t["output"] = r.raw;
        if (!r.parse_error.empty()) t["parse_error"] = r.parse_error;
        break;
      }
      case Strategy::DirectLLM: {
        const std::string prompt = build_planner_prompt(prompts, nl);
        const std::string reply = client.complete(prompt);
        row.result = categorize_direct(parse_waypoints(reply), c.ground_truth);
        t["prompt"] = prompt;
        t["output"] = reply;
        break;
      }
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ClientError) throw;
    row.result = Categorization{};
    row.client_error = true;
    t["client_error"] = e.what();
  }
  row.transcript = t.dump();
  return row;
}

}  // namespace

BenchReport run_benchmark(const std::vector<BenchCase>& cases, Strategy strategy, LlmClient& client,
                          const PromptSet& prompts, int k_max) {
  BenchReport report;
  report.strategy = strategy;
  for (const auto& c : cases)
    for (int p = 1; p <= 3; ++p) report.rows.push_back(run_one(c, p, strategy, client, prompts, k_max));
  tally(report);
  return report;
}

}  // namespace gridsynth
