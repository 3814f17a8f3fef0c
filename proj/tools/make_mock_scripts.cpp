// Writes the replay scripts under fixtures/mock from the case corpus.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "gridsynth/bench.hpp"
#include "support/support.hpp"

using namespace gridsynth;
namespace fs = std::filesystem;

namespace {

void put(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  std::cerr << path.string() << " " << text.size() << " bytes\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regenerate mock LLM scripts for the benchmark cases"};
  std::string cases_dir = testsupport::source_path("fixtures/cases");
  std::string out_dir = testsupport::source_path("fixtures/mock");
  app.add_option("--cases", cases_dir, "Case directory");
  app.add_option("--out", out_dir, "Output directory");
  CLI11_PARSE(app, argc, argv);

  const auto cases = load_cases(cases_dir);
  const PromptSet& prompts = PromptSet::defaults();
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  put(dir / "direct.mock", testsupport::script_for(cases, prompts, testsupport::reference_direct_plan(cases.size())));
  put(dir / "code.mock", testsupport::script_for(cases, prompts, testsupport::reference_code_plan(cases.size())));
  put(dir / "full.mock", testsupport::script_for(cases, prompts, testsupport::reference_full_plan(cases.size())));

  const BenchCase& first = cases.front();
  using F = testsupport::FullScenario;
  put(dir / "nl2spec_accept.mock",
      write_mock_script(testsupport::full_script(prompts, first.paraphrases[0], first.ground_truth, F::AcceptAt2)));
  put(dir / "nl2spec_blocked.mock",
      write_mock_script(testsupport::full_script(prompts, first.paraphrases[0], first.ground_truth, F::BlockedWrong)));
  return 0;
}
