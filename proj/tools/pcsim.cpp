// Command-line front end: one subcommand per experiment.
//
// Exit status: 0 when every statistical check passed, 1 when one failed,
// 2 on bad usage.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "pcsim/experiment.hpp"

namespace {

constexpr int kExitFailedCheck = 1;
constexpr int kExitUsage = 2;

struct Output {
  std::string dir;
  bool csv = false;
  bool quiet = false;
};

void add_common(CLI::App* sub, pcsim::ExperimentConfig& c, Output& out) {
  sub->add_option("--seed", c.seed, "Master seed (64-bit unsigned)");
  sub->add_option("--trials", c.trials, "Independent trials");
  sub->add_option("--threads", c.threads, "Worker threads (0: all cores)");
  sub->add_option("--out", out.dir,
                  "Output directory (default: $PCSIM_OUTPUT_DIR, else stdout)");
  sub->add_flag("--csv", out.csv, "Also write trial fields as CSV");
  sub->add_flag("--quiet", out.quiet, "Print only the summary line");
}

int write_outputs(const pcsim::RunRecord& rec, const pcsim::ExperimentConfig& c,
                  const Output& out) {
  std::string dir = out.dir;
  if (dir.empty()) {
    if (const char* env = std::getenv("PCSIM_OUTPUT_DIR")) dir = env;
  }
  if (dir.empty()) {
    if (out.quiet) {
      std::cout << pcsim::summary_json(rec).dump() << '\n';
    } else {
      pcsim::write_jsonl(rec, std::cout);
    }
    if (out.csv) pcsim::write_csv(rec, std::cout);
    return 0;
  }
  std::filesystem::create_directories(dir);
  const std::string stem =
      (std::filesystem::path(dir) / (c.subcommand + "-" + std::to_string(c.seed))).string();
  std::ofstream jsonl(stem + ".jsonl");
  pcsim::write_jsonl(rec, jsonl);
  if (out.csv) {
    std::ofstream csv(stem + ".csv");
    pcsim::write_csv(rec, csv);
  }
  if (!jsonl) {
    std::cerr << "pcsim: cannot write " << stem << ".jsonl\n";
    return kExitUsage;
  }
  std::cout << pcsim::summary_json(rec).dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation of distributions from prefix conditional samples"};
  app.require_subcommand(1);
  app.set_version_flag("--version", pcsim::kVersion);

  pcsim::ExperimentConfig c;
  Output out;

  auto* simulate = app.add_subcommand("simulate", "Learn random trees; report mean D_KL");
  simulate->add_option("--n", c.n, "Bits per element");
  simulate->add_option("--delta", c.delta, "Simulation accuracy")->required();

  auto* tv = app.add_subcommand("estimate-tv", "End-to-end distance estimation");
  tv->add_option("--n", c.n, "Bits per element");
  tv->add_option("--epsilon", c.epsilon, "Additive accuracy")->required();

  auto* adhoc = app.add_subcommand("adhoc", "Poissonized tester on D(delta,0) and D(delta,r)");
  adhoc->add_option("--n", c.n, "Indexes per instance (default n')");
  adhoc->add_option("--delta", c.delta, "Bias gap")->required();
  adhoc->add_option("--r", c.r, "Low-value tilt")->required();

  auto* hard = app.add_subcommand("hard-instance", "Effective samples on hard instances");
  hard->add_option("--n", c.n, "Bits per element");
  hard->add_option("--epsilon", c.epsilon, "Distance parameter")->required();
  hard->add_option("--label", c.label, "yes or no");

  auto* lemmas = app.add_subcommand("verify-lemmas", "Randomized sweep of the inequality checkers");
  lemmas->add_option("--sweep", c.sweep, "Instances per checker");

  auto* reduce = app.add_subcommand("reduce-interval",
                                    "Adapter versus direct simulation on {1..N}");
  reduce->add_option("--N,--domain", c.domain, "Domain size");
  reduce->add_option("--delta", c.delta, "Simulation accuracy")->required();
  reduce->add_option("--steps", c.steps, "Queries and samples per trial");

  for (auto* sub : {simulate, tv, adhoc, hard, lemmas, reduce}) add_common(sub, c, out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  c.subcommand = app.get_subcommands().front()->get_name();

  try {
    const pcsim::RunRecord rec = pcsim::run(c);
    if (const int rc = write_outputs(rec, c, out); rc != 0) return rc;
    return rec.passed ? 0 : kExitFailedCheck;
  } catch (const std::invalid_argument& e) {  // includes usage_error
    std::cerr << "pcsim: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::domain_error& e) {
    std::cerr << "pcsim: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "pcsim: " << e.what() << '\n';
    return kExitFailedCheck;
  }
}
