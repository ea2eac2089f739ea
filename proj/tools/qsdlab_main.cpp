#include "qsdlab/cli_io.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  qsdlab::RunOptions opt;
  std::string chain;
  std::string out;
  std::string tsv_dir;
  std::string v_weights;

  CLI::App app{"Quasi-stationary analysis of absorbed Markov chains"};
  app.add_option("command", opt.command, "validate|period|spectral|qsd|limits|qprocess|ergodic|simulate|report")
      ->required();
  app.add_option("--chain", chain, "Chain spec (dense CSV or JSON)")->required();
  app.add_option("--out", out, "Write the JSON report here instead of stdout");
  app.add_option("--seed", opt.seed, "Monte Carlo seed")->capture_default_str();
  app.add_option("--n-max", opt.n_max, "Largest n for the decay and contraction checks")->capture_default_str();
  app.add_option("--N-max", opt.big_n_max, "Largest N for the time-average checks")->capture_default_str();
  app.add_option("--tsv-dir", tsv_dir, "Directory for (n, j, value) TSV side-files");
  app.add_option("--tolerance", opt.tolerance_overrides, "Override a tolerance, KEY=VAL (repeatable)");
  app.add_option("--v-weights", v_weights, "Weight function V as JSON (array over states or {label: value})");
  app.add_option("--threads", opt.threads, "Monte Carlo worker threads")->capture_default_str();
  app.add_option("--paths", opt.paths, "Monte Carlo path count")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cout << "{\n  \"error\": {\n    \"kind\": \"UsageError\",\n    \"message\": \"" << e.get_name()
              << "\"\n  },\n  \"pass\": false,\n  \"schema\": \"" << qsdlab::kReportSchema << "\"\n}\n";
    return 1;
  }

  opt.chain_path = chain;
  if (!out.empty()) opt.out_path = out;
  if (!tsv_dir.empty()) opt.tsv_dir = tsv_dir;
  if (!v_weights.empty()) opt.v_weights_path = v_weights;

  const qsdlab::RunResult result = qsdlab::run(opt);
  if (!opt.out_path || result.exit_code == 1) std::cout << result.json;
  return result.exit_code;
}
