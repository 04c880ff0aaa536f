// queuelab: analytic queueing metrics with a discrete-event cross-check.
//
// Verbs:
//   analyze  <model.json>   closed-form metrics, verdicts and residuals
//   simulate <model.json>   seeded discrete-event estimates with CIs
//   validate <model.json>   analytic vs simulated deltas; exit 2 on breach
//   schema                  print the model-file schema
//
// Exit codes: 0 ok, 1 usage/schema error, 2 validation breach, 3 internal.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "queuelab/model_file.hpp"
#include "queuelab/report.hpp"

namespace {

struct CommonFlags {
  std::string model_path;
  std::string format = "json";
  std::string out_path;
  std::string batches_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> horizon;
  double tolerance = 3.0;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool with_sim_flags) {
  cmd->add_option("model", flags.model_path, "model file (JSON)")->required();
  cmd->add_option("--format", flags.format, "output format: json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--out", flags.out_path, "write the report to this path instead of stdout");
  if (with_sim_flags) {
    cmd->add_option("--seed", flags.seed, "override the simulation seed");
    cmd->add_option("--horizon", flags.horizon, "override the served-customer horizon");
  }
}

int emit(const queuelab::report::Report& rep, const CommonFlags& flags) {
  const auto format = flags.format == "csv" ? queuelab::report::Format::kCsv
                                            : queuelab::report::Format::kJson;
  if (flags.out_path.empty()) {
    std::cout << queuelab::report::render(rep, format);
  } else {
    queuelab::report::emit_report(rep, format, flags.out_path);
  }
  return rep.validation_breach ? 2 : 0;
}

queuelab::model::ModelFile load(const CommonFlags& flags) {
  auto file = queuelab::model::parse_model_file(flags.model_path);
  if (flags.seed) file.sim.seed = *flags.seed;
  if (flags.horizon) file.sim.horizon = *flags.horizon;
  return file;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"queueing-theory calculator and simulation cross-checker"};
  app.require_subcommand(1);

  CommonFlags analyze_flags, simulate_flags, validate_flags;
  auto* analyze = app.add_subcommand("analyze", "closed-form metrics and residuals");
  add_common(analyze, analyze_flags, false);
  auto* simulate = app.add_subcommand("simulate", "discrete-event estimates");
  add_common(simulate, simulate_flags, true);
  simulate->add_option("--batches", simulate_flags.batches_dir,
                       "dump raw per-batch samples as CSV files into this directory");
  auto* validate = app.add_subcommand("validate", "analytic vs simulated deltas");
  add_common(validate, validate_flags, true);
  validate->add_option("--tolerance", validate_flags.tolerance,
                       "allowed deviation in CI half-widths (default 3)");
  auto* schema = app.add_subcommand("schema", "print the model-file schema");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (schema->parsed()) {
      std::cout << queuelab::model::schema_text() << "\n";
      return 0;
    }
    if (analyze->parsed()) {
      return emit(queuelab::report::run_analyze(load(analyze_flags)), analyze_flags);
    }
    if (simulate->parsed()) {
      queuelab::report::RunOptions opts;
      opts.batch_csv_dir = simulate_flags.batches_dir;
      return emit(queuelab::report::run_simulate(load(simulate_flags), opts), simulate_flags);
    }
    queuelab::report::RunOptions opts;
    opts.tolerance = validate_flags.tolerance;
    return emit(queuelab::report::run_validate(load(validate_flags), opts), validate_flags);
  } catch (const queuelab::model::SchemaError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
