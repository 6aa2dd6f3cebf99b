#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "rdx/cli.hpp"

namespace {

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw rdx::Error(rdx::ErrorKind::ParseError, "cannot write " + path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  rdx::cli::Options o;
  std::string out_path;
  std::string csv_path;

  CLI::App app{"Rate-distortion bounds for remote Gaussian source coding with side information"};
  app.require_subcommand(1);

  auto add_model = [&](CLI::App* c) { c->add_option("--model", o.model_path, "Model JSON file")->required(); };
  auto add_distortion = [&](CLI::App* c) {
    auto* d = c->add_option("--distortion", o.distortion_path, "Distortion JSON file");
    auto* t = c->add_option("--t", o.t, "Use D = Sigma_x|yz + t Sigma1 instead of a file");
    d->excludes(t);
  };
  auto add_common = [&](CLI::App* c) {
    c->add_option("--out", out_path, "Output JSON path (default stdout)");
    c->add_option("--unit", o.unit, "Headline unit")->check(CLI::IsMember({"nats", "bits"}));
  };

  auto* bounds = app.add_subcommand("bounds", "Lower and upper bounds on the rate");
  auto* exact = app.add_subcommand("exact", "Exact rate when D lies below Sigma_x|z");
  auto* channel = app.add_subcommand("channel", "Gaussian test channel achieving the upper bound");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo check of the test channel");
  for (auto* c : {bounds, exact, channel, simulate}) {
    add_model(c);
    add_distortion(c);
    add_common(c);
  }
  simulate->add_option("--samples", o.samples, "Number of samples")->check(CLI::Range(1000ul, 1ul << 40));
  simulate->add_option("--seed", o.seed, "RNG seed");
  simulate->add_option("--chunk", o.chunk, "Samples per RNG chunk")->check(CLI::PositiveNumber);

  auto* mse = app.add_subcommand("mse", "Rate under a mean squared error constraint");
  add_model(mse);
  add_common(mse);
  mse->add_option("--mse-d", o.mse_d, "Per-component MSE target")->required();

  auto* raterate = app.add_subcommand("raterate", "Rate for a given information rate about x");
  add_model(raterate);
  add_common(raterate);
  raterate->add_option("--ri", o.ri, "Information rate in nats")->required();

  auto* sweep = app.add_subcommand("sweep", "Bounds along D = Sigma_x|yz + t Sigma1");
  add_model(sweep);
  add_common(sweep);
  sweep->add_option("--points", o.points, "Number of points")->check(CLI::PositiveNumber);
  sweep->add_option("--t-max", o.t_max, "Largest t")->check(CLI::PositiveNumber);
  sweep->add_option("--csv", csv_path, "Also write the curve as CSV");

  auto* gen = app.add_subcommand("gen", "Generate a model file");
  gen->add_option("--kind", o.kind, "Instance family")->check(CLI::IsMember({"random", "white-noise"}));
  gen->add_option("--nx", o.nx)->check(CLI::PositiveNumber);
  gen->add_option("--ny", o.ny)->check(CLI::PositiveNumber);
  gen->add_option("--nz", o.nz)->check(CLI::PositiveNumber);
  gen->add_option("--seed", o.seed, "RNG seed");
  gen->add_option("--noise-y", o.noise_y)->check(CLI::PositiveNumber);
  gen->add_option("--noise-z", o.noise_z)->check(CLI::PositiveNumber);
  gen->add_option("--out", out_path, "Output JSON path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  o.command = app.get_subcommands().front()->get_name();

  try {
    const rdx::cli::Result r = rdx::cli::run_command(o);
    write_text(out_path, r.record.dump(2) + "\n");
    if (!csv_path.empty()) write_text(csv_path, r.csv);
    return 0;
  } catch (const rdx::Error& e) {
    std::cerr << rdx::cli::error_record(o, e).dump(2) << "\n";
    return rdx::cli::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
