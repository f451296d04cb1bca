#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "heraldsim/error.hpp"
#include "heraldsim/experiment.hpp"

namespace {

constexpr int kExitUsage = 64;
constexpr int kExitFailure = 2;

int fail(const std::string& code, const std::string& message, int status) {
  std::cerr << nlohmann::json{{"error", {{"code", code}, {"message", message}}}}.dump() << '\n';
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  namespace ex = heraldsim::experiment;

  CLI::App app{"Heralded two-photon state simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", ex::library_version());

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> samples;
  app.add_option("--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "RNG seed (overrides rng_seed)");
  app.add_option("--out", out_dir, "Output directory (overrides output_dir)");
  app.add_option("--samples", samples, "Samples per point (overrides samples_per_point)");

  std::string samples_file;
  app.add_subcommand("g2", "g2 histogram of a simulated thermal click stream");
  app.add_subcommand("sweep-delay", "Two-photon weight in f1 versus herald delay");
  app.add_subcommand("sweep-fixed", "Photon-number weights in g1 versus herald delay");
  app.add_subcommand("fock-panels", "Reconstructions in g1, g2, f1, f2 at one delay");
  app.add_subcommand("end-to-end", "Clicks to coincidences to traces to tomography");
  auto* rec = app.add_subcommand("reconstruct", "EM reconstruction of a quadrature CSV");
  rec->add_option("samples", samples_file, "x,theta_rad,delta_t_ns CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("UsageError", e.what(), kExitUsage);
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    ex::ExperimentConfig config = config_path.empty() ? ex::ExperimentConfig{} : ex::ExperimentConfig::load(config_path);
    if (seed) config.rng_seed = *seed;
    if (out_dir) config.output_dir = *out_dir;
    if (samples) config.samples_per_point = *samples;
    config.validate();

    std::optional<std::filesystem::path> input;
    if (command == "reconstruct") input = samples_file;
    const auto files = ex::execute(command, config, input);
    std::cout << nlohmann::json{{"command", command},
                                {"output_dir", config.output_dir},
                                {"config_hash", config.hash()},
                                {"files", files}}
                     .dump(2)
              << '\n';
    return 0;
  } catch (const heraldsim::Error& e) {
    return fail(std::string(heraldsim::to_string(e.code())), e.what(), kExitFailure);
  } catch (const std::exception& e) {
    return fail("InternalError", e.what(), kExitFailure);
  }
}
