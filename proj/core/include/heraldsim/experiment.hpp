#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "heraldsim/analytic.hpp"
#include "heraldsim/clicks.hpp"
#include "heraldsim/fock.hpp"
#include "heraldsim/homodyne.hpp"
#include "heraldsim/tomo.hpp"

namespace heraldsim::experiment {

/// Knobs beyond the core schema. All have defaults, so a config may omit
/// the "simulation" object entirely.
struct SimulationSettings {
  std::size_t g2_events = 1'000'000;
  double click_rate_hz = 100e6;
  double g2_bin_ns = 0.5;
  double g2_max_delay_ns = 150.0;
  double g2_compare_ns = 60.0;  // deviation from theory is scored over [0, this]
  double field_dt_ns = 0.25;
  double segment_duration_us = 1000.0;
  double delay_bin_ns = 2.0;
  double dead_time_ns = 500.0;
  double e2e_click_rate_hz = 20e6;
  std::size_t e2e_clicks = 1'000'000;
  std::size_t min_pairs_per_bin = 1000;
  double panel_delay_ns = 40.0;
  int ml_cutoff = 5;
  std::size_t ml_bins = 256;
};

/// Default delay list: 0, 2, ..., 44 ns.
std::vector<double> default_delays_ns();

/// Experiment configuration. Times under "grid" are in seconds; keys ending
/// in _ns are nanoseconds.
struct ExperimentConfig {
  double gamma_hz = 53e6;
  double eta = 0.76;
  double grid_dt = 0.1e-9;
  double grid_window = 500e-9;
  std::vector<double> delays_ns = default_delays_ns();
  double acceptance_window_ns = 65.0;
  std::size_t samples_per_point = 100'000;
  std::uint64_t rng_seed = 1;
  std::string output_dir = "out";
  SimulationSettings simulation;

  /// Throws ConfigError naming the offending key.
  void validate() const;
  std::string to_json() const;
  /// Unknown keys are rejected. Throws ConfigError.
  static ExperimentConfig from_json(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& path);
  /// FNV-1a 64 of the canonical JSON form, as 16 hex digits.
  std::string hash() const;
};

/// Heralded state at one delay after loss, reduced onto the four analysis
/// modes. At zero delay f1 = g1 = g2 and f2 is an arbitrary orthogonal mode.
struct ModeStates {
  double delta_t = 0.0;
  double overlap = 0.0;
  fock::Matrix g1, g2, f1, f2;
  std::vector<modes::ModeFunction> waveforms;  // g1, g2, f1, f2
};

ModeStates heralded_mode_states(const ExperimentConfig& config, double delta_t);

struct G2Result {
  clicks::G2Histogram histogram;
  std::vector<double> theory;  // closed form at bin centers
  std::size_t events = 0;
  double g2_zero = 0.0;        // first bin
  double max_deviation = 0.0;  // over bins centered in [0, g2_compare_ns]
};

G2Result run_g2(const ExperimentConfig& config);

struct DelayPoint {
  double delta_t_ns = 0.0;
  double p2_analytic = 0.0;
  double p2_channel = 0.0;  // exact value from the Fock engine
  tomo::DiagonalEstimate estimate;
};

/// Adapted-mode sweep over config.delays_ns: Fock engine, homodyne sampling
/// and EM reconstruction with samples_per_point draws each.
std::vector<DelayPoint> run_delay_sweep(const ExperimentConfig& config);

struct FixedPoint {
  double delta_t_ns = 0.0;
  analytic::PhotonDistribution analytic{std::vector<double>{1.0}};
  analytic::PhotonDistribution channel{std::vector<double>{1.0}};
  tomo::DiagonalEstimate estimate;
};

/// Same pipeline projected onto g1 whatever the delay.
std::vector<FixedPoint> run_fixed_mode_sweep(const ExperimentConfig& config);

struct Panel {
  std::string mode;  // "g1", "g2", "f1", "f2"
  fock::Matrix rho;
  tomo::DiagonalEstimate estimate;
};

struct PanelSet {
  double delta_t_ns = 0.0;
  std::vector<Panel> panels;
  std::vector<modes::ModeFunction> waveforms;
};

PanelSet run_fock_panels(const ExperimentConfig& config);

struct EndToEndBin {
  double lo_ns = 0.0;
  double hi_ns = 0.0;
  std::size_t n_pairs = 0;
  bool reconstructed = false;
  double p2_f1_analytic = 0.0;  // averaged over the pairs in the bin
  analytic::PhotonDistribution g1_analytic{std::vector<double>{1.0}};
  std::optional<tomo::DiagonalEstimate> f1_estimate;
  std::optional<tomo::DiagonalEstimate> g1_estimate;
};

struct EndToEndResult {
  std::size_t n_clicks = 0;
  std::size_t n_pairs = 0;
  std::vector<EndToEndBin> bins;
  std::vector<homodyne::LabeledQuadrature> f1_quadratures;
  std::vector<homodyne::LabeledQuadrature> g1_quadratures;
  std::vector<std::string> warnings;
};

/// Clicks, A-B coincidences within acceptance_window_ns, one synthesized
/// homodyne trace per pair, projections on f1 and g1, per-bin reconstruction.
/// Bins with fewer than min_pairs_per_bin pairs are skipped with a warning.
/// Throws InsufficientPairs when no bin qualifies.
EndToEndResult run_end_to_end(const ExperimentConfig& config);

struct ReconstructBin {
  double lo_ns = 0.0;
  double hi_ns = 0.0;
  tomo::DiagonalEstimate estimate;
};

struct ReconstructResult {
  tomo::DiagonalEstimate overall;
  std::vector<ReconstructBin> bins;
  std::vector<std::string> warnings;
};

/// EM reconstruction of a "x,theta_rad,delta_t_ns" file: all rows together,
/// then per delay bin where enough rows exist.
ReconstructResult reconstruct(const ExperimentConfig& config,
                              const std::vector<homodyne::LabeledQuadrature>& rows);

void write_g2_outputs(const G2Result& result, const std::filesystem::path& dir);
void write_delay_sweep(const std::vector<DelayPoint>& points, const std::filesystem::path& dir);
void write_fixed_sweep(const ExperimentConfig& config, const std::vector<FixedPoint>& points,
                       const std::filesystem::path& dir);
void write_fock_panels(const PanelSet& set, const std::filesystem::path& dir);
void write_end_to_end(const EndToEndResult& result, const std::filesystem::path& dir);
void write_reconstruction(const ReconstructResult& result, const std::filesystem::path& dir);

/// manifest.json: command, config hash, seed, effective config, versions
/// and the files written.
void write_manifest(const std::string& command, const ExperimentConfig& config,
                    const std::vector<std::string>& outputs, const std::filesystem::path& dir);

/// Runs one CLI command end to end (computation, outputs, manifest) into
/// config.output_dir. `input` is the samples file for "reconstruct".
/// Returns the files written. Throws Error.
std::vector<std::string> execute(const std::string& command, const ExperimentConfig& config,
                                 const std::optional<std::filesystem::path>& input = std::nullopt);

std::string library_version();

}  // namespace heraldsim::experiment
