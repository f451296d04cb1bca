#include "heraldsim/experiment.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "heraldsim/error.hpp"
#include "heraldsim/random.hpp"

namespace heraldsim::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Independent RNG streams per command.
enum Stream : std::uint64_t {
  kG2Clicks = 1,
  kDelaySweep = 2,
  kFixedSweep = 3,
  kPanels = 4,
  kE2eClicks = 5,
  kE2eLabels = 6,
  kE2eTraces = 7,
};

constexpr double kNs = 1e-9;

[[noreturn]] void config_error(const std::string& key, const std::string& what) {
  throw Error(ErrorCode::ConfigError, "config key '" + key + "': " + what);
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) config_error(where, "must be an object");
  for (const auto& item : j.items()) {
    if (!allowed.contains(item.key())) config_error(where + item.key(), "unknown key");
  }
}

double get_number(const json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) config_error(key, "must be a number");
  return j[key].get<double>();
}

std::uint64_t get_count(const json& j, const std::string& key, std::uint64_t fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j[key];
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number()) {
    const double d = v.get<double>();
    if (d >= 0.0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
  }
  config_error(key, "must be a non-negative integer");
}

tomo::MLConfig ml_config(const ExperimentConfig& config) {
  tomo::MLConfig ml;
  ml.cutoff = config.simulation.ml_cutoff;
  ml.n_bins = config.simulation.ml_bins;
  return ml;
}

modes::TimeGrid analysis_grid(const ExperimentConfig& config) {
  return modes::TimeGrid::from_window(config.grid_window, config.grid_dt);
}

struct AnalysisModes {
  modes::ModeFunction g1, g2, f1, f2;
  double overlap;
};

// Trigger modes centred on the grid and their symmetric/antisymmetric pair.
AnalysisModes analysis_modes(const ExperimentConfig& config, double delta_t) {
  const modes::TimeGrid grid = analysis_grid(config);
  const double center = 0.5 * (grid.t_start() + grid.t_last());
  const double t1 = center - 0.5 * std::abs(delta_t);
  auto g1 = modes::make_trigger_mode(t1, config.gamma_hz, grid);
  auto g2 = modes::make_trigger_mode(t1 + std::abs(delta_t), config.gamma_hz, grid);
  // Rounding can push the grid overlap of coincident modes just above 1.
  const double overlap = std::min(1.0, modes::overlap(g1, g2));
  if (overlap >= 1.0 - modes::kDegenerateEpsilon) {
    const std::vector<modes::ModeFunction> seeds{g1};
    auto basis = modes::extend_orthonormal_basis(seeds, grid, 2);
    return {g1, g2, basis[0], basis[1], overlap};
  }
  auto sym = modes::make_symmetric_antisymmetric(g1, g2);
  return {std::move(g1), std::move(g2), std::move(sym.symmetric), std::move(sym.antisymmetric), overlap};
}

// Lossy heralded state over the register {f1, f2}.
fock::MultimodeState lossy_state(const ExperimentConfig& config, const AnalysisModes& m) {
  const fock::ModeRegister reg({m.f1, m.f2});
  return fock::apply_loss_channel(fock::build_heralded_state(m.g1, m.g2, reg, 2), config.eta);
}

tomo::DiagonalEstimate sample_and_reconstruct(const fock::Matrix& rho, std::size_t count,
                                              std::uint64_t seed, const tomo::MLConfig& ml) {
  const auto samples = homodyne::sample_quadratures(rho, count, seed);
  std::vector<double> xs(samples.size());
  std::transform(samples.begin(), samples.end(), xs.begin(), [](const auto& s) { return s.x; });
  return tomo::ml_diagonal(xs, ml);
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

json estimate_json(const tomo::DiagonalEstimate& e) {
  return json{{"probs", std::vector<double>(e.dist.probs().begin(), e.dist.probs().end())},
              {"standard_errors", e.standard_errors},
              {"log_likelihood", e.log_likelihood},
              {"iterations", e.iterations},
              {"converged", e.converged},
              {"n_samples", e.n_samples},
              {"warnings", e.warnings}};
}

std::vector<double> dist_vector(const analytic::PhotonDistribution& d, std::size_t size) {
  std::vector<double> out(size);
  for (std::size_t n = 0; n < size; ++n) out[n] = d[n];
  return out;
}

double stderr_at(const tomo::DiagonalEstimate& e, std::size_t n) {
  return n < e.standard_errors.size() ? e.standard_errors[n] : 0.0;
}

std::size_t delay_bin_count(double span_ns, double bin_ns) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(span_ns / bin_ns - 1e-9)));
}

}  // namespace

std::vector<double> default_delays_ns() {
  std::vector<double> d;
  for (int k = 0; k <= 22; ++k) d.push_back(2.0 * k);
  return d;
}

void ExperimentConfig::validate() const {
  if (!(gamma_hz > 0.0)) config_error("gamma_hz", "must be positive");
  if (!(eta >= 0.0 && eta <= 1.0)) config_error("eta", "must lie in [0, 1]");
  if (!(grid_dt > 0.0)) config_error("grid.dt", "must be positive");
  if (!(grid_window > grid_dt)) config_error("grid.window", "must exceed grid.dt");
  for (std::size_t k = 0; k < delays_ns.size(); ++k) {
    if (!(delays_ns[k] >= 0.0)) config_error("delays_ns", "delays must be non-negative");
    if (k > 0 && !(delays_ns[k] > delays_ns[k - 1])) config_error("delays_ns", "must be sorted ascending");
  }
  if (!(acceptance_window_ns > 0.0)) config_error("acceptance_window_ns", "must be positive");
  if (samples_per_point == 0) config_error("samples_per_point", "must be positive");
  if (output_dir.empty()) config_error("output_dir", "must not be empty");
  const auto& s = simulation;
  if (s.g2_events == 0) config_error("simulation.g2_events", "must be positive");
  if (!(s.click_rate_hz > 0.0)) config_error("simulation.click_rate_hz", "must be positive");
  if (!(s.g2_bin_ns > 0.0)) config_error("simulation.g2_bin_ns", "must be positive");
  if (!(s.g2_max_delay_ns > s.g2_bin_ns)) config_error("simulation.g2_max_delay_ns", "must exceed g2_bin_ns");
  if (!(s.g2_compare_ns > 0.0)) config_error("simulation.g2_compare_ns", "must be positive");
  if (!(s.field_dt_ns > 0.0)) config_error("simulation.field_dt_ns", "must be positive");
  if (!(s.segment_duration_us > 0.0)) config_error("simulation.segment_duration_us", "must be positive");
  if (!(s.delay_bin_ns > 0.0)) config_error("simulation.delay_bin_ns", "must be positive");
  if (!(s.dead_time_ns >= 0.0)) config_error("simulation.dead_time_ns", "must be non-negative");
  if (!(s.e2e_click_rate_hz > 0.0)) config_error("simulation.e2e_click_rate_hz", "must be positive");
  if (s.e2e_clicks == 0) config_error("simulation.e2e_clicks", "must be positive");
  if (!(s.panel_delay_ns > 0.0)) config_error("simulation.panel_delay_ns", "must be positive");
  if (s.ml_cutoff < 2 || s.ml_cutoff > homodyne::kMaxPhotonNumber) {
    config_error("simulation.ml_cutoff", "must lie in [2, 40]");
  }
  if (s.ml_bins < 64) config_error("simulation.ml_bins", "must be at least 64");
}

std::string ExperimentConfig::to_json() const {
  const auto& s = simulation;
  json j{{"gamma_hz", gamma_hz},
         {"eta", eta},
         {"grid", {{"dt", grid_dt}, {"window", grid_window}}},
         {"delays_ns", delays_ns},
         {"acceptance_window_ns", acceptance_window_ns},
         {"samples_per_point", samples_per_point},
         {"rng_seed", rng_seed},
         {"output_dir", output_dir},
         {"simulation",
          {{"g2_events", s.g2_events},
           {"click_rate_hz", s.click_rate_hz},
           {"g2_bin_ns", s.g2_bin_ns},
           {"g2_max_delay_ns", s.g2_max_delay_ns},
           {"g2_compare_ns", s.g2_compare_ns},
           {"field_dt_ns", s.field_dt_ns},
           {"segment_duration_us", s.segment_duration_us},
           {"delay_bin_ns", s.delay_bin_ns},
           {"dead_time_ns", s.dead_time_ns},
           {"e2e_click_rate_hz", s.e2e_click_rate_hz},
           {"e2e_clicks", s.e2e_clicks},
           {"min_pairs_per_bin", s.min_pairs_per_bin},
           {"panel_delay_ns", s.panel_delay_ns},
           {"ml_cutoff", s.ml_cutoff},
           {"ml_bins", s.ml_bins}}}};
  return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j,
             {"gamma_hz", "eta", "grid", "delays_ns", "acceptance_window_ns", "samples_per_point",
              "rng_seed", "output_dir", "simulation"},
             "");
  ExperimentConfig c;
  c.gamma_hz = get_number(j, "gamma_hz", c.gamma_hz);
  c.eta = get_number(j, "eta", c.eta);
  if (j.contains("grid")) {
    const json& g = j["grid"];
    check_keys(g, {"dt", "window"}, "grid.");
    c.grid_dt = get_number(g, "dt", c.grid_dt);
    c.grid_window = get_number(g, "window", c.grid_window);
  }
  if (j.contains("delays_ns")) {
    if (!j["delays_ns"].is_array()) config_error("delays_ns", "must be an array");
    c.delays_ns.clear();
    for (const auto& v : j["delays_ns"]) {
      if (!v.is_number()) config_error("delays_ns", "entries must be numbers");
      c.delays_ns.push_back(v.get<double>());
    }
  }
  c.acceptance_window_ns = get_number(j, "acceptance_window_ns", c.acceptance_window_ns);
  c.samples_per_point = get_count(j, "samples_per_point", c.samples_per_point);
  c.rng_seed = get_count(j, "rng_seed", c.rng_seed);
  if (j.contains("output_dir")) {
    if (!j["output_dir"].is_string()) config_error("output_dir", "must be a string");
    c.output_dir = j["output_dir"].get<std::string>();
  }
  if (j.contains("simulation")) {
    const json& s = j["simulation"];
    check_keys(s,
               {"g2_events", "click_rate_hz", "g2_bin_ns", "g2_max_delay_ns", "g2_compare_ns",
                "field_dt_ns", "segment_duration_us", "delay_bin_ns", "dead_time_ns",
                "e2e_click_rate_hz", "e2e_clicks", "min_pairs_per_bin", "panel_delay_ns", "ml_cutoff",
                "ml_bins"},
               "simulation.");
    auto& d = c.simulation;
    d.g2_events = get_count(s, "g2_events", d.g2_events);
    d.click_rate_hz = get_number(s, "click_rate_hz", d.click_rate_hz);
    d.g2_bin_ns = get_number(s, "g2_bin_ns", d.g2_bin_ns);
    d.g2_max_delay_ns = get_number(s, "g2_max_delay_ns", d.g2_max_delay_ns);
    d.g2_compare_ns = get_number(s, "g2_compare_ns", d.g2_compare_ns);
    d.field_dt_ns = get_number(s, "field_dt_ns", d.field_dt_ns);
    d.segment_duration_us = get_number(s, "segment_duration_us", d.segment_duration_us);
    d.delay_bin_ns = get_number(s, "delay_bin_ns", d.delay_bin_ns);
    d.dead_time_ns = get_number(s, "dead_time_ns", d.dead_time_ns);
    d.e2e_click_rate_hz = get_number(s, "e2e_click_rate_hz", d.e2e_click_rate_hz);
    d.e2e_clicks = get_count(s, "e2e_clicks", d.e2e_clicks);
    d.min_pairs_per_bin = get_count(s, "min_pairs_per_bin", d.min_pairs_per_bin);
    d.panel_delay_ns = get_number(s, "panel_delay_ns", d.panel_delay_ns);
    d.ml_cutoff = static_cast<int>(get_count(s, "ml_cutoff", static_cast<std::uint64_t>(d.ml_cutoff)));
    d.ml_bins = get_count(s, "ml_bins", d.ml_bins);
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

std::string ExperimentConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

ModeStates heralded_mode_states(const ExperimentConfig& config, double delta_t) {
  const AnalysisModes m = analysis_modes(config, delta_t);
  const fock::MultimodeState state = lossy_state(config, m);
  ModeStates out;
  out.delta_t = delta_t;
  out.overlap = m.overlap;
  out.g1 = fock::reduce_to_mode(state, m.g1);
  out.g2 = fock::reduce_to_mode(state, m.g2);
  out.f1 = fock::reduce_to_mode(state, m.f1);
  out.f2 = fock::reduce_to_mode(state, m.f2);
  out.waveforms = {m.g1, m.g2, m.f1, m.f2};
  return out;
}

G2Result run_g2(const ExperimentConfig& config) {
  const auto& s = config.simulation;
  const clicks::ClickStream stream = clicks::simulate_thermal_clicks(
      config.gamma_hz, s.click_rate_hz, s.field_dt_ns * kNs, s.segment_duration_us * 1e-6, s.g2_events,
      derive_seed(config.rng_seed, kG2Clicks));
  G2Result r;
  r.events = stream.times.size();
  r.histogram = clicks::g2_histogram(stream, s.g2_bin_ns * kNs, s.g2_max_delay_ns * kNs, config.gamma_hz);
  const auto& h = r.histogram;
  r.theory.resize(h.g2.size());
  for (std::size_t k = 0; k < h.g2.size(); ++k) {
    r.theory[k] = analytic::g2_closed_form(h.bin_center(k), config.gamma_hz);
    if (h.bin_center(k) <= s.g2_compare_ns * kNs) {
      r.max_deviation = std::max(r.max_deviation, std::abs(h.g2[k] - r.theory[k]));
    }
  }
  r.g2_zero = h.g2.front();
  return r;
}

std::vector<DelayPoint> run_delay_sweep(const ExperimentConfig& config) {
  const auto ml = ml_config(config);
  const std::uint64_t base = derive_seed(config.rng_seed, kDelaySweep);
  std::vector<DelayPoint> points(config.delays_ns.size());
  parallel_for(points.size(), [&](std::size_t i) {
    const double dt = config.delays_ns[i] * kNs;
    const ModeStates st = heralded_mode_states(config, dt);
    DelayPoint& p = points[i];
    p.delta_t_ns = config.delays_ns[i];
    p.p2_analytic = analytic::two_photon_weight_with_loss(
        modes::overlap_closed_form(dt, config.gamma_hz), config.eta);
    p.p2_channel = st.f1(2, 2).real();
    p.estimate = sample_and_reconstruct(st.f1, config.samples_per_point, derive_seed(base, i), ml);
  });
  return points;
}

std::vector<FixedPoint> run_fixed_mode_sweep(const ExperimentConfig& config) {
  const auto ml = ml_config(config);
  const std::uint64_t base = derive_seed(config.rng_seed, kFixedSweep);
  std::vector<FixedPoint> points(config.delays_ns.size());
  parallel_for(points.size(), [&](std::size_t i) {
    const double dt = config.delays_ns[i] * kNs;
    const ModeStates st = heralded_mode_states(config, dt);
    FixedPoint& p = points[i];
    p.delta_t_ns = config.delays_ns[i];
    p.analytic = analytic::fixed_mode_distribution_with_loss(
        modes::overlap_closed_form(dt, config.gamma_hz), config.eta);
    p.channel = fock::photon_distribution(st.g1);
    p.estimate = sample_and_reconstruct(st.g1, config.samples_per_point, derive_seed(base, i), ml);
  });
  return points;
}

PanelSet run_fock_panels(const ExperimentConfig& config) {
  const auto ml = ml_config(config);
  const std::uint64_t base = derive_seed(config.rng_seed, kPanels);
  const double dt = config.simulation.panel_delay_ns * kNs;
  const ModeStates st = heralded_mode_states(config, dt);
  PanelSet set;
  set.delta_t_ns = config.simulation.panel_delay_ns;
  set.waveforms = st.waveforms;
  set.panels = {{"g1", st.g1, {}}, {"g2", st.g2, {}}, {"f1", st.f1, {}}, {"f2", st.f2, {}}};
  parallel_for(set.panels.size(), [&](std::size_t i) {
    set.panels[i].estimate =
        sample_and_reconstruct(set.panels[i].rho, config.samples_per_point, derive_seed(base, i), ml);
  });
  return set;
}

EndToEndResult run_end_to_end(const ExperimentConfig& config) {
  const auto& s = config.simulation;
  const auto ml = ml_config(config);
  const modes::TimeGrid grid = analysis_grid(config);

  const clicks::ClickStream stream = clicks::simulate_thermal_clicks(
      config.gamma_hz, s.e2e_click_rate_hz, s.field_dt_ns * kNs, s.segment_duration_us * 1e-6, s.e2e_clicks,
      derive_seed(config.rng_seed, kE2eClicks));
  const auto pairs = clicks::select_coincidences(stream, config.acceptance_window_ns * kNs, s.dead_time_ns * kNs,
                                                 derive_seed(config.rng_seed, kE2eLabels));
  EndToEndResult r;
  r.n_clicks = stream.times.size();
  r.n_pairs = pairs.size();

  // Delays are quantized to the analysis grid so pairs sharing a delay share
  // one joint sampler.
  std::map<long long, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    groups[std::llround(pairs[i].delta_t / grid.dt())].push_back(i);
  }
  std::vector<std::pair<long long, std::vector<std::size_t>>> group_list(groups.begin(), groups.end());

  std::vector<double> delay_ns(pairs.size());
  std::vector<double> x_f1(pairs.size());
  std::vector<double> x_g1(pairs.size());
  std::vector<double> theta(pairs.size());
  const std::uint64_t trace_base = derive_seed(config.rng_seed, kE2eTraces);
  parallel_for(group_list.size(), [&](std::size_t gi) {
    const auto& [steps, members] = group_list[gi];
    const double dt = static_cast<double>(steps) * grid.dt();
    const AnalysisModes m = analysis_modes(config, dt);
    const homodyne::JointQuadratureSampler sampler(lossy_state(config, m).rho());
    const double center = 0.5 * (grid.t_start() + grid.t_last());
    const modes::HeraldPair herald{center - 0.5 * dt, center + 0.5 * dt};
    for (std::size_t i : members) {
      Rng rng(derive_seed(trace_base, i));
      const auto trace = homodyne::synthesize_trace(sampler, m.f1, m.f2, rng, herald);
      delay_ns[i] = dt / kNs;
      x_f1[i] = homodyne::project_trace(trace, m.f1);
      x_g1[i] = homodyne::project_trace(trace, m.g1);
      theta[i] = trace.theta;
    }
  });

  r.f1_quadratures.resize(pairs.size());
  r.g1_quadratures.resize(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    r.f1_quadratures[i] = {x_f1[i], theta[i], delay_ns[i]};
    r.g1_quadratures[i] = {x_g1[i], theta[i], delay_ns[i]};
  }

  const std::size_t n_bins = delay_bin_count(config.acceptance_window_ns, s.delay_bin_ns);
  std::vector<std::vector<std::size_t>> members(n_bins);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto b = std::min(static_cast<std::size_t>(delay_ns[i] / s.delay_bin_ns), n_bins - 1);
    members[b].push_back(i);
  }
  r.bins.resize(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    EndToEndBin& bin = r.bins[b];
    bin.lo_ns = static_cast<double>(b) * s.delay_bin_ns;
    bin.hi_ns = std::min(bin.lo_ns + s.delay_bin_ns, config.acceptance_window_ns);
    bin.n_pairs = members[b].size();
    if (bin.n_pairs < s.min_pairs_per_bin) {
      std::ostringstream msg;
      msg << "InsufficientPairs: delay bin [" << bin.lo_ns << ", " << bin.hi_ns << ") ns has " << bin.n_pairs
          << " pairs; skipped";
      r.warnings.push_back(msg.str());
      continue;
    }
    double p2 = 0.0;
    std::vector<double> g1_probs(3, 0.0);
    std::vector<double> xs_f1, xs_g1;
    for (std::size_t i : members[b]) {
      const double overlap = modes::overlap_closed_form(delay_ns[i] * kNs, config.gamma_hz);
      p2 += analytic::two_photon_weight_with_loss(overlap, config.eta);
      const auto fixed = analytic::fixed_mode_distribution_with_loss(overlap, config.eta);
      for (std::size_t n = 0; n < 3; ++n) g1_probs[n] += fixed[n];
      xs_f1.push_back(x_f1[i]);
      xs_g1.push_back(x_g1[i]);
    }
    const double count = static_cast<double>(bin.n_pairs);
    bin.p2_f1_analytic = p2 / count;
    for (double& p : g1_probs) p /= count;
    g1_probs[0] = 1.0 - g1_probs[1] - g1_probs[2];
    bin.g1_analytic = analytic::PhotonDistribution(g1_probs);
    bin.f1_estimate = tomo::ml_diagonal(xs_f1, ml);
    bin.g1_estimate = tomo::ml_diagonal(xs_g1, ml);
    bin.reconstructed = true;
  }
  if (std::none_of(r.bins.begin(), r.bins.end(), [](const auto& b) { return b.reconstructed; })) {
    throw Error(ErrorCode::InsufficientPairs, "no delay bin holds enough coincidence pairs");
  }
  return r;
}

ReconstructResult reconstruct(const ExperimentConfig& config,
                              const std::vector<homodyne::LabeledQuadrature>& rows) {
  if (rows.empty()) throw Error(ErrorCode::EmptyInput, "samples file holds no rows");
  const auto ml = ml_config(config);
  const double bin_ns = config.simulation.delay_bin_ns;
  ReconstructResult r;
  std::vector<double> all(rows.size());
  std::map<long long, std::vector<double>> by_bin;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    all[i] = rows[i].x;
    by_bin[static_cast<long long>(std::floor(rows[i].delta_t_ns / bin_ns))].push_back(rows[i].x);
  }
  r.overall = tomo::ml_diagonal(all, ml);
  for (const auto& [b, xs] : by_bin) {
    const double lo = static_cast<double>(b) * bin_ns;
    if (xs.size() < config.simulation.min_pairs_per_bin) {
      std::ostringstream msg;
      msg << "delay bin [" << lo << ", " << lo + bin_ns << ") ns has " << xs.size() << " samples; skipped";
      r.warnings.push_back(msg.str());
      continue;
    }
    r.bins.push_back({lo, lo + bin_ns, tomo::ml_diagonal(xs, ml)});
  }
  return r;
}

void write_g2_outputs(const G2Result& result, const fs::path& dir) {
  const auto& h = result.histogram;
  auto csv = open_output(dir / "g2.csv");
  csv << "delay_ns,g2_empirical,g2_theory\n";
  for (std::size_t k = 0; k < h.g2.size(); ++k) {
    csv << h.bin_center(k) / kNs << ',' << h.g2[k] << ',' << result.theory[k] << '\n';
  }
  auto summary = open_output(dir / "g2_summary.json");
  summary << json{{"events", result.events},
                  {"bin_ns", h.bin_width / kNs},
                  {"g2_zero", result.g2_zero},
                  {"g2_zero_theory", result.theory.front()},
                  {"max_deviation", result.max_deviation},
                  {"plateau_counts", h.plateau},
                  {"plateau_relative_error", h.plateau_relative_error}}
                 .dump(2)
          << '\n';
}

void write_delay_sweep(const std::vector<DelayPoint>& points, const fs::path& dir) {
  auto csv = open_output(dir / "sweep_delay.csv");
  csv << "delta_t_ns,P2_f1_analytic,P2_f1_reconstructed,stderr,P2_f1_channel\n";
  for (const auto& p : points) {
    csv << p.delta_t_ns << ',' << p.p2_analytic << ',' << p.estimate.dist[2] << ',' << stderr_at(p.estimate, 2)
        << ',' << p.p2_channel << '\n';
  }
}

void write_fixed_sweep(const ExperimentConfig& config, const std::vector<FixedPoint>& points,
                       const fs::path& dir) {
  auto csv = open_output(dir / "sweep_fixed.csv");
  csv << "delta_t_ns,P0_analytic,P1_analytic,P2_analytic,P0_reconstructed,P1_reconstructed,P2_reconstructed,"
         "P0_stderr,P1_stderr,P2_stderr\n";
  for (const auto& p : points) {
    csv << p.delta_t_ns;
    for (std::size_t n = 0; n < 3; ++n) csv << ',' << p.analytic[n];
    for (std::size_t n = 0; n < 3; ++n) csv << ',' << p.estimate.dist[n];
    for (std::size_t n = 0; n < 3; ++n) csv << ',' << stderr_at(p.estimate, n);
    csv << '\n';
  }
  auto summary = open_output(dir / "sweep_fixed_summary.json");
  summary << json{{"half_decay_delay_ns", analytic::fixed_mode_half_decay_delay(config.gamma_hz) / kNs},
                  {"half_decay_overlap", 1.0 / std::sqrt(3.0)}}
                 .dump(2)
          << '\n';
}

void write_fock_panels(const PanelSet& set, const fs::path& dir) {
  for (const auto& p : set.panels) {
    auto out = open_output(dir / ("panel_" + p.mode + ".json"));
    const auto exact = fock::photon_distribution(p.rho);
    std::ostringstream rho;
    fock::write_density_json(rho, p.rho);
    out << json{{"mode", p.mode},
                {"delta_t_ns", set.delta_t_ns},
                {"exact_probs", dist_vector(exact, exact.size())},
                {"reconstructed", estimate_json(p.estimate)},
                {"density", json::parse(rho.str())}}
               .dump(2)
        << '\n';
  }
  static const char* names[] = {"g1", "g2", "f1", "f2"};
  for (std::size_t k = 0; k < set.waveforms.size() && k < 4; ++k) {
    auto out = open_output(dir / (std::string("mode_") + names[k] + ".csv"));
    modes::write_mode_csv(out, set.waveforms[k]);
  }
}

void write_end_to_end(const EndToEndResult& result, const fs::path& dir) {
  auto csv = open_output(dir / "e2e_bins.csv");
  csv << "delta_t_lo_ns,delta_t_hi_ns,n_pairs,P2_f1_analytic,P2_f1_reconstructed,P2_f1_stderr,"
         "P0_g1_analytic,P1_g1_analytic,P2_g1_analytic,P0_g1_reconstructed,P1_g1_reconstructed,"
         "P2_g1_reconstructed\n";
  json bins = json::array();
  for (const auto& b : result.bins) {
    if (!b.reconstructed) continue;
    csv << b.lo_ns << ',' << b.hi_ns << ',' << b.n_pairs << ',' << b.p2_f1_analytic << ','
        << b.f1_estimate->dist[2] << ',' << stderr_at(*b.f1_estimate, 2);
    for (std::size_t n = 0; n < 3; ++n) csv << ',' << b.g1_analytic[n];
    for (std::size_t n = 0; n < 3; ++n) csv << ',' << b.g1_estimate->dist[n];
    csv << '\n';
    bins.push_back({{"delta_t_lo_ns", b.lo_ns},
                    {"delta_t_hi_ns", b.hi_ns},
                    {"n_pairs", b.n_pairs},
                    {"f1", estimate_json(*b.f1_estimate)},
                    {"g1", estimate_json(*b.g1_estimate)}});
  }
  auto report = open_output(dir / "e2e_report.json");
  report << json{{"clicks", result.n_clicks},
                 {"pairs", result.n_pairs},
                 {"bins", bins},
                 {"warnings", result.warnings}}
                .dump(2)
         << '\n';
  auto f1 = open_output(dir / "quadratures_f1.csv");
  homodyne::write_quadrature_csv(f1, result.f1_quadratures);
  auto g1 = open_output(dir / "quadratures_g1.csv");
  homodyne::write_quadrature_csv(g1, result.g1_quadratures);
}

void write_reconstruction(const ReconstructResult& result, const fs::path& dir) {
  auto est = open_output(dir / "estimate.json");
  tomo::write_estimate_json(est, result.overall);
  auto csv = open_output(dir / "reconstruct_bins.csv");
  csv << "delta_t_lo_ns,delta_t_hi_ns,n_samples,P0,P1,P2,P0_stderr,P1_stderr,P2_stderr\n";
  for (const auto& b : result.bins) {
    csv << b.lo_ns << ',' << b.hi_ns << ',' << b.estimate.n_samples;
    for (std::size_t n = 0; n < 3; ++n) csv << ',' << b.estimate.dist[n];
    for (std::size_t n = 0; n < 3; ++n) csv << ',' << stderr_at(b.estimate, n);
    csv << '\n';
  }
}

std::string library_version() {
#ifdef HERALDSIM_VERSION
  return HERALDSIM_VERSION;
#else
  return "unknown";
#endif
}

void write_manifest(const std::string& command, const ExperimentConfig& config,
                    const std::vector<std::string>& outputs, const fs::path& dir) {
  std::ostringstream eigen;
  eigen << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION;
  json versions{{"heraldsim", library_version()},
                {"eigen", eigen.str()},
                {"fftw", std::string(fftw_version)},
                {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                      std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                      std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                {"compiler", std::string(__VERSION__)}};
  auto out = open_output(dir / "manifest.json");
  out << json{{"command", command},
              {"config_hash", config.hash()},
              {"seed", config.rng_seed},
              {"config", json::parse(config.to_json())},
              {"versions", versions},
              {"outputs", outputs}}
             .dump(2)
      << '\n';
}

std::vector<std::string> execute(const std::string& command, const ExperimentConfig& config,
                                 const std::optional<fs::path>& input) {
  config.validate();
  const fs::path dir(config.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create output directory " + dir.string());

  std::vector<std::string> outputs;
  if (command == "g2") {
    write_g2_outputs(run_g2(config), dir);
    outputs = {"g2.csv", "g2_summary.json"};
  } else if (command == "sweep-delay") {
    write_delay_sweep(run_delay_sweep(config), dir);
    outputs = {"sweep_delay.csv"};
  } else if (command == "sweep-fixed") {
    write_fixed_sweep(config, run_fixed_mode_sweep(config), dir);
    outputs = {"sweep_fixed.csv", "sweep_fixed_summary.json"};
  } else if (command == "fock-panels") {
    write_fock_panels(run_fock_panels(config), dir);
    outputs = {"panel_g1.json", "panel_g2.json", "panel_f1.json", "panel_f2.json",
               "mode_g1.csv",   "mode_g2.csv",   "mode_f1.csv",   "mode_f2.csv"};
  } else if (command == "end-to-end") {
    write_end_to_end(run_end_to_end(config), dir);
    outputs = {"e2e_bins.csv", "e2e_report.json", "quadratures_f1.csv", "quadratures_g1.csv"};
  } else if (command == "reconstruct") {
    if (!input) throw Error(ErrorCode::InvalidArgument, "reconstruct needs a samples file");
    std::ifstream in(*input);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + input->string());
    write_reconstruction(reconstruct(config, homodyne::read_quadrature_csv(in)), dir);
    outputs = {"estimate.json", "reconstruct_bins.csv"};
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown command '" + command + "'");
  }
  write_manifest(command, config, outputs, dir);
  outputs.push_back("manifest.json");
  return outputs;
}

}  // namespace heraldsim::experiment
