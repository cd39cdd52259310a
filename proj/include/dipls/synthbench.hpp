#pragma once

#include <Eigen/Dense>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "dipls/errors.hpp"
#include "dipls/rng.hpp"
#include "dipls/spectral.hpp"
#include "dipls/types.hpp"

namespace dipls {

enum class ValveMode { fixed, auto_regulated, closed };

inline const char* to_string(ValveMode m) {
  switch (m) {
    case ValveMode::fixed: return "fixed";
    case ValveMode::auto_regulated: return "auto";
    default: return "closed";
  }
}
inline ValveMode valve_mode_from_string(const std::string& s) {
  if (s == "fixed") return ValveMode::fixed;
  if (s == "auto") return ValveMode::auto_regulated;
  if (s == "closed") return ValveMode::closed;
  throw ValidationError("unknown valve mode '" + s + "'");
}

struct ConditionSpec {
  std::string condition_id;
  ValveMode valve_mode = ValveMode::fixed;
  double opening = 90.0;                       // valve units, fixed mode
  std::pair<double, double> opening_range{0, 0};  // auto mode
  std::pair<double, double> ambient_range{20, 30};  // deg C
  int n_samples = 80;
  double mechanism_shift = 0.0;  // 0 = baseline transfer path, 1 = fully altered

  void validate() const {
    if (condition_id.empty()) throw ValidationError("condition with empty id");
    if (n_samples < 40 || n_samples > 120)
      throw ValidationError("condition '" + condition_id + "': n_samples " +
                            std::to_string(n_samples) + " outside [40, 120]");
    if (ambient_range.first > ambient_range.second)
      throw ValidationError("condition '" + condition_id + "': ambient range is empty");
    if (valve_mode == ValveMode::auto_regulated &&
        opening_range.first > opening_range.second)
      throw ValidationError("condition '" + condition_id +
                            "': auto mode with an empty opening range");
    if (mechanism_shift < 0.0 || mechanism_shift > 1.0)
      throw ValidationError("condition '" + condition_id +
                            "': mechanism_shift outside [0, 1]");
  }
};

struct SuiteSpec {
  std::vector<ConditionSpec> conditions;
  int n_accel_channels = 39;
  int n_thermo_channels = 66;
  int n_mics = 8;
  std::pair<double, double> label_range_target{40.0, 55.0};  // dB
  std::uint64_t seed = 20260814ULL;
  // waveform rendering parameters (2f tone sits at 2 x fundamental)
  double fundamental_f_hz = 42.5;
  double sample_rate_hz = 20000.0;
  double frame_seconds = 10.0;

  void validate() const {
    if (conditions.size() < 3)
      throw ValidationError("suite needs at least 3 conditions for leave-one-out");
    if (n_accel_channels < 3)
      throw ValidationError("suite needs at least 3 acceleration channels");
    if (n_thermo_channels < 1 || n_mics < 1)
      throw ValidationError("suite channel counts must be positive");
    std::set<std::string> ids;
    for (const auto& c : conditions) {
      c.validate();
      if (!ids.insert(c.condition_id).second)
        throw ValidationError("duplicate condition id '" + c.condition_id + "'");
    }
  }
};

namespace synth {

// Fixed unit physics, drawn once per suite seed.  The rig: the compressor
// shell carries the 2f tone; the injection-circuit piping carries broadband
// flow noise that is CORRELATED with the 2f forcing while the valve is open
// (same refrigerant flow drives both); the casing carries an unrelated
// secondary excitation.  The radiated label listens to shell + casing only —
// the piping never reaches the microphones.  When the valve closes, the flow
// through the injection circuit stops, but the single-suction cycle shakes
// the same piping with motion that carries no label information; a model that
// learned to read the flow proxy over-predicts there.
struct Geometry {
  int n_acc = 0, n_th = 0;
  int n_tonal = 0, piping_lo = 0, piping_hi = 0, n_flow = 0;
  Eigen::VectorXd base;    // per-channel resting level, dB
  Eigen::VectorXd t0;      // 2f transfer map (shell-dominated)
  Eigen::MatrixXd F;       // flow-noise directions, scaled, piping rows only
  Eigen::VectorXd kappa;   // flow/forcing coupling per flow direction
  Eigen::VectorXd u0;      // casing secondary-excitation map
  Eigen::VectorXd r;       // radiation map (zero on piping rows)
  Eigen::VectorXd t_cl;    // valve-closed excitation map
  Eigen::MatrixXd M0;      // thermo state->sensor map
  Eigen::VectorXd th_base; // thermo resting temperatures, deg C
  Eigen::VectorXd noise_sd;
};

// generator constants; arbitrary-but-fixed, not claims about real physics
constexpr double kGamma = 0.75;      // shell overlap of the closed-mode path
constexpr double kEta = 3.2;         // piping weight of the closed-mode path
constexpr double kXi = 0.8;          // off-flow piping component
constexpr double kSigXTonal = 1.5;   // shell channel noise, dB
constexpr double kSigX = 0.5;        // other channel noise, dB
constexpr double kSigY = 0.3;        // label observation noise, dB
constexpr double kSE = 4.0;          // 2f forcing load fluctuation
constexpr double kSigECl = 5.3;      // closed-mode excitation spread
constexpr double kSF = 1.8;          // flow-noise gain
constexpr double kKappa0 = 0.7;      // mean flow/forcing coupling
constexpr double kSigInd = 0.6;      // flow noise independent part
constexpr double kDriftTh = 2.0;     // thermo map drift per unit shift
constexpr double kRTonalMass = 0.7;  // label mass on shell channels
constexpr double kY0 = 47.5;         // label centre, dB
constexpr double kAccelBaseDb = 60.0;
constexpr double kThermoBaseC = 30.0;

inline Geometry make_geometry(const SuiteSpec& suite) {
  Geometry g;
  g.n_acc = suite.n_accel_channels;
  g.n_th = suite.n_thermo_channels;
  // block split scales with the channel count; defaults give 5/18/16
  g.n_tonal = std::max(1, static_cast<int>(std::lround(g.n_acc * 5.0 / 39.0)));
  int piping = std::max(2, static_cast<int>(std::lround(g.n_acc * 18.0 / 39.0)));
  piping = std::min(piping, g.n_acc - g.n_tonal - 1);
  if (piping < 2)
    throw ValidationError("too few acceleration channels to split into blocks");
  g.piping_lo = g.n_tonal;
  g.piping_hi = g.n_tonal + piping;
  g.n_flow = std::min(4, piping - 1);

  Rng rng(hash_seed(suite.seed, "unit-geometry"));
  g.base = rng.normal_vector(g.n_acc, kAccelBaseDb, 1.5);
  g.t0 = 0.05 * rng.uniform_vector(g.n_acc, 0.0, 1.0);
  for (int i = 0; i < g.n_tonal; ++i) g.t0(i) = rng.uniform(0.7, 0.9);

  Eigen::MatrixXd G = rng.normal_matrix(piping, g.n_flow);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  Eigen::MatrixXd Qf =
      qr.householderQ() * Eigen::MatrixXd::Identity(piping, g.n_flow);

  g.kappa.resize(g.n_flow);
  for (int j = 0; j < g.n_flow; ++j)
    g.kappa(j) = kKappa0 * (0.9 + 0.2 * rng.uniform01());

  g.u0 = Eigen::VectorXd::Zero(g.n_acc);
  for (int i = g.piping_hi; i < g.n_acc; ++i) g.u0(i) = rng.uniform(0.3, 0.7);

  g.r = Eigen::VectorXd::Zero(g.n_acc);
  for (int i = 0; i < g.n_tonal; ++i) g.r(i) = kRTonalMass / g.n_tonal;
  int n_cas = g.n_acc - g.piping_hi;
  for (int i = g.piping_hi; i < g.n_acc; ++i) g.r(i) = (1.0 - kRTonalMass) / n_cas;

  // extra piping direction outside the flow span, excited only when closed
  Eigen::VectorXd fr = rng.normal_vector(piping);
  fr -= Qf * (Qf.transpose() * fr);
  Eigen::VectorXd fresh = Eigen::VectorXd::Zero(g.n_acc);
  if (fr.norm() > 1e-9)
    fresh.segment(g.piping_lo, piping) = fr / fr.norm();

  g.F = Eigen::MatrixXd::Zero(g.n_acc, g.n_flow);
  g.F.block(g.piping_lo, 0, piping, g.n_flow) = Qf * kSF;
  g.t_cl = kGamma * g.t0 +
           kEta / std::sqrt(static_cast<double>(g.n_flow)) *
               (g.F * Eigen::VectorXd::Ones(g.n_flow)) +
           kXi * fresh;

  g.M0 = rng.normal_matrix(g.n_th, 5);
  g.th_base = rng.normal_vector(g.n_th, kThermoBaseC, 1.0);

  g.noise_sd = Eigen::VectorXd::Constant(g.n_acc, kSigX);
  for (int i = 0; i < g.n_tonal; ++i) g.noise_sd(i) = kSigXTonal;
  return g;
}

// latent thermodynamic state: h1 follows the valve opening (plus a mild
// ambient correction), h2 the ambient temperature
inline void state(double opening, double ambient, double* h1, double* h2) {
  *h1 = (opening - 95.0) / 10.0 + 0.25 * std::tanh((ambient - 28.0) / 6.0);
  *h2 = (ambient - 28.0) / 10.0;
}

}  // namespace synth

// Both views of one generated condition share labels and sample ids.
struct ConditionTables {
  DomainDataset acceleration;
  DomainDataset thermodynamic;
  ValveMode valve_mode = ValveMode::fixed;
};

// Draw one condition.  Causal chain: (opening, ambient) -> latent state ->
// 2f excitation -> acceleration channels -> radiated label; thermodynamic
// sensors observe the state through their own condition-drifting map, so the
// label is causally downstream of vibration and only indirectly of thermo.
inline ConditionTables generate_condition(const ConditionSpec& spec,
                                          const SuiteSpec& suite,
                                          std::uint64_t sub_seed) {
  spec.validate();
  const synth::Geometry geo = synth::make_geometry(suite);
  const int n = spec.n_samples;
  const int A = geo.n_acc, T = geo.n_th;
  using namespace synth;

  Rng rng(sub_seed);
  Eigen::VectorXd ambient =
      rng.uniform_vector(n, spec.ambient_range.first, spec.ambient_range.second);
  Eigen::VectorXd opening(n);
  if (spec.valve_mode == ValveMode::auto_regulated) {
    opening = rng.uniform_vector(n, spec.opening_range.first, spec.opening_range.second);
  } else {
    for (int i = 0; i < n; ++i) opening(i) = spec.opening + 0.3 * rng.normal();
  }

  Eigen::VectorXd h1(n), h2(n);
  for (int i = 0; i < n; ++i) state(opening(i), ambient(i), &h1(i), &h2(i));

  Eigen::VectorXd e2 = 0.5 * h2 + 0.8 * rng.normal_vector(n);

  Eigen::MatrixXd mech(n, A);
  if (spec.valve_mode == ValveMode::closed) {
    // flow stops; the remaining cycle re-excites shell + piping through a
    // distinct map whose motion carries no label information
    Eigen::VectorXd e_cl = Eigen::VectorXd::Constant(n, 0.2) +
                           kSigECl * rng.normal_vector(n);
    mech = e_cl * geo.t_cl.transpose() + e2 * geo.u0.transpose();
  } else {
    // 2f forcing: weak operating-point trend + dominant load fluctuation
    Eigen::VectorXd e =
        0.3 * h1 - 0.3 * h2.cwiseProduct(h2) + kSE * rng.normal_vector(n);
    // per-condition transfer-path perturbation, its own stream so that
    // mechanism_shift only scales a fixed direction
    Rng drift_rng(hash_seed(sub_seed, "transfer-drift"));
    Eigen::VectorXd D = drift_rng.normal_vector(A, 0.0, 0.1);
    Eigen::VectorXd t_c = geo.t0 + spec.mechanism_shift * D;
    Eigen::MatrixXd fl =
        e * geo.kappa.transpose() + kSigInd * rng.normal_matrix(n, geo.n_flow);
    mech = e * t_c.transpose() + fl * geo.F.transpose() + e2 * geo.u0.transpose();
  }

  Eigen::MatrixXd Xa =
      mech + Eigen::MatrixXd(rng.normal_matrix(n, A).array().rowwise() *
                             geo.noise_sd.transpose().array());
  Xa.rowwise() += geo.base.transpose();

  Eigen::VectorXd y = (mech * geo.r).array() + kY0 +
                      (kSigY * rng.normal_vector(n)).array();

  // thermo sensors: closed mode pins the injection-branch state component
  Eigen::VectorXd h1_th = spec.valve_mode == ValveMode::closed
                              ? Eigen::VectorXd::Constant(n, -0.8)
                              : h1;
  Eigen::MatrixXd phi(n, 5);
  for (int i = 0; i < n; ++i) {
    phi(i, 0) = h1_th(i);
    phi(i, 1) = h2(i);
    phi(i, 2) = h1_th(i) * h1_th(i);
    phi(i, 3) = h1_th(i) * h2(i);
    phi(i, 4) = std::tanh(1.5 * h1_th(i));
  }
  Rng th_drift_rng(hash_seed(sub_seed, "thermo-drift"));
  Eigen::MatrixXd Mc =
      geo.M0 + kDriftTh * spec.mechanism_shift * th_drift_rng.normal_matrix(T, 5, 0.0, 0.3);
  Eigen::MatrixXd Xt = phi * Mc.transpose() + 0.4 * rng.normal_matrix(n, T);
  Xt.rowwise() += geo.th_base.transpose();

  ConditionTables out;
  out.valve_mode = spec.valve_mode;
  std::vector<std::string> ids(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "_%04d", i);
    ids[static_cast<std::size_t>(i)] = spec.condition_id + buf;
  }
  out.acceleration = DomainDataset{Xa, y, spec.condition_id, ids};
  out.thermodynamic = DomainDataset{Xt, y, spec.condition_id, ids};
  return out;
}

inline std::uint64_t condition_sub_seed(const SuiteSpec& suite,
                                        const std::string& condition_id) {
  return hash_seed(suite.seed, condition_id);
}

inline ConditionTables generate_condition(const ConditionSpec& spec,
                                          const SuiteSpec& suite) {
  return generate_condition(spec, suite, condition_sub_seed(suite, spec.condition_id));
}

inline std::vector<ConditionTables> generate_suite(const SuiteSpec& suite) {
  suite.validate();
  std::vector<ConditionTables> out;
  out.reserve(suite.conditions.size());
  for (const auto& spec : suite.conditions) out.push_back(generate_condition(spec, suite));
  return out;
}

// The canonical six-condition benchmark: four fixed openings with growing
// transfer-path drift, one automatic-regulation condition, one valve-closed
// condition.
inline SuiteSpec default_suite_spec(std::uint64_t seed = 20260814ULL) {
  SuiteSpec s;
  s.seed = seed;
  s.conditions = {
      {"C1_open82", ValveMode::fixed, 82.0, {0, 0}, {20, 28}, 80, 0.00},
      {"C2_open88", ValveMode::fixed, 88.0, {0, 0}, {22, 30}, 80, 0.08},
      {"C3_open96", ValveMode::fixed, 96.0, {0, 0}, {24, 32}, 80, 0.12},
      {"C4_auto", ValveMode::auto_regulated, 0.0, {90, 105}, {24, 34}, 80, 0.20},
      {"C5_closed", ValveMode::closed, 0.0, {0, 0}, {22, 34}, 80, 1.00},
      {"C6_open106", ValveMode::fixed, 106.0, {0, 0}, {26, 34}, 80, 0.15},
  };
  return s;
}

// Re-render one generated sample as a raw multichannel acquisition: each
// feature's dB amplitude becomes a 2f tone (plus -40 dB broadband noise),
// microphones carry the label level, temperature channels hold their value.
inline SpectralFrame render_waveforms(const ConditionSpec& spec, const SuiteSpec& suite,
                                      int sample_index) {
  ConditionTables tables = generate_condition(spec, suite);
  const int n = spec.n_samples;
  if (sample_index < 0 || sample_index >= n)
    throw RangeError("render_waveforms: sample index " + std::to_string(sample_index) +
                     " outside [0, " + std::to_string(n) + ")");

  const double sr = suite.sample_rate_hz;
  const auto n_samp = static_cast<Eigen::Index>(std::llround(sr * suite.frame_seconds));
  const double f_tone = 2.0 * suite.fundamental_f_hz;
  const double noise_rel = std::pow(10.0, -40.0 / 20.0);
  DbRefs refs;

  std::uint64_t sub = condition_sub_seed(suite, spec.condition_id);
  Rng rng(hash_seed(sub, "render-" + std::to_string(sample_index)));

  SpectralFrame frame;
  frame.sample_rate = sr;
  frame.duration = suite.frame_seconds;
  frame.fundamental_f = suite.fundamental_f_hz;
  frame.condition_id = spec.condition_id;
  frame.sample_id = tables.acceleration.sample_ids[static_cast<std::size_t>(sample_index)];

  auto tone_channel = [&](const std::string& id, ChannelKind kind, const char* unit,
                          double level_db, double ref) {
    Channel ch{id, kind, unit, Eigen::VectorXd::Zero(n_samp)};
    if (level_db > -120.0) {
      double amp = ref * std::pow(10.0, level_db / 20.0) * std::sqrt(2.0);
      double phase = rng.uniform(0.0, 2.0 * M_PI);
      double sigma = amp * noise_rel;
      for (Eigen::Index t = 0; t < n_samp; ++t)
        ch.samples(t) = amp * std::sin(2.0 * M_PI * f_tone * static_cast<double>(t) / sr +
                                       phase) +
                        sigma * rng.normal();
    }
    return ch;
  };

  char buf[16];
  for (int c = 0; c < suite.n_accel_channels; ++c) {
    std::snprintf(buf, sizeof buf, "a%02d", c);
    frame.channels.push_back(tone_channel(
        buf, ChannelKind::acceleration, "m/s^2",
        tables.acceleration.features(sample_index, c), *refs.acceleration));
  }
  double label = (*tables.acceleration.labels)(sample_index);
  for (int m = 0; m < suite.n_mics; ++m) {
    std::snprintf(buf, sizeof buf, "m%02d", m);
    frame.channels.push_back(
        tone_channel(buf, ChannelKind::microphone, "Pa", label, *refs.microphone));
  }
  for (int c = 0; c < suite.n_thermo_channels; ++c) {
    std::snprintf(buf, sizeof buf, "t%02d", c);
    frame.channels.push_back(
        Channel{buf, ChannelKind::temperature, "degC",
                Eigen::VectorXd::Constant(
                    n_samp, tables.thermodynamic.features(sample_index, c))});
  }
  return frame;
}

}  // namespace dipls
