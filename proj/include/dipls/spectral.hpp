#pragma once

#include <fftw3.h>

#include <Eigen/Dense>
#include <cmath>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "dipls/errors.hpp"
#include "dipls/types.hpp"

namespace dipls {

enum class ChannelKind { acceleration, microphone, temperature };

inline const char* to_string(ChannelKind k) {
  switch (k) {
    case ChannelKind::acceleration: return "acceleration";
    case ChannelKind::microphone: return "microphone";
    default: return "temperature";
  }
}
inline ChannelKind channel_kind_from_string(const std::string& s) {
  if (s == "acceleration") return ChannelKind::acceleration;
  if (s == "microphone") return ChannelKind::microphone;
  if (s == "temperature") return ChannelKind::temperature;
  throw ValidationError("unknown channel kind '" + s + "'");
}

struct Channel {
  std::string id;
  ChannelKind kind;
  std::string unit;  // "m/s^2", "Pa", "degC"
  Eigen::VectorXd samples;
};

// One acquisition event: synchronous multichannel waveforms.
struct SpectralFrame {
  std::vector<Channel> channels;
  double sample_rate = 0.0;   // Hz
  double duration = 0.0;      // s
  double fundamental_f = 0.0; // compressor operating frequency, Hz
  std::string condition_id;
  std::string sample_id;

  void validate(double half_band) const {
    if (sample_rate <= 0.0 || duration <= 0.0)
      throw ValidationError("frame: sample_rate and duration must be positive");
    if (fundamental_f <= 0.0)
      throw ValidationError("frame: fundamental_f must be positive");
    if (2.0 * fundamental_f + half_band >= sample_rate / 2.0)
      throw RangeError("frame: 2f band reaches past Nyquist");
    auto expect = static_cast<Eigen::Index>(std::llround(sample_rate * duration));
    for (const auto& ch : channels)
      if (ch.samples.size() != expect)
        throw ValidationError("frame: channel '" + ch.id + "' has " +
                              std::to_string(ch.samples.size()) +
                              " samples, expected " + std::to_string(expect));
  }
};

enum class WindowKind { rectangular, hann };

struct BandRmsOptions {
  WindowKind window = WindowKind::rectangular;
  // > 0: average band power over non-overlapping sub-windows of this length
  // (a partial tail window is dropped); 0: single full-length window.
  double average_window_seconds = 0.0;
};

namespace detail {

// FFTW planning is not thread-safe; serialize the whole transform. Throughput
// is irrelevant next to the generator, and correctness wins.
inline void fft_r2c(const double* in, Eigen::Index n, std::vector<std::complex<double>>& out) {
  static std::mutex fftw_mutex;
  std::lock_guard<std::mutex> lock(fftw_mutex);
  out.resize(static_cast<std::size_t>(n / 2 + 1));
  double* buf = fftw_alloc_real(static_cast<std::size_t>(n));
  fftw_complex* obuf = fftw_alloc_complex(out.size());
  fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), buf, obuf, FFTW_ESTIMATE);
  std::copy(in, in + n, buf);
  fftw_execute(plan);
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = {obuf[k][0], obuf[k][1]};
  fftw_destroy_plan(plan);
  fftw_free(buf);
  fftw_free(obuf);
}

// Band power of one window, folded to one side and scaled so a pure sine of
// amplitude A whose (windowed) spectrum lies inside the band contributes
// A^2/2.  Normalizing by n * sum(w^2) does that for any window and keeps the
// rectangular case Parseval-exact.
inline double window_band_power(const double* x, Eigen::Index n, double sample_rate,
                                double f_lo, double f_hi, WindowKind window,
                                bool* any_bins) {
  std::vector<double> buf;
  const double* data = x;
  double w2sum = static_cast<double>(n);  // rectangular: sum of 1^2
  if (window == WindowKind::hann) {
    buf.resize(static_cast<std::size_t>(n));
    w2sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double w = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i) /
                                      static_cast<double>(n));
      buf[static_cast<std::size_t>(i)] = x[i] * w;
      w2sum += w * w;
    }
    data = buf.data();
  }
  std::vector<std::complex<double>> spec;
  fft_r2c(data, n, spec);

  // edge bins are inclusive; the epsilon absorbs float noise in k*fs/n
  double slack = 1e-9 * sample_rate;
  double power = 0.0;
  *any_bins = false;
  for (std::size_t k = 0; k < spec.size(); ++k) {
    double f = static_cast<double>(k) * sample_rate / static_cast<double>(n);
    if (f < f_lo - slack || f > f_hi + slack) continue;
    *any_bins = true;
    bool interior = k != 0 && !(n % 2 == 0 && k == spec.size() - 1);
    double fold = interior ? 2.0 : 1.0;
    power += fold * std::norm(spec[k]) / (static_cast<double>(n) * w2sum);
  }
  return power;
}

}  // namespace detail

// RMS of the signal content inside [f_center - half_band, f_center + half_band]
// (bin edges inclusive), in the input's own units: an in-band sine of
// amplitude A returns A/sqrt(2).
inline double band_rms(const Eigen::VectorXd& samples, double sample_rate,
                       double f_center, double half_band,
                       BandRmsOptions opts = {}) {
  if (samples.size() < 2) throw ValidationError("band_rms: need at least 2 samples");
  if (sample_rate <= 0.0) throw ValidationError("band_rms: sample_rate must be positive");
  double f_lo = f_center - half_band;
  double f_hi = f_center + half_band;
  if (f_lo <= 0.0) throw RangeError("band_rms: band reaches DC or below");
  if (f_hi >= sample_rate / 2.0) throw RangeError("band_rms: band reaches past Nyquist");

  Eigen::Index n = samples.size();
  Eigen::Index wlen = n;
  if (opts.average_window_seconds > 0.0) {
    wlen = static_cast<Eigen::Index>(std::llround(opts.average_window_seconds * sample_rate));
    if (wlen < 2 || wlen > n) wlen = n;
  }
  Eigen::Index n_windows = n / wlen;

  double mean_power = 0.0;
  for (Eigen::Index w = 0; w < n_windows; ++w) {
    bool any = false;
    double p = detail::window_band_power(samples.data() + w * wlen, wlen, sample_rate,
                                         f_lo, f_hi, opts.window, &any);
    if (!any)
      throw EmptyBandError("band_rms: no FFT bins inside [" + std::to_string(f_lo) +
                           ", " + std::to_string(f_hi) + "] Hz");
    mean_power += p;
  }
  mean_power /= static_cast<double>(n_windows);
  return std::sqrt(mean_power);
}

// 20 log10(value / reference); the caller owns any floor policy.
inline double to_db(double value, double reference) {
  if (!(value > 0.0))
    throw ValidationError("to_db: non-positive value");
  if (!(reference > 0.0))
    throw ValidationError("to_db: non-positive reference");
  return 20.0 * std::log10(value / reference);
}

// Arithmetic mean of the per-microphone dB levels (deliberately not an
// energy average).
inline double label_from_mics(const std::vector<double>& mic_levels_db) {
  if (mic_levels_db.empty()) throw ValidationError("label_from_mics: no microphones");
  double s = 0.0;
  for (double v : mic_levels_db) s += v;
  return s / static_cast<double>(mic_levels_db.size());
}

struct DbRefs {
  std::optional<double> microphone = 20e-6;  // Pa (standard SPL reference)
  std::optional<double> acceleration = 1e-6; // m/s^2 (1 um/s^2 vibration-dB)
  double floor_db = -120.0;                  // dead-channel clamp
};

struct FeatureRow {
  Eigen::VectorXd features;  // one dB value per non-mic waveform channel,
                             // deg C for temperature channels
  std::vector<std::string> feature_names;
  std::optional<double> label_db;
  std::string condition_id;
  std::string timestamp;  // carries the frame's sample id
};

// 2f-band features per channel: band RMS -> dB against the kind's reference
// (acceleration), arithmetic mean over the window (temperature); microphone
// channels fold into label_db and stay out of the feature vector.
inline FeatureRow extract_features(const SpectralFrame& frame, double half_band = 3.0,
                                   const DbRefs& refs = {},
                                   BandRmsOptions opts = {WindowKind::rectangular, 1.0}) {
  frame.validate(half_band);
  double f_center = 2.0 * frame.fundamental_f;

  FeatureRow row;
  row.condition_id = frame.condition_id;
  row.timestamp = frame.sample_id;
  std::vector<double> feats;
  std::vector<double> mic_levels;
  for (const auto& ch : frame.channels) {
    switch (ch.kind) {
      case ChannelKind::temperature:
        feats.push_back(ch.samples.mean());
        row.feature_names.push_back(ch.id);
        break;
      case ChannelKind::acceleration: {
        if (!refs.acceleration)
          throw ConfigError("extract_features: no dB reference for acceleration");
        double rms = band_rms(ch.samples, frame.sample_rate, f_center, half_band, opts);
        feats.push_back(rms > 0.0 ? to_db(rms, *refs.acceleration) : refs.floor_db);
        row.feature_names.push_back(ch.id);
        break;
      }
      case ChannelKind::microphone: {
        if (!refs.microphone)
          throw ConfigError("extract_features: no dB reference for microphone");
        double rms = band_rms(ch.samples, frame.sample_rate, f_center, half_band, opts);
        mic_levels.push_back(rms > 0.0 ? to_db(rms, *refs.microphone) : refs.floor_db);
        break;
      }
    }
  }
  row.features = Eigen::Map<Eigen::VectorXd>(feats.data(),
                                             static_cast<Eigen::Index>(feats.size()));
  if (!mic_levels.empty()) row.label_db = label_from_mics(mic_levels);
  return row;
}

}  // namespace dipls
