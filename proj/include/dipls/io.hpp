#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dipls/errors.hpp"
#include "dipls/evaluation.hpp"
#include "dipls/spectral.hpp"
#include "dipls/synthbench.hpp"
#include "dipls/types.hpp"

namespace dipls::io {

static_assert(std::endian::native == std::endian::little,
              "waveform containers assume a little-endian host");

using json = nlohmann::json;  // ordered by key -> byte-stable output

constexpr int kSchemaVersion = 1;

inline std::string format_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << text;
  if (!out) throw IoError(path + ": write failed");
}

inline json parse_json_file(const std::string& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
}

inline void write_json_file(const std::string& path, const json& doc) {
  write_text_file(path, doc.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// dataset CSV
// ---------------------------------------------------------------------------

struct Table {
  std::vector<std::string> sample_ids;
  std::vector<std::string> condition_ids;
  std::vector<double> labels;  // NaN = empty label field
  std::vector<std::string> feature_names;
  Eigen::MatrixXd features;
};

inline std::string table_to_csv(const Table& t) {
  const auto n = static_cast<Eigen::Index>(t.sample_ids.size());
  if (static_cast<Eigen::Index>(t.condition_ids.size()) != n ||
      static_cast<Eigen::Index>(t.labels.size()) != n || t.features.rows() != n ||
      t.features.cols() != static_cast<Eigen::Index>(t.feature_names.size()))
    throw DimensionError("table_to_csv: inconsistent column/row counts");
  std::ostringstream out;
  out << "sample_id,condition_id,label_db";
  for (const auto& f : t.feature_names) out << ',' << f;
  out << '\n';
  for (Eigen::Index i = 0; i < n; ++i) {
    out << t.sample_ids[static_cast<std::size_t>(i)] << ','
        << t.condition_ids[static_cast<std::size_t>(i)] << ',';
    double lab = t.labels[static_cast<std::size_t>(i)];
    if (!std::isnan(lab)) out << format_num(lab);
    for (Eigen::Index j = 0; j < t.features.cols(); ++j)
      out << ',' << format_num(t.features(i, j));
    out << '\n';
  }
  return out.str();
}

inline void write_table_csv(const std::string& path, const Table& t) {
  write_text_file(path, table_to_csv(t));
}

namespace detail {
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_field_double(const std::string& s, const std::string& path,
                                 std::size_t line_no) {
  const char* c = s.c_str();
  char* end = nullptr;
  double v = std::strtod(c, &end);
  if (end == c || *end != '\0' || !std::isfinite(v))
    throw IoError(path + ":" + std::to_string(line_no) + ": bad numeric field '" +
                  s + "'");
  return v;
}
}  // namespace detail

inline Table read_table_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open for reading");
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file");
  auto header = detail::split_csv_line(line);
  if (header.size() < 3 || header[0] != "sample_id" || header[1] != "condition_id" ||
      header[2] != "label_db")
    throw IoError(path + ": corrupt header (expected sample_id,condition_id,label_db,...)");
  Table t;
  t.feature_names.assign(header.begin() + 3, header.end());
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto f = detail::split_csv_line(line);
    if (f.size() != header.size())
      throw IoError(path + ":" + std::to_string(line_no) + ": expected " +
                    std::to_string(header.size()) + " fields, got " +
                    std::to_string(f.size()));
    t.sample_ids.push_back(f[0]);
    t.condition_ids.push_back(f[1]);
    t.labels.push_back(f[2].empty() ? std::numeric_limits<double>::quiet_NaN()
                                    : detail::parse_field_double(f[2], path, line_no));
    for (std::size_t j = 3; j < f.size(); ++j)
      values.push_back(detail::parse_field_double(f[j], path, line_no));
  }
  const auto n = static_cast<Eigen::Index>(t.sample_ids.size());
  const auto p = static_cast<Eigen::Index>(t.feature_names.size());
  t.features.resize(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j)
      t.features(i, j) = values[static_cast<std::size_t>(i * p + j)];
  return t;
}

// Group rows by condition_id (first-appearance order).  Labels become the
// dataset labels only if every row of the condition carries one.
inline std::vector<DomainDataset> split_by_condition(const Table& t) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<Eigen::Index>> rows;
  for (std::size_t i = 0; i < t.condition_ids.size(); ++i) {
    auto [it, inserted] = rows.try_emplace(t.condition_ids[i]);
    if (inserted) order.push_back(t.condition_ids[i]);
    it->second.push_back(static_cast<Eigen::Index>(i));
  }
  std::vector<DomainDataset> out;
  for (const auto& cid : order) {
    const auto& idx = rows[cid];
    DomainDataset d;
    d.condition_id = cid;
    d.features.resize(static_cast<Eigen::Index>(idx.size()), t.features.cols());
    Eigen::VectorXd y(static_cast<Eigen::Index>(idx.size()));
    int n_labeled = 0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      d.features.row(static_cast<Eigen::Index>(i)) = t.features.row(idx[i]);
      d.sample_ids.push_back(t.sample_ids[static_cast<std::size_t>(idx[i])]);
      y(static_cast<Eigen::Index>(i)) = t.labels[static_cast<std::size_t>(idx[i])];
      if (!std::isnan(y(static_cast<Eigen::Index>(i)))) ++n_labeled;
    }
    if (n_labeled == static_cast<int>(idx.size()))
      d.labels = y;
    else if (n_labeled != 0)
      throw ValidationError("condition '" + cid +
                            "' mixes labeled and unlabeled rows");
    out.push_back(std::move(d));
  }
  return out;
}

// ---------------------------------------------------------------------------
// channel manifest
// ---------------------------------------------------------------------------

struct FeatureColumn {
  std::string name;
  ChannelKind kind = ChannelKind::acceleration;
};

struct Manifest {
  std::vector<FeatureColumn> feature_columns;
  std::vector<std::string> conditions;
  double db_ref_accel = 1e-6;
  double db_ref_mic = 20e-6;
  double floor_db = -120.0;
  double half_band_hz = 3.0;
  double fundamental_f_hz = 42.5;
  double sample_rate_hz = 20000.0;
  double frame_seconds = 10.0;
  std::uint64_t seed = 0;
  bool seed_overridden = false;
  std::string generator = "synthbench";
};

inline json manifest_to_json(const Manifest& m) {
  json cols = json::array();
  for (const auto& c : m.feature_columns)
    cols.push_back({{"kind", to_string(c.kind)}, {"name", c.name}});
  return json{{"schema_version", kSchemaVersion},
              {"feature_columns", cols},
              {"conditions", m.conditions},
              {"extraction",
               {{"db_ref_accel", m.db_ref_accel},
                {"db_ref_mic", m.db_ref_mic},
                {"floor_db", m.floor_db},
                {"half_band_hz", m.half_band_hz},
                {"fundamental_f_hz", m.fundamental_f_hz},
                {"sample_rate_hz", m.sample_rate_hz},
                {"frame_seconds", m.frame_seconds}}},
              {"provenance",
               {{"generator", m.generator},
                {"seed", m.seed},
                {"seed_overridden", m.seed_overridden}}}};
}

inline Manifest manifest_from_json(const json& j, const std::string& path) {
  try {
    Manifest m;
    for (const auto& c : j.at("feature_columns"))
      m.feature_columns.push_back(
          {c.at("name").get<std::string>(),
           channel_kind_from_string(c.at("kind").get<std::string>())});
    m.conditions = j.at("conditions").get<std::vector<std::string>>();
    const auto& e = j.at("extraction");
    m.db_ref_accel = e.at("db_ref_accel").get<double>();
    m.db_ref_mic = e.at("db_ref_mic").get<double>();
    m.floor_db = e.at("floor_db").get<double>();
    m.half_band_hz = e.at("half_band_hz").get<double>();
    m.fundamental_f_hz = e.at("fundamental_f_hz").get<double>();
    m.sample_rate_hz = e.at("sample_rate_hz").get<double>();
    m.frame_seconds = e.at("frame_seconds").get<double>();
    const auto& p = j.at("provenance");
    m.seed = p.at("seed").get<std::uint64_t>();
    m.seed_overridden = p.at("seed_overridden").get<bool>();
    m.generator = p.value("generator", std::string("synthbench"));
    return m;
  } catch (const json::exception& e) {
    throw IoError(path + ": manifest: " + e.what());
  }
}

// CSV columns must match the manifest feature list exactly, and every row's
// condition must be declared.
inline void check_table_against_manifest(const Table& t, const Manifest& m,
                                         const std::string& path) {
  if (t.feature_names.size() != m.feature_columns.size())
    throw ValidationError(path + ": " + std::to_string(t.feature_names.size()) +
                          " feature columns but manifest lists " +
                          std::to_string(m.feature_columns.size()));
  for (std::size_t i = 0; i < t.feature_names.size(); ++i)
    if (t.feature_names[i] != m.feature_columns[i].name)
      throw ValidationError(path + ": column '" + t.feature_names[i] +
                            "' does not match manifest entry '" +
                            m.feature_columns[i].name + "'");
  for (const auto& cid : t.condition_ids)
    if (std::find(m.conditions.begin(), m.conditions.end(), cid) ==
        m.conditions.end())
      throw ValidationError(path + ": condition '" + cid +
                            "' is not in the manifest condition list");
}

// ---------------------------------------------------------------------------
// suite spec JSON
// ---------------------------------------------------------------------------

inline json suite_spec_to_json(const SuiteSpec& s) {
  json conds = json::array();
  for (const auto& c : s.conditions) {
    json jc{{"ambient_range", {c.ambient_range.first, c.ambient_range.second}},
            {"condition_id", c.condition_id},
            {"mechanism_shift", c.mechanism_shift},
            {"n_samples", c.n_samples},
            {"valve_mode", to_string(c.valve_mode)}};
    if (c.valve_mode == ValveMode::auto_regulated)
      jc["opening_range"] = {c.opening_range.first, c.opening_range.second};
    else
      jc["opening"] = c.opening;
    conds.push_back(jc);
  }
  return json{{"schema_version", kSchemaVersion},
              {"conditions", conds},
              {"frame_seconds", s.frame_seconds},
              {"fundamental_f_hz", s.fundamental_f_hz},
              {"label_range_target", {s.label_range_target.first, s.label_range_target.second}},
              {"n_accel_channels", s.n_accel_channels},
              {"n_mics", s.n_mics},
              {"n_thermo_channels", s.n_thermo_channels},
              {"sample_rate_hz", s.sample_rate_hz},
              {"seed", s.seed}};
}

inline SuiteSpec suite_spec_from_json(const json& j, const std::string& path) {
  SuiteSpec s;
  auto fail = [&](const std::string& field, const std::string& what) -> void {
    throw ConfigError(path + ": suite spec field '" + field + "': " + what);
  };
  try {
    if (!j.contains("conditions") || !j["conditions"].is_array())
      fail("conditions", "missing or not an array");
    int i = 0;
    for (const auto& jc : j["conditions"]) {
      ConditionSpec c;
      std::string at = "conditions[" + std::to_string(i) + "]";
      try {
        c.condition_id = jc.at("condition_id").get<std::string>();
        c.valve_mode = valve_mode_from_string(jc.at("valve_mode").get<std::string>());
        if (jc.contains("opening")) c.opening = jc["opening"].get<double>();
        if (jc.contains("opening_range")) {
          auto r = jc["opening_range"].get<std::vector<double>>();
          if (r.size() != 2) fail(at + ".opening_range", "expected [lo, hi]");
          c.opening_range = {r[0], r[1]};
        }
        auto a = jc.at("ambient_range").get<std::vector<double>>();
        if (a.size() != 2) fail(at + ".ambient_range", "expected [lo, hi]");
        c.ambient_range = {a[0], a[1]};
        c.n_samples = jc.at("n_samples").get<int>();
        c.mechanism_shift = jc.value("mechanism_shift", 0.0);
      } catch (const json::exception& e) {
        fail(at, e.what());
      }
      s.conditions.push_back(c);
      ++i;
    }
    s.n_accel_channels = j.value("n_accel_channels", s.n_accel_channels);
    s.n_thermo_channels = j.value("n_thermo_channels", s.n_thermo_channels);
    s.n_mics = j.value("n_mics", s.n_mics);
    if (j.contains("label_range_target")) {
      auto r = j["label_range_target"].get<std::vector<double>>();
      if (r.size() != 2) fail("label_range_target", "expected [lo, hi]");
      s.label_range_target = {r[0], r[1]};
    }
    s.seed = j.value("seed", s.seed);
    s.fundamental_f_hz = j.value("fundamental_f_hz", s.fundamental_f_hz);
    s.sample_rate_hz = j.value("sample_rate_hz", s.sample_rate_hz);
    s.frame_seconds = j.value("frame_seconds", s.frame_seconds);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": suite spec: " + e.what());
  }
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// fitted model JSON
// ---------------------------------------------------------------------------

namespace detail {
inline json matrix_to_json(const Eigen::MatrixXd& m) {
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

inline Eigen::MatrixXd matrix_from_json(const json& j) {
  Eigen::Index r = j.at("rows").get<Eigen::Index>();
  Eigen::Index c = j.at("cols").get<Eigen::Index>();
  const auto& d = j.at("data");
  if (static_cast<Eigen::Index>(d.size()) != r * c)
    throw IoError("matrix: data length " + std::to_string(d.size()) +
                  " != rows*cols " + std::to_string(r * c));
  Eigen::MatrixXd m(r, c);
  std::size_t at = 0;
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index jj = 0; jj < c; ++jj) m(i, jj) = d[at++].get<double>();
  return m;
}

inline json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v(i) = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}
}  // namespace detail

inline json model_to_json(const FittedModel& m) {
  return json{{"schema_version", kSchemaVersion},
              {"config",
               {{"centering", to_string(m.config.centering)},
                {"lambda", m.config.lambda},
                {"n_components", m.config.n_components},
                {"ridge_epsilon", m.config.ridge_epsilon}}},
              {"W", detail::matrix_to_json(m.W)},
              {"Ps", detail::matrix_to_json(m.Ps)},
              {"Pt", detail::matrix_to_json(m.Pt)},
              {"q", detail::vector_to_json(m.q)},
              {"source_feature_means", detail::vector_to_json(m.source_feature_means)},
              {"target_feature_means", detail::vector_to_json(m.target_feature_means)},
              {"label_mean", m.label_mean},
              {"b", detail::vector_to_json(m.b)},
              {"k_effective", m.k_effective},
              {"source_scores", detail::matrix_to_json(m.source_scores)},
              {"gap_diagnostics", m.gap_diagnostics},
              {"warnings", m.warnings}};
}

inline FittedModel model_from_json(const json& j, const std::string& path) {
  try {
    FittedModel m;
    const auto& c = j.at("config");
    m.config.centering = centering_from_string(c.at("centering").get<std::string>());
    m.config.lambda = c.at("lambda").get<double>();
    m.config.n_components = c.at("n_components").get<int>();
    m.config.ridge_epsilon = c.at("ridge_epsilon").get<double>();
    m.W = detail::matrix_from_json(j.at("W"));
    m.Ps = detail::matrix_from_json(j.at("Ps"));
    m.Pt = detail::matrix_from_json(j.at("Pt"));
    m.q = detail::vector_from_json(j.at("q"));
    m.source_feature_means = detail::vector_from_json(j.at("source_feature_means"));
    m.target_feature_means = detail::vector_from_json(j.at("target_feature_means"));
    m.label_mean = j.at("label_mean").get<double>();
    m.b = detail::vector_from_json(j.at("b"));
    m.k_effective = j.at("k_effective").get<int>();
    m.source_scores = detail::matrix_from_json(j.at("source_scores"));
    m.gap_diagnostics = j.at("gap_diagnostics").get<std::vector<double>>();
    m.warnings = j.at("warnings").get<std::vector<std::string>>();
    return m;
  } catch (const json::exception& e) {
    throw IoError(path + ": model: " + e.what());
  }
}

// ---------------------------------------------------------------------------
// evaluation report JSON
// ---------------------------------------------------------------------------

inline json metric_to_json(const MetricRecord& m) {
  json j{{"acc_lt2db", m.acc_lt2db}, {"acc_lt3db", m.acc_lt3db},
         {"mse", m.mse},             {"n", m.n},
         {"r2_defined", m.r2_defined}, {"rmse", m.rmse}};
  if (m.r2_defined)
    j["r2"] = m.r2;
  else
    j["r2"] = nullptr;
  return j;
}

inline MetricRecord metric_from_json(const json& j) {
  MetricRecord m;
  m.acc_lt2db = j.at("acc_lt2db").get<double>();
  m.acc_lt3db = j.at("acc_lt3db").get<double>();
  m.mse = j.at("mse").get<double>();
  m.n = j.at("n").get<int>();
  m.rmse = j.at("rmse").get<double>();
  m.r2_defined = j.at("r2_defined").get<bool>();
  m.r2 = m.r2_defined ? j.at("r2").get<double>()
                      : std::numeric_limits<double>::quiet_NaN();
  return m;
}

inline json report_to_json(const EvaluationReport& r) {
  json folds = json::array();
  for (const auto& f : r.folds) {
    folds.push_back({{"condition_id", f.target_condition_id},
                     {"k_effective", f.k_effective},
                     {"metrics", metric_to_json(f.per_fold_metrics)},
                     {"warnings", f.warnings},
                     {"wasserstein_2lv", f.wasserstein_2lv},
                     {"wasserstein_method", f.wasserstein_method},
                     {"y_pred", detail::vector_to_json(f.y_pred)},
                     {"y_true", detail::vector_to_json(f.y_true)}});
  }
  return json{{"schema_version", kSchemaVersion},
              {"model", to_string(r.model_kind)},
              {"features", to_string(r.feature_kind)},
              {"config",
               {{"centering", to_string(r.config.centering)},
                {"lambda", r.config.lambda},
                {"n_components", r.config.n_components},
                {"ridge_epsilon", r.config.ridge_epsilon}}},
              {"aggregation", "pooled predictions from all folds"},
              {"aggregate", metric_to_json(r.aggregate)},
              {"folds", folds}};
}

inline EvaluationReport report_from_json(const json& j, const std::string& path) {
  try {
    EvaluationReport r;
    r.model_kind = model_kind_from_string(j.at("model").get<std::string>());
    r.feature_kind = feature_kind_from_string(j.at("features").get<std::string>());
    const auto& c = j.at("config");
    r.config.centering = centering_from_string(c.at("centering").get<std::string>());
    r.config.lambda = c.at("lambda").get<double>();
    r.config.n_components = c.at("n_components").get<int>();
    r.config.ridge_epsilon = c.at("ridge_epsilon").get<double>();
    r.aggregate = metric_from_json(j.at("aggregate"));
    for (const auto& jf : j.at("folds")) {
      FoldResult f;
      f.target_condition_id = jf.at("condition_id").get<std::string>();
      f.k_effective = jf.at("k_effective").get<int>();
      f.per_fold_metrics = metric_from_json(jf.at("metrics"));
      f.warnings = jf.at("warnings").get<std::vector<std::string>>();
      f.wasserstein_2lv = jf.at("wasserstein_2lv").get<double>();
      f.wasserstein_method = jf.at("wasserstein_method").get<std::string>();
      f.y_pred = detail::vector_from_json(jf.at("y_pred"));
      f.y_true = detail::vector_from_json(jf.at("y_true"));
      r.folds.push_back(std::move(f));
    }
    return r;
  } catch (const json::exception& e) {
    throw IoError(path + ": report: " + e.what());
  }
}

// Per-fold latent projections for external plotting.
inline std::string latent_to_csv(const FoldResult& f) {
  std::ostringstream out;
  out << "domain,condition_id,lv1,lv2\n";
  for (Eigen::Index i = 0; i < f.latent_source.rows(); ++i) {
    const std::string& cid =
        i < static_cast<Eigen::Index>(f.source_row_conditions.size())
            ? f.source_row_conditions[static_cast<std::size_t>(i)]
            : std::string("source");
    out << "source," << cid << ',' << format_num(f.latent_source(i, 0)) << ','
        << format_num(f.latent_source(i, 1)) << '\n';
  }
  for (Eigen::Index i = 0; i < f.latent_target.rows(); ++i)
    out << "target," << f.target_condition_id << ','
        << format_num(f.latent_target(i, 0)) << ','
        << format_num(f.latent_target(i, 1)) << '\n';
  return out.str();
}

inline void write_latent_csv(const std::string& path, const FoldResult& f) {
  write_text_file(path, latent_to_csv(f));
}

// ---------------------------------------------------------------------------
// waveform container: one JSON header line, '\n', then per-channel f64 LE
// samples in header order
// ---------------------------------------------------------------------------

inline void write_waveforms(const std::string& path, const SpectralFrame& frame) {
  json chans = json::array();
  for (const auto& c : frame.channels)
    chans.push_back({{"id", c.id},
                     {"kind", to_string(c.kind)},
                     {"n", c.samples.size()},
                     {"unit", c.unit}});
  json header{{"schema_version", kSchemaVersion},
              {"condition_id", frame.condition_id},
              {"sample_id", frame.sample_id},
              {"sample_rate_hz", frame.sample_rate},
              {"duration_seconds", frame.duration},
              {"fundamental_f_hz", frame.fundamental_f},
              {"channels", chans}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << header.dump() << '\n';
  for (const auto& c : frame.channels)
    out.write(reinterpret_cast<const char*>(c.samples.data()),
              static_cast<std::streamsize>(c.samples.size() * sizeof(double)));
  if (!out) throw IoError(path + ": write failed");
}

inline SpectralFrame read_waveforms(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open for reading");
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": missing header line");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw IoError(path + ": corrupt header: " + e.what());
  }
  SpectralFrame frame;
  try {
    frame.condition_id = header.at("condition_id").get<std::string>();
    frame.sample_id = header.at("sample_id").get<std::string>();
    frame.sample_rate = header.at("sample_rate_hz").get<double>();
    frame.duration = header.at("duration_seconds").get<double>();
    frame.fundamental_f = header.at("fundamental_f_hz").get<double>();
    for (const auto& jc : header.at("channels")) {
      Channel c;
      c.id = jc.at("id").get<std::string>();
      c.kind = channel_kind_from_string(jc.at("kind").get<std::string>());
      c.unit = jc.at("unit").get<std::string>();
      c.samples.resize(jc.at("n").get<std::size_t>());
      frame.channels.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw IoError(path + ": corrupt header: " + e.what());
  }
  for (auto& c : frame.channels) {
    in.read(reinterpret_cast<char*>(c.samples.data()),
            static_cast<std::streamsize>(c.samples.size() * sizeof(double)));
    if (in.gcount() !=
        static_cast<std::streamsize>(c.samples.size() * sizeof(double)))
      throw IoError(path + ": truncated sample data for channel '" + c.id + "'");
  }
  return frame;
}

}  // namespace dipls::io
