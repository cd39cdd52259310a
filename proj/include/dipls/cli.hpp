#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fnmatch.h>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dipls/errors.hpp"
#include "dipls/evaluation.hpp"
#include "dipls/io.hpp"
#include "dipls/spectral.hpp"
#include "dipls/synthbench.hpp"

namespace dipls::cli {

namespace fs = std::filesystem;
using io::json;

namespace detail {

inline std::string channel_name(const char* prefix, int j) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%s%02d", prefix, j);
  return buf;
}

inline std::string report_stem(const std::string& path) {
  return path.size() > 5 && path.substr(path.size() - 5) == ".json"
             ? path.substr(0, path.size() - 5)
             : path;
}

// --data accepts a directory (all *.csv inside), a glob, or one file.
inline std::vector<std::string> resolve_dataset_files(const std::string& data) {
  std::vector<std::string> files;
  std::error_code ec;
  if (fs::is_directory(data, ec)) {
    for (const auto& e : fs::directory_iterator(data))
      if (e.is_regular_file() && e.path().extension() == ".csv")
        files.push_back(e.path().string());
  } else if (data.find('*') != std::string::npos ||
             data.find('?') != std::string::npos) {
    fs::path pat(data);
    fs::path dir = pat.parent_path().empty() ? fs::path(".") : pat.parent_path();
    if (!fs::is_directory(dir, ec))
      throw IoError(data + ": directory '" + dir.string() + "' does not exist");
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file() &&
          fnmatch(pat.filename().string().c_str(),
                  e.path().filename().string().c_str(), 0) == 0)
        files.push_back(e.path().string());
  } else {
    if (!fs::is_regular_file(data, ec)) throw IoError(data + ": no such file");
    files.push_back(data);
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ValidationError(data + ": no dataset CSV files found");
  return files;
}

inline io::Manifest load_manifest_for(const std::string& manifest_path,
                                      const std::string& first_data_file) {
  std::string path = manifest_path;
  if (path.empty()) {
    path = (fs::path(first_data_file).parent_path() / "manifest.json").string();
    if (!fs::exists(path))
      throw ValidationError("no --manifest given and '" + path + "' not found");
  }
  return io::manifest_from_json(io::parse_json_file(path), path);
}

inline std::vector<Eigen::Index> feature_indices(const io::Manifest& m,
                                                 FeatureKind kind) {
  ChannelKind want = kind == FeatureKind::acceleration ? ChannelKind::acceleration
                                                       : ChannelKind::temperature;
  std::vector<Eigen::Index> idx;
  for (std::size_t i = 0; i < m.feature_columns.size(); ++i)
    if (m.feature_columns[i].kind == want)
      idx.push_back(static_cast<Eigen::Index>(i));
  if (idx.empty())
    throw ValidationError(std::string("manifest lists no ") + to_string(kind) +
                          " feature columns");
  return idx;
}

inline json fold_summary_json(const FoldResult& f) {
  return json{{"condition_id", f.target_condition_id},
              {"mse", f.per_fold_metrics.mse},
              {"rmse", f.per_fold_metrics.rmse},
              {"wasserstein_2lv", f.wasserstein_2lv}};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::string spec_path;   // empty -> built-in default suite
  std::string out_dir;
  std::string emit_spec;   // optionally write the spec actually used
  std::optional<std::uint64_t> seed_override;
  bool waveforms = false;
  int waveform_limit = 4;  // containers per condition
};

inline int cmd_generate(const GenerateArgs& a) {
  SuiteSpec spec = a.spec_path.empty()
                       ? default_suite_spec()
                       : io::suite_spec_from_json(io::parse_json_file(a.spec_path),
                                                  a.spec_path);
  bool overridden = a.seed_override.has_value();
  if (overridden) spec.seed = *a.seed_override;
  spec.validate();

  auto tables = generate_suite(spec);
  fs::create_directories(a.out_dir);

  io::Manifest man;
  for (int j = 0; j < spec.n_accel_channels; ++j)
    man.feature_columns.push_back(
        {detail::channel_name("a", j), ChannelKind::acceleration});
  for (int j = 0; j < spec.n_thermo_channels; ++j)
    man.feature_columns.push_back(
        {detail::channel_name("t", j), ChannelKind::temperature});
  for (const auto& c : spec.conditions) man.conditions.push_back(c.condition_id);
  man.fundamental_f_hz = spec.fundamental_f_hz;
  man.sample_rate_hz = spec.sample_rate_hz;
  man.frame_seconds = spec.frame_seconds;
  man.seed = spec.seed;
  man.seed_overridden = overridden;
  io::write_json_file((fs::path(a.out_dir) / "manifest.json").string(),
                      io::manifest_to_json(man));

  int total = 0;
  for (std::size_t c = 0; c < tables.size(); ++c) {
    const auto& acc = tables[c].acceleration;
    const auto& th = tables[c].thermodynamic;
    io::Table t;
    for (const auto& fc : man.feature_columns) t.feature_names.push_back(fc.name);
    t.sample_ids = acc.sample_ids;
    t.condition_ids.assign(acc.sample_ids.size(), acc.condition_id);
    t.labels.assign(acc.labels->data(), acc.labels->data() + acc.labels->size());
    t.features.resize(acc.features.rows(), acc.features.cols() + th.features.cols());
    t.features << acc.features, th.features;
    io::write_table_csv(
        (fs::path(a.out_dir) / (acc.condition_id + ".csv")).string(), t);
    total += static_cast<int>(acc.features.rows());
  }

  if (a.waveforms) {
    fs::path wdir = fs::path(a.out_dir) / "waveforms";
    fs::create_directories(wdir);
    for (const auto& cond : spec.conditions) {
      int n = std::min(a.waveform_limit, cond.n_samples);
      for (int i = 0; i < n; ++i) {
        SpectralFrame frame = render_waveforms(cond, spec, i);
        char suffix[16];
        std::snprintf(suffix, sizeof suffix, "_%04d.wfc", i);
        io::write_waveforms((wdir / (cond.condition_id + suffix)).string(), frame);
      }
    }
  }

  std::printf("wrote %zu conditions (%d samples) to %s\n", tables.size(), total,
              a.out_dir.c_str());
  if (!a.emit_spec.empty())
    io::write_json_file(a.emit_spec, io::suite_spec_to_json(spec));
  return 0;
}

// ---------------------------------------------------------------------------
// extract
// ---------------------------------------------------------------------------

struct ExtractArgs {
  std::string waveform_dir;
  std::string manifest_path;
  std::string out_csv;
  std::optional<double> half_band;     // default: manifest value
  std::optional<double> db_ref_accel;  // default: manifest value
  std::optional<double> db_ref_mic;
};

inline int cmd_extract(const ExtractArgs& a) {
  io::Manifest man =
      io::manifest_from_json(io::parse_json_file(a.manifest_path), a.manifest_path);
  double half_band = a.half_band.value_or(man.half_band_hz);
  DbRefs refs;
  refs.acceleration = a.db_ref_accel.value_or(man.db_ref_accel);
  refs.microphone = a.db_ref_mic.value_or(man.db_ref_mic);
  refs.floor_db = man.floor_db;

  std::error_code ec;
  if (!fs::is_directory(a.waveform_dir, ec))
    throw IoError(a.waveform_dir + ": not a directory");
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(a.waveform_dir))
    if (e.is_regular_file() && e.path().extension() == ".wfc")
      files.push_back(e.path().string());
  std::sort(files.begin(), files.end());

  io::Table t;
  for (const auto& fc : man.feature_columns) t.feature_names.push_back(fc.name);
  t.features.resize(static_cast<Eigen::Index>(files.size()),
                    static_cast<Eigen::Index>(man.feature_columns.size()));
  double sample_rate = 0.0;
  BandRmsOptions opts;
  opts.average_window_seconds = 1.0;
  Eigen::Index row_at = 0;
  for (const auto& file : files) {
    SpectralFrame frame = io::read_waveforms(file);
    if (sample_rate == 0.0)
      sample_rate = frame.sample_rate;
    else if (frame.sample_rate != sample_rate)
      throw ValidationError(file + ": sample rate " +
                            std::to_string(frame.sample_rate) +
                            " differs from earlier files (" +
                            std::to_string(sample_rate) + ")");
    if (std::find(man.conditions.begin(), man.conditions.end(),
                  frame.condition_id) == man.conditions.end())
      throw ValidationError(file + ": condition '" + frame.condition_id +
                            "' is not in the manifest condition list");
    FeatureRow row = extract_features(frame, half_band, refs, opts);
    std::map<std::string, double> by_name;
    for (std::size_t j = 0; j < row.feature_names.size(); ++j)
      by_name[row.feature_names[j]] = row.features[j];
    for (std::size_t j = 0; j < man.feature_columns.size(); ++j) {
      auto it = by_name.find(man.feature_columns[j].name);
      if (it == by_name.end())
        throw ValidationError(file + ": channel '" + man.feature_columns[j].name +
                              "' required by the manifest is missing");
      t.features(row_at, static_cast<Eigen::Index>(j)) = it->second;
      by_name.erase(it);
    }
    if (!by_name.empty())
      throw ValidationError(file + ": channel '" + by_name.begin()->first +
                            "' is not listed in the manifest");
    t.sample_ids.push_back(frame.sample_id);
    t.condition_ids.push_back(frame.condition_id);
    t.labels.push_back(row.label_db ? *row.label_db
                                    : std::numeric_limits<double>::quiet_NaN());
    ++row_at;
  }
  io::write_table_csv(a.out_csv, t);
  std::printf("extracted %zu frames -> %s\n", files.size(), a.out_csv.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string data;  // directory, glob, or single CSV
  std::string manifest_path;
  std::string out = "report.json";
  std::string model = "dipls";
  std::string features = "acceleration";
  std::string lambda_sweep;  // "lo:hi:count", geometric
  double lambda = kDefaultLambda;
  int components = kDefaultComponents;
  int jobs = 1;
};

namespace detail {

inline std::vector<DomainDataset> load_datasets(const EvaluateArgs& a,
                                                io::Manifest* man_out) {
  auto files = resolve_dataset_files(a.data);
  io::Manifest man = load_manifest_for(a.manifest_path, files.front());

  io::Table merged;
  for (const auto& fc : man.feature_columns)
    merged.feature_names.push_back(fc.name);
  std::vector<Eigen::MatrixXd> blocks;
  Eigen::Index total = 0;
  for (const auto& f : files) {
    io::Table t = io::read_table_csv(f);
    io::check_table_against_manifest(t, man, f);
    merged.sample_ids.insert(merged.sample_ids.end(), t.sample_ids.begin(),
                             t.sample_ids.end());
    merged.condition_ids.insert(merged.condition_ids.end(),
                                t.condition_ids.begin(), t.condition_ids.end());
    merged.labels.insert(merged.labels.end(), t.labels.begin(), t.labels.end());
    total += t.features.rows();
    blocks.push_back(std::move(t.features));
  }
  merged.features.resize(total, static_cast<Eigen::Index>(man.feature_columns.size()));
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    merged.features.middleRows(at, b.rows()) = b;
    at += b.rows();
  }

  auto datasets = io::split_by_condition(merged);
  auto idx = feature_indices(man, feature_kind_from_string(a.features));
  for (auto& d : datasets) {
    Eigen::MatrixXd sel(d.features.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) sel.col(static_cast<Eigen::Index>(j)) = d.features.col(idx[j]);
    d.features = std::move(sel);
  }
  if (man_out) *man_out = man;
  return datasets;
}

inline std::vector<double> parse_sweep(const std::string& s) {
  double lo = 0, hi = 0;
  int count = 0;
  if (std::sscanf(s.c_str(), "%lf:%lf:%d", &lo, &hi, &count) != 3 || lo <= 0.0 ||
      hi < lo || count < 2)
    throw ConfigError("--lambda-sweep expects lo:hi:count with 0 < lo <= hi, count >= 2");
  std::vector<double> out;
  double ratio = std::pow(hi / lo, 1.0 / (count - 1));
  double v = lo;
  for (int i = 0; i < count; ++i, v *= ratio) out.push_back(v);
  out.back() = hi;
  return out;
}

}  // namespace detail

inline int cmd_evaluate(const EvaluateArgs& a) {
  std::vector<DomainDataset> datasets = detail::load_datasets(a, nullptr);
  ModelKind kind = model_kind_from_string(a.model);
  FeatureKind fk = feature_kind_from_string(a.features);
  FitConfig cfg;
  cfg.n_components = a.components;
  cfg.lambda = a.lambda;

  EvaluationReport rep = evaluate_loco(datasets, kind, cfg, fk, a.jobs);
  io::write_json_file(a.out, io::report_to_json(rep));
  std::string stem = detail::report_stem(a.out);
  for (const auto& f : rep.folds)
    io::write_latent_csv(stem + ".latent." + f.target_condition_id + ".csv", f);

  std::printf("%s / %s: aggregate mse %.4f rmse %.4f r2 %s acc<2dB %.3f acc<3dB %.3f (n=%d)\n",
              to_string(rep.model_kind), to_string(rep.feature_kind),
              rep.aggregate.mse, rep.aggregate.rmse,
              rep.aggregate.r2_defined ? io::format_num(rep.aggregate.r2).c_str()
                                       : "undefined",
              rep.aggregate.acc_lt2db, rep.aggregate.acc_lt3db, rep.aggregate.n);
  for (const auto& f : rep.folds) {
    std::printf("  %-16s mse %8.4f  w2lv %8.4f (%s)  k_eff %d\n",
                f.target_condition_id.c_str(), f.per_fold_metrics.mse,
                f.wasserstein_2lv, f.wasserstein_method.c_str(), f.k_effective);
    for (const auto& w : f.warnings)
      std::printf("  %-16s note: %s\n", "", w.c_str());
  }

  if (!a.lambda_sweep.empty()) {
    if (kind != ModelKind::dipls)
      throw ConfigError("--lambda-sweep requires --model dipls");
    json sweep = json::array();
    for (double lam : detail::parse_sweep(a.lambda_sweep)) {
      FitConfig c2 = cfg;
      c2.lambda = lam;
      EvaluationReport r2 = evaluate_loco(datasets, kind, c2, fk, a.jobs);
      json folds = json::array();
      for (const auto& f : r2.folds) folds.push_back(detail::fold_summary_json(f));
      sweep.push_back({{"lambda", lam},
                       {"aggregate", io::metric_to_json(r2.aggregate)},
                       {"folds", folds}});
    }
    io::write_json_file(stem + ".sweep.json",
                        json{{"schema_version", io::kSchemaVersion}, {"sweep", sweep}});
  }
  return 0;
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

struct CompareArgs {
  std::string report_a;
  std::string report_b;
  std::string out;  // optional JSON
};

namespace detail {

inline json metric_delta(const MetricRecord& a, const MetricRecord& b) {
  json d{{"acc_lt2db", b.acc_lt2db - a.acc_lt2db},
         {"acc_lt3db", b.acc_lt3db - a.acc_lt3db},
         {"mse", b.mse - a.mse},
         {"rmse", b.rmse - a.rmse}};
  if (a.r2_defined && b.r2_defined)
    d["r2"] = b.r2 - a.r2;
  else
    d["r2"] = nullptr;
  return d;
}

inline json scatter_json(const EvaluationReport& r) {
  json out = json::array();
  for (const auto& f : r.folds)
    out.push_back({{"condition_id", f.target_condition_id},
                   {"y_pred", io::detail::vector_to_json(f.y_pred)},
                   {"y_true", io::detail::vector_to_json(f.y_true)}});
  return out;
}

}  // namespace detail

inline int cmd_compare(const CompareArgs& a) {
  EvaluationReport ra = io::report_from_json(io::parse_json_file(a.report_a), a.report_a);
  EvaluationReport rb = io::report_from_json(io::parse_json_file(a.report_b), a.report_b);

  auto ids_of = [](const EvaluationReport& r, const std::string& path) {
    std::vector<std::string> v;
    std::set<std::string> seen;
    for (const auto& f : r.folds) {
      if (!seen.insert(f.target_condition_id).second)
        throw ValidationError(path + ": duplicate condition '" +
                              f.target_condition_id + "'");
      v.push_back(f.target_condition_id);
    }
    return v;
  };
  auto ids_a = ids_of(ra, a.report_a);
  auto ids_b = ids_of(rb, a.report_b);
  std::set<std::string> sa(ids_a.begin(), ids_a.end()), sb(ids_b.begin(), ids_b.end());
  if (sa != sb) {
    auto join = [](const std::vector<std::string>& v) {
      std::string s;
      for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
      return s;
    };
    throw SemanticError("condition sets differ: '" + a.report_a + "' has [" +
                        join(ids_a) + "]; '" + a.report_b + "' has [" +
                        join(ids_b) + "]");
  }
  std::map<std::string, const FoldResult*> fb;
  for (const auto& f : rb.folds) fb[f.target_condition_id] = &f;

  json per_condition = json::array();
  std::printf("%-16s %10s %10s %10s   %9s %9s %9s\n", "condition", "mse_a", "mse_b",
              "delta", "w2lv_a", "w2lv_b", "delta");
  for (const auto& f : ra.folds) {
    const FoldResult& g = *fb[f.target_condition_id];
    per_condition.push_back(
        {{"condition_id", f.target_condition_id},
         {"a", io::metric_to_json(f.per_fold_metrics)},
         {"b", io::metric_to_json(g.per_fold_metrics)},
         {"delta", detail::metric_delta(f.per_fold_metrics, g.per_fold_metrics)},
         {"wasserstein_2lv_a", f.wasserstein_2lv},
         {"wasserstein_2lv_b", g.wasserstein_2lv},
         {"wasserstein_2lv_delta", g.wasserstein_2lv - f.wasserstein_2lv}});
    std::printf("%-16s %10.4f %10.4f %+10.4f   %9.4f %9.4f %+9.4f\n",
                f.target_condition_id.c_str(), f.per_fold_metrics.mse,
                g.per_fold_metrics.mse,
                g.per_fold_metrics.mse - f.per_fold_metrics.mse, f.wasserstein_2lv,
                g.wasserstein_2lv, g.wasserstein_2lv - f.wasserstein_2lv);
  }
  std::printf("%-16s %10.4f %10.4f %+10.4f\n", "aggregate", ra.aggregate.mse,
              rb.aggregate.mse, rb.aggregate.mse - ra.aggregate.mse);

  json doc{{"schema_version", io::kSchemaVersion},
           {"model_a", to_string(ra.model_kind)},
           {"model_b", to_string(rb.model_kind)},
           {"features_a", to_string(ra.feature_kind)},
           {"features_b", to_string(rb.feature_kind)},
           {"aggregate",
            {{"a", io::metric_to_json(ra.aggregate)},
             {"b", io::metric_to_json(rb.aggregate)},
             {"delta", detail::metric_delta(ra.aggregate, rb.aggregate)}}},
           {"per_condition", per_condition},
           {"scatter",
            {{"a", detail::scatter_json(ra)}, {"b", detail::scatter_json(rb)}}}};
  if (!a.out.empty()) io::write_json_file(a.out, doc);
  return 0;
}

// ---------------------------------------------------------------------------
// entry point (argv without the program name, natural order)
// ---------------------------------------------------------------------------

inline int run_cli(std::vector<std::string> args) {
  CLI::App app{"transfer-learning toolkit for unit tonal-noise estimation"};
  app.require_subcommand(1);

  GenerateArgs ga;
  std::uint64_t seed_val = 0;
  auto* g = app.add_subcommand("generate", "synthesize a multi-condition benchmark suite");
  g->add_option("--spec", ga.spec_path, "suite spec JSON (omit for the built-in default)");
  g->add_option("--out", ga.out_dir, "output directory")->required();
  auto* seed_opt = g->add_option("--seed", seed_val, "override the spec seed");
  g->add_flag("--waveforms", ga.waveforms, "also write waveform containers");
  g->add_option("--waveform-limit", ga.waveform_limit,
                "containers per condition (default 4)");
  g->add_option("--emit-spec", ga.emit_spec, "write the spec actually used here");

  ExtractArgs ea;
  double ea_hb = 0, ea_ra = 0, ea_rm = 0;
  auto* e = app.add_subcommand("extract", "extract band features from waveform containers");
  e->add_option("--dir", ea.waveform_dir, "directory of .wfc files")->required();
  e->add_option("--manifest", ea.manifest_path, "channel manifest JSON")->required();
  e->add_option("--out", ea.out_csv, "output dataset CSV")->required();
  auto* hb_opt = e->add_option("--half-band", ea_hb, "band half-width in Hz");
  auto* ra_opt = e->add_option("--db-ref-accel", ea_ra, "acceleration dB reference");
  auto* rm_opt = e->add_option("--db-ref-mic", ea_rm, "microphone dB reference");

  EvaluateArgs va;
  auto* v = app.add_subcommand("evaluate", "leave-one-condition-out evaluation");
  v->add_option("--data", va.data, "dataset directory, glob, or CSV")->required();
  v->add_option("--manifest", va.manifest_path,
                "channel manifest (default: manifest.json beside the data)");
  v->add_option("--model", va.model, "pls | dipls (default dipls)")
      ->check(CLI::IsMember({"pls", "dipls"}));
  v->add_option("--lambda", va.lambda, "domain regularization weight");
  v->add_option("--components", va.components, "latent components (default 14)");
  v->add_option("--features", va.features, "acceleration | thermodynamic")
      ->check(CLI::IsMember({"acceleration", "thermodynamic"}));
  v->add_option("--out", va.out, "report path (default report.json)");
  v->add_option("--jobs", va.jobs, "parallel folds")->envname("DIPLS_JOBS");
  v->add_option("--lambda-sweep", va.lambda_sweep, "lo:hi:count geometric sweep");

  CompareArgs ca;
  auto* c = app.add_subcommand("compare", "join two reports on condition_id");
  c->add_option("report_a", ca.report_a, "first report JSON")->required();
  c->add_option("report_b", ca.report_b, "second report JSON")->required();
  c->add_option("--out", ca.out, "write the comparison JSON here");

  try {
    std::reverse(args.begin(), args.end());  // CLI11's vector overload wants this
    app.parse(std::move(args));
  } catch (const CLI::ParseError& pe) {
    int rc = app.exit(pe);
    return rc == 0 ? 0 : 2;  // flag/usage problems are input validation
  }

  try {
    if (g->parsed()) {
      if (seed_opt->count() > 0) ga.seed_override = seed_val;
      return cmd_generate(ga);
    }
    if (e->parsed()) {
      if (hb_opt->count() > 0) ea.half_band = ea_hb;
      if (ra_opt->count() > 0) ea.db_ref_accel = ea_ra;
      if (rm_opt->count() > 0) ea.db_ref_mic = ea_rm;
      return cmd_extract(ea);
    }
    if (v->parsed()) return cmd_evaluate(va);
    if (c->parsed()) return cmd_compare(ca);
    std::fprintf(stderr, "error: no subcommand\n");
    return 2;
  } catch (const SemanticError& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 3;
  } catch (const NumericalError& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 4;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 2;
  }
}

}  // namespace dipls::cli
