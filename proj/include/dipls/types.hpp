#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "dipls/errors.hpp"

namespace dipls {

enum class Centering { per_domain, source_only };
enum class Domain { source, target };
enum class ModelKind { pls, dipls };
enum class FeatureKind { acceleration, thermodynamic };

inline const char* to_string(ModelKind k) {
  return k == ModelKind::pls ? "pls" : "dipls";
}
inline const char* to_string(FeatureKind k) {
  return k == FeatureKind::acceleration ? "acceleration" : "thermodynamic";
}
inline const char* to_string(Centering c) {
  return c == Centering::per_domain ? "per_domain" : "source_only";
}

inline ModelKind model_kind_from_string(const std::string& s) {
  if (s == "pls") return ModelKind::pls;
  if (s == "dipls") return ModelKind::dipls;
  throw ConfigError("unknown model kind '" + s + "' (expected pls or dipls)");
}
inline FeatureKind feature_kind_from_string(const std::string& s) {
  if (s == "acceleration") return FeatureKind::acceleration;
  if (s == "thermodynamic") return FeatureKind::thermodynamic;
  throw ConfigError("unknown feature kind '" + s +
                    "' (expected acceleration or thermodynamic)");
}
inline Centering centering_from_string(const std::string& s) {
  if (s == "per_domain") return Centering::per_domain;
  if (s == "source_only") return Centering::source_only;
  throw ConfigError("unknown centering '" + s +
                    "' (expected per_domain or source_only)");
}

// One operating condition's worth of samples: features (dB-valued for
// acceleration, deg C for thermodynamic columns), optional labels (dB SPL).
struct DomainDataset {
  Eigen::MatrixXd features;               // n_samples x n_features
  std::optional<Eigen::VectorXd> labels;  // length n_samples when present
  std::string condition_id;
  std::vector<std::string> sample_ids;    // may be empty for ad-hoc matrices

  Eigen::Index n_samples() const { return features.rows(); }
  Eigen::Index n_features() const { return features.cols(); }

  void validate() const {
    if (features.rows() < 2)
      throw ValidationError("dataset '" + condition_id + "': need at least 2 samples");
    if (features.cols() < 1)
      throw ValidationError("dataset '" + condition_id + "': need at least 1 feature");
    if (!features.allFinite())
      throw ValidationError("dataset '" + condition_id + "': non-finite feature value");
    if (labels) {
      if (labels->size() != features.rows())
        throw ValidationError("dataset '" + condition_id + "': label length " +
                              std::to_string(labels->size()) + " != n_samples " +
                              std::to_string(features.rows()));
      if (!labels->allFinite())
        throw ValidationError("dataset '" + condition_id + "': non-finite label");
    }
    if (!sample_ids.empty() &&
        static_cast<Eigen::Index>(sample_ids.size()) != features.rows())
      throw ValidationError("dataset '" + condition_id + "': sample_id count mismatch");
  }
};

struct FitConfig {
  int n_components = 14;
  double lambda = 0.0;          // domain regularization weight, >= 0
  double ridge_epsilon = 1e-10; // x mean |diagonal| of the bracketed matrix
  Centering centering = Centering::per_domain;

  void validate(Eigen::Index n_samples_source, Eigen::Index n_features) const {
    if (n_components < 1) throw ConfigError("n_components must be positive");
    Eigen::Index cap = std::min(n_samples_source - 1, n_features);
    if (n_components > cap)
      throw ConfigError("n_components " + std::to_string(n_components) +
                        " exceeds min(n_samples_source - 1, n_features) = " +
                        std::to_string(cap));
    if (lambda < 0.0) throw ConfigError("lambda must be non-negative");
    if (ridge_epsilon < 0.0) throw ConfigError("ridge_epsilon must be non-negative");
  }
};

struct FittedModel {
  Eigen::MatrixXd W;   // n_features x k_effective, unit-norm columns
  Eigen::MatrixXd Ps;  // source loadings
  Eigen::MatrixXd Pt;  // target loadings (replaying target-side deflation
                       // in project() needs them)
  Eigen::VectorXd q;   // y-loadings
  Eigen::VectorXd source_feature_means;
  Eigen::VectorXd target_feature_means;
  double label_mean = 0.0;
  Eigen::VectorXd b;   // assembled coefficients W (Ps' W)^-1 q
  FitConfig config;
  int k_effective = 0;

  Eigen::MatrixXd source_scores;        // t_s columns as extracted during fit
  std::vector<double> gap_diagnostics;  // w'(Cs - Ct)w per component, on the
                                        // deflated matrices it was solved on
  std::vector<std::string> warnings;
};

}  // namespace dipls
