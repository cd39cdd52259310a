#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "dipls/errors.hpp"
#include "dipls/types.hpp"

namespace dipls {

struct CenteredDomains {
  Eigen::MatrixXd Xs, Xt;
  Eigen::VectorXd y;
  Eigen::VectorXd source_means, target_means;
  double label_mean = 0.0;
};

// Column-center both domains (each by its own means under per_domain,
// both by the source means under source_only); labels by the source label
// mean.  `for_normalization` additionally rejects constant columns, which a
// downstream variance scaling could not survive.
inline CenteredDomains center_domains(const DomainDataset& source,
                                      const DomainDataset& target,
                                      Centering policy,
                                      bool for_normalization = false) {
  source.validate();
  target.validate();
  if (!source.labels) throw ValidationError("source dataset has no labels");
  if (source.features.cols() != target.features.cols())
    throw DimensionError("source has " + std::to_string(source.features.cols()) +
                         " features, target has " +
                         std::to_string(target.features.cols()));

  CenteredDomains out;
  out.source_means = source.features.colwise().mean();
  out.target_means = policy == Centering::per_domain
                         ? Eigen::VectorXd(target.features.colwise().mean())
                         : out.source_means;
  out.label_mean = source.labels->mean();
  out.Xs = source.features.rowwise() - out.source_means.transpose();
  out.Xt = target.features.rowwise() - out.target_means.transpose();
  out.y = source.labels->array() - out.label_mean;

  if (for_normalization) {
    auto reject_constant = [](const Eigen::MatrixXd& X, const std::string& name) {
      for (Eigen::Index j = 0; j < X.cols(); ++j)
        if (X.col(j).norm() < 1e-12 * std::max(1.0, X.norm()))
          throw ValidationError(name + " column " + std::to_string(j) +
                                " is constant; cannot normalize");
    };
    reject_constant(out.Xs, "source");
    reject_constant(out.Xt, "target");
  }
  return out;
}

struct WeightResult {
  Eigen::VectorXd w;  // unit norm
  double raw_norm;    // Euclidean norm of the un-normalized solution
  bool normalized = true;
  bool ridged = false;  // true when the stabilizing ridge had to kick in
};

// w' = y'X / (y'y), returned unit-normalized (raw norm kept alongside).
inline WeightResult pls_weight(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() != y.size())
    throw DimensionError("pls_weight: X has " + std::to_string(X.rows()) +
                         " rows but y has " + std::to_string(y.size()));
  double yty = y.squaredNorm();
  if (yty < 1e-300) throw DegenerateLabelError("pls_weight: y'y is zero");
  Eigen::VectorXd v = X.transpose() * y / yty;
  WeightResult r;
  r.raw_norm = v.norm();
  double scale = X.norm() / std::sqrt(yty);  // natural magnitude of v
  if (r.raw_norm <= 1e-13 * std::max(scale, 1e-300))
    throw DegenerateDirectionError("pls_weight: weight direction is zero "
                                   "(all columns orthogonal to y)");
  r.w = v / r.raw_norm;
  return r;
}

namespace detail {

inline Eigen::MatrixXd covariance(const Eigen::MatrixXd& X) {
  return X.transpose() * X / static_cast<double>(X.rows() - 1);
}

inline double condition_estimate(const Eigen::MatrixXd& M) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  double smin = svd.singularValues().minCoeff();
  double smax = svd.singularValues().maxCoeff();
  return smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
}

}  // namespace detail

// Closed-form domain-regularized weight:
//   w' = (y'X / y'y) [I + lambda/(2 y'y) (Cs - Ct)]^-1
// computed as a linear solve, never an explicit inverse.  If the system is
// numerically singular, ridge_epsilon x mean|diag| x I is added once; if it
// is still unsolvable a ConditioningError carries the condition estimate.
inline WeightResult dipls_weight(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 const Eigen::MatrixXd& Xs, const Eigen::MatrixXd& Xt,
                                 double lambda, double ridge_epsilon = 1e-10) {
  if (lambda < 0.0) throw ConfigError("dipls_weight: lambda must be non-negative");
  if (X.cols() != Xs.cols() || X.cols() != Xt.cols())
    throw DimensionError("dipls_weight: feature-count mismatch between X, Xs, Xt");
  if (X.rows() != y.size())
    throw DimensionError("dipls_weight: X rows != y length");
  if (Xs.rows() < 2 || Xt.rows() < 2)
    throw ValidationError("dipls_weight: both domains need at least 2 samples");

  double yty = y.squaredNorm();
  if (yty < 1e-300) throw DegenerateLabelError("dipls_weight: y'y is zero");
  Eigen::VectorXd v = X.transpose() * y / yty;

  Eigen::Index p = X.cols();
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(p, p) +
                      (lambda / (2.0 * yty)) *
                          (detail::covariance(Xs) - detail::covariance(Xt));

  // w' = v' M^-1  <=>  M' w = v
  auto try_solve = [&](const Eigen::MatrixXd& A, Eigen::VectorXd& w) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A.transpose());
    w = lu.solve(v);
    if (!w.allFinite()) return false;
    double resid = (A.transpose() * w - v).norm();
    return resid <= 1e-8 * (v.norm() + A.norm() * w.norm());
  };

  WeightResult r;
  Eigen::VectorXd w;
  if (!try_solve(M, w)) {
    double ridge = ridge_epsilon * M.diagonal().cwiseAbs().mean();
    Eigen::MatrixXd M2 = M + ridge * Eigen::MatrixXd::Identity(p, p);
    if (!try_solve(M2, w))
      throw ConditioningError("dipls_weight: singular system after ridge",
                              detail::condition_estimate(M));
    r.ridged = true;
  }

  r.raw_norm = w.norm();
  double scale = X.norm() / std::sqrt(yty);
  if (r.raw_norm <= 1e-13 * std::max(scale, 1e-300))
    throw DegenerateDirectionError("dipls_weight: weight direction is zero");
  r.w = w / r.raw_norm;
  return r;
}

// ||X - y w'||_F^2 + lambda |w'Cs w - w'Ct w|; the diagnostics/oracle target.
inline double dipls_objective(const Eigen::VectorXd& w, const Eigen::MatrixXd& X,
                              const Eigen::VectorXd& y, const Eigen::MatrixXd& Xs,
                              const Eigen::MatrixXd& Xt, double lambda) {
  if (lambda < 0.0) throw ConfigError("dipls_objective: lambda must be non-negative");
  if (w.size() != X.cols() || X.cols() != Xs.cols() || X.cols() != Xt.cols())
    throw DimensionError("dipls_objective: dimension mismatch");
  if (X.rows() != y.size())
    throw DimensionError("dipls_objective: X rows != y length");
  double fit_term = (X - y * w.transpose()).squaredNorm();
  double gap = w.dot((detail::covariance(Xs) - detail::covariance(Xt)) * w);
  return fit_term + lambda * std::abs(gap);
}

// Multi-component fit with two-block deflation.  kind == pls uses the plain
// regression weight each round (equivalent to lambda = 0); both paths share
// the deflation engine, centering policy and prediction plumbing, so the two
// model kinds differ in exactly one thing: the weight direction.
inline FittedModel fit(const FitConfig& config, const DomainDataset& source,
                       const DomainDataset& target,
                       ModelKind kind = ModelKind::dipls) {
  config.validate(source.features.rows(), source.features.cols());
  CenteredDomains cd = center_domains(source, target, config.centering);

  Eigen::Index p = cd.Xs.cols();
  Eigen::Index ns = cd.Xs.rows();
  int k = config.n_components;

  FittedModel m;
  m.config = config;
  m.source_feature_means = cd.source_means;
  m.target_feature_means = cd.target_means;
  m.label_mean = cd.label_mean;
  m.W.resize(p, k);
  m.Ps.resize(p, k);
  m.Pt.resize(p, k);
  m.q.resize(k);
  m.source_scores.resize(ns, k);

  Eigen::MatrixXd Xs = cd.Xs, Xt = cd.Xt;
  Eigen::VectorXd y = cd.y;
  int keff = 0;
  for (int j = 0; j < k; ++j) {
    if (y.squaredNorm() < 1e-12) {
      m.warnings.push_back("label variance exhausted after " + std::to_string(j) +
                           " components");
      break;
    }
    Eigen::VectorXd w =
        kind == ModelKind::pls
            ? pls_weight(Xs, y).w
            : dipls_weight(Xs, y, Xs, Xt, config.lambda, config.ridge_epsilon).w;

    m.gap_diagnostics.push_back(
        w.dot((detail::covariance(Xs) - detail::covariance(Xt)) * w));

    Eigen::VectorXd ts = Xs * w;
    double ts2 = ts.squaredNorm();
    if (ts2 < 1e-12) {
      m.gap_diagnostics.pop_back();
      m.warnings.push_back("source scores vanished at component " +
                           std::to_string(j + 1));
      break;
    }
    Eigen::VectorXd tt = Xt * w;
    double tt2 = tt.squaredNorm();
    Eigen::VectorXd ps = Xs.transpose() * ts / ts2;
    Eigen::VectorXd pt = tt2 > 1e-12 ? Eigen::VectorXd(Xt.transpose() * tt / tt2)
                                     : Eigen::VectorXd(Eigen::VectorXd::Zero(p));
    if (tt2 <= 1e-12)
      m.warnings.push_back("target scores vanished at component " +
                           std::to_string(j + 1));
    double qj = y.dot(ts) / ts2;

    Xs.noalias() -= ts * ps.transpose();
    Xt.noalias() -= tt * pt.transpose();
    y.noalias() -= qj * ts;

    m.W.col(j) = w;
    m.Ps.col(j) = ps;
    m.Pt.col(j) = pt;
    m.q(j) = qj;
    m.source_scores.col(j) = ts;
    ++keff;
  }

  if (keff == 0)
    throw DegenerateLabelError("fit: no usable components (constant labels?)");
  if (keff < k)
    m.warnings.push_back("requested " + std::to_string(k) + " components, kept " +
                         std::to_string(keff));

  m.W.conservativeResize(p, keff);
  m.Ps.conservativeResize(p, keff);
  m.Pt.conservativeResize(p, keff);
  m.q.conservativeResize(keff);
  m.source_scores.conservativeResize(ns, keff);
  m.k_effective = keff;

  Eigen::MatrixXd A = m.Ps.transpose() * m.W;  // keff x keff
  Eigen::VectorXd inner = Eigen::PartialPivLU<Eigen::MatrixXd>(A).solve(m.q);
  if (!inner.allFinite())
    throw ConditioningError("fit: coefficient assembly is singular",
                            detail::condition_estimate(A));
  m.b = m.W * inner;
  return m;
}

// (X - domain means) b + label mean.  Target means by default; callers doing
// in-domain prediction pass Domain::source.
inline Eigen::VectorXd predict(const FittedModel& m, const Eigen::MatrixXd& X,
                               Domain domain = Domain::target) {
  if (X.cols() != m.b.size())
    throw DimensionError("predict: X has " + std::to_string(X.cols()) +
                         " columns, model expects " + std::to_string(m.b.size()));
  const Eigen::VectorXd& mu = domain == Domain::target ? m.target_feature_means
                                                       : m.source_feature_means;
  return ((X.rowwise() - mu.transpose()) * m.b).array() + m.label_mean;
}

// Scores of the first k latent variables, replaying the same sequential
// deflation as fit (with the domain's own means and loadings), so source
// training rows reproduce the stored t_s exactly.
inline Eigen::MatrixXd project(const FittedModel& m, const Eigen::MatrixXd& X,
                               int k, Domain domain = Domain::target) {
  if (k < 1 || k > m.k_effective)
    throw RangeError("project: k = " + std::to_string(k) +
                     " outside [1, " + std::to_string(m.k_effective) + "]");
  if (X.cols() != m.W.rows())
    throw DimensionError("project: feature-count mismatch");
  const Eigen::VectorXd& mu = domain == Domain::target ? m.target_feature_means
                                                       : m.source_feature_means;
  const Eigen::MatrixXd& P = domain == Domain::target ? m.Pt : m.Ps;
  Eigen::MatrixXd Xc = X.rowwise() - mu.transpose();
  Eigen::MatrixXd T(X.rows(), k);
  for (int j = 0; j < k; ++j) {
    Eigen::VectorXd t = Xc * m.W.col(j);
    T.col(j) = t;
    Xc.noalias() -= t * P.col(j).transpose();
  }
  return T;
}

}  // namespace dipls
