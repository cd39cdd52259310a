#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "dipls/model.hpp"
#include "dipls/rng.hpp"

using namespace dipls;
using Catch::Approx;

namespace {

DomainDataset make_dataset(Rng& rng, Eigen::Index n, Eigen::Index p,
                           const std::string& id, bool labeled = true) {
  DomainDataset d;
  d.condition_id = id;
  d.features = rng.normal_matrix(n, p);
  if (labeled) d.labels = rng.normal_vector(n);
  return d;
}

// textbook single-block PLS1, written independently of the library internals
Eigen::VectorXd nipals_reference_predict(const Eigen::MatrixXd& Xs_raw,
                                         const Eigen::VectorXd& y_raw,
                                         const Eigen::MatrixXd& Xnew_raw, int k) {
  Eigen::VectorXd xmean = Xs_raw.colwise().mean();
  double ymean = y_raw.mean();
  Eigen::MatrixXd X = Xs_raw.rowwise() - xmean.transpose();
  Eigen::VectorXd y = y_raw.array() - ymean;
  Eigen::Index p = X.cols();
  Eigen::MatrixXd W(p, k), P(p, k);
  Eigen::VectorXd q(k);
  for (int j = 0; j < k; ++j) {
    Eigen::VectorXd w = X.transpose() * y;
    w.normalize();
    Eigen::VectorXd t = X * w;
    double t2 = t.squaredNorm();
    Eigen::VectorXd pj = X.transpose() * t / t2;
    double qj = y.dot(t) / t2;
    X -= t * pj.transpose();
    y -= qj * t;
    W.col(j) = w;
    P.col(j) = pj;
    q(j) = qj;
  }
  Eigen::VectorXd b =
      W * (P.transpose() * W).partialPivLu().solve(q);
  return ((Xnew_raw.rowwise() - xmean.transpose()) * b).array() + ymean;
}

}  // namespace

TEST_CASE("center_domains centers each domain by its own means", "[model]") {
  Rng rng(hash_seed(11, "center"));
  DomainDataset s = make_dataset(rng, 12, 4, "s");
  DomainDataset t = make_dataset(rng, 9, 4, "t", false);
  t.features.array() += 5.0;  // deliberate offset

  auto cd = center_domains(s, t, Centering::per_domain);
  REQUIRE(cd.Xs.colwise().mean().cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE(cd.Xt.colwise().mean().cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE(std::abs(cd.y.mean()) < 1e-12);
  REQUIRE(cd.label_mean == Approx(s.labels->mean()));

  auto cd2 = center_domains(s, t, Centering::source_only);
  REQUIRE((cd2.target_means - cd2.source_means).norm() == 0.0);
  // the offset survives source-only centering
  REQUIRE(cd2.Xt.colwise().mean().minCoeff() > 3.0);
}

TEST_CASE("center_domains rejects bad inputs", "[model]") {
  Rng rng(hash_seed(12, "center-bad"));
  DomainDataset s = make_dataset(rng, 8, 3, "s");
  DomainDataset t = make_dataset(rng, 8, 3, "t", false);

  DomainDataset unlabeled = s;
  unlabeled.labels.reset();
  REQUIRE_THROWS_AS(center_domains(unlabeled, t, Centering::per_domain),
                    ValidationError);

  DomainDataset wide = make_dataset(rng, 8, 4, "wide", false);
  REQUIRE_THROWS_AS(center_domains(s, wide, Centering::per_domain),
                    DimensionError);

  DomainDataset constant = s;
  constant.features.col(1).setConstant(7.0);
  REQUIRE_NOTHROW(center_domains(constant, t, Centering::per_domain));
  REQUIRE_THROWS_AS(center_domains(constant, t, Centering::per_domain, true),
                    ValidationError);
}

TEST_CASE("pls_weight hand example: raw norm 3, unit direction", "[model]") {
  Eigen::MatrixXd X(2, 2);
  X << 3.0, 0.0, 3.0, 0.0;
  Eigen::VectorXd y(2);
  y << 1.0, 1.0;
  auto r = pls_weight(X, y);  // y'X/y'y = (3, 0)
  REQUIRE(r.raw_norm == Approx(3.0));
  REQUIRE(r.w(0) == Approx(1.0));
  REQUIRE(r.w(1) == Approx(0.0).margin(1e-15));
  REQUIRE(r.w.norm() == Approx(1.0));
}

TEST_CASE("pls_weight recovers a rank-one direction", "[model]") {
  Rng rng(hash_seed(13, "rank1"));
  Eigen::VectorXd a = rng.normal_vector(5);
  Eigen::VectorXd y = rng.normal_vector(40);
  Eigen::MatrixXd X = y * a.transpose();
  auto r = pls_weight(X, y);
  double cosine = std::abs(r.w.dot(a.normalized()));
  REQUIRE(cosine == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pls_weight degenerate inputs", "[model]") {
  Eigen::MatrixXd X(4, 2);
  X << 1, 0, -1, 0, 1, 0, -1, 0;
  Eigen::VectorXd y_zero = Eigen::VectorXd::Zero(4);
  REQUIRE_THROWS_AS(pls_weight(X, y_zero), DegenerateLabelError);

  Eigen::VectorXd y_orth(4);
  y_orth << 1, 1, -1, -1;  // orthogonal to both columns
  REQUIRE_THROWS_AS(pls_weight(X, y_orth), DegenerateDirectionError);
}

TEST_CASE("dipls_weight at lambda 0 equals the plain weight", "[model]") {
  Rng rng(hash_seed(14, "lam0"));
  Eigen::MatrixXd Xs = rng.normal_matrix(30, 6), Xt = rng.normal_matrix(25, 6);
  Eigen::VectorXd y = rng.normal_vector(30);
  auto a = pls_weight(Xs, y);
  auto b = dipls_weight(Xs, y, Xs, Xt, 0.0);
  REQUIRE((a.w - b.w).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE(a.raw_norm == Approx(b.raw_norm));
}

TEST_CASE("dipls_weight with identical domains equals the plain weight", "[model]") {
  Rng rng(hash_seed(15, "same-domains"));
  Eigen::MatrixXd Xs = rng.normal_matrix(30, 6);
  Eigen::VectorXd y = rng.normal_vector(30);
  for (double lam : {0.5, 10.0, 500.0}) {
    auto a = pls_weight(Xs, y);
    auto b = dipls_weight(Xs, y, Xs, Xs, lam);
    REQUIRE((a.w - b.w).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("dipls_weight rejects negative lambda", "[model]") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(8, 3);
  Eigen::VectorXd y = Eigen::VectorXd::Random(8);
  REQUIRE_THROWS_AS(dipls_weight(X, y, X, X, -1.0), ConfigError);
}

TEST_CASE("dipls_weight ridge path on an exactly singular system", "[model]") {
  // Xt rows {u, -u, 0} give Ct = uu' exactly (n-1 = 2 normalization); all
  // values are picked power-of-two so the bracket's (0,0) entry is an exact
  // IEEE zero: 1 - (1.5 / 6) * 4 = 0.
  Eigen::MatrixXd Xs(3, 2), Xt(3, 2), X(3, 2);
  Xs.setZero();
  Xt << 2, 0, -2, 0, 0, 0;  // Ct = diag(4, 0)
  X << 1, 1, 2, -1, 3, 1;
  Eigen::VectorXd y(3);
  y << 1, 1, 1;  // y'y = 3, so lambda = 1.5 makes M = diag(0, 1)

  auto r = dipls_weight(X, y, Xs, Xt, 1.5);
  REQUIRE(r.ridged);
  REQUIRE(r.w.norm() == Approx(1.0));

  REQUIRE_THROWS_AS(dipls_weight(X, y, Xs, Xt, 1.5, 0.0), ConditioningError);
  try {
    dipls_weight(X, y, Xs, Xt, 1.5, 0.0);
  } catch (const ConditioningError& e) {
    REQUIRE(e.condition_estimate > 1e12);
  }
}

TEST_CASE("dipls_objective matches an element-wise recomputation", "[model]") {
  Rng rng(hash_seed(16, "objective"));
  Eigen::MatrixXd X = rng.normal_matrix(12, 4);
  Eigen::MatrixXd Xs = rng.normal_matrix(10, 4), Xt = rng.normal_matrix(11, 4);
  Eigen::VectorXd y = rng.normal_vector(12);
  Eigen::VectorXd w = rng.normal_vector(4).normalized();
  double lam = 7.5;

  double fit_term = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j)
      fit_term += std::pow(X(i, j) - y(i) * w(j), 2);
  auto cov = [](const Eigen::MatrixXd& Z) {
    return Eigen::MatrixXd(Z.transpose() * Z / double(Z.rows() - 1));
  };
  double gap = w.dot((cov(Xs) - cov(Xt)) * w);
  double expect = fit_term + lam * std::abs(gap);

  REQUIRE(dipls_objective(w, X, y, Xs, Xt, lam) == Approx(expect).epsilon(1e-12));
  // the penalty term scales linearly in lambda
  double d = dipls_objective(w, X, y, Xs, Xt, 10.0) -
             dipls_objective(w, X, y, Xs, Xt, 0.0);
  REQUIRE(d == Approx(10.0 * std::abs(gap)).epsilon(1e-12));
}

TEST_CASE("large-lambda weights approach the bracket-limit direction", "[model]") {
  Rng rng(hash_seed(17, "lambda-limit"));
  Eigen::MatrixXd Xs = rng.normal_matrix(40, 5), Xt = 2.0 * rng.normal_matrix(35, 5);
  Eigen::VectorXd y = rng.normal_vector(40);

  auto cov = [](const Eigen::MatrixXd& Z) {
    return Eigen::MatrixXd(Z.transpose() * Z / double(Z.rows() - 1));
  };
  Eigen::MatrixXd D = cov(Xs) - cov(Xt);
  Eigen::VectorXd v = Xs.transpose() * y / y.squaredNorm();
  Eigen::VectorXd w_inf = D.transpose().partialPivLu().solve(v).normalized();

  auto w6 = dipls_weight(Xs, y, Xs, Xt, 1e6).w;
  auto w8 = dipls_weight(Xs, y, Xs, Xt, 1e8).w;
  REQUIRE(std::abs(w8.dot(w_inf)) > 1.0 - 1e-4);
  REQUIRE(std::abs(w8.dot(w6)) > 1.0 - 1e-3);
}

TEST_CASE("fit with kind pls matches an independent NIPALS reference", "[model]") {
  for (std::uint64_t seed : {21, 22, 23}) {
    Rng rng(hash_seed(seed, "nipals"));
    DomainDataset s = make_dataset(rng, 40, 9, "s");
    DomainDataset t = s;  // same domain so both centerings coincide
    t.labels.reset();
    for (int k : {1, 3, 7}) {
      FitConfig cfg;
      cfg.n_components = k;
      auto m = fit(cfg, s, t, ModelKind::pls);
      Eigen::MatrixXd probe = rng.normal_matrix(15, 9);
      Eigen::VectorXd ours = predict(m, probe);
      Eigen::VectorXd ref = nipals_reference_predict(s.features, *s.labels, probe, k);
      REQUIRE((ours - ref).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
}

TEST_CASE("fit with lambda 0 reduces to plain pls", "[model]") {
  Rng rng(hash_seed(24, "reduction"));
  DomainDataset s = make_dataset(rng, 50, 10, "s");
  DomainDataset t = make_dataset(rng, 30, 10, "t", false);
  for (int k : {1, 3, 9}) {
    FitConfig cfg;
    cfg.n_components = k;
    auto a = fit(cfg, s, t, ModelKind::pls);
    auto b = fit(cfg, s, t, ModelKind::dipls);  // lambda defaults to 0
    Eigen::MatrixXd probe = rng.normal_matrix(20, 10);
    REQUIRE((predict(a, probe) - predict(b, probe)).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("fit recovers an exact linear law", "[model]") {
  Rng rng(hash_seed(25, "linear"));
  Eigen::VectorXd beta = rng.normal_vector(6);
  DomainDataset s, t;
  s.condition_id = "s";
  t.condition_id = "t";
  s.features = rng.normal_matrix(80, 6);
  s.labels = (s.features * beta).array() + 47.0;
  t.features = rng.normal_matrix(40, 6).array() + 1.5;  // shifted domain

  FitConfig cfg;
  cfg.n_components = 6;
  auto m = fit(cfg, s, t, ModelKind::pls);
  // per-domain centering absorbs the shift, the linear law is exact up to
  // the between-domain label offset that centering cannot see; check the
  // source side where the answer is fully determined
  Eigen::VectorXd in_sample = predict(m, s.features, Domain::source);
  REQUIRE((in_sample - *s.labels).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("fit stops early past the data rank and says so", "[model]") {
  Rng rng(hash_seed(26, "rank"));
  Eigen::MatrixXd base = rng.normal_matrix(30, 3);
  Eigen::MatrixXd lift = rng.normal_matrix(3, 8);
  DomainDataset s, t;
  s.condition_id = "s";
  t.condition_id = "t";
  s.features = base * lift;  // rank 3 in 8 columns
  s.labels = rng.normal_vector(30);
  t.features = rng.normal_matrix(30, 3) * lift;

  FitConfig cfg;
  cfg.n_components = 8;
  auto m = fit(cfg, s, t, ModelKind::pls);
  REQUIRE(m.k_effective <= 4);
  REQUIRE(m.k_effective >= 1);
  bool noted = false;
  for (const auto& w : m.warnings)
    if (w.find("kept " + std::to_string(m.k_effective)) != std::string::npos)
      noted = true;
  REQUIRE(noted);
  REQUIRE(m.W.cols() == m.k_effective);
  REQUIRE(static_cast<int>(m.gap_diagnostics.size()) == m.k_effective);
}

TEST_CASE("fit rejects impossible component counts and constant labels", "[model]") {
  Rng rng(hash_seed(27, "fit-bad"));
  DomainDataset s = make_dataset(rng, 10, 4, "s");
  DomainDataset t = make_dataset(rng, 10, 4, "t", false);

  FitConfig too_many;
  too_many.n_components = 5;  // > min(9, 4)
  REQUIRE_THROWS_AS(fit(too_many, s, t), ConfigError);

  DomainDataset flat = s;
  flat.labels = Eigen::VectorXd::Constant(10, 3.0);
  FitConfig cfg;
  cfg.n_components = 2;
  REQUIRE_THROWS_AS(fit(cfg, flat, t), DegenerateLabelError);
}

TEST_CASE("assembled coefficients reproduce sequential score predictions", "[model]") {
  Rng rng(hash_seed(28, "assembly"));
  DomainDataset s = make_dataset(rng, 35, 7, "s");
  DomainDataset t = make_dataset(rng, 20, 7, "t", false);
  FitConfig cfg;
  cfg.n_components = 5;
  cfg.lambda = 3.0;
  auto m = fit(cfg, s, t, ModelKind::dipls);

  Eigen::VectorXd seq = (m.source_scores * m.q).array() + m.label_mean;
  Eigen::VectorXd via_b = predict(m, s.features, Domain::source);
  REQUIRE((seq - via_b).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("predict on a single-feature identity problem", "[model]") {
  DomainDataset s, t;
  s.condition_id = "s";
  t.condition_id = "t";
  Eigen::VectorXd y(6);
  y << 40, 42, 44, 46, 48, 50;
  s.features = y;
  s.labels = y;
  t.features = y.array() + 5.0;  // target measured with a +5 offset

  FitConfig cfg;
  cfg.n_components = 1;
  auto m = fit(cfg, s, t, ModelKind::pls);
  // per-domain centering removes the offset: shifted inputs, same outputs
  Eigen::VectorXd pred = predict(m, t.features, Domain::target);
  REQUIRE((pred - y).cwiseAbs().maxCoeff() < 1e-10);
  REQUIRE(predict(m, s.features, Domain::source)(2) == Approx(44.0));
}

TEST_CASE("project replays training source scores exactly", "[model]") {
  Rng rng(hash_seed(29, "project"));
  DomainDataset s = make_dataset(rng, 25, 6, "s");
  DomainDataset t = make_dataset(rng, 18, 6, "t", false);
  FitConfig cfg;
  cfg.n_components = 4;
  cfg.lambda = 50.0;
  auto m = fit(cfg, s, t, ModelKind::dipls);

  Eigen::MatrixXd T = project(m, s.features, m.k_effective, Domain::source);
  REQUIRE((T - m.source_scores).cwiseAbs().maxCoeff() < 1e-10);

  // a row sitting at the source means scores zero on every component
  Eigen::MatrixXd mu = m.source_feature_means.transpose();
  Eigen::MatrixXd T0 = project(m, mu, m.k_effective, Domain::source);
  REQUIRE(T0.cwiseAbs().maxCoeff() < 1e-12);

  REQUIRE_THROWS_AS(project(m, s.features, 0), RangeError);
  REQUIRE_THROWS_AS(project(m, s.features, m.k_effective + 1), RangeError);
}

TEST_CASE("fit is equivariant to feature permutation", "[model]") {
  Rng rng(hash_seed(30, "perm"));
  DomainDataset s = make_dataset(rng, 30, 5, "s");
  DomainDataset t = make_dataset(rng, 22, 5, "t", false);
  Eigen::MatrixXd probe = rng.normal_matrix(12, 5);

  std::vector<int> perm = {3, 0, 4, 1, 2};
  Eigen::MatrixXd Pm = Eigen::MatrixXd::Zero(5, 5);
  for (int j = 0; j < 5; ++j) Pm(perm[j], j) = 1.0;

  DomainDataset s2 = s, t2 = t;
  s2.features = s.features * Pm;
  t2.features = t.features * Pm;

  FitConfig cfg;
  cfg.n_components = 3;
  cfg.lambda = 20.0;
  auto a = fit(cfg, s, t, ModelKind::dipls);
  auto b = fit(cfg, s2, t2, ModelKind::dipls);
  REQUIRE((predict(a, probe) - predict(b, probe * Pm)).cwiseAbs().maxCoeff() < 1e-10);
  REQUIRE((Pm.transpose() * a.b - b.b).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("fit is invariant to a common feature translation", "[model]") {
  Rng rng(hash_seed(31, "translate"));
  DomainDataset s = make_dataset(rng, 30, 5, "s");
  DomainDataset t = make_dataset(rng, 22, 5, "t", false);
  Eigen::RowVectorXd shift = rng.normal_vector(5).transpose() * 10.0;

  DomainDataset s2 = s, t2 = t;
  s2.features.rowwise() += shift;
  t2.features.rowwise() += shift;

  FitConfig cfg;
  cfg.n_components = 3;
  cfg.lambda = 20.0;
  auto a = fit(cfg, s, t, ModelKind::dipls);
  auto b = fit(cfg, s2, t2, ModelKind::dipls);
  Eigen::MatrixXd probe = rng.normal_matrix(12, 5);
  Eigen::MatrixXd probe2 = probe.rowwise() + shift;
  REQUIRE((predict(a, probe) - predict(b, probe2)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("fitted means match the data means", "[model]") {
  Rng rng(hash_seed(32, "means"));
  DomainDataset s = make_dataset(rng, 20, 4, "s");
  DomainDataset t = make_dataset(rng, 15, 4, "t", false);
  FitConfig cfg;
  cfg.n_components = 2;
  auto m = fit(cfg, s, t);
  REQUIRE((m.source_feature_means.transpose() - s.features.colwise().mean())
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  REQUIRE((m.target_feature_means.transpose() - t.features.colwise().mean())
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  REQUIRE(m.label_mean == Approx(s.labels->mean()));
}
