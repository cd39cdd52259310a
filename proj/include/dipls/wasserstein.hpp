#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "dipls/errors.hpp"
#include "dipls/rng.hpp"

namespace dipls {

struct W1Result {
  double distance = 0.0;
  std::string method;  // "exact" or "sliced"
};

namespace detail {

// Exact empirical 1-Wasserstein between uniform clouds, via successive
// shortest paths on the dense bipartite transportation graph.  Masses are
// made integral by scaling with g = gcd(n_a, n_b): every source holds
// n_b/g units, every sink wants n_a/g, one unit = g/(n_a n_b) mass.
// Dijkstra runs with node potentials, so reduced costs stay non-negative.
inline double exact_w1(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  const int na = static_cast<int>(A.rows());
  const int nb = static_cast<int>(B.rows());
  Eigen::MatrixXd cost(na, nb);
  for (int i = 0; i < na; ++i)
    for (int j = 0; j < nb; ++j)
      cost(i, j) = (A.row(i) - B.row(j)).norm();

  const long g = std::gcd(static_cast<long>(na), static_cast<long>(nb));
  const long unit_supply = nb / g;
  const long unit_demand = na / g;
  std::vector<long> supply(static_cast<std::size_t>(na), unit_supply);
  std::vector<long> demand(static_cast<std::size_t>(nb), unit_demand);
  Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic> flow =
      Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>::Zero(na, nb);

  std::vector<double> pot_a(static_cast<std::size_t>(na), 0.0);
  std::vector<double> pot_b(static_cast<std::size_t>(nb), 0.0);
  const int nv = na + nb;  // nodes: 0..na-1 sources, na..na+nb-1 sinks
  std::vector<double> dist(static_cast<std::size_t>(nv));
  std::vector<int> parent(static_cast<std::size_t>(nv));
  std::vector<char> done(static_cast<std::size_t>(nv));
  const double inf = std::numeric_limits<double>::infinity();

  long remaining = static_cast<long>(na) * unit_supply;
  long max_iterations = static_cast<long>(na) * unit_supply + nv;  // paranoia cap
  while (remaining > 0) {
    if (--max_iterations < 0)
      throw NumericalError("wasserstein: transport solve failed to make progress");
    std::fill(dist.begin(), dist.end(), inf);
    std::fill(parent.begin(), parent.end(), -1);
    std::fill(done.begin(), done.end(), 0);
    for (int i = 0; i < na; ++i)
      if (supply[static_cast<std::size_t>(i)] > 0) dist[static_cast<std::size_t>(i)] = 0.0;

    // dense Dijkstra over the residual graph
    for (int iter = 0; iter < nv; ++iter) {
      int u = -1;
      double best = inf;
      for (int v = 0; v < nv; ++v)
        if (!done[static_cast<std::size_t>(v)] && dist[static_cast<std::size_t>(v)] < best) {
          best = dist[static_cast<std::size_t>(v)];
          u = v;
        }
      if (u < 0) break;
      done[static_cast<std::size_t>(u)] = 1;
      // reduced costs are >= 0 up to rounding; clamping and skipping done
      // nodes keeps the parent pointers acyclic despite float noise
      if (u < na) {
        const int i = u;
        for (int j = 0; j < nb; ++j) {  // forward arcs, unbounded capacity
          if (done[static_cast<std::size_t>(na + j)]) continue;
          double rc = std::max(0.0, cost(i, j) + pot_a[static_cast<std::size_t>(i)] -
                                        pot_b[static_cast<std::size_t>(j)]);
          double nd = dist[static_cast<std::size_t>(u)] + rc;
          if (nd < dist[static_cast<std::size_t>(na + j)]) {
            dist[static_cast<std::size_t>(na + j)] = nd;
            parent[static_cast<std::size_t>(na + j)] = u;
          }
        }
      } else {
        const int j = u - na;
        for (int i = 0; i < na; ++i) {  // backward arcs need flow to undo
          if (flow(i, j) <= 0 || done[static_cast<std::size_t>(i)]) continue;
          double rc = std::max(0.0, -cost(i, j) + pot_b[static_cast<std::size_t>(j)] -
                                        pot_a[static_cast<std::size_t>(i)]);
          double nd = dist[static_cast<std::size_t>(u)] + rc;
          if (nd < dist[static_cast<std::size_t>(i)]) {
            dist[static_cast<std::size_t>(i)] = nd;
            parent[static_cast<std::size_t>(i)] = u;
          }
        }
      }
    }

    int sink = -1;
    double best = inf;
    for (int j = 0; j < nb; ++j)
      if (demand[static_cast<std::size_t>(j)] > 0 &&
          dist[static_cast<std::size_t>(na + j)] < best) {
        best = dist[static_cast<std::size_t>(na + j)];
        sink = na + j;
      }
    if (sink < 0)
      throw NumericalError("wasserstein: no augmenting path (unbalanced problem?)");

    for (int v = 0; v < nv; ++v) {
      double d = dist[static_cast<std::size_t>(v)];
      if (d == inf) continue;
      if (v < na)
        pot_a[static_cast<std::size_t>(v)] += d;
      else
        pot_b[static_cast<std::size_t>(v - na)] += d;
    }

    // bottleneck: sink demand, backward-arc flows, and the root's supply
    // (forward arcs are uncapacitated)
    long amount = demand[static_cast<std::size_t>(sink - na)];
    for (int v = sink; parent[static_cast<std::size_t>(v)] >= 0;
         v = parent[static_cast<std::size_t>(v)]) {
      int u = parent[static_cast<std::size_t>(v)];
      if (u >= na && v < na) amount = std::min(amount, flow(v, u - na));
    }
    {
      int v = sink;
      while (parent[static_cast<std::size_t>(v)] >= 0) v = parent[static_cast<std::size_t>(v)];
      amount = std::min(amount, supply[static_cast<std::size_t>(v)]);
    }
    for (int v = sink; parent[static_cast<std::size_t>(v)] >= 0;
         v = parent[static_cast<std::size_t>(v)]) {
      int u = parent[static_cast<std::size_t>(v)];
      if (u < na)
        flow(u, v - na) += amount;
      else
        flow(v, u - na) -= amount;
    }
    {
      int v = sink;
      while (parent[static_cast<std::size_t>(v)] >= 0) v = parent[static_cast<std::size_t>(v)];
      supply[static_cast<std::size_t>(v)] -= amount;
    }
    demand[static_cast<std::size_t>(sink - na)] -= amount;
    remaining -= amount;
  }

  double total = 0.0;
  for (int i = 0; i < na; ++i)
    for (int j = 0; j < nb; ++j)
      if (flow(i, j) > 0) total += static_cast<double>(flow(i, j)) * cost(i, j);
  return total * static_cast<double>(g) /
         (static_cast<double>(na) * static_cast<double>(nb));
}

// Exact 1D W1 between sorted samples with uniform (possibly different-size)
// masses: integrate |quantile_a - quantile_b| over the merged quantile grid.
inline double w1_1d_sorted(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t na = a.size(), nb = b.size();
  std::size_t i = 0, j = 0;
  double u = 0.0, total = 0.0;
  while (i < na && j < nb) {
    double ua = static_cast<double>(i + 1) / static_cast<double>(na);
    double ub = static_cast<double>(j + 1) / static_cast<double>(nb);
    double un = std::min(ua, ub);
    total += (un - u) * std::abs(a[i] - b[j]);
    u = un;
    if (ua <= un + 1e-15) ++i;
    if (ub <= un + 1e-15) ++j;
  }
  return total;
}

inline double sliced_w1(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                        std::uint64_t seed, int n_projections) {
  const Eigen::Index d = A.cols();
  Rng rng(seed);
  double acc = 0.0;
  std::vector<double> pa(static_cast<std::size_t>(A.rows()));
  std::vector<double> pb(static_cast<std::size_t>(B.rows()));
  for (int s = 0; s < n_projections; ++s) {
    Eigen::VectorXd theta = rng.normal_vector(d);
    double nrm = theta.norm();
    if (nrm < 1e-12) {
      theta.setZero();
      theta(0) = 1.0;
    } else {
      theta /= nrm;
    }
    Eigen::VectorXd qa = A * theta, qb = B * theta;
    for (Eigen::Index i = 0; i < qa.size(); ++i) pa[static_cast<std::size_t>(i)] = qa(i);
    for (Eigen::Index i = 0; i < qb.size(); ++i) pb[static_cast<std::size_t>(i)] = qb(i);
    std::sort(pa.begin(), pa.end());
    std::sort(pb.begin(), pb.end());
    acc += w1_1d_sorted(pa, pb);
  }
  return acc / static_cast<double>(n_projections);
}

}  // namespace detail

// Empirical 1-Wasserstein distance (Euclidean ground cost) between the
// uniform point clouds A and B.  Exact optimal transport up to
// n_a * n_b <= 1e6 pairs, seeded sliced approximation beyond; the method
// used is recorded in the result.
inline W1Result wasserstein_distance(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                     std::uint64_t sliced_seed = 0x51ced5eedULL,
                                     int n_projections = 256) {
  if (A.cols() != B.cols())
    throw DimensionError("wasserstein_distance: dimension mismatch (" +
                         std::to_string(A.cols()) + " vs " + std::to_string(B.cols()) + ")");
  if (A.rows() < 1 || B.rows() < 1 || A.cols() < 1)
    throw ValidationError("wasserstein_distance: empty point cloud");
  if (n_projections < 256) n_projections = 256;

  W1Result r;
  if (static_cast<long long>(A.rows()) * static_cast<long long>(B.rows()) <= 1000000LL) {
    r.distance = detail::exact_w1(A, B);
    r.method = "exact";
  } else {
    r.distance = detail::sliced_w1(A, B, sliced_seed, n_projections);
    r.method = "sliced";
  }
  return r;
}

}  // namespace dipls
