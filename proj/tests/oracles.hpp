#pragma once

// Direct sparse solves used as independent references for the iterative solvers.

#include <Eigen/Sparse>

#include <cmath>
#include <vector>

#include "hmflow/hmflow.hpp"

namespace hmtest {

using namespace hmflow;

// Minimizer of the discrete WED objective for a scalar euclidean map, from a
// direct sparse solve of the normal equations. The weights are rebuilt here
// from the quadrature rule: kinetic mass e^{-t_k/eps}(1 - e^{-tau/eps}) per
// step, energy mass of the dual cell of each level clipped to [0, T].
inline Trajectory wed_oracle(const GridMap& u0, double eps, double tau, int K) {
  const GridDomain& d = u0.domain;
  const int N = d.size(), M = K * N;
  const double vol = d.cell_volume();
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(M);
  auto var = [&](int k, int i) { return (k - 1) * N + i; };
  // c (a - b)^2 with a = u(ka, ia), b = u(kb, ib); level 0 is data
  auto square = [&](double c, int ka, int ia, int kb, int ib) {
    auto side = [&](int k1, int i1, int k2, int i2) {
      if (k1 == 0) return;
      const int r = var(k1, i1);
      trip.emplace_back(r, r, 2.0 * c);
      if (k2 == 0)
        rhs[r] += 2.0 * c * u0[i2].x[0];
      else
        trip.emplace_back(r, var(k2, i2), -2.0 * c);
    };
    side(ka, ia, kb, ib);
    side(kb, ib, ka, ia);
  };
  for (int k = 0; k < K; ++k) {
    const double m = std::exp(-k * tau / eps) * (1.0 - std::exp(-tau / eps));
    for (int i = 0; i < N; ++i) square(m * eps / (2.0 * tau * tau) * vol, k + 1, i, k, i);
  }
  for (int k = 0; k <= K; ++k) {
    const double lo = std::max(0.0, (k - 0.5) * tau), hi = std::min(K * tau, (k + 0.5) * tau);
    const double w = std::exp(-lo / eps) - std::exp(-hi / eps);
    for (int i = 0; i < N; ++i) {
      square(w * 0.5 / (d.h * d.h) * vol, k, i, k, d.index(d.i1(i) + 1, d.i2(i)));
      if (d.dim == 2) square(w * 0.5 / (d.h * d.h) * vol, k, i, k, d.index(d.i1(i), d.i2(i) + 1));
    }
  }
  Eigen::SparseMatrix<double> A(M, M);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
  const Eigen::VectorXd x = solver.solve(rhs);
  Trajectory t;
  t.tau = tau;
  t.maps.push_back(u0);
  for (int k = 1; k <= K; ++k) {
    GridMap m = u0;
    for (int i = 0; i < N; ++i) m[i].x[0] = x[var(k, i)];
    t.maps.push_back(m);
  }
  return t;
}

}  // namespace hmtest
