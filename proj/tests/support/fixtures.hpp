#pragma once

#include <random>
#include <vector>

#include "lbcon/decomposition.hpp"
#include "lbcon/gains.hpp"
#include "lbcon/simulation.hpp"
#include "lbcon/topology.hpp"

namespace lbcon::testing {

// Already-decomposed system (U_o = I, h = n).
inline ObservableDecomposition trivial_decomposition(const Matrix& e, const Matrix& a,
                                                     const Matrix& b, const Matrix& c) {
  return decompose(DescriptorSystem(e, a, b, c),
                   Matrix::Identity(e.rows(), e.cols()),
                   static_cast<int>(e.rows()));
}

inline ObservableDecomposition scalar_decomposition(double e = 1.0, double a = -1.0,
                                                    double b = 1.0, double c = 1.0) {
  return trivial_decomposition(Matrix::Constant(1, 1, e), Matrix::Constant(1, 1, a),
                               Matrix::Constant(1, 1, b), Matrix::Constant(1, 1, c));
}

inline DesignCertificate scalar_certificate(double lambda_min = 1.0,
                                            double lambda_max = 1.0,
                                            double budget = 1e9) {
  DesignCertificate c;
  c.R_x = Matrix::Ones(1, 1);
  c.R_z = Matrix::Ones(1, 1);
  c.M = Matrix::Ones(1, 1);
  c.J_e_star = budget;
  c.bounds = {lambda_min, lambda_max};
  return c;
}

inline Topology path_graph(int n) {
  std::vector<Edge> edges;
  for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
  return Topology(n, edges);
}

inline Topology complete_graph(int n) {
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) edges.push_back({i, j});
  }
  return Topology(n, edges);
}

// Each pair present with probability p, weights in [0.5, 2].
inline Topology random_graph(int n, double p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> w(0.5, 2.0);
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (u(rng) < p) edges.push_back({i, j, w(rng)});
    }
  }
  return Topology(n, edges);
}

inline SwitchingSchedule fixed_schedule(double horizon, std::size_t topology = 0,
                                        double dwell = 1.0) {
  return SwitchingSchedule({{0.0, topology}}, std::min(dwell, horizon), horizon,
                           TopologyMode::switching_connected);
}

inline Matrix random_orthonormal(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  Eigen::HouseholderQR<Matrix> qr(m);
  return qr.householderQ() * Matrix::Identity(n, n);
}

inline Matrix random_matrix(int r, int c, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

}  // namespace lbcon::testing
