#pragma once

#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Dense>

#include "common/error.hpp"
#include "nn/network.hpp"

namespace s2d::test {

// Central differences, coordinate by coordinate.
inline Eigen::VectorXd finite_diff(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                                   double h = 1e-5) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd p = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double keep = p[i];
    p[i] = keep + h;
    const double up = f(p);
    p[i] = keep - h;
    const double down = f(p);
    p[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

// Like mlp() but with nonzero biases so every block is exercised.
inline nn::Network random_net(std::initializer_list<std::size_t> dims, std::uint64_t seed, double scale = 0.5) {
  nn::Network net = nn::Network::mlp(dims, seed);
  std::mt19937_64 rng(seed ^ 0xb1a5);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (std::size_t l = 0; l < net.num_layers(); ++l)
    for (Eigen::Index i = 0; i < net.biases(l).size(); ++i) net.biases(l)[i] = u(rng);
  return net;
}

inline Eigen::MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double lo = -1,
                                      double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = u(rng);
  return m;
}

template <class F>
ErrorCode error_code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  throw std::logic_error("expected an s2d::Error");
}

}  // namespace s2d::test
