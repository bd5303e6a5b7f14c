#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace germflow {

using cplx = std::complex<double>;
using VecC = Eigen::VectorXcd;
using MatC = Eigen::MatrixXcd;
using VecR = Eigen::VectorXd;
using MatR = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kI{0.0, 1.0};

// Tolerance bundle shared by the validators.  Scenario files may override
// individual entries; tests pin them explicitly.
struct Tolerances {
  double analytic = 1e-8;  // identities evaluated with analytic charts
  double fd = 1e-5;        // identities probed through finite differences
  double drift = 1e-6;     // hard bound on canonical-relation drift
  double series = 1e-14;   // cutoff for exponential series tails
  double dual = 1e-10;     // agreement of independent state constructions
};

struct validation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// distance from x to the nearest point of { n + offset : n integer }
inline double dist_to_integer_lattice(double x, double offset = 0.0) {
  double y = x - offset;
  return std::abs(y - std::round(y));
}

inline double sqr(double x) { return x * x; }

// spectral (operator 2-) norm
inline double op_norm(const MatC& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatC> svd(a);
  return svd.singularValues()(0);
}

inline double min_singular_value(const MatC& a) {
  Eigen::JacobiSVD<MatC> svd(a);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

}  // namespace germflow
