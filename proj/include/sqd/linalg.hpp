#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <vector>

#include "sqd/errors.hpp"

namespace sqd {

/// exp(K) for a real antisymmetric K by scaling and squaring of a Taylor series.
inline Eigen::MatrixXd expm_antisymmetric(const Eigen::MatrixXd& K) {
  const Eigen::Index n = K.rows();
  if (K.cols() != n) throw ConfigError("expm: matrix must be square");
  const double norm = K.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  double scale = 1.0;
  while (norm * scale > 0.25) {
    scale *= 0.5;
    ++squarings;
  }
  const Eigen::MatrixXd A = K * scale;
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd sum = term;
  for (int k = 1; k <= 18; ++k) {
    term = (term * A) / static_cast<double>(k);
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = (sum * sum).eval();
  return sum;
}

/// Real antisymmetric L with exp(L) = U, for U orthogonal with det(U) = +1.
inline Eigen::MatrixXd log_special_orthogonal(const Eigen::MatrixXd& U) {
  const Eigen::Index n = U.rows();
  if (n == 0) return U;
  if ((U.transpose() * U - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-8)
    throw ConfigError("log_special_orthogonal: matrix is not orthogonal");
  if (U.determinant() < 0) throw ConfigError("log_special_orthogonal: determinant is -1");

  Eigen::RealSchur<Eigen::MatrixXd> schur(U);
  const Eigen::MatrixXd& T = schur.matrixT();
  const Eigen::MatrixXd& Z = schur.matrixU();
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  std::vector<Eigen::Index> minus_one;
  for (Eigen::Index i = 0; i < n;) {
    if (i + 1 < n && std::abs(T(i + 1, i)) > 1e-13) {
      const double c = 0.5 * (T(i + 1, i) - T(i, i + 1));
      const double a = 0.5 * (T(i, i) + T(i + 1, i + 1));
      const double theta = std::atan2(c, a);
      L(i + 1, i) = theta;
      L(i, i + 1) = -theta;
      i += 2;
    } else {
      if (T(i, i) < 0) minus_one.push_back(i);
      ++i;
    }
  }
  if (minus_one.size() % 2 != 0) throw ConfigError("log_special_orthogonal: odd number of -1 eigenvalues");
  for (std::size_t k = 0; k < minus_one.size(); k += 2) {
    L(minus_one[k + 1], minus_one[k]) = std::numbers::pi;
    L(minus_one[k], minus_one[k + 1]) = -std::numbers::pi;
  }
  Eigen::MatrixXd K = Z * L * Z.transpose();
  return 0.5 * (K - K.transpose());
}

/// Two-orbital rotation acting on orbitals (a, a + 1).
///
/// As a one-body basis change it maps a+_a -> m_aa a+_a + m_ba a+_b and
/// a+_b -> m_ab a+_a + m_bb a+_b with b = a + 1.
struct AdjacentRotation {
  int a = 0;
  double m_aa = 1.0, m_ab = 0.0, m_ba = 0.0, m_bb = 1.0;
};

/// U = R_1 R_2 ... R_m diag(phases), with adjacent-orbital rotations R_k.
struct GivensDecomposition {
  std::vector<AdjacentRotation> rotations;
  std::vector<double> phases;  ///< +1 or -1 per orbital
};

/// Column-by-column elimination of an orthogonal matrix with adjacent rotations.
inline GivensDecomposition givens_decompose(const Eigen::MatrixXd& U) {
  const Eigen::Index n = U.rows();
  if (U.cols() != n) throw ConfigError("givens_decompose: matrix must be square");
  Eigen::MatrixXd R = U;
  std::vector<AdjacentRotation> applied;  // Q_1, Q_2, ... with Q_m ... Q_1 U = D
  for (Eigen::Index j = 0; j + 1 < n; ++j) {
    for (Eigen::Index i = n - 1; i > j; --i) {
      const double x = R(i - 1, j);
      const double y = R(i, j);
      if (y == 0.0) continue;
      const double r = std::hypot(x, y);
      const double c = x / r;
      const double s = y / r;
      // Rows (i-1, i) <- [[c, s], [-s, c]] * rows.
      const Eigen::RowVectorXd top = R.row(i - 1);
      const Eigen::RowVectorXd bot = R.row(i);
      R.row(i - 1) = c * top + s * bot;
      R.row(i) = -s * top + c * bot;
      R(i, j) = 0.0;
      // Store Q^T = [[c, -s], [s, c]] as an orbital rotation.
      applied.push_back({static_cast<int>(i - 1), c, -s, s, c});
    }
  }
  GivensDecomposition g;
  g.rotations = std::move(applied);  // U = Q_1^T Q_2^T ... Q_m^T D
  g.phases.resize(static_cast<std::size_t>(n));
  for (Eigen::Index p = 0; p < n; ++p) g.phases[static_cast<std::size_t>(p)] = R(p, p) < 0 ? -1.0 : 1.0;
  return g;
}

}  // namespace sqd
