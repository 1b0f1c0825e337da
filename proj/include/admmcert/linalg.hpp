#pragma once

// Small dense symmetric eigenproblems. Eigen is used for storage and
// products only; the eigensolvers below are self-contained.

#include <admmcert/errors.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <random>
#include <vector>

namespace admmcert {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Dense symmetric matrix. Construction symmetrizes by averaging, so
/// entries(i, j) == entries(j, i) holds bit-for-bit afterwards.
class SymMatrix {
 public:
  SymMatrix() = default;

  explicit SymMatrix(const Matrix& m) {
    if (m.rows() != m.cols() || m.rows() == 0) {
      throw DimensionError("SymMatrix: matrix must be square and non-empty");
    }
    if (!m.allFinite()) {
      throw DomainError("SymMatrix: entries must be finite");
    }
    data_ = 0.5 * (m + m.transpose());
  }

  SymMatrix(std::initializer_list<std::initializer_list<double>> rows) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    Matrix m(n, n);
    Eigen::Index i = 0;
    for (const auto& row : rows) {
      if (static_cast<Eigen::Index>(row.size()) != n) {
        throw DimensionError("SymMatrix: ragged initializer");
      }
      Eigen::Index j = 0;
      for (double v : row) m(i, j++) = v;
      ++i;
    }
    *this = SymMatrix(m);
  }

  static SymMatrix identity(Eigen::Index n) { return SymMatrix(Matrix::Identity(n, n)); }
  static SymMatrix zero(Eigen::Index n) { return SymMatrix(Matrix::Zero(n, n)); }
  static SymMatrix diagonal(const Vector& d) { return SymMatrix(Matrix(d.asDiagonal())); }

  Eigen::Index n() const noexcept { return data_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return data_(i, j); }
  const Matrix& matrix() const noexcept { return data_; }

  double max_abs() const { return data_.cwiseAbs().maxCoeff(); }
  double trace() const { return data_.trace(); }

  SymMatrix scaled(double c) const { return SymMatrix(c * data_); }

 private:
  Matrix data_;
};

struct EigenSystem {
  std::vector<double> values;  // ascending
  Matrix vectors;              // column i pairs with values[i]
};

namespace detail {

/// Cyclic Jacobi rotations, no size limit. Sweeps until the off-diagonal
/// Frobenius norm drops below 1e-14 * ||M||_F.
inline EigenSystem jacobi_eigensystem(const Matrix& input) {
  const Eigen::Index n = input.rows();
  Matrix a = input;
  Matrix v = Matrix::Identity(n, n);
  const double total = a.norm();
  const double threshold = 1e-14 * total;

  auto off_norm = [&] {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
    }
    return std::sqrt(s);
  };

  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps && total > 0.0; ++sweep) {
    if (off_norm() <= threshold) break;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });
  EigenSystem out;
  out.values.reserve(static_cast<std::size_t>(n));
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values.push_back(a(order[k], order[k]));
    out.vectors.col(k) = v.col(order[k]);
  }
  return out;
}

inline double max_eigenvalue(const Matrix& m) { return jacobi_eigensystem(m).values.back(); }

}  // namespace detail

inline constexpr Eigen::Index kMaxDenseEigenSize = 8;

/// Full spectral decomposition for n <= 8.
inline EigenSystem sym_eigensystem(const SymMatrix& m) {
  if (m.n() > kMaxDenseEigenSize) {
    throw UnsupportedSizeError("sym_eigs: dimension exceeds 8");
  }
  return detail::jacobi_eigensystem(m.matrix());
}

/// Ascending eigenvalues for n <= 8.
inline std::vector<double> sym_eigs(const SymMatrix& m) { return sym_eigensystem(m).values; }

struct ExtremeEigs {
  double min;
  double max;
};

/// Smallest and largest eigenvalue of a symmetric matrix of any size.
///
/// Lanczos with full reorthogonalization from a fixed-seed start vector.
/// Converged when the Ritz residual of both extremes is within
/// tol * max(|theta|, tiny). The Krylov dimension is capped by n and by
/// max_iters; exhaustion throws ConvergenceError with the current Ritz
/// extremes.
inline ExtremeEigs extreme_eigs(const SymMatrix& m, double tol, int max_iters = 10000) {
  if (!(tol > 0.0)) throw DomainError("extreme_eigs: tol must be positive");
  const Eigen::Index n = m.n();
  if (n == 0) throw DimensionError("extreme_eigs: empty matrix");
  const Matrix& a = m.matrix();
  if (n == 1) return {a(0, 0), a(0, 0)};

  std::mt19937_64 rng(0x5eed1234abcdULL);
  std::uniform_real_distribution<double> unif(0.5, 1.5);
  Vector q0(n);
  for (Eigen::Index i = 0; i < n; ++i) q0(i) = unif(rng);
  q0.normalize();

  const Eigen::Index cap = std::min<Eigen::Index>(n, max_iters);
  Matrix basis(n, cap);
  std::vector<double> diag;
  std::vector<double> offdiag;
  basis.col(0) = q0;
  const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-300);
  double lo = 0.0;
  double hi = 0.0;

  for (Eigen::Index j = 0; j < cap; ++j) {
    Vector w = a * basis.col(j);
    const double alpha = basis.col(j).dot(w);
    diag.push_back(alpha);
    w -= alpha * basis.col(j);
    if (j > 0) w -= offdiag.back() * basis.col(j - 1);
    for (int pass = 0; pass < 2; ++pass) {
      w -= basis.leftCols(j + 1) * (basis.leftCols(j + 1).transpose() * w);
    }
    const double beta = w.norm();
    const bool invariant = beta <= 1e-13 * scale;
    const auto k = static_cast<Eigen::Index>(diag.size());
    const bool last = (j + 1 == cap);

    if (invariant || last || (k % 8 == 0)) {
      Matrix t = Matrix::Zero(k, k);
      for (Eigen::Index i = 0; i < k; ++i) {
        t(i, i) = diag[static_cast<std::size_t>(i)];
        if (i + 1 < k) t(i, i + 1) = t(i + 1, i) = offdiag[static_cast<std::size_t>(i)];
      }
      const auto ritz = detail::jacobi_eigensystem(t);
      lo = ritz.values.front();
      hi = ritz.values.back();
      const double res_lo = beta * std::abs(ritz.vectors(k - 1, 0));
      const double res_hi = beta * std::abs(ritz.vectors(k - 1, k - 1));
      const double floor = 1e-15 * scale;
      const bool ok_lo = res_lo <= std::max(tol * std::abs(lo), floor);
      const bool ok_hi = res_hi <= std::max(tol * std::abs(hi), floor);
      if (invariant || (ok_lo && ok_hi) || (last && cap == n)) return {lo, hi};
    }
    if (last) break;
    offdiag.push_back(beta);
    basis.col(j + 1) = w / beta;
  }
  throw ConvergenceError("extreme_eigs: iteration budget exhausted", lo, hi);
}

/// True iff lambda_max(M) <= margin.
inline bool is_negative_semidefinite(const SymMatrix& m, double margin) {
  return detail::max_eigenvalue(m.matrix()) <= margin;
}

}  // namespace admmcert
