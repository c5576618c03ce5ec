#pragma once

// Self-contained dense linear algebra for desk-scale problems: row-major
// matrices, cyclic Jacobi symmetric eigensolver, Cholesky, weighted norms
// and generalized eigenvalue bounds. No sparse formats, no nonsymmetric
// eigensolvers.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pdopt/errors.hpp"

namespace pdopt {

using DenseVector = std::vector<double>;

inline constexpr double kDefaultRankTol = 1e-10;

// ---------------------------------------------------------------------------
// number formatting: shortest decimal that round-trips (<= 17 significant
// digits). Used for all text output so traces are byte-reproducible.
// ---------------------------------------------------------------------------
inline std::string format_double(double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// vectors
// ---------------------------------------------------------------------------
inline bool all_finite(const DenseVector& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline double dot(const DenseVector& a, const DenseVector& b) {
  if (a.size() != b.size())
    throw DimensionError("dot: size mismatch " + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const DenseVector& a) { return std::sqrt(dot(a, a)); }

inline DenseVector add(const DenseVector& a, const DenseVector& b) {
  if (a.size() != b.size()) throw DimensionError("add: size mismatch");
  DenseVector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline DenseVector sub(const DenseVector& a, const DenseVector& b) {
  if (a.size() != b.size()) throw DimensionError("sub: size mismatch");
  DenseVector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline DenseVector scale(double c, const DenseVector& a) {
  DenseVector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = c * a[i];
  return r;
}

// r += c * a
inline void axpy(double c, const DenseVector& a, DenseVector& r) {
  if (a.size() != r.size()) throw DimensionError("axpy: size mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) r[i] += c * a[i];
}

// ---------------------------------------------------------------------------
// matrices (row-major dense)
// ---------------------------------------------------------------------------
struct DenseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;  // rows*cols entries, row-major

  DenseMatrix() = default;
  DenseMatrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, fill) {
    if (r < 0 || c < 0) throw DimensionError("DenseMatrix: negative size");
  }

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  double operator()(int i, int j) const {
    return a[static_cast<std::size_t>(i) * cols + j];
  }

  bool square() const { return rows == cols; }
};

inline DenseMatrix identity(int n) {
  DenseMatrix I(n, n);
  for (int i = 0; i < n; ++i) I(i, i) = 1.0;
  return I;
}

inline DenseMatrix transpose(const DenseMatrix& M) {
  DenseMatrix T(M.cols, M.rows);
  for (int i = 0; i < M.rows; ++i)
    for (int j = 0; j < M.cols; ++j) T(j, i) = M(i, j);
  return T;
}

inline DenseMatrix matmul(const DenseMatrix& A, const DenseMatrix& B) {
  if (A.cols != B.rows) throw DimensionError("matmul: inner dimension mismatch");
  DenseMatrix C(A.rows, B.cols);
  for (int i = 0; i < A.rows; ++i)
    for (int k = 0; k < A.cols; ++k) {
      const double aik = A(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < B.cols; ++j) C(i, j) += aik * B(k, j);
    }
  return C;
}

inline DenseVector matvec(const DenseMatrix& A, const DenseVector& x) {
  if (A.cols != static_cast<int>(x.size()))
    throw DimensionError("matvec: dimension mismatch");
  DenseVector y(A.rows, 0.0);
  for (int i = 0; i < A.rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < A.cols; ++j) s += A(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

// y = A^T x
inline DenseVector matvec_t(const DenseMatrix& A, const DenseVector& x) {
  if (A.rows != static_cast<int>(x.size()))
    throw DimensionError("matvec_t: dimension mismatch");
  DenseVector y(A.cols, 0.0);
  for (int i = 0; i < A.rows; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    for (int j = 0; j < A.cols; ++j) y[j] += A(i, j) * xi;
  }
  return y;
}

inline DenseMatrix mat_add(const DenseMatrix& A, const DenseMatrix& B) {
  if (A.rows != B.rows || A.cols != B.cols)
    throw DimensionError("mat_add: shape mismatch");
  DenseMatrix C = A;
  for (std::size_t i = 0; i < C.a.size(); ++i) C.a[i] += B.a[i];
  return C;
}

inline DenseMatrix mat_sub(const DenseMatrix& A, const DenseMatrix& B) {
  if (A.rows != B.rows || A.cols != B.cols)
    throw DimensionError("mat_sub: shape mismatch");
  DenseMatrix C = A;
  for (std::size_t i = 0; i < C.a.size(); ++i) C.a[i] -= B.a[i];
  return C;
}

inline DenseMatrix mat_scale(double c, const DenseMatrix& A) {
  DenseMatrix C = A;
  for (double& v : C.a) v *= c;
  return C;
}

inline double frobenius_norm(const DenseMatrix& A) {
  double s = 0.0;
  for (double v : A.a) s += v * v;
  return std::sqrt(s);
}

inline double max_abs(const DenseMatrix& A) {
  double m = 0.0;
  for (double v : A.a) m = std::max(m, std::abs(v));
  return m;
}

inline bool all_finite(const DenseMatrix& A) {
  for (double v : A.a)
    if (!std::isfinite(v)) return false;
  return true;
}

inline bool is_symmetric(const DenseMatrix& S, double tol = 1e-12) {
  if (!S.square()) return false;
  const double scale = std::max(1.0, max_abs(S));
  for (int i = 0; i < S.rows; ++i)
    for (int j = i + 1; j < S.cols; ++j)
      if (std::abs(S(i, j) - S(j, i)) > tol * scale) return false;
  return true;
}

// Averages S with its transpose. Used to kill rounding asymmetry before
// handing products like L^{-1} M L^{-T} to the Jacobi solver.
inline DenseMatrix symmetrize(const DenseMatrix& S) {
  if (!S.square()) throw DimensionError("symmetrize: matrix not square");
  DenseMatrix R = S;
  for (int i = 0; i < S.rows; ++i)
    for (int j = i + 1; j < S.cols; ++j) {
      const double m = 0.5 * (S(i, j) + S(j, i));
      R(i, j) = m;
      R(j, i) = m;
    }
  return R;
}

// ---------------------------------------------------------------------------
// symmetric eigensolver: cyclic Jacobi rotations
// ---------------------------------------------------------------------------
struct SpectralSummary {
  std::vector<double> eigenvalues;       // ascending
  std::optional<double> min_nonzero;     // smallest eigenvalue above rank tol
  DenseMatrix vectors;                   // columns match eigenvalues when requested
  bool has_vectors = false;
};

namespace detail {

// One cyclic sweep of Jacobi rotations on S (in place), accumulating the
// rotations into V when V is non-null.
inline void jacobi_sweep(DenseMatrix& S, DenseMatrix* V) {
  const int n = S.rows;
  for (int p = 0; p < n - 1; ++p) {
    for (int q = p + 1; q < n; ++q) {
      const double apq = S(p, q);
      if (apq == 0.0) continue;
      const double app = S(p, p);
      const double aqq = S(q, q);
      // skip rotations that cannot change anything at double precision
      if (std::abs(apq) < 1e-300) {
        S(p, q) = S(q, p) = 0.0;
        continue;
      }
      const double tau = (aqq - app) / (2.0 * apq);
      double t;
      if (tau >= 0.0)
        t = 1.0 / (tau + std::sqrt(1.0 + tau * tau));
      else
        t = -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
      const double c = 1.0 / std::sqrt(1.0 + t * t);
      const double s = t * c;

      for (int k = 0; k < n; ++k) {
        const double skp = S(k, p);
        const double skq = S(k, q);
        S(k, p) = c * skp - s * skq;
        S(k, q) = s * skp + c * skq;
      }
      for (int k = 0; k < n; ++k) {
        const double spk = S(p, k);
        const double sqk = S(q, k);
        S(p, k) = c * spk - s * sqk;
        S(q, k) = s * spk + c * sqk;
      }
      S(p, q) = 0.0;
      S(q, p) = 0.0;
      if (V) {
        for (int k = 0; k < n; ++k) {
          const double vkp = (*V)(k, p);
          const double vkq = (*V)(k, q);
          (*V)(k, p) = c * vkp - s * vkq;
          (*V)(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
}

inline double offdiag_norm(const DenseMatrix& S) {
  double s = 0.0;
  for (int i = 0; i < S.rows; ++i)
    for (int j = 0; j < S.cols; ++j)
      if (i != j) s += S(i, j) * S(i, j);
  return std::sqrt(s);
}

}  // namespace detail

inline SpectralSummary sym_eigs(const DenseMatrix& S_in,
                                bool want_vectors = false,
                                double rank_tol = kDefaultRankTol) {
  if (!S_in.square()) throw DimensionError("sym_eigs: matrix not square");
  if (!is_symmetric(S_in))
    throw DimensionError("sym_eigs: matrix not symmetric within tolerance");
  const int n = S_in.rows;

  DenseMatrix S = symmetrize(S_in);
  DenseMatrix V;
  DenseMatrix* Vp = nullptr;
  if (want_vectors) {
    V = identity(n);
    Vp = &V;
  }

  const double scale = std::max(1.0, frobenius_norm(S));
  for (int sweep = 0; sweep < 64; ++sweep) {
    if (detail::offdiag_norm(S) <= 1e-14 * scale) break;
    detail::jacobi_sweep(S, Vp);
  }

  SpectralSummary out;
  out.eigenvalues.resize(n);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return S(i, i) < S(j, j); });
  for (int i = 0; i < n; ++i) out.eigenvalues[i] = S(order[i], order[i]);

  if (want_vectors) {
    out.vectors = DenseMatrix(n, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) out.vectors(i, j) = V(i, order[j]);
    out.has_vectors = true;
  }

  double max_abs_eig = 0.0;
  for (double ev : out.eigenvalues) max_abs_eig = std::max(max_abs_eig, std::abs(ev));
  const double thresh = rank_tol * max_abs_eig;
  for (double ev : out.eigenvalues) {
    if (ev > thresh) {
      out.min_nonzero = ev;
      break;
    }
  }
  return out;
}

inline double eig_min(const DenseMatrix& S) {
  return sym_eigs(S).eigenvalues.front();
}

inline double eig_max(const DenseMatrix& S) {
  return sym_eigs(S).eigenvalues.back();
}

// Smallest eigenvalue of a symmetric PSD matrix above rank_tol * lambda_max.
inline double min_nonzero_eig(const DenseMatrix& S,
                              double rank_tol = kDefaultRankTol) {
  if (rank_tol <= 0.0) throw DimensionError("min_nonzero_eig: rank_tol must be > 0");
  SpectralSummary es = sym_eigs(S, false, rank_tol);
  const double lo = es.eigenvalues.front();
  const double hi = es.eigenvalues.back();
  if (lo < -1e-9 * std::max(1.0, std::abs(hi)))
    throw FactorizationError("min_nonzero_eig: matrix not positive semidefinite");
  if (!es.min_nonzero)
    throw FactorizationError("min_nonzero_eig: no nonzero eigenvalue");
  return *es.min_nonzero;
}

// ---------------------------------------------------------------------------
// Cholesky and SPD solves
// ---------------------------------------------------------------------------
inline DenseMatrix cholesky(const DenseMatrix& S) {
  if (!S.square()) throw DimensionError("cholesky: matrix not square");
  if (!is_symmetric(S))
    throw DimensionError("cholesky: matrix not symmetric within tolerance");
  const int n = S.rows;
  DenseMatrix L(n, n);
  for (int j = 0; j < n; ++j) {
    double d = S(j, j);
    for (int k = 0; k < j; ++k) d -= L(j, k) * L(j, k);
    if (d <= 0.0 || !std::isfinite(d))
      throw FactorizationError("cholesky: non-positive pivot at index " +
                               std::to_string(j));
    L(j, j) = std::sqrt(d);
    for (int i = j + 1; i < n; ++i) {
      double s = S(i, j);
      for (int k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
      L(i, j) = s / L(j, j);
    }
  }
  return L;
}

// Solves L y = b (L lower triangular).
inline DenseVector forward_subst(const DenseMatrix& L, const DenseVector& b) {
  const int n = L.rows;
  if (static_cast<int>(b.size()) != n)
    throw DimensionError("forward_subst: dimension mismatch");
  DenseVector y(n);
  for (int i = 0; i < n; ++i) {
    double s = b[i];
    for (int k = 0; k < i; ++k) s -= L(i, k) * y[k];
    y[i] = s / L(i, i);
  }
  return y;
}

// Solves L^T x = y.
inline DenseVector backward_subst_t(const DenseMatrix& L, const DenseVector& y) {
  const int n = L.rows;
  if (static_cast<int>(y.size()) != n)
    throw DimensionError("backward_subst_t: dimension mismatch");
  DenseVector x(n);
  for (int i = n - 1; i >= 0; --i) {
    double s = y[i];
    for (int k = i + 1; k < n; ++k) s -= L(k, i) * x[k];
    x[i] = s / L(i, i);
  }
  return x;
}

inline DenseVector cholesky_solve(const DenseMatrix& L, const DenseVector& b) {
  return backward_subst_t(L, forward_subst(L, b));
}

inline DenseMatrix spd_inverse(const DenseMatrix& S) {
  const DenseMatrix L = cholesky(S);
  const int n = S.rows;
  DenseMatrix Inv(n, n);
  DenseVector e(n, 0.0);
  for (int j = 0; j < n; ++j) {
    e[j] = 1.0;
    DenseVector col = cholesky_solve(L, e);
    for (int i = 0; i < n; ++i) Inv(i, j) = col[i];
    e[j] = 0.0;
  }
  return symmetrize(Inv);
}

// ---------------------------------------------------------------------------
// weighted quantities
// ---------------------------------------------------------------------------

// v^T M v; may be negative when M is indefinite.
inline double weighted_norm_sq(const DenseVector& v, const DenseMatrix& M) {
  if (M.rows != M.cols || M.rows != static_cast<int>(v.size()))
    throw DimensionError("weighted_norm_sq: dimension mismatch");
  double s = 0.0;
  for (int i = 0; i < M.rows; ++i) {
    double row = 0.0;
    for (int j = 0; j < M.cols; ++j) row += M(i, j) * v[j];
    s += v[i] * row;
  }
  return s;
}

inline double weighted_norm(const DenseVector& v, const DenseMatrix& M) {
  const double q = weighted_norm_sq(v, M);
  // guard tiny negative values from rounding when M is PSD
  return std::sqrt(std::max(0.0, q));
}

// Largest mu with Mnum v = mu Mden v (Mden symmetric PD, Mnum symmetric PSD).
// Equals lambda_max(L^{-1} Mnum L^{-T}) with Mden = L L^T.
inline double gen_eig_max(const DenseMatrix& Mnum, const DenseMatrix& Mden) {
  if (Mnum.rows != Mden.rows || Mnum.cols != Mden.cols)
    throw DimensionError("gen_eig_max: shape mismatch");
  const DenseMatrix L = cholesky(Mden);
  const int n = Mnum.rows;
  // B = L^{-1} Mnum L^{-T}, built column by column
  DenseMatrix B(n, n);
  DenseVector col(n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) col[i] = Mnum(i, j);
    col = forward_subst(L, col);  // rows of L^{-1} Mnum
    for (int i = 0; i < n; ++i) B(i, j) = col[i];
  }
  // now apply L^{-1} on the right: B <- B L^{-T}  ==  (L^{-1} B^T)^T
  DenseMatrix Bt = transpose(B);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) col[i] = Bt(i, j);
    col = forward_subst(L, col);
    for (int i = 0; i < n; ++i) Bt(i, j) = col[i];
  }
  const double lam = eig_max(symmetrize(transpose(Bt)));
  return std::max(0.0, lam);
}

// Symmetric PSD square root via the spectral decomposition.
inline DenseMatrix sym_sqrt(const DenseMatrix& S,
                            double rank_tol = kDefaultRankTol) {
  SpectralSummary es = sym_eigs(S, true, rank_tol);
  const int n = S.rows;
  const double hi = es.eigenvalues.back();
  DenseMatrix R(n, n);
  for (int k = 0; k < n; ++k) {
    double ev = es.eigenvalues[k];
    if (ev < -1e-9 * std::max(1.0, std::abs(hi)))
      throw FactorizationError("sym_sqrt: matrix not positive semidefinite");
    ev = std::max(0.0, ev);
    const double r = std::sqrt(ev);
    if (r == 0.0) continue;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        R(i, j) += r * es.vectors(i, k) * es.vectors(j, k);
  }
  return symmetrize(R);
}

// Moore-Penrose pseudo-inverse of a symmetric PSD matrix.
inline DenseMatrix psd_pseudo_inverse(const DenseMatrix& S,
                                      double rank_tol = kDefaultRankTol) {
  SpectralSummary es = sym_eigs(S, true, rank_tol);
  const int n = S.rows;
  double max_abs_eig = 0.0;
  for (double ev : es.eigenvalues) max_abs_eig = std::max(max_abs_eig, std::abs(ev));
  const double thresh = rank_tol * max_abs_eig;
  DenseMatrix R(n, n);
  for (int k = 0; k < n; ++k) {
    const double ev = es.eigenvalues[k];
    if (ev <= thresh) continue;
    const double r = 1.0 / ev;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        R(i, j) += r * es.vectors(i, k) * es.vectors(j, k);
  }
  return symmetrize(R);
}

// ---------------------------------------------------------------------------
// plain-text matrix serialization: "rows cols" then row-major entries
// ---------------------------------------------------------------------------
inline void write_matrix(std::ostream& os, const DenseMatrix& M) {
  os << M.rows << ' ' << M.cols << '\n';
  for (int i = 0; i < M.rows; ++i) {
    for (int j = 0; j < M.cols; ++j) {
      if (j) os << ' ';
      os << format_double(M(i, j));
    }
    os << '\n';
  }
}

inline void write_matrix_file(const std::string& path, const DenseMatrix& M) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot open matrix file for writing: " + path);
  write_matrix(f, M);
}

inline DenseMatrix read_matrix(std::istream& is) {
  int r = 0, c = 0;
  if (!(is >> r >> c) || r < 1 || c < 1)
    throw ConfigError("matrix input: bad header (expected 'rows cols')");
  DenseMatrix M(r, c);
  for (std::size_t i = 0; i < M.a.size(); ++i)
    if (!(is >> M.a[i]))
      throw ConfigError("matrix input: expected " + std::to_string(M.a.size()) +
                        " entries, failed at entry " + std::to_string(i));
  return M;
}

inline DenseMatrix read_matrix_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open matrix file: " + path);
  return read_matrix(f);
}

}  // namespace pdopt
