#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "pdopt/linalg.hpp"
#include "pdopt/rng.hpp"

using namespace pdopt;

namespace {

DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const int r = static_cast<int>(rows.size());
  const int c = static_cast<int>(rows.begin()->size());
  DenseMatrix M(r, c);
  int i = 0;
  for (const auto& row : rows) {
    int j = 0;
    for (double v : row) M(i, j++) = v;
    ++i;
  }
  return M;
}

DenseMatrix random_symmetric(int n, Rng& rng, double scale = 1.0) {
  DenseMatrix S(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double v = scale * (2.0 * rng.uniform01() - 1.0);
      S(i, j) = v;
      S(j, i) = v;
    }
  return S;
}

DenseMatrix random_spd(int n, Rng& rng) {
  DenseMatrix B(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) B(i, j) = rng.normal();
  DenseMatrix S = matmul(transpose(B), B);
  for (int i = 0; i < n; ++i) S(i, i) += 0.5;  // keep well away from singular
  return symmetrize(S);
}

// Independent eigenvalue oracle: evaluates det(S - t I) by Gaussian
// elimination with partial pivoting and bisects every sign change of the
// characteristic polynomial on a fine grid inside the Gershgorin bounds.
double det_shifted(const DenseMatrix& S, double t) {
  const int n = S.rows;
  DenseMatrix A = S;
  for (int i = 0; i < n; ++i) A(i, i) -= t;
  double det = 1.0;
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(A(i, k)) > std::abs(A(piv, k))) piv = i;
    if (A(piv, k) == 0.0) return 0.0;
    if (piv != k) {
      for (int j = 0; j < n; ++j) std::swap(A(piv, j), A(k, j));
      det = -det;
    }
    det *= A(k, k);
    for (int i = k + 1; i < n; ++i) {
      const double f = A(i, k) / A(k, k);
      for (int j = k; j < n; ++j) A(i, j) -= f * A(k, j);
    }
  }
  return det;
}

std::vector<double> charpoly_roots(const DenseMatrix& S, int grid = 40000) {
  const int n = S.rows;
  double lo = 0.0, hi = 0.0;
  for (int i = 0; i < n; ++i) {
    double radius = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != i) radius += std::abs(S(i, j));
    lo = std::min(lo, S(i, i) - radius);
    hi = std::max(hi, S(i, i) + radius);
  }
  lo -= 1e-6;
  hi += 1e-6;
  std::vector<double> roots;
  double prev_t = lo;
  double prev_d = det_shifted(S, lo);
  for (int g = 1; g <= grid; ++g) {
    const double t = lo + (hi - lo) * g / grid;
    const double d = det_shifted(S, t);
    if ((prev_d < 0.0 && d > 0.0) || (prev_d > 0.0 && d < 0.0)) {
      double a = prev_t, b = t;
      for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (a + b);
        const double dm = det_shifted(S, m);
        if ((dm < 0.0) == (prev_d < 0.0))
          a = m;
        else
          b = m;
      }
      roots.push_back(0.5 * (a + b));
    } else if (d == 0.0) {
      roots.push_back(t);
    }
    prev_t = t;
    prev_d = d;
  }
  return roots;
}

}  // namespace

TEST_CASE("sym_eigs on simple matrices") {
  auto es = sym_eigs(from_rows({{2, 0}, {0, 3}}));
  REQUIRE(es.eigenvalues[0] == Catch::Approx(2.0).margin(1e-12));
  REQUIRE(es.eigenvalues[1] == Catch::Approx(3.0).margin(1e-12));

  auto id3 = sym_eigs(identity(3));
  for (double ev : id3.eigenvalues) REQUIRE(ev == Catch::Approx(1.0).margin(1e-12));

  // roots of lambda^2 - 1
  auto swap = sym_eigs(from_rows({{0, 1}, {1, 0}}));
  REQUIRE(swap.eigenvalues[0] == Catch::Approx(-1.0).margin(1e-12));
  REQUIRE(swap.eigenvalues[1] == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("sym_eigs rejects bad input") {
  REQUIRE_THROWS_AS(sym_eigs(DenseMatrix(2, 3)), DimensionError);
  REQUIRE_THROWS_AS(sym_eigs(from_rows({{0, 1}, {2, 0}})), DimensionError);
}

TEST_CASE("sym_eigs matches characteristic polynomial roots (random 2..6)") {
  Rng rng(12345);
  for (int n = 2; n <= 6; ++n) {
    for (int rep = 0; rep < 4; ++rep) {
      DenseMatrix S = random_symmetric(n, rng, 2.0);
      auto es = sym_eigs(S);
      auto roots = charpoly_roots(S);
      REQUIRE(roots.size() == static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i)
        REQUIRE(es.eigenvalues[i] == Catch::Approx(roots[i]).margin(1e-8));
    }
  }
}

TEST_CASE("sym_eigs reconstruction with eigenvectors") {
  Rng rng(99);
  for (int n : {2, 4, 7}) {
    DenseMatrix S = random_symmetric(n, rng, 3.0);
    auto es = sym_eigs(S, true);
    DenseMatrix R(n, n);
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          R(i, j) += es.eigenvalues[k] * es.vectors(i, k) * es.vectors(j, k);
    REQUIRE(frobenius_norm(mat_sub(R, S)) <=
            1e-10 * std::max(1.0, frobenius_norm(S)));
  }
}

TEST_CASE("min_nonzero_eig") {
  // I - W for the swap mixing matrix has spectrum {0, 2}
  REQUIRE(min_nonzero_eig(from_rows({{1, -1}, {-1, 1}})) ==
          Catch::Approx(2.0).margin(1e-12));
  REQUIRE(min_nonzero_eig(identity(4)) == Catch::Approx(1.0).margin(1e-12));
  REQUIRE_THROWS_AS(min_nonzero_eig(DenseMatrix(3, 3)), FactorizationError);
}

TEST_CASE("cholesky basics and round trip") {
  REQUIRE(frobenius_norm(mat_sub(cholesky(identity(3)), identity(3))) <= 1e-14);

  auto L = cholesky(from_rows({{4, 0}, {0, 9}}));
  REQUIRE(L(0, 0) == Catch::Approx(2.0));
  REQUIRE(L(1, 1) == Catch::Approx(3.0));

  auto L2 = cholesky(from_rows({{2, 1}, {1, 2}}));
  auto R = matmul(L2, transpose(L2));
  REQUIRE(frobenius_norm(mat_sub(R, from_rows({{2, 1}, {1, 2}}))) <= 1e-12);

  Rng rng(4242);
  for (int n : {2, 5, 9}) {
    DenseMatrix S = random_spd(n, rng);
    DenseMatrix Lr = cholesky(S);
    REQUIRE(frobenius_norm(mat_sub(matmul(Lr, transpose(Lr)), S)) <=
            1e-10 * frobenius_norm(S));
  }
}

TEST_CASE("cholesky names the failing pivot") {
  try {
    cholesky(from_rows({{1, 0}, {0, -2}}));
    FAIL("expected FactorizationError");
  } catch (const FactorizationError& e) {
    REQUIRE(std::string(e.what()).find("index 1") != std::string::npos);
  }
}

TEST_CASE("weighted_norm_sq") {
  REQUIRE(weighted_norm_sq({1, 1}, identity(2)) == Catch::Approx(2.0));
  // indefinite weights are allowed and can give negative squares
  REQUIRE(weighted_norm_sq({1, 0}, from_rows({{-1, 0}, {0, 1}})) ==
          Catch::Approx(-1.0));
  REQUIRE(weighted_norm_sq({1, 2}, from_rows({{2, 1}, {1, 2}})) ==
          Catch::Approx(14.0));
  REQUIRE_THROWS_AS(weighted_norm_sq({1, 2, 3}, identity(2)), DimensionError);
}

TEST_CASE("weighted norm splits across a matrix sum") {
  Rng rng(7);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 2 + static_cast<int>(rng.below(5));
    DenseMatrix M1 = random_symmetric(n, rng);
    DenseMatrix M2 = random_symmetric(n, rng);
    DenseVector v(n);
    for (double& x : v) x = rng.normal();
    const double lhs = weighted_norm_sq(v, mat_add(M1, M2));
    const double rhs = weighted_norm_sq(v, M1) + weighted_norm_sq(v, M2);
    REQUIRE(lhs == Catch::Approx(rhs).margin(1e-12 * (1.0 + std::abs(lhs))));
  }
}

TEST_CASE("gen_eig_max") {
  REQUIRE(gen_eig_max(identity(3), identity(3)) == Catch::Approx(1.0).margin(1e-10));
  REQUIRE(gen_eig_max(DenseMatrix(2, 2), identity(2)) == Catch::Approx(0.0));
  // diagonal ratio oracle: max(2/1, 0/4) = 2
  REQUIRE(gen_eig_max(from_rows({{2, 0}, {0, 0}}), from_rows({{1, 0}, {0, 4}})) ==
          Catch::Approx(2.0).margin(1e-10));
  REQUIRE_THROWS_AS(gen_eig_max(identity(2), from_rows({{1, 0}, {0, -1}})),
                    FactorizationError);

  Rng rng(31);
  for (int rep = 0; rep < 8; ++rep) {
    DenseMatrix M = random_spd(3 + static_cast<int>(rng.below(4)), rng);
    REQUIRE(gen_eig_max(M, M) == Catch::Approx(1.0).margin(1e-10));
  }
}

TEST_CASE("sym_sqrt and psd_pseudo_inverse") {
  DenseMatrix S = from_rows({{1, -1}, {-1, 1}});
  DenseMatrix R = sym_sqrt(S);
  REQUIRE(frobenius_norm(mat_sub(matmul(R, transpose(R)), S)) <= 1e-10);

  DenseMatrix P = psd_pseudo_inverse(S);
  // pseudo-inverse identity S P S = S
  REQUIRE(frobenius_norm(mat_sub(matmul(S, matmul(P, S)), S)) <= 1e-10);
}

TEST_CASE("matrix text round trip") {
  Rng rng(5150);
  DenseMatrix M(3, 4);
  for (double& v : M.a) v = rng.normal() * std::pow(10.0, rng.uniform(-8, 8));
  std::stringstream ss;
  write_matrix(ss, M);
  DenseMatrix R = read_matrix(ss);
  REQUIRE(R.rows == M.rows);
  REQUIRE(R.cols == M.cols);
  for (std::size_t i = 0; i < M.a.size(); ++i) REQUIRE(R.a[i] == M.a[i]);
}

TEST_CASE("matrix text rejects malformed input") {
  std::stringstream bad("2 x\n1 2\n3 4\n");
  REQUIRE_THROWS_AS(read_matrix(bad), ConfigError);
  std::stringstream trunc("2 2\n1 2 3\n");
  REQUIRE_THROWS_AS(read_matrix(trunc), ConfigError);
}
