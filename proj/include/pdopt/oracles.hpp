#pragma once

// Oracle abstractions for the three functions of the composite problem
//   minimize f(x) + (h [inf-conv] l)(A x):
// gradient oracles for the smooth pieces f and l*, a proximal oracle for h,
// and a bounded linear operator A. Ships a small catalog of concrete
// instances plus the Moreau-decomposition bridge from prox_h to prox of h*.

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pdopt/errors.hpp"
#include "pdopt/linalg.hpp"
#include "pdopt/rng.hpp"

namespace pdopt {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class SmoothKind { Zero, Linear, Quadratic, Custom };
enum class ProxKind { Zero, L1, SqL2, Box, IndicatorZero, Custom };

// ---------------------------------------------------------------------------
// smooth oracle: single-valued gradient map with declared Euclidean constants
// ---------------------------------------------------------------------------
struct SmoothOracle {
  int dim = 0;
  std::function<DenseVector(const DenseVector&)> gradient;
  // Lipschitz constant of the gradient in the Euclidean metric. 0 means the
  // gradient is constant, in which case the cocoercivity constant is +inf
  // and all dependent stepsize terms take their exact limits downstream.
  double lipschitz = 0.0;
  // Euclidean strong-monotonicity constant of the gradient map.
  double strong_convexity = 0.0;
  std::function<double(const DenseVector&)> value;  // may be empty
  SmoothKind kind = SmoothKind::Custom;

  bool constant_gradient() const { return lipschitz == 0.0; }
  // cocoercivity constant 1/L in the Euclidean metric; +inf when L = 0
  double beta_euclidean() const {
    return lipschitz > 0.0 ? 1.0 / lipschitz : kInf;
  }
};

// ---------------------------------------------------------------------------
// prox oracle: (t, sigma) -> prox_{sigma h}(t)
// ---------------------------------------------------------------------------
struct ProxOracle {
  int dim = 0;
  std::function<DenseVector(const DenseVector&, double)> prox;
  // Euclidean strong-monotonicity constant of the subdifferential of h*.
  double conj_strong_monotonicity = 0.0;
  std::function<double(const DenseVector&)> value;  // h itself; may be empty
  ProxKind kind = ProxKind::Custom;

  // catalog parameters kept for reporting and closed-form objectives
  double weight = 0.0;     // L1
  double curvature = 0.0;  // SqL2
  DenseVector box_lo, box_hi;

  DenseVector eval_prox(const DenseVector& t, double sigma) const {
    if (sigma <= 0.0)
      throw InfeasibleError("prox: stepsize must be positive, got " +
                            format_double(sigma));
    if (static_cast<int>(t.size()) != dim)
      throw DimensionError("prox: dimension mismatch");
    return prox(t, sigma);
  }
};

// ---------------------------------------------------------------------------
// bounded linear operator with explicit adjoint
// ---------------------------------------------------------------------------
struct LinearOperator {
  int dim_in = 0;   // domain (x-space)
  int dim_out = 0;  // codomain (s-space)
  std::function<DenseVector(const DenseVector&)> forward;  // x -> A x
  std::function<DenseVector(const DenseVector&)> adjoint;  // s -> A^T s
  std::optional<DenseMatrix> matrix;

  DenseVector apply(const DenseVector& x) const {
    if (static_cast<int>(x.size()) != dim_in)
      throw DimensionError("LinearOperator: forward dimension mismatch");
    return forward(x);
  }
  DenseVector apply_t(const DenseVector& s) const {
    if (static_cast<int>(s.size()) != dim_out)
      throw DimensionError("LinearOperator: adjoint dimension mismatch");
    return adjoint(s);
  }
};

inline LinearOperator matrix_operator(DenseMatrix A) {
  LinearOperator op;
  op.dim_in = A.cols;
  op.dim_out = A.rows;
  op.matrix = std::move(A);
  const DenseMatrix* M = &*op.matrix;
  op.forward = [M](const DenseVector& x) { return matvec(*M, x); };
  op.adjoint = [M](const DenseVector& s) { return matvec_t(*M, s); };
  return op;
}

inline LinearOperator zero_operator(int dim_in, int dim_out) {
  return matrix_operator(DenseMatrix(dim_out, dim_in));
}

// Explicit matrix for an operator, applying it to basis vectors if needed.
inline DenseMatrix materialize(const LinearOperator& op) {
  if (op.matrix) return *op.matrix;
  DenseMatrix A(op.dim_out, op.dim_in);
  DenseVector e(op.dim_in, 0.0);
  for (int j = 0; j < op.dim_in; ++j) {
    e[j] = 1.0;
    DenseVector col = op.forward(e);
    for (int i = 0; i < op.dim_out; ++i) A(i, j) = col[i];
    e[j] = 0.0;
  }
  return A;
}

// ---------------------------------------------------------------------------
// smooth catalog
// ---------------------------------------------------------------------------
inline SmoothOracle zero_smooth(int dim) {
  SmoothOracle o;
  o.dim = dim;
  o.kind = SmoothKind::Zero;
  o.gradient = [dim](const DenseVector&) { return DenseVector(dim, 0.0); };
  o.value = [](const DenseVector&) { return 0.0; };
  return o;
}

// f(x) = b^T x; constant gradient, so the cocoercivity constant is +inf.
inline SmoothOracle linear_oracle(DenseVector b) {
  SmoothOracle o;
  o.dim = static_cast<int>(b.size());
  o.kind = SmoothKind::Linear;
  o.value = [b](const DenseVector& x) { return dot(b, x); };
  o.gradient = [b = std::move(b)](const DenseVector&) { return b; };
  return o;
}

// f(x) = 0.5 ||K x - y||^2 with gradient K^T (K x - y).
inline SmoothOracle quadratic_oracle(DenseMatrix K, DenseVector y) {
  if (K.rows != static_cast<int>(y.size()))
    throw DimensionError("quadratic_oracle: K and y are incompatible");
  SmoothOracle o;
  o.dim = K.cols;
  o.kind = SmoothKind::Quadratic;
  if (max_abs(K) == 0.0) {
    // degenerate K: constant (zero) gradient
    o.lipschitz = 0.0;
    o.strong_convexity = 0.0;
  } else {
    const DenseMatrix KtK = symmetrize(matmul(transpose(K), K));
    auto es = sym_eigs(KtK);
    o.lipschitz = std::max(0.0, es.eigenvalues.back());
    o.strong_convexity = std::max(0.0, es.eigenvalues.front());
  }
  auto Kp = std::make_shared<DenseMatrix>(std::move(K));
  auto yp = std::make_shared<DenseVector>(std::move(y));
  o.gradient = [Kp, yp](const DenseVector& x) {
    DenseVector r = matvec(*Kp, x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= (*yp)[i];
    return matvec_t(*Kp, r);
  };
  o.value = [Kp, yp](const DenseVector& x) {
    DenseVector r = matvec(*Kp, x);
    double s = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double d = r[i] - (*yp)[i];
      s += d * d;
    }
    return 0.5 * s;
  };
  return o;
}

// g(v) = (c/2) ||v - center||^2; gradient c (v - center), L = mu = c.
inline SmoothOracle quadratic_distance_oracle(double c, DenseVector center) {
  if (c < 0.0) throw InfeasibleError("quadratic_distance_oracle: c must be >= 0");
  SmoothOracle o;
  o.dim = static_cast<int>(center.size());
  o.kind = SmoothKind::Quadratic;
  o.lipschitz = c;
  o.strong_convexity = c;
  auto cp = std::make_shared<DenseVector>(std::move(center));
  o.gradient = [c, cp](const DenseVector& v) {
    DenseVector g(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) g[i] = c * (v[i] - (*cp)[i]);
    return g;
  };
  o.value = [c, cp](const DenseVector& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double d = v[i] - (*cp)[i];
      s += d * d;
    }
    return 0.5 * c * s;
  };
  return o;
}

// ---------------------------------------------------------------------------
// prox catalog
// ---------------------------------------------------------------------------

// componentwise soft threshold, the prox of sigma * ||.||_1
inline DenseVector prox_l1(const DenseVector& t, double sigma) {
  if (sigma <= 0.0)
    throw InfeasibleError("prox_l1: stepsize must be positive");
  DenseVector r(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double m = std::abs(t[i]) - sigma;
    r[i] = m > 0.0 ? (t[i] > 0.0 ? m : -m) : 0.0;
  }
  return r;
}

inline ProxOracle zero_prox(int dim) {
  ProxOracle o;
  o.dim = dim;
  o.kind = ProxKind::Zero;
  o.prox = [](const DenseVector& t, double) { return t; };
  o.value = [](const DenseVector&) { return 0.0; };
  return o;
}

inline ProxOracle indicator_zero_prox(int dim) {
  ProxOracle o;
  o.dim = dim;
  o.kind = ProxKind::IndicatorZero;
  o.prox = [dim](const DenseVector&, double) { return DenseVector(dim, 0.0); };
  o.value = [](const DenseVector& t) {
    for (double v : t)
      if (v != 0.0) return kInf;
    return 0.0;
  };
  return o;
}

inline ProxOracle l1_prox(int dim, double weight) {
  if (weight < 0.0) throw InfeasibleError("l1_prox: weight must be >= 0");
  ProxOracle o;
  o.dim = dim;
  o.kind = ProxKind::L1;
  o.weight = weight;
  o.prox = [weight](const DenseVector& t, double sigma) {
    return prox_l1(t, sigma * weight);
  };
  o.value = [weight](const DenseVector& t) {
    double s = 0.0;
    for (double v : t) s += std::abs(v);
    return weight * s;
  };
  return o;
}

inline ProxOracle box_prox(DenseVector lo, DenseVector hi) {
  if (lo.size() != hi.size())
    throw DimensionError("box_prox: bound sizes differ");
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (lo[i] > hi[i]) throw InfeasibleError("box_prox: empty box");
  ProxOracle o;
  o.dim = static_cast<int>(lo.size());
  o.kind = ProxKind::Box;
  o.box_lo = lo;
  o.box_hi = hi;
  auto lop = std::make_shared<DenseVector>(std::move(lo));
  auto hip = std::make_shared<DenseVector>(std::move(hi));
  o.prox = [lop, hip](const DenseVector& t, double) {
    DenseVector r(t.size());
    for (std::size_t i = 0; i < t.size(); ++i)
      r[i] = std::min((*hip)[i], std::max((*lop)[i], t[i]));
    return r;
  };
  o.value = [lop, hip](const DenseVector& t) {
    for (std::size_t i = 0; i < t.size(); ++i)
      if (t[i] < (*lop)[i] - 1e-12 || t[i] > (*hip)[i] + 1e-12) return kInf;
    return 0.0;
  };
  return o;
}

// h(t) = (c/2) ||t||^2; its conjugate is strongly convex with constant 1/c.
inline ProxOracle sq_l2_prox(int dim, double c) {
  if (c <= 0.0) throw InfeasibleError("sq_l2_prox: c must be > 0");
  ProxOracle o;
  o.dim = dim;
  o.kind = ProxKind::SqL2;
  o.curvature = c;
  o.conj_strong_monotonicity = 1.0 / c;
  o.prox = [c](const DenseVector& t, double sigma) {
    DenseVector r(t.size());
    const double f = 1.0 / (1.0 + sigma * c);
    for (std::size_t i = 0; i < t.size(); ++i) r[i] = f * t[i];
    return r;
  };
  o.value = [c](const DenseVector& t) {
    double s = 0.0;
    for (double v : t) s += v * v;
    return 0.5 * c * s;
  };
  return o;
}

// prox_{sigma h*}(t) via the Moreau identity:
//   prox_{sigma h*}(t) = t - sigma * prox_{h/sigma}(t/sigma).
inline DenseVector prox_conjugate(const ProxOracle& h, const DenseVector& t,
                                  double sigma) {
  if (sigma <= 0.0)
    throw InfeasibleError("prox_conjugate: stepsize must be positive");
  DenseVector scaled(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) scaled[i] = t[i] / sigma;
  DenseVector p = h.eval_prox(scaled, 1.0 / sigma);
  DenseVector r(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) r[i] = t[i] - sigma * p[i];
  return r;
}

// ---------------------------------------------------------------------------
// assumption validation
// ---------------------------------------------------------------------------
struct AssumptionReport {
  struct Entry {
    std::string name;
    double worst_slack;  // min over samples of (lhs - rhs); negative = violated
    int violations;
  };
  std::vector<Entry> entries;

  bool ok(double tol = 1e-10) const {
    for (const auto& e : entries)
      if (e.worst_slack < -tol) return false;
    return true;
  }
  const Entry& find(const std::string& name) const {
    for (const auto& e : entries)
      if (e.name == name) return e;
    throw ConfigError("AssumptionReport: no entry named " + name);
  }
};

// Samples point pairs deterministically from the seed and checks the
// declared cocoercivity / strong-monotonicity constants in the Euclidean
// metric. Violations are reported, not thrown.
inline AssumptionReport validate_assumptions(const SmoothOracle& o, int probes,
                                             std::uint64_t seed) {
  if (probes < 1) throw ConfigError("validate_assumptions: probes must be >= 1");
  Rng rng(seed);
  AssumptionReport rep;
  AssumptionReport::Entry coco{"cocoercivity", kInf, 0};
  AssumptionReport::Entry mono{"strong_monotonicity", kInf, 0};
  const double beta = o.beta_euclidean();
  for (int p = 0; p < probes; ++p) {
    DenseVector x(o.dim), xs(o.dim);
    for (int i = 0; i < o.dim; ++i) x[i] = 4.0 * rng.normal();
    for (int i = 0; i < o.dim; ++i) xs[i] = 4.0 * rng.normal();
    const DenseVector dg = sub(o.gradient(x), o.gradient(xs));
    const DenseVector dx = sub(x, xs);
    const double inner = dot(dx, dg);
    const double g2 = dot(dg, dg);
    const double x2 = dot(dx, dx);
    // constant gradients satisfy cocoercivity with any constant
    const double coco_slack = o.constant_gradient() ? 0.0 : inner - beta * g2;
    const double mono_slack = inner - o.strong_convexity * x2;
    coco.worst_slack = std::min(coco.worst_slack, coco_slack);
    mono.worst_slack = std::min(mono.worst_slack, mono_slack);
    const double scale_c = 1e-10 * (1.0 + std::abs(inner) + g2);
    const double scale_m = 1e-10 * (1.0 + std::abs(inner) + x2);
    if (coco_slack < -scale_c) ++coco.violations;
    if (mono_slack < -scale_m) ++mono.violations;
  }
  rep.entries.push_back(coco);
  rep.entries.push_back(mono);
  return rep;
}

inline AssumptionReport validate_assumptions(const ProxOracle& o, int probes,
                                             std::uint64_t seed) {
  if (probes < 1) throw ConfigError("validate_assumptions: probes must be >= 1");
  Rng rng(seed);
  AssumptionReport rep;
  AssumptionReport::Entry firm{"firm_nonexpansiveness", kInf, 0};
  AssumptionReport::Entry mono{"conjugate_strong_monotonicity", kInf, 0};
  for (int p = 0; p < probes; ++p) {
    const double sigma = std::exp(rng.uniform(-2.0, 2.0));
    DenseVector u(o.dim), v(o.dim);
    for (int i = 0; i < o.dim; ++i) u[i] = 4.0 * rng.normal();
    for (int i = 0; i < o.dim; ++i) v[i] = 4.0 * rng.normal();
    const DenseVector pu = o.eval_prox(u, sigma);
    const DenseVector pv = o.eval_prox(v, sigma);
    const DenseVector dp = sub(pu, pv);
    const double lhs = dot(dp, sub(u, v));
    const double rhs = dot(dp, dp);
    const double firm_slack = lhs - rhs;
    firm.worst_slack = std::min(firm.worst_slack, firm_slack);
    if (firm_slack < -1e-10 * (1.0 + std::abs(lhs))) ++firm.violations;

    // Moreau pairs (s, q) with q in the subdifferential of h* at s
    const DenseVector su = prox_conjugate(o, u, sigma);
    const DenseVector sv = prox_conjugate(o, v, sigma);
    DenseVector qu(o.dim), qv(o.dim);
    for (int i = 0; i < o.dim; ++i) qu[i] = (u[i] - su[i]) / sigma;
    for (int i = 0; i < o.dim; ++i) qv[i] = (v[i] - sv[i]) / sigma;
    const DenseVector ds = sub(su, sv);
    const double inner = dot(ds, sub(qu, qv));
    const double mono_slack =
        inner - o.conj_strong_monotonicity * dot(ds, ds);
    mono.worst_slack = std::min(mono.worst_slack, mono_slack);
    if (mono_slack < -1e-10 * (1.0 + std::abs(inner))) ++mono.violations;
  }
  rep.entries.push_back(firm);
  rep.entries.push_back(mono);
  return rep;
}

// Adjoint consistency check for a linear operator on random probes:
// |<Ax, s> - <x, A^T s>| <= tol * ||x|| ||s|| ||A||_F.
inline double adjoint_mismatch(const LinearOperator& op, int probes,
                               std::uint64_t seed) {
  Rng rng(seed);
  const double a_norm = frobenius_norm(materialize(op));
  double worst = 0.0;
  for (int p = 0; p < probes; ++p) {
    DenseVector x(op.dim_in), s(op.dim_out);
    for (auto& v : x) v = rng.normal();
    for (auto& v : s) v = rng.normal();
    const double lhs = dot(op.apply(x), s);
    const double rhs = dot(x, op.apply_t(s));
    const double denom = std::max(1e-300, norm2(x) * norm2(s) * std::max(1.0, a_norm));
    worst = std::max(worst, std::abs(lhs - rhs) / denom);
  }
  return worst;
}

}  // namespace pdopt
