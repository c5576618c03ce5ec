#pragma once

// Generalized primal-dual iteration for
//   minimize f(x) + (h [inf-conv] l)(A x)
// with scaling operators P (primal) and D (dual):
//
//   s+ = ((gamma/lambda) D + dh*)^{-1} ( (1/gamma) M s
//                                        + A (x - gamma P^{-1} grad_f(x))
//                                        - grad_lstar(s) )
//   x+ = x - gamma P^{-1} grad_f(x) - gamma P^{-1} A^T s+
//
// where M = (gamma^2/lambda) (D - lambda A P^{-1} A^T). The certificate
// machinery splits M into M1 - M2 with a free parameter theta in (3/4, 1]
// and derives the feasibility bounds and linear-rate constants from that
// algebra. The dual stepsize is admissible up to
// lambda < 4 / (3 lambda_max(D^{-1/2} A P^{-1} A^T D^{-1/2})), one third
// beyond the classical positive-semidefiniteness bound.

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pdopt/errors.hpp"
#include "pdopt/linalg.hpp"
#include "pdopt/oracles.hpp"

namespace pdopt {

// ---------------------------------------------------------------------------
// problem and parameters
// ---------------------------------------------------------------------------
struct ProblemSpec {
  SmoothOracle f;      // on the x-space
  ProxOracle h;        // on the s-space
  SmoothOracle lstar;  // on the s-space; zero oracle means l = indicator of {0}
  LinearOperator A;    // x-space -> s-space
  DenseMatrix P;       // symmetric PD, default identity
  DenseMatrix D;       // symmetric PD, default identity
  // set when l*(s) = (c/2)||s||^2, enabling the Moreau-envelope objective
  std::optional<double> lstar_moreau_curvature;

  int dim_x() const { return A.dim_in; }
  int dim_s() const { return A.dim_out; }

  void validate() const {
    if (f.dim != A.dim_in)
      throw DimensionError("ProblemSpec: f dimension does not match A domain");
    if (h.dim != A.dim_out)
      throw DimensionError("ProblemSpec: h dimension does not match A codomain");
    if (lstar.dim != A.dim_out)
      throw DimensionError("ProblemSpec: l* dimension does not match A codomain");
    if (P.rows != A.dim_in || P.cols != A.dim_in)
      throw DimensionError("ProblemSpec: P must be dim_x by dim_x");
    if (D.rows != A.dim_out || D.cols != A.dim_out)
      throw DimensionError("ProblemSpec: D must be dim_s by dim_s");
    if (!is_symmetric(P) || !is_symmetric(D))
      throw DimensionError("ProblemSpec: P and D must be symmetric");
  }
};

inline ProblemSpec make_problem(SmoothOracle f, ProxOracle h, SmoothOracle lstar,
                                LinearOperator A) {
  ProblemSpec spec;
  spec.P = identity(A.dim_in);
  spec.D = identity(A.dim_out);
  spec.f = std::move(f);
  spec.h = std::move(h);
  spec.lstar = std::move(lstar);
  spec.A = std::move(A);
  spec.validate();
  return spec;
}

struct PdParams {
  double gamma = 1.0;   // primal stepsize, > 0
  double lambda = 1.0;  // dual stepsize factor, > 0
  double tol = 1e-10;   // fixed-point residual threshold
  int max_iters = 10000;
  bool allow_infeasible = false;   // permit stepping past the certified bounds
  int trace_thin = 1;              // record every trace_thin-th iteration
  double divergence_threshold = 1e9;  // iterate-norm guard
};

// ---------------------------------------------------------------------------
// certificate bundle: the operator algebra derived from (gamma, lambda)
// ---------------------------------------------------------------------------
struct CertBundle {
  double gamma = 0.0;
  double lambda = 0.0;
  double theta = 1.0;

  DenseMatrix m;        // (gamma^2/lambda)(D - lambda A P^{-1} A^T) = m1 - m2
  DenseMatrix m1;       // (gamma^2/lambda)(D - theta lambda A P^{-1} A^T)
  DenseMatrix m2;       // gamma^2 (1 - theta) A P^{-1} A^T
  DenseMatrix m_tilde;  // m1 + m2
  DenseMatrix m_hat;    // (1 + 2 gamma tau_h) m1 + m2
  DenseMatrix m_lower;  // m1 + (2 theta - 1)/(2 (1 - theta)) m2, or m1 at theta = 1

  double c1 = 0.0;                 // sup of the (m2, m1) generalized spectrum
  std::optional<double> c2;        // lambda sig / (1 - theta lambda sig),
                                   // sig = smallest nonzero eigenvalue of A A^T
  std::optional<double> rho1;      // linear rate under full strong convexity
  std::optional<double> rho2;      // linear rate for the f = 0, h* = 0 case
  std::optional<double> rate_weight_x;  // x-part weight of the rho2 composite

  double beta = kInf;   // joint cocoercivity constant in the solver metrics
  double tau_f = 0.0;   // strong monotonicity of grad f in the P metric
  double tau_h = 0.0;   // strong monotonicity of dh* in the m1 metric
  double tau_l = 0.0;   // strong monotonicity of grad l* in the m1 metric

  bool lambda_feasible = false;
  bool gamma_feasible = false;
  bool m1_positive_definite = false;
  bool feasible() const {
    return lambda_feasible && gamma_feasible && m1_positive_definite;
  }
  std::vector<std::string> warnings;

  double lambda_bound = kInf;  // 4 / (3 lambda_max(G)); +inf when A = 0
  double g_max = 0.0;          // lambda_max(D^{-1/2} A P^{-1} A^T D^{-1/2})

  // cached solver internals
  DenseMatrix p_inv;
  bool p_is_identity = true;
  double d_scalar = 1.0;  // D = d_scalar I when scalar_d
  bool scalar_d = true;
};

namespace detail {

inline bool matrix_is_identity(const DenseMatrix& M, double tol = 1e-14) {
  if (!M.square()) return false;
  for (int i = 0; i < M.rows; ++i)
    for (int j = 0; j < M.cols; ++j) {
      const double want = i == j ? 1.0 : 0.0;
      if (std::abs(M(i, j) - want) > tol) return false;
    }
  return true;
}

inline std::optional<double> scalar_multiple_of_identity(const DenseMatrix& M) {
  if (!M.square() || M.rows == 0) return std::nullopt;
  const double d = M(0, 0);
  const double tol = 1e-12 * std::max(1.0, std::abs(d));
  for (int i = 0; i < M.rows; ++i)
    for (int j = 0; j < M.cols; ++j) {
      const double want = i == j ? d : 0.0;
      if (std::abs(M(i, j) - want) > tol) return std::nullopt;
    }
  return d;
}

// 2 gamma - gamma^2 / beta, with the exact limit 2 gamma when beta = +inf
inline double damping_factor(double gamma, double beta) {
  return std::isinf(beta) ? 2.0 * gamma : 2.0 * gamma - gamma * gamma / beta;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// certify: build the operator algebra and feasibility flags for (gamma, lambda)
// ---------------------------------------------------------------------------
inline CertBundle certify(const ProblemSpec& spec, double gamma, double lambda,
                          double rank_tol = kDefaultRankTol) {
  spec.validate();
  if (gamma <= 0.0 || lambda <= 0.0)
    throw InfeasibleError("certify: gamma and lambda must be positive");

  CertBundle cert;
  cert.gamma = gamma;
  cert.lambda = lambda;

  cert.p_is_identity = detail::matrix_is_identity(spec.P);
  cert.p_inv = cert.p_is_identity ? spec.P : spd_inverse(spec.P);
  if (auto d = detail::scalar_multiple_of_identity(spec.D); d && *d > 0.0) {
    cert.scalar_d = true;
    cert.d_scalar = *d;
  } else {
    cert.scalar_d = false;
  }

  const DenseMatrix A = materialize(spec.A);
  const int ns = spec.dim_s();
  // S = A P^{-1} A^T
  const DenseMatrix S =
      symmetrize(cert.p_is_identity ? matmul(A, transpose(A))
                                    : matmul(A, matmul(cert.p_inv, transpose(A))));

  const bool a_is_zero = max_abs(S) == 0.0;
  cert.g_max = a_is_zero ? 0.0 : gen_eig_max(S, spec.D);
  cert.lambda_bound = cert.g_max > 0.0 ? (4.0 / 3.0) / cert.g_max : kInf;
  cert.lambda_feasible =
      cert.g_max == 0.0 ||
      lambda * cert.g_max < (4.0 / 3.0) * (1.0 - 1e-12);

  // theta is analysis-only: any feasible choice certifies the same iteration.
  // Take theta = 1 whenever M1 stays safely positive definite there, else the
  // midpoint of the admissible interval (3/4, 1/(lambda g_max)).
  const double lg = lambda * cert.g_max;
  if (lg <= 1.0 - 1e-9) {
    cert.theta = 1.0;
  } else if (cert.lambda_feasible) {
    cert.theta = 0.5 * (0.75 + 1.0 / lg);
  } else {
    cert.theta = 0.875;  // nominal value; certificate is flagged infeasible
    cert.warnings.push_back("dual stepsize beyond optimal bound");
  }

  const double g2 = gamma * gamma;
  cert.m1 = mat_sub(mat_scale(g2 / lambda, spec.D),
                    mat_scale(g2 * cert.theta, S));
  cert.m2 = mat_scale(g2 * (1.0 - cert.theta), S);
  cert.m = mat_sub(cert.m1, cert.m2);
  cert.m_tilde = mat_add(cert.m1, cert.m2);

  auto m1_eigs = sym_eigs(cert.m1);
  const double m1_min = m1_eigs.eigenvalues.front();
  const double m1_max = m1_eigs.eigenvalues.back();
  cert.m1_positive_definite = m1_min > 0.0;
  if (cert.m1_positive_definite && m1_max / m1_min > 1e12)
    cert.warnings.push_back("ill-conditioned certificate");

  if (cert.m1_positive_definite) {
    cert.c1 = a_is_zero ? 0.0 : gen_eig_max(cert.m2, cert.m1);

    // metric conversions of the declared Euclidean oracle constants
    const double p_min = cert.p_is_identity ? 1.0 : eig_min(spec.P);
    const double p_max = cert.p_is_identity ? 1.0 : eig_max(spec.P);
    const double beta_f = spec.f.constant_gradient()
                              ? kInf
                              : p_min / spec.f.lipschitz;
    const double beta_l = spec.lstar.constant_gradient()
                              ? kInf
                              : m1_min / spec.lstar.lipschitz;
    cert.beta = std::min(beta_f, beta_l);
    cert.tau_f = spec.f.strong_convexity / p_max;
    cert.tau_h = spec.h.conj_strong_monotonicity / m1_max;
    cert.tau_l = spec.lstar.strong_convexity / m1_max;

    cert.gamma_feasible = std::isinf(cert.beta) || gamma < 2.0 * cert.beta;

    cert.m_hat = mat_add(mat_scale(1.0 + 2.0 * gamma * cert.tau_h, cert.m1),
                         cert.m2);
    if (cert.theta < 1.0) {
      const double cc = (2.0 * cert.theta - 1.0) / (2.0 * (1.0 - cert.theta));
      cert.m_lower = mat_add(cert.m1, mat_scale(cc, cert.m2));
    } else {
      cert.m_lower = cert.m1;
    }

    const double damp = detail::damping_factor(gamma, cert.beta);
    cert.rho1 = std::max(
        (1.0 - damp * cert.tau_l + cert.c1) /
            (1.0 + 2.0 * gamma * cert.tau_h + cert.c1),
        1.0 - damp * cert.tau_f);

    // the rho2 algebra is defined for P = D = I
    if (!a_is_zero && cert.p_is_identity &&
        detail::matrix_is_identity(spec.D)) {
      const DenseMatrix AAt = symmetrize(matmul(A, transpose(A)));
      const double sig = min_nonzero_eig(AAt, rank_tol);
      const double denom = 1.0 - cert.theta * lambda * sig;
      if (denom > 0.0) {
        cert.c2 = lambda * sig / denom;
        const double ft = 4.0 * cert.theta - 3.0;
        const double fc = ft + 4.0 * (1.0 - cert.theta) * cert.c1;
        cert.rate_weight_x = 1.0 + ft * (*cert.c2) / fc;
        if (cert.tau_l > 0.0) {
          const double first = fc / (ft * (*cert.c2 + 1.0) +
                                     4.0 * (1.0 - cert.theta) * cert.c1);
          double second;
          if (cert.theta < 1.0) {
            const double cc =
                (2.0 * cert.theta - 1.0) / (2.0 * (1.0 - cert.theta));
            second = (1.0 - damp * cert.tau_l + cc * cert.c1) /
                     (1.0 + cc * cert.c1);
          } else {
            second = 1.0 - damp * cert.tau_l;
          }
          cert.rho2 = std::max(first, second);
        }
      }
    }
  } else {
    cert.warnings.push_back("m1 not positive definite");
    cert.m_hat = cert.m1;
    cert.m_lower = cert.m1;
    cert.gamma_feasible = false;
  }

  return cert;
}

// ---------------------------------------------------------------------------
// iterates
// ---------------------------------------------------------------------------
struct IterateState {
  DenseVector x, s;
  DenseVector grad_f;      // gradient of f at x
  DenseVector grad_lstar;  // gradient of l* at s
  int k = 0;
  double residual = kInf;  // fixed-point residual of the last step
};

inline IterateState make_state(const ProblemSpec& spec, DenseVector x0,
                               DenseVector s0) {
  if (static_cast<int>(x0.size()) != spec.dim_x() ||
      static_cast<int>(s0.size()) != spec.dim_s())
    throw DimensionError("make_state: initial point has wrong dimensions");
  IterateState st;
  st.grad_f = spec.f.gradient(x0);
  st.grad_lstar = spec.lstar.gradient(s0);
  st.x = std::move(x0);
  st.s = std::move(s0);
  return st;
}

inline IterateState pd_step(const ProblemSpec& spec, const PdParams& params,
                            const CertBundle& cert, const IterateState& state) {
  if (!cert.feasible() && !params.allow_infeasible)
    throw InfeasibleError(
        "pd_step: certificate infeasible (pass allow_infeasible to override)");
  if (!cert.scalar_d)
    throw InfeasibleError(
        "pd_step: stepping requires D to be a positive scalar multiple of the "
        "identity; general D is supported for certificates only");

  const double gamma = cert.gamma;
  // x - gamma P^{-1} grad_f(x)
  DenseVector xt = state.x;
  if (cert.p_is_identity) {
    axpy(-gamma, state.grad_f, xt);
  } else {
    axpy(-gamma, matvec(cert.p_inv, state.grad_f), xt);
  }

  // resolvent argument: (1/gamma) M s + A xt - grad_lstar(s)
  DenseVector r = matvec(cert.m, state.s);
  for (auto& v : r) v /= gamma;
  const DenseVector axt = spec.A.apply(xt);
  for (std::size_t i = 0; i < r.size(); ++i)
    r[i] += axt[i] - state.grad_lstar[i];

  const double sigma = cert.lambda / (gamma * cert.d_scalar);
  for (auto& v : r) v *= sigma;
  DenseVector s_next = prox_conjugate(spec.h, r, sigma);

  DenseVector x_next = xt;
  const DenseVector ats = spec.A.apply_t(s_next);
  if (cert.p_is_identity) {
    axpy(-gamma, ats, x_next);
  } else {
    axpy(-gamma, matvec(cert.p_inv, ats), x_next);
  }

  if (!all_finite(x_next) || !all_finite(s_next))
    throw DivergenceError("pd_step: non-finite iterate", state.k + 1);

  IterateState next;
  const DenseVector dx = sub(x_next, state.x);
  const DenseVector ds = sub(s_next, state.s);
  const double rx = cert.p_is_identity ? norm2(dx) : weighted_norm(dx, spec.P);
  const double rs = cert.m1_positive_definite ? weighted_norm(ds, cert.m1)
                                              : norm2(ds);
  next.residual = rx + rs;
  next.k = state.k + 1;
  next.grad_f = spec.f.gradient(x_next);
  next.grad_lstar = spec.lstar.gradient(s_next);
  next.x = std::move(x_next);
  next.s = std::move(s_next);
  return next;
}

// ---------------------------------------------------------------------------
// diagnostics
// ---------------------------------------------------------------------------
struct Reference {
  DenseVector x, s;
};

// || x - x* ||_P^2 + || s - s* ||_{m_tilde}^2
inline double lyapunov(const IterateState& state, const Reference& ref,
                       const ProblemSpec& spec, const CertBundle& cert) {
  const DenseVector dx = sub(state.x, ref.x);
  const DenseVector ds = sub(state.s, ref.s);
  return weighted_norm_sq(dx, spec.P) + weighted_norm_sq(ds, cert.m_tilde);
}

// Coefficients of the one-step descent inequality: the bound is
//   Ly(next) - Ly(prev) <= -cs ||s+ - s||_{m1}^2 - cx ||x+ - x||_P^2
// with cs = 1 - gamma/(2 beta) and
// cx = (4 theta - 3)(2 beta - gamma) / (2 beta - 4 (1 - theta) gamma).
// Constant-gradient oracles (beta = +inf) reduce them to exactly 1 and
// 4 theta - 3.
inline std::pair<double, double> descent_coefficients(const CertBundle& cert) {
  const double ft = 4.0 * cert.theta - 3.0;
  if (std::isinf(cert.beta)) return {1.0, ft};
  const double cs = 1.0 - cert.gamma / (2.0 * cert.beta);
  const double cx = ft * (2.0 * cert.beta - cert.gamma) /
                    (2.0 * cert.beta - 4.0 * (1.0 - cert.theta) * cert.gamma);
  return {cs, cx};
}

// Slack of the descent inequality; nonpositive (up to rounding) for every
// feasible certificate and fixed-point reference.
inline double lyapunov_descent_slack(const IterateState& prev,
                                     const IterateState& next,
                                     const Reference& ref,
                                     const ProblemSpec& spec,
                                     const CertBundle& cert) {
  const auto [cs, cx] = descent_coefficients(cert);
  const DenseVector ds = sub(next.s, prev.s);
  const DenseVector dx = sub(next.x, prev.x);
  return lyapunov(next, ref, spec, cert) - lyapunov(prev, ref, spec, cert) +
         cs * weighted_norm_sq(ds, cert.m1) + cx * weighted_norm_sq(dx, spec.P);
}

// Subgradient of h* at s+ that the update implicitly selects:
//   (1/gamma) M (s - s+) + A x+ - grad_lstar(s).
inline DenseVector implicit_conjugate_subgradient(const ProblemSpec& spec,
                                                  const CertBundle& cert,
                                                  const IterateState& prev,
                                                  const IterateState& next) {
  DenseVector q = matvec(cert.m, sub(prev.s, next.s));
  for (auto& v : q) v /= cert.gamma;
  const DenseVector ax = spec.A.apply(next.x);
  for (std::size_t i = 0; i < q.size(); ++i)
    q[i] += ax[i] - prev.grad_lstar[i];
  return q;
}

// ---------------------------------------------------------------------------
// driver
// ---------------------------------------------------------------------------
enum class SolveStatus { Converged, MaxIters, Diverged, Infeasible };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIters: return "max_iters";
    case SolveStatus::Diverged: return "diverged";
    case SolveStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

struct TraceRecord {
  int k = 0;
  double residual = 0.0;
  std::optional<double> lyapunov;
  std::optional<double> objective;
  std::optional<double> dist_to_opt;
};

// f(x) + h(A x) when l is the indicator of {0}; the Moreau envelope of h
// when l*(s) = (c/2)||s||^2; absent otherwise.
inline std::optional<double> objective_value(const ProblemSpec& spec,
                                             const DenseVector& x) {
  if (!spec.f.value || !spec.h.value) return std::nullopt;
  const DenseVector ax = spec.A.apply(x);
  if (spec.lstar.kind == SmoothKind::Zero)
    return spec.f.value(x) + spec.h.value(ax);
  if (spec.lstar_moreau_curvature) {
    const double c = *spec.lstar_moreau_curvature;
    const DenseVector p = spec.h.eval_prox(ax, c);
    const DenseVector d = sub(ax, p);
    return spec.f.value(x) + spec.h.value(p) + dot(d, d) / (2.0 * c);
  }
  return std::nullopt;
}

struct SolveResult {
  IterateState state;
  std::vector<TraceRecord> trace;
  SolveStatus status = SolveStatus::MaxIters;
  CertBundle cert;
};

using TraceObserver = std::function<void(const TraceRecord&)>;

inline SolveResult solve(const ProblemSpec& spec, const PdParams& params,
                         DenseVector x0, DenseVector s0,
                         const std::optional<Reference>& reference = std::nullopt,
                         const TraceObserver& observer = nullptr) {
  SolveResult result;
  result.cert = certify(spec, params.gamma, params.lambda);
  if (!result.cert.feasible() && !params.allow_infeasible)
    throw InfeasibleError(
        result.cert.lambda_feasible
            ? "solve: primal stepsize too large (gamma >= 2 beta)"
            : "solve: dual stepsize beyond optimal bound (lambda * "
              "lambda_max >= 4/3)");

  IterateState state = make_state(spec, std::move(x0), std::move(s0));
  const int thin = std::max(1, params.trace_thin);

  auto record = [&](const IterateState& st) {
    TraceRecord rec;
    rec.k = st.k;
    rec.residual = st.residual;
    if (reference) {
      rec.lyapunov = lyapunov(st, *reference, spec, result.cert);
      const DenseVector dx = sub(st.x, reference->x);
      rec.dist_to_opt = norm2(dx);
    }
    rec.objective = objective_value(spec, st.x);
    result.trace.push_back(rec);
    if (observer) observer(rec);
  };

  for (int k = 0; k < params.max_iters; ++k) {
    state = pd_step(spec, params, result.cert, state);
    if (state.k % thin == 0 || state.residual <= params.tol) record(state);
    const double magnitude = norm2(state.x) + norm2(state.s);
    if (magnitude > params.divergence_threshold)
      throw DivergenceError("solve: iterate norm exceeded divergence threshold",
                            state.k);
    if (state.residual <= params.tol) {
      result.status = SolveStatus::Converged;
      result.state = std::move(state);
      return result;
    }
  }
  result.status = SolveStatus::MaxIters;
  result.state = std::move(state);
  return result;
}

// ---------------------------------------------------------------------------
// linearized augmented Lagrangian step (the f(x) = b^T x special case)
// ---------------------------------------------------------------------------
//   s+ = argmin_s h*(s) + (beta_alm/2) || s - s^k
//            - (1/beta_alm) A (x^k - gamma (A^T s^k + b)) ||^2
//   x+ = x^k - gamma (A^T s+ + b)
// Identical to pd_step with f = linear_oracle(b), P = D = I and
// lambda = gamma / beta_alm.
inline IterateState alm_step(const ProxOracle& h, const LinearOperator& A,
                             const DenseVector& b, double gamma, double beta_alm,
                             const IterateState& state) {
  if (beta_alm <= 0.0)
    throw InfeasibleError("alm_step: beta_alm must be positive");
  if (gamma <= 0.0) throw InfeasibleError("alm_step: gamma must be positive");

  DenseVector inner = A.apply_t(state.s);  // A^T s + b
  for (std::size_t i = 0; i < inner.size(); ++i) inner[i] += b[i];
  DenseVector xg = state.x;
  axpy(-gamma, inner, xg);

  DenseVector t = state.s;
  axpy(1.0 / beta_alm, A.apply(xg), t);
  DenseVector s_next = prox_conjugate(h, t, 1.0 / beta_alm);

  DenseVector step = A.apply_t(s_next);
  for (std::size_t i = 0; i < step.size(); ++i) step[i] += b[i];
  DenseVector x_next = state.x;
  axpy(-gamma, step, x_next);

  if (!all_finite(x_next) || !all_finite(s_next))
    throw DivergenceError("alm_step: non-finite iterate", state.k + 1);

  IterateState next;
  next.k = state.k + 1;
  next.residual = norm2(sub(x_next, state.x)) + norm2(sub(s_next, state.s));
  next.grad_f = b;
  next.grad_lstar = DenseVector(s_next.size(), 0.0);
  next.x = std::move(x_next);
  next.s = std::move(s_next);
  return next;
}

}  // namespace pdopt
