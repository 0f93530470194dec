"""Per-sink flow optimization.

For an unlabeled sink node p the flow problem is

    minimize   (1/2) sum_e d_e (x_e^2 + lambda |x_e|)
    subject to A_u x = b_p            (undirected; x free)
               A_u x = b_p, x >= 0    (directed)

where b_p is zero except a -1 at the sink's row (unit in-flow). At
lambda=0 the problem is an equality-constrained QP with a closed form;
for lambda>0 an ADMM iteration alternates an equality-constrained
quadratic x-step with a per-edge shrinkage z-step. The x-step's linear
system matrix A_u M A_u^T (M = diag(1/(rho+d))) depends only on the graph
and rho, so one factorization is shared across all iterations and sinks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import null_space
from scipy.sparse.csgraph import connected_components

from .graph import IncidenceSystem

# Primal residual above this after max_iter means the directed problem has
# no feasible flow (sink unreachable along edge directions).
_INFEASIBLE_RESIDUAL = 0.5


class SolverError(RuntimeError):
    """Flow solve failed."""


class DisconnectedGraphError(SolverError):
    """Some unlabeled nodes have no path to any labeled node."""


class InfeasibleFlowError(SolverError):
    """No feasible flow exists (directed problem, sink unreachable)."""


@dataclass(frozen=True)
class FlowProblem:
    """One sink's flow optimization instance."""

    system: IncidenceSystem
    lam: float
    sink: int

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"lambda must be nonnegative, got {self.lam}")
        if self.sink not in self.system._row_of:
            raise ValueError(f"sink {self.sink} is not an unlabeled node")

    @property
    def directed(self) -> bool:
        return self.system.directed

    def sink_vector(self) -> np.ndarray:
        return self.system.sink_vector(self.sink)


@dataclass(frozen=True)
class AdmmOptions:
    rho: float = 1.0
    tol: float = 1e-6
    max_iter: int = 10000

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if self.tol <= 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass
class CholeskyCache:
    """Factorization of A_u M A_u^T, M = diag(1/(rho+d)), reusable for
    every sink and every iteration at a fixed rho.

    rho=0 is allowed and gives the exact lambda=0 system matrix
    A_u D^{-1} A_u^T.
    """

    factor: object
    M: np.ndarray
    rho: float
    d: np.ndarray
    A_u: sp.csr_matrix
    A_uT: sp.csr_matrix = field(repr=False, default=None)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return self.factor.solve(rhs)

    def matches(self, system: IncidenceSystem, rho: float | None = None) -> bool:
        same = self.A_u.shape == system.A_u.shape and np.array_equal(self.d, system.d)
        if rho is not None:
            same = same and self.rho == rho
        return same


def _check_labeled_reachability(system: IncidenceSystem) -> None:
    """Every connected component (edge directions ignored) must contain a
    labeled node, otherwise A_u M A_u^T is singular."""
    n = len(system.labeled) + len(system.unlabeled)
    if system.m == 0:
        raise DisconnectedGraphError("graph has no edges")
    tails = np.array([t for t, _ in system.orientation])
    heads = np.array([h for _, h in system.orientation])
    adj = sp.csr_matrix((np.ones(system.m), (tails, heads)), shape=(n, n))
    ncomp, comp = connected_components(adj, directed=False)
    has_label = np.zeros(ncomp, dtype=bool)
    for i in system.labeled:
        has_label[comp[i]] = True
    bad = [i for i in system.unlabeled if not has_label[comp[i]]]
    if bad:
        shown = ", ".join(map(str, bad[:8]))
        more = "" if len(bad) <= 8 else f" (+{len(bad) - 8} more)"
        raise DisconnectedGraphError(f"unlabeled component disconnected from labels: nodes {shown}{more}")


def factorize(system: IncidenceSystem, rho: float) -> CholeskyCache:
    """Factor A_u M A_u^T once for reuse across all sinks.

    Parameters
    ----------
    system : IncidenceSystem
    rho : float
        ADMM penalty; rho=0 yields the exact lambda=0 system.
    """
    if rho < 0:
        raise ValueError(f"rho must be nonnegative, got {rho}")
    if system.n_unlabeled == 0:
        raise SolverError("no unlabeled nodes to solve for")
    _check_labeled_reachability(system)
    M = 1.0 / (rho + system.d)
    K = (system.A_u @ sp.diags(M) @ system.A_u.T).tocsc()
    try:
        factor = spla.splu(K)
    except RuntimeError as exc:  # exactly singular
        raise DisconnectedGraphError(f"A_u M A_u^T is singular: {exc}") from exc
    return CholeskyCache(
        factor=factor,
        M=M,
        rho=float(rho),
        d=np.asarray(system.d, dtype=float),
        A_u=system.A_u,
        A_uT=system.A_u.T.tocsr(),
    )


@dataclass
class FlowSolution:
    """Optimal (or best-iterate) flow for one sink."""

    x: np.ndarray
    z: np.ndarray
    u: np.ndarray
    iterations: int
    converged: bool
    objective: float
    sink: int
    lam: float
    primal_residual: float = 0.0


def _objective(d: np.ndarray, lam: float, z: np.ndarray) -> float:
    return float(0.5 * np.sum(d * (z * z + lam * np.abs(z))))


def solve_exact_lambda0(problem: FlowProblem, cache: CholeskyCache | None = None) -> FlowSolution:
    """Closed-form solve of the lambda=0 (pure quadratic) flow problem.

    The KKT solution is x = D^{-1} A_u^T (A_u D^{-1} A_u^T)^{-1} b_p.
    ``cache`` may hold a rho=0 factorization shared across sinks.
    """
    if problem.lam != 0:
        raise ValueError("exact solver only handles lambda=0")
    if problem.directed:
        raise ValueError("exact solver only handles undirected problems")
    system = problem.system
    if cache is None:
        cache = factorize(system, 0.0)
    elif not cache.matches(system, rho=0.0):
        raise ValueError("cache was built for a different system or rho != 0")
    b = problem.sink_vector()
    y = cache.solve(b)
    x = cache.M * (cache.A_uT @ y)
    res = float(np.max(np.abs(system.A_u @ x - b)))
    if not np.isfinite(res) or res > 1e-6:
        raise DisconnectedGraphError("unlabeled component disconnected from labels")
    return FlowSolution(
        x=x,
        z=x.copy(),
        u=np.zeros_like(x),
        iterations=0,
        converged=True,
        objective=_objective(system.d, 0.0, x),
        sink=problem.sink,
        lam=0.0,
        primal_residual=res,
    )


def admm_step_x(cache: CholeskyCache, z: np.ndarray, u: np.ndarray, b_p: np.ndarray) -> np.ndarray:
    """Equality-constrained quadratic x-update.

    Solves argmin_x (1/2) x^T D x + (rho/2) ||x - (z - u)||^2 subject to
    A_u x = b_p via its KKT system: with M = diag(1/(rho+d)), solve
    A_u M A_u^T y = rho A_u M (z - u) - b_p, then
    x = rho M (z - u) - M A_u^T y. The result satisfies the conservation
    constraint to linear-solve accuracy regardless of z and u.
    """
    v = z - u
    y = cache.solve(cache.rho * (cache.A_u @ (cache.M * v)) - b_p)
    return cache.rho * cache.M * v - cache.M * (cache.A_uT @ y)


def soft_threshold(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Componentwise shrink of b toward zero by a >= 0:
    S_a(b) = (b - a)_+ - (-b - a)_+."""
    a = np.asarray(a, dtype=float)
    if np.any(a < 0):
        raise ValueError("thresholds must be nonnegative")
    b = np.asarray(b, dtype=float)
    return np.maximum(b - a, 0.0) - np.maximum(-b - a, 0.0)


def _check_cache(problem: FlowProblem, cache: CholeskyCache, opts: AdmmOptions) -> None:
    if not cache.matches(problem.system, rho=opts.rho):
        raise ValueError("cache does not match this system and rho")


def admm_solve(problem: FlowProblem, cache: CholeskyCache, opts: AdmmOptions = AdmmOptions()) -> FlowSolution:
    """ADMM iteration for the undirected sparse flow problem.

    Starting from z = u = 0, repeat

        x <- admm_step_x(cache, z, u, b_p)
        z <- S_{d lambda / (2 rho)}(x + u)
        u <- u + x - z

    and stop when both max|x - z| and max|z - z_prev| fall below
    ``opts.tol``. The shrinkage threshold d_e lambda / (2 rho) matches the
    objective's (1/2) d_e lambda |x_e| term. Hitting max_iter returns a
    solution flagged unconverged rather than raising.
    """
    if problem.directed:
        raise ValueError("use admm_solve_directed for directed problems")
    return _admm_loop(problem, cache, opts, directed=False)


def admm_solve_directed(problem: FlowProblem, cache: CholeskyCache, opts: AdmmOptions = AdmmOptions()) -> FlowSolution:
    """ADMM for the directed problem (flows constrained nonnegative).

    The z-update becomes the one-sided shrink
    z = max(x + u - d lambda / (2 rho), 0). If after max_iter the primal
    residual ||A_u z - b_p||_inf has not dropped below 0.5 the problem is
    reported infeasible (no directed path carries flow to the sink).
    """
    if not problem.directed:
        raise ValueError("problem is undirected; use admm_solve")
    return _admm_loop(problem, cache, opts, directed=True)


def _admm_loop(problem: FlowProblem, cache: CholeskyCache, opts: AdmmOptions, directed: bool) -> FlowSolution:
    _check_cache(problem, cache, opts)
    system = problem.system
    d, lam, rho = system.d, problem.lam, opts.rho
    b = problem.sink_vector()
    m = system.m
    thresh = d * lam / (2.0 * rho)
    z = np.zeros(m)
    u = np.zeros(m)
    x = z
    converged = False
    iterations = opts.max_iter
    for k in range(1, opts.max_iter + 1):
        x = admm_step_x(cache, z, u, b)
        w = x + u
        if directed:
            z_new = np.maximum(w - thresh, 0.0)
        else:
            z_new = np.maximum(w - thresh, 0.0) - np.maximum(-w - thresh, 0.0)
        u = u + x - z_new
        r_primal = np.max(np.abs(x - z_new))
        r_dual = np.max(np.abs(z_new - z))
        z = z_new
        if r_primal < opts.tol and r_dual < opts.tol:
            converged = True
            iterations = k
            break
    residual = float(np.max(np.abs(system.A_u @ z - b)))
    if directed and not converged and residual >= _INFEASIBLE_RESIDUAL:
        raise InfeasibleFlowError(
            f"sink {problem.sink} unreachable along edge directions "
            f"(primal residual {residual:.3g} after {opts.max_iter} iterations)"
        )
    return FlowSolution(
        x=x,
        z=z,
        u=u,
        iterations=iterations,
        converged=converged,
        objective=_objective(d, lam, z),
        sink=problem.sink,
        lam=lam,
        primal_residual=residual,
    )


def admm_solve_batch(
    system: IncidenceSystem,
    cache: CholeskyCache,
    sinks,
    lam: float,
    opts: AdmmOptions = AdmmOptions(),
) -> list:
    """Run the undirected ADMM iteration for many sinks at once.

    Sinks never interact (only the right-hand side differs), so stacking
    them as columns gives the same iterates as per-sink solves; each
    column freezes the moment it converges. Exists purely for throughput
    on batch predictions.
    """
    if system.directed:
        raise ValueError("batch solver covers undirected problems")
    if not cache.matches(system, rho=opts.rho):
        raise ValueError("cache does not match this system and rho")
    sinks = list(sinks)
    m = system.m
    ns = len(sinks)
    n_u = system.n_unlabeled
    B = np.zeros((n_u, ns))
    for j, sink in enumerate(sinks):
        B[system.row_of(sink), j] = -1.0
    d, rho = system.d, opts.rho
    Mc = cache.M[:, None]
    thresh = (d * lam / (2.0 * rho))[:, None]
    Z = np.zeros((m, ns))
    U = np.zeros((m, ns))
    X = np.zeros((m, ns))
    iterations = np.full(ns, opts.max_iter, dtype=int)
    converged = np.zeros(ns, dtype=bool)
    active = np.arange(ns)
    for k in range(1, opts.max_iter + 1):
        MV = Mc * (Z[:, active] - U[:, active])
        Y = cache.solve(rho * (system.A_u @ MV) - B[:, active])
        Xa = rho * MV
        Xa -= Mc * (cache.A_uT @ Y)
        W = Xa + U[:, active]
        Za = np.maximum(W - thresh, 0.0)
        Za -= np.maximum(-W - thresh, 0.0)
        r1 = np.max(np.abs(Xa - Za), axis=0)
        r2 = np.max(np.abs(Za - Z[:, active]), axis=0)
        U[:, active] += Xa - Za
        Z[:, active] = Za
        X[:, active] = Xa
        done = (r1 < opts.tol) & (r2 < opts.tol)
        if done.any():
            iterations[active[done]] = k
            converged[active[done]] = True
            active = active[~done]
            if active.size == 0:
                break
    out = []
    for j, sink in enumerate(sinks):
        z = Z[:, j].copy()
        out.append(
            FlowSolution(
                x=X[:, j].copy(),
                z=z,
                u=U[:, j].copy(),
                iterations=int(iterations[j]),
                converged=bool(converged[j]),
                objective=_objective(d, lam, z),
                sink=sink,
                lam=lam,
                primal_residual=float(np.max(np.abs(system.A_u @ z - B[:, j]))),
            )
        )
    return out


def brute_force_oracle(problem: FlowProblem, support_tol: float = 1e-7) -> FlowSolution:
    """Independent dense solver used to cross-check the ADMM path.

    Strategy: get close to the optimum with gradient steps projected onto
    the affine feasible set (the |x| term handled by iterative
    reweighting), then identify the support/sign pattern and solve the
    restricted KKT system exactly, checking the sign and dual-feasibility
    conditions. The result is a certified optimum, not just a
    well-iterated one. Dense linear algebra throughout; intended for
    desk-scale tests (m up to ~50).
    """
    if problem.directed:
        raise SolverError("oracle covers undirected problems only")
    system = problem.system
    A = system.A_u.toarray()
    d = np.asarray(system.d, dtype=float)
    lam = problem.lam
    b = problem.sink_vector()
    m = A.shape[1]
    kappa = 0.5 * lam * d

    x = np.linalg.lstsq(A, b, rcond=None)[0]  # min-norm feasible point
    if np.max(np.abs(A @ x - b)) > 1e-8:
        raise DisconnectedGraphError("no feasible flow (constraints inconsistent)")

    if lam == 0:
        # Projected gradient on {A x = b}: steps live in the nullspace.
        N = null_space(A)
        P = N @ N.T
        eta = 1.0 / np.max(d)
        for _ in range(100000):
            g = P @ (d * x)
            if np.max(np.abs(g)) < 1e-12:
                break
            x = x - eta * g
        x_exact, nu = _restricted_kkt(np.arange(m), d, kappa, np.ones(m), A, b)
        if np.max(np.abs(x - x_exact)) > 1e-6:
            raise SolverError("oracle: projected gradient and KKT solve disagree")
        x = x_exact
        _certify_kkt(x, nu, d, kappa, A, support_tol)
    else:
        # Reweighted quadratic majorization of |x|, annealed toward exact,
        # then an active-set cleanup of the support/sign pattern. Degenerate
        # supports can stall the active set; the duality-gap route then
        # certifies a solution without any combinatorics.
        eps = 0.1
        for _ in range(80):
            dk = d * (1.0 + lam / (2.0 * np.maximum(np.abs(x), eps)))
            x, _ = _restricted_kkt(np.arange(m), dk, np.zeros(m), np.ones(m), A, b)
            eps = max(eps * 0.5, 1e-10)
        try:
            x, nu = _polish_support(x, d, kappa, A, b, support_tol)
            _certify_kkt(x, nu, d, kappa, A, support_tol)
        except SolverError:
            x = _dual_gap_solve(A, d, kappa, b, lam)
    return FlowSolution(
        x=x,
        z=x.copy(),
        u=np.zeros_like(x),
        iterations=0,
        converged=True,
        objective=_objective(d, lam, x),
        sink=problem.sink,
        lam=lam,
        primal_residual=float(np.max(np.abs(A @ x - b))),
    )


def _restricted_kkt(idx, d, kappa, signs, A, b):
    """Solve the equality-constrained QP restricted to edges ``idx`` with
    assumed signs: d_e x_e + kappa_e sign_e = (A^T nu)_e on idx, A x = b."""
    m = A.shape[1]
    As = A[:, idx]
    k = len(idx)
    n_u = A.shape[0]
    kkt = np.zeros((k + n_u, k + n_u))
    kkt[:k, :k] = np.diag(d[idx])
    kkt[:k, k:] = -As.T
    kkt[k:, :k] = As
    rhs = np.concatenate([-kappa[idx] * signs[idx], b])
    sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
    x = np.zeros(m)
    x[idx] = sol[:k]
    return x, sol[k:]


def _polish_support(x, d, kappa, A, b, support_tol):
    """Active-set refinement: re-solve on the assumed support/sign pattern,
    flipping signs, dropping zeroed edges, and admitting edges whose dual
    feasibility is violated, until the pattern is self-consistent."""
    m = len(d)
    support = np.abs(x) > support_tol
    signs = np.sign(x)
    seen = set()
    for _ in range(4 * m + 16):
        idx = np.flatnonzero(support)
        if idx.size == 0:
            raise DisconnectedGraphError("no feasible flow on an empty support")
        x_full, nu = _restricted_kkt(idx, d, kappa, signs, A, b)
        if np.max(np.abs(A @ x_full - b)) > 1e-8:
            # Support cannot carry the demanded flow; start from everything.
            support[:] = True
            signs = np.where(np.abs(x_full) > support_tol, np.sign(x_full), signs)
            continue
        xs = x_full[idx]
        # An edge whose solved sign disagrees with its assumed sign must
        # pass through zero: take it out and let dual feasibility decide
        # whether it re-enters (flipping in place oscillates).
        flipped = idx[np.sign(xs) * signs[idx] < 0]
        if flipped.size:
            support[flipped] = False
            continue
        dead = idx[np.abs(xs) <= support_tol]
        if dead.size:
            support[dead] = False
            continue
        slack = np.abs(A.T @ nu) - kappa
        slack[idx] = -np.inf
        worst = int(np.argmax(slack))
        if slack[worst] > 1e-9:
            # The least-squares nu is not unique when some unlabeled node
            # has no support edge, so an apparent violation may be an
            # artifact of that choice: look for any certifying dual first.
            nu_cert = _certifying_dual(A, idx, d, kappa, np.sign(xs), xs)
            if nu_cert is not None:
                signs[idx] = np.sign(xs)
                return x_full, nu_cert
            state = (tuple(idx), tuple(int(s) for s in signs[idx]))
            if state in seen:
                break
            seen.add(state)
            support[worst] = True
            signs[worst] = np.sign((A.T @ nu)[worst])
            continue
        signs[idx] = np.sign(xs)
        return x_full, nu
    raise SolverError("oracle active-set refinement did not settle")


def _dual_gap_solve(A, d, kappa, b, lam, rel_gap=2e-8):
    """Certify an optimum through the dual: maximize the smooth concave

        g(nu) = b . nu - sum_e S_{kappa_e}((A^T nu)_e)^2 / (2 d_e)

    whose maximizer recovers x = S_kappa(A^T nu) / d. After correcting x
    back onto {A x = b}, the primal-dual gap bounds the suboptimality of
    the returned point; the gap must close to rel_gap or this raises."""
    from scipy.optimize import minimize

    AT = A.T

    def neg_g(nu):
        c = AT @ nu
        s = np.sign(c) * np.maximum(np.abs(c) - kappa, 0.0)
        x = s / d
        val = b @ nu - np.sum(s * s / (2.0 * d))
        return -val, -(b - A @ x)

    res = minimize(
        neg_g,
        np.zeros(A.shape[0]),
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": 20000, "ftol": 1e-18, "gtol": 1e-14},
    )
    c = AT @ res.x
    s = np.sign(c) * np.maximum(np.abs(c) - kappa, 0.0)
    x = s / d
    x = x + np.linalg.lstsq(A, b - A @ x, rcond=None)[0]
    primal = float(0.5 * np.sum(d * (x * x + lam * np.abs(x))))
    gap = primal - (-res.fun)
    if not gap <= max(rel_gap * max(1.0, abs(primal)), 1e-9):
        raise SolverError(f"oracle duality gap {gap:.3g} did not close")
    return x


def _certifying_dual(A, idx, d, kappa, signs_s, xs):
    """Find nu with A_S^T nu = d_S x_S + kappa_S sign_S and
    |A_e^T nu| <= kappa_e off the support, if one exists (feasibility LP)."""
    from scipy.optimize import linprog

    m = A.shape[1]
    off = np.setdiff1d(np.arange(m), idx)
    rhs_eq = d[idx] * xs + kappa[idx] * signs_s
    if off.size == 0:
        sol = np.linalg.lstsq(A[:, idx].T, rhs_eq, rcond=None)[0]
        return sol
    A_off = A[:, off].T
    res = linprog(
        c=np.zeros(A.shape[0]),
        A_ub=np.vstack([A_off, -A_off]),
        b_ub=np.concatenate([kappa[off], kappa[off]]) + 1e-9,
        A_eq=A[:, idx].T,
        b_eq=rhs_eq,
        bounds=[(None, None)] * A.shape[0],
        method="highs",
    )
    return res.x if res.status == 0 else None


def _certify_kkt(x, nu, d, kappa, A, support_tol):
    """Raise unless (x, nu) satisfies the problem's KKT conditions."""
    on = np.abs(x) > support_tol
    grad = d * x + kappa * np.sign(x) - A.T @ nu
    if on.any() and np.max(np.abs(grad[on])) > 1e-7:
        raise SolverError("oracle could not certify stationarity")
    if (~on).any() and kappa.any():
        off_slack = np.abs((A.T @ nu)[~on]) - kappa[~on]
        if np.max(off_slack) > 1e-7:
            raise SolverError("oracle could not certify dual feasibility")
