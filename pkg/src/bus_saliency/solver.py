"""Box-constrained saliency program and its interior-point solver.

The cue maps define a convex quadratic objective over per-region saliency
values in [0, 1]: linear terms reward agreement with the foreground,
distance and background cues, and a dense quadratic term penalizes
saliency differences between similar regions. Border regions are pinned
to zero saliency. The program is solved with a primal-dual interior-point
iteration: Newton steps on the KKT residuals with a fraction-to-boundary
line search and a surrogate-gap barrier schedule.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SolverError


@dataclass
class SaliencyProblem:
    """Assembled program data over n regions.

    ln_w, ln_d, ln_t are logs of the clamped cue maps; q is the dense
    symmetric similarity table; border marks regions pinned to zero.
    """

    ln_w: np.ndarray
    ln_d: np.ndarray
    ln_t: np.ndarray
    q: np.ndarray
    border: np.ndarray
    alpha: float = 4.0
    gamma: float = 40.0
    eps_log: float = 1e-6

    @property
    def n(self) -> int:
        return self.ln_w.size

    def linear_coefficients(self) -> np.ndarray:
        """Per-region linear cost of raising saliency (negative = reward)."""
        return (-self.alpha * self.ln_d - self.gamma * self.ln_w
                + self.alpha * self.ln_t)

    def constant_term(self) -> float:
        # from the (1 - s) background factor
        return float(-self.alpha * self.ln_t.sum())


def assemble_problem(w: np.ndarray, d: np.ndarray, t: np.ndarray,
                     q: np.ndarray, border: np.ndarray, alpha: float = 4.0,
                     gamma: float = 40.0, eps_log: float = 1e-6) -> SaliencyProblem:
    """Clamp the cue maps into [eps_log, 1], take logs, bundle the data."""
    ln_w = np.log(np.clip(w, eps_log, 1.0))
    ln_d = np.log(np.clip(d, eps_log, 1.0))
    ln_t = np.log(np.clip(t, eps_log, 1.0))
    if not (np.isfinite(ln_w).all() and np.isfinite(ln_d).all()
            and np.isfinite(ln_t).all() and np.isfinite(q).all()):
        raise SolverError("non-finite problem coefficients")
    border = np.asarray(border, dtype=bool)
    if not border.any():
        raise SolverError("problem needs at least one border region")
    return SaliencyProblem(ln_w=ln_w, ln_d=ln_d, ln_t=ln_t,
                           q=np.asarray(q, dtype=float), border=border,
                           alpha=alpha, gamma=gamma, eps_log=eps_log)


def evaluate_objective(p: SaliencyProblem, s: np.ndarray) -> float:
    """Exact objective value, smoothness summed over ordered pairs."""
    s = np.asarray(s, dtype=float)
    lin = float(p.linear_coefficients() @ s) + p.constant_term()
    diff = s[:, None] - s[None, :]
    smooth = float((diff ** 2 * p.q).sum())
    return lin + smooth


def objective_gradient(p: SaliencyProblem, s: np.ndarray) -> np.ndarray:
    """Analytic gradient of the objective."""
    s = np.asarray(s, dtype=float)
    smooth = 4.0 * (s * p.q.sum(axis=1) - p.q @ s)
    return p.linear_coefficients() + smooth


def smoothness_hessian(p: SaliencyProblem) -> np.ndarray:
    """Constant Hessian 4(diag(q·1) - q), self-pairs excluded."""
    q = p.q.copy()
    np.fill_diagonal(q, 0.0)
    h = -4.0 * q
    h[np.diag_indices_from(h)] = 4.0 * q.sum(axis=1)
    return h


@dataclass
class IPMState:
    s: np.ndarray          # primal, free regions only
    lam: np.ndarray        # 2 * n_free dual multipliers, > 0
    g: float = 1.0         # barrier parameter
    nu1: float = 0.0       # sum-row multiplier, compat mode only
    iteration: int = 0


@dataclass
class SolveResult:
    s: np.ndarray                  # full-length saliency, borders zero
    converged: bool
    iterations: int
    residual: float
    objective: float
    nu: float = 0.0
    trace: list = field(default_factory=list)


def _reduced(p: SaliencyProblem):
    """Problem data restricted to non-border regions.

    Border saliency is structurally zero: a border variable cannot sit in
    the interior of its own box once the equality row holds, so the
    variables are eliminated outright and the equality multiplier is
    reported as zero.
    """
    free = ~p.border
    idx = np.nonzero(free)[0]
    c = p.linear_coefficients()[idx]
    h = smoothness_hessian(p)[np.ix_(idx, idx)]
    return idx, c, h


def _residuals(c, h, s, lam, g, nu1: float = 0.0, sum_row: bool = False):
    """(r_d, r_c, r_p) for the reduced problem.

    Without the compat sum row, r_p is identically zero by construction
    (border variables are eliminated). With it, r_p carries the legacy
    sum(S) = 1 equality and nu1 enters the dual residual.
    """
    nf = s.size
    grad = c + h @ s
    # f(S) = [-S; S-1], Df = [-I; I]
    r_d = grad - lam[:nf] + lam[nf:]
    if sum_row:
        r_d = r_d + nu1
    f = np.concatenate([-s, s - 1.0])
    r_c = -lam * f - 1.0 / g
    r_p = float(s.sum() - 1.0) if sum_row else 0.0
    return r_d, r_c, r_p


def _residual_norm(r_d, r_c, r_p=0.0):
    return float(np.linalg.norm(r_d) + np.linalg.norm(r_c) + abs(r_p))


def newton_step(c, h, state: IPMState, sum_row: bool = False):
    """Solve the KKT Newton system for (ds, dlam, dnu).

    The system is the dense 3n block form, plus one bordered row/column
    when the legacy sum constraint is active; a singular factorization is
    retried once with a tiny diagonal shift on the Hessian block.
    """
    s, lam, g = state.s, state.lam, state.g
    nf = s.size
    r_d, r_c, r_p = _residuals(c, h, s, lam, g, state.nu1, sum_row)
    f = np.concatenate([-s, s - 1.0])
    dim = 3 * nf + (1 if sum_row else 0)

    def build(hess):
        m = np.zeros((dim, dim))
        m[:nf, :nf] = hess
        m[:nf, nf:2 * nf] = -np.eye(nf)
        m[:nf, 2 * nf:3 * nf] = np.eye(nf)
        # d/ds of -diag(lam) f: rows for f = -s then f = s - 1
        m[nf:2 * nf, :nf] = np.diag(lam[:nf])
        m[2 * nf:3 * nf, :nf] = -np.diag(lam[nf:])
        m[nf:2 * nf, nf:2 * nf] = np.diag(-f[:nf])
        m[2 * nf:3 * nf, 2 * nf:3 * nf] = np.diag(-f[nf:])
        if sum_row:
            m[:nf, 3 * nf] = 1.0
            m[3 * nf, :nf] = 1.0
        return m

    parts = [r_d, r_c] + ([np.array([r_p])] if sum_row else [])
    rhs = -np.concatenate(parts)
    try:
        sol = np.linalg.solve(build(h), rhs)
    except np.linalg.LinAlgError:
        shifted = h + 1e-10 * np.eye(nf)
        try:
            sol = np.linalg.solve(build(shifted), rhs)
        except np.linalg.LinAlgError as exc:
            raise SolverError("singular KKT system") from exc
    dnu = float(sol[3 * nf]) if sum_row else 0.0
    return sol[:nf], sol[nf:3 * nf], dnu


def solve_ipm(p: SaliencyProblem, tol: float = 1e-6, max_iter: int = 200,
              keep_trace: bool = False,
              compat_sum_row: bool = False) -> SolveResult:
    """Primal-dual interior-point solve of the saliency program.

    Stops when the summed residual norms drop below tol. Line search
    first caps the step to keep duals positive and the primal strictly
    inside the box (0.99 fraction to the boundary), then backtracks for
    sufficient residual decrease. A stalled search keeps the best iterate
    and reports non-convergence.

    ``compat_sum_row`` restores the legacy sum(S) = 1 equality of the
    predecessor model for comparison runs; its multiplier is reported as
    ``nu``. Pointless with fewer than two free regions, where the
    constraint pins the single variable to the box boundary.
    """
    idx, c, h = _reduced(p)
    nf = idx.size
    n_total = p.n
    full = np.zeros(n_total)
    if nf == 0:
        return SolveResult(s=full, converged=True, iterations=0, residual=0.0,
                           objective=evaluate_objective(p, full))

    s0 = np.full(nf, 1.0 / n_total)
    lam0 = np.concatenate([1.0 / s0, 1.0 / (1.0 - s0)])
    state = IPMState(s=s0, lam=lam0, g=1.0)

    best_s = s0.copy()
    r_d, r_c, r_p = _residuals(c, h, s0, lam0, state.g, state.nu1,
                               compat_sum_row)
    best_norm = _residual_norm(r_d, r_c, r_p)
    converged = False
    trace = []

    for it in range(1, max_iter + 1):
        state.iteration = it
        f = np.concatenate([-state.s, state.s - 1.0])
        eta = float(-(f @ state.lam))
        state.g = 10.0 * (2 * nf) / eta
        r_d, r_c, r_p = _residuals(c, h, state.s, state.lam, state.g,
                                   state.nu1, compat_sum_row)
        norm0 = _residual_norm(r_d, r_c, r_p)
        if norm0 < tol:
            converged = True
            best_s = state.s.copy()
            best_norm = norm0
            break
        ds, dlam, dnu = newton_step(c, h, state, compat_sum_row)

        # fraction to boundary on the duals
        step = 1.0
        neg = dlam < 0
        if neg.any():
            step = min(step, 0.99 * float(np.min(-state.lam[neg] / dlam[neg])))
        # keep the primal strictly interior
        for _ in range(60):
            s_try = state.s + step * ds
            if (s_try > 0.0).all() and (s_try < 1.0).all():
                break
            step *= 0.5
        else:
            break
        # sufficient decrease on the residual norm
        accepted = False
        for _ in range(40):
            s_try = state.s + step * ds
            lam_try = state.lam + step * dlam
            nu_try = state.nu1 + step * dnu
            r_d_t, r_c_t, r_p_t = _residuals(c, h, s_try, lam_try, state.g,
                                             nu_try, compat_sum_row)
            if _residual_norm(r_d_t, r_c_t, r_p_t) <= (1.0 - 0.01 * step) * norm0:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        state.s = s_try
        state.lam = lam_try
        state.nu1 = nu_try
        norm_new = _residual_norm(r_d_t, r_c_t, r_p_t)
        if norm_new < best_norm:
            best_norm = norm_new
            best_s = state.s.copy()
        if keep_trace:
            trace.append((it, norm_new, float(step)))

    full[idx] = np.clip(best_s, 0.0, 1.0)
    full[p.border] = 0.0
    return SolveResult(s=full, converged=converged, iterations=state.iteration,
                       residual=best_norm, objective=evaluate_objective(p, full),
                       nu=state.nu1, trace=trace)


def oracle_solve(p: SaliencyProblem, grid_steps: int = 100):
    """Exhaustive grid search over the free variables, then one local refine.

    Only for tiny problems; the free dimension count is capped so the
    sweep stays tractable. Border entries are fixed at zero. Returns the
    best point and its objective.
    """
    free = np.nonzero(~p.border)[0]
    if free.size > 3:
        raise SolverError(f"oracle limited to 3 free regions, got {free.size}")
    if free.size == 0:
        s = np.zeros(p.n)
        return s, evaluate_objective(p, s)

    c_full = p.linear_coefficients()
    const = p.constant_term()
    q = p.q.copy()
    np.fill_diagonal(q, 0.0)
    deg = q.sum(axis=1)

    def sweep(axes):
        grids = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.reshape(-1) for g in grids], axis=1)
        s = np.zeros((pts.shape[0], p.n))
        s[:, free] = pts
        # sum_ij q (s_i - s_j)^2 = 2 (sum deg s^2 - s' q s) for symmetric q
        smooth = 2.0 * ((s ** 2 * deg).sum(axis=1)
                        - np.einsum("mi,ij,mj->m", s, q, s))
        vals = s @ c_full + const + smooth
        k = int(np.argmin(vals))
        return float(vals[k]), pts[k]

    coarse = np.linspace(0.0, 1.0, grid_steps + 1)
    best_v, best_pt = sweep([coarse] * free.size)

    fine_step = 1.0 / grid_steps ** 2
    axes = []
    for x in best_pt:
        lo = max(0.0, x - 1.0 / grid_steps)
        hi = min(1.0, x + 1.0 / grid_steps)
        axes.append(np.arange(lo, hi + fine_step / 2, fine_step))
    best_v, best_pt = min([sweep(axes), (best_v, best_pt)], key=lambda it: it[0])

    s = np.zeros(p.n)
    s[free] = best_pt
    return s, best_v
