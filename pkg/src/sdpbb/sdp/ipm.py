"""Dense primal-dual interior-point method for the conic form of :mod:`.problem`.

The iteration runs on the homogeneous self-dual embedding of::

    minimize c·x   s.t.  G x + s = h,  A x = b,  s ⪰ 0

with Nesterov-Todd scaling and a Mehrotra predictor-corrector. Every
iterate is infeasible-start: residuals shrink by ``1 - α(1 - σ)`` per step.
All cones are tiny, so each Newton step factors the dense reduced KKT
system from scratch and polishes its solutions by iterative refinement.

Cone vectors are flat: the LP part first, then every PSD cone as a full
row-major ``m×m`` matrix, so inner products are plain dot products.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .problem import ConicForm


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    PRIMAL_INFEASIBLE = "PrimalInfeasible"
    DUAL_INFEASIBLE = "DualInfeasible"
    NUMERICAL_TROUBLE = "NumericalTrouble"
    ITERATION_LIMIT = "IterationLimit"


@dataclass(frozen=True)
class SolverSettings:
    gap_tol: float = 1e-8
    feas_tol: float = 1e-8
    max_iters: int = 200
    step_fraction: float = 0.99
    min_step: float = 1e-10
    # a ray counts as an infeasibility certificate once its residual is below 1/certificate_ratio
    certificate_ratio: float = 1e8
    refinement: int = 2
    verbose: bool = False

    def tightened(self, factor: float) -> "SolverSettings":
        return replace(self, gap_tol=self.gap_tol * factor, feas_tol=self.feas_tol * factor)


@dataclass
class ConicSolution:
    status: Status
    x: np.ndarray
    y: np.ndarray
    z_lp: np.ndarray
    z_psd: list
    s_lp: np.ndarray
    s_psd: list
    primal_objective: float
    dual_objective: float
    primal_residual: float
    dual_residual: float
    gap: float
    relative_gap: float
    min_slack_eig: float
    iterations: int
    certificate_residual: float = float("nan")
    message: str = ""


def _T(m):
    return np.swapaxes(m, -1, -2)


def _sym(m):
    return (m + _T(m)) / 2


class _Kernel:
    """Problem data in flat-cone layout, with the equality block reduced to full row rank."""

    def __init__(self, form: ConicForm):
        self.c = form.c
        self.n = form.n
        self.l = form.G_lp.shape[0]
        self.groups = []  # (offset, count, size)
        self.Gg = [g.G for g in form.psd]
        rows, hs, start = [form.G_lp], [form.h_lp], self.l
        for g in form.psd:
            k, m = g.count, g.size
            self.groups.append((start, k, m))
            rows.append(np.moveaxis(g.G, 1, -1).reshape(k * m * m, self.n))
            hs.append(g.h.reshape(-1))
            start += k * m * m
        self.N = start
        self.G = np.vstack(rows)
        self.h = np.concatenate(hs)
        self.degree = self.l + sum(k * m for _, k, m in self.groups)
        self.inconsistent = 0.0
        A, b = form.A, form.b
        # directions no constraint sees make the KKT system singular: solve on their complement
        self.V, self.c_null = None, np.zeros(self.n)
        stacked = np.vstack([A, self.G])
        sv = np.linalg.svd(stacked, compute_uv=False)
        cut = 1e-12 * max(1.0, sv[0] if sv.size else 0.0)
        if sv.size < self.n or sv[-1] <= cut:
            _, sv, vt = np.linalg.svd(stacked, full_matrices=True)
            r = int(np.sum(sv > cut))
            V, Nul = vt[:r].T, vt[r:].T
            self.V = V
            self.c_null = Nul @ (Nul.T @ self.c)
            self.c = V.T @ self.c
            self.G = self.G @ V
            self.Gg = [np.einsum("knab,nr->krab", Gg, V) for Gg in self.Gg]
            A = A @ V
            self.n = r
        if A.shape[0]:
            u, sv, vt = np.linalg.svd(A, full_matrices=False)
            r = int(np.sum(sv > 1e-12 * max(1.0, sv[0])))
            if r < A.shape[0]:
                resid = b - u[:, :r] @ (u[:, :r].T @ b)
                self.inconsistent = float(np.linalg.norm(resid))
                A = sv[:r, None] * vt[:r]
                b = u[:, :r].T @ b
        self.A, self.b = A, b
        self.p = A.shape[0]
        self.e = self.assemble(np.ones(self.l), [np.broadcast_to(np.eye(m), (k, m, m)) for _, k, m in self.groups])

    def views(self, v):
        """LP part and one ``(k, m, m)`` view per PSD group."""
        return v[: self.l], [v[s0 : s0 + k * m * m].reshape(k, m, m) for s0, k, m in self.groups]

    def assemble(self, lp, mats):
        return np.concatenate([lp] + [M.reshape(-1) for M in mats])

    def jordan(self, a, b):
        al, am = self.views(a)
        bl, bm = self.views(b)
        return self.assemble(al * bl, [_sym(A @ B) for A, B in zip(am, bm)])

    def min_eig(self, v) -> float:
        lp, mats = self.views(v)
        vals = [float(np.min(lp))] if lp.size else []
        vals += [float(np.linalg.eigvalsh(_sym(M))[:, 0].min()) for M in mats]
        return min(vals) if vals else np.inf

    def symmetrize(self, v):
        lp, mats = self.views(v)
        return self.assemble(lp, [_sym(M) for M in mats])

    def split(self, v):
        lp, mats = self.views(v)
        return lp.copy(), [M.copy() for M in mats]


def _factor(S):
    """Some L with S = L Lᵀ, batched; Cholesky with an eigen-decomposition fallback."""
    try:
        return np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(_sym(S))
        if np.any(w <= 0):
            raise
        return v * np.sqrt(w)[:, None, :]


def _lu(K):
    """LU factors of ``K``, or None when a pivot vanishes relative to the largest one."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu = scipy.linalg.lu_factor(K, check_finite=False)
    piv = np.abs(np.diag(lu[0]))
    if not np.all(np.isfinite(lu[0])) or piv.min(initial=1.0) <= 1e-15 * piv.max(initial=1.0):
        return None
    return lu


class _Scaling:
    """Nesterov-Todd scaling W with W z = W^{-T} s = λ, and the reduced KKT system it induces.

    For PSD cones ``W z = Rᵀ Z R``; for LP rows ``W z = d z``.
    """

    def __init__(self, kern: _Kernel, s=None, z=None):
        self.kern = kern
        if s is None:
            self.d = np.ones(kern.l)
            self.lam_lp = np.ones(kern.l)
            self.R = [np.broadcast_to(np.eye(m), (k, m, m)).copy() for _, k, m in kern.groups]
            self.Rinv = [r.copy() for r in self.R]
            self.lam_psd = [np.ones((k, m)) for _, k, m in kern.groups]
        else:
            sl, sm = kern.views(s)
            zl, zm = kern.views(z)
            self.d = np.sqrt(sl / zl)
            self.lam_lp = np.sqrt(sl * zl)
            self.R, self.Rinv, self.lam_psd = [], [], []
            for S, Z in zip(sm, zm):
                Ls, Lz = _factor(S), _factor(Z)
                u, lam, vt = np.linalg.svd(_T(Lz) @ Ls)
                if np.any(lam <= 0):
                    raise np.linalg.LinAlgError("degenerate scaling")
                isq = 1 / np.sqrt(lam)
                self.R.append((Ls @ _T(vt)) * isq[:, None, :])
                self.Rinv.append((_T(u) @ _T(Lz)) * isq[:, :, None])
                self.lam_psd.append(lam)
        self.RT = [_T(r) for r in self.R]
        self.RinvT = [_T(r) for r in self.Rinv]
        lam_mats = [np.einsum("ki,ij->kij", l, np.eye(l.shape[1])) for l in self.lam_psd]
        self.lam = kern.assemble(self.lam_lp, lam_mats)

        # W^{-T} G in flat layout
        parts = [kern.G[: kern.l] / self.d[:, None]]
        for Gg, Ri, RiT in zip(kern.Gg, self.Rinv, self.RinvT):
            k, n, m, _ = Gg.shape
            Gh = Ri[:, None] @ Gg @ RiT[:, None]
            parts.append(np.moveaxis(Gh, 1, -1).reshape(k * m * m, n))
        self.Gs = np.vstack(parts)
        n, p, A = kern.n, kern.p, kern.A
        K = np.zeros((n + p, n + p))
        K[:n, :n] = self.Gs.T @ self.Gs + A.T @ A
        K[:n, n:] = A.T
        K[n:, :n] = A
        self.augmented = False
        self.lu = _lu(K)
        if self.lu is None:
            # GsᵀGs squares the conditioning of W; near the boundary fall back to the
            # unreduced system, and to a small quasi-definite shift if even that fails
            N = kern.N
            K = np.zeros((n + p + N, n + p + N))
            K[:n, n : n + p] = A.T
            K[:n, n + p :] = self.Gs.T
            K[n : n + p, :n] = A
            K[n + p :, :n] = self.Gs
            K[n + p :, n + p :] = -np.eye(N)
            self.augmented = True
            self.lu = _lu(K)
            if self.lu is None:
                reg = 1e-13 * max(1.0, float(np.max(np.abs(K))))
                K[:n, :n] += reg * np.eye(n)
                K[n : n + p, n : n + p] -= reg * np.eye(p)
                self.lu = _lu(K)
        if self.lu is None:
            raise np.linalg.LinAlgError("singular KKT system")

    def _apply(self, u, left, right, lp_scale):
        lp, mats = self.kern.views(u)
        return self.kern.assemble(lp * lp_scale, [L @ M @ R for L, M, R in zip(left, mats, right)])

    def W(self, z):
        return self._apply(z, self.RT, self.R, self.d)

    def WT(self, u):
        return self._apply(u, self.R, self.RT, self.d)

    def W_inv(self, u):
        return self._apply(u, self.RinvT, self.Rinv, 1 / self.d)

    def W_invT(self, u):
        return self._apply(u, self.Rinv, self.RinvT, 1 / self.d)

    def lam_div(self, c):
        """Solve λ ∘ X = c."""
        lp, mats = self.kern.views(c)
        out = [2 * C / (l[:, :, None] + l[:, None, :]) for C, l in zip(mats, self.lam_psd)]
        return self.kern.assemble(lp / self.lam_lp, out)

    def max_step(self, v) -> float:
        """Largest α with λ + α v ⪰ 0 (v in scaled coordinates)."""
        lp, mats = self.kern.views(v)
        worst = float(np.max(-lp / self.lam_lp)) if lp.size else 0.0
        for D, l in zip(mats, self.lam_psd):
            isq = 1 / np.sqrt(l)
            M = D * isq[:, :, None] * isq[:, None, :]
            worst = max(worst, float(-np.linalg.eigvalsh(_sym(M))[:, 0].min()))
        return np.inf if worst <= 0 else 1.0 / worst

    def _solve_once(self, r1, r2, r3s):
        kern = self.kern
        if self.augmented:
            sol = scipy.linalg.lu_solve(self.lu, np.concatenate([r1, r2, r3s]), check_finite=False)
            return sol[: kern.n], sol[kern.n : kern.n + kern.p], sol[kern.n + kern.p :]
        rhs = np.concatenate([r1 + self.Gs.T @ r3s + kern.A.T @ r2, r2])
        sol = scipy.linalg.lu_solve(self.lu, rhs, check_finite=False)
        dx, dy = sol[: kern.n], sol[kern.n :]
        return dx, dy, self.Gs @ dx - r3s

    def solve(self, r1, r2, r3, refine: int = 2):
        """Solve [0 Aᵀ Gᵀ; A 0 0; G 0 -WᵀW][dx dy dz] = [r1 r2 r3].

        Returns ``dx``, ``dy`` and the scaled ``W dz``.
        """
        A = self.kern.A
        r3s = self.W_invT(r3)
        dx, dy, dzs = self._solve_once(r1, r2, r3s)
        for _ in range(refine):
            e1 = r1 - A.T @ dy - self.Gs.T @ dzs
            e2 = r2 - A @ dx
            e3 = r3s - self.Gs @ dx + dzs
            cx, cy, cz = self._solve_once(e1, e2, e3)
            dx, dy, dzs = dx + cx, dy + cy, dzs + cz
        return dx, dy, dzs


def _cone_shift(u, kern: _Kernel):
    alpha = -kern.min_eig(u)
    if not np.isfinite(alpha) or alpha < 0:
        return u
    return u + (1.0 + alpha) * kern.e


def solve_conic(form: ConicForm, settings: SolverSettings = SolverSettings()) -> ConicSolution:
    """Solve a :class:`ConicForm`; never raises on numerical failure, reports it in the status."""
    kern = _Kernel(form)
    sol = _solve_kernel(kern, form, settings)
    if kern.V is None:
        return sol
    sol.x = kern.V @ sol.x if np.all(np.isfinite(sol.x)) else np.full(form.n, np.nan)
    if sol.status is Status.DUAL_INFEASIBLE:
        return sol
    gap = float(kern.c_null @ kern.c_null)
    if gap > (settings.feas_tol * max(1.0, np.linalg.norm(form.c))) ** 2 and sol.status is not Status.PRIMAL_INFEASIBLE:
        # any feasible point moves freely along -c_null, where the objective falls without bound
        if sol.status is Status.OPTIMAL or sol.primal_residual <= 1e3 * settings.feas_tol:
            nan = float("nan")
            return ConicSolution(
                Status.DUAL_INFEASIBLE, -kern.c_null / gap, np.zeros(kern.p), np.zeros(0), [], np.zeros(0), [],
                -np.inf, nan, nan, nan, nan, nan, nan, sol.iterations, 0.0,
                message="objective decreases along a direction no constraint restricts",
            )
    return sol


def _solve_kernel(kern: _Kernel, form: ConicForm, settings: SolverSettings) -> ConicSolution:
    if kern.inconsistent > settings.feas_tol * max(1.0, np.linalg.norm(form.b)):
        return _empty(kern, Status.PRIMAL_INFEASIBLE, "inconsistent equality constraints")
    c, b, h, A, G = kern.c, kern.b, kern.h, kern.A, kern.G
    nrm_c, nrm_b, nrm_h = max(1.0, np.linalg.norm(c)), max(1.0, np.linalg.norm(b)), max(1.0, np.linalg.norm(h))
    cert_tol = 1.0 / settings.certificate_ratio
    refine = settings.refinement

    try:
        W0 = _Scaling(kern)
        # with W = I the scaled dz is dz itself
        x, _, zt = W0.solve(np.zeros(kern.n), b, h, refine)
        s = _cone_shift(-zt, kern)
        _, y, z = W0.solve(-c, np.zeros(kern.p), np.zeros(kern.N), refine)
        z = _cone_shift(z, kern)
    except np.linalg.LinAlgError as exc:
        return _empty(kern, Status.NUMERICAL_TROUBLE, f"initialization failed: {exc}")
    tau, kappa = 1.0, 1.0
    best, best_merit = None, np.inf
    status, message = Status.ITERATION_LIMIT, "iteration cap reached"

    for it in range(settings.max_iters + 1):
        Gx = G @ x
        ATy = A.T @ y
        GTz = G.T @ z
        rx = ATy + GTz + c * tau
        ry = A @ x - b * tau
        rz = s + Gx - h * tau
        hz, by, cx = h @ z, b @ y, c @ x
        rt = kappa + cx + by + hz
        sz = s @ z

        pcost, dcost = cx / tau, -(hz + by) / tau
        pres = max(np.linalg.norm(ry) / tau / nrm_b, np.linalg.norm(rz) / tau / nrm_h)
        dres = np.linalg.norm(rx) / tau / nrm_c
        gap = sz / tau**2
        relgap = gap / max(1.0, min(abs(pcost), abs(dcost)))
        min_eig = kern.min_eig(h - Gx / tau)
        merit = max(pres, dres, relgap, -min_eig / nrm_h)
        if np.all(np.isfinite(x)) and (best is None or merit <= best_merit):
            best = (x / tau, y / tau, z / tau, s / tau, pcost, dcost, pres, dres, gap, relgap, min_eig, it)
            best_merit = merit
        if settings.verbose:
            print(f"{it:3d} pcost={pcost: .9e} dcost={dcost: .9e} pres={pres:.2e} dres={dres:.2e} "
                  f"gap={gap:.2e} tau={tau:.2e} kappa={kappa:.2e}")
        if (
            pres <= settings.feas_tol
            and dres <= settings.feas_tol
            and relgap <= settings.gap_tol
            and min_eig >= -settings.feas_tol
        ):
            status, message = Status.OPTIMAL, "converged"
            best = (x / tau, y / tau, z / tau, s / tau, pcost, dcost, pres, dres, gap, relgap, min_eig, it)
            break
        dual_ray = -(hz + by)
        if dual_ray > 0:
            pinf = np.linalg.norm(ATy + GTz) / nrm_c / dual_ray
            if pinf <= cert_tol:
                return _certificate(kern, Status.PRIMAL_INFEASIBLE, it, pinf, y / dual_ray, z / dual_ray)
        if cx < 0:
            dinf = max(np.linalg.norm(A @ x) / nrm_b, np.linalg.norm(Gx + s) / nrm_h) / -cx
            if dinf <= cert_tol:
                return _certificate(kern, Status.DUAL_INFEASIBLE, it, dinf, x / -cx, None)
        if it == settings.max_iters:
            break

        try:
            W = _Scaling(kern, s, z)
            w1x, w1y, w1zs = W.solve(-c, b, h, refine)
            lam = W.lam
            mu = (sz + tau * kappa) / (kern.degree + 1)
            hs = W.W_invT(h)
            gdot1 = c @ w1x + b @ w1y + hs @ w1zs

            def direction(eta, ds_rhs, dtau_rhs):
                ld = W.lam_div(ds_rhs)
                w2x, w2y, w2zs = W.solve(-eta * rx, -eta * ry, -eta * rz - W.WT(ld), refine)
                num = -eta * rt - dtau_rhs / tau - (c @ w2x + b @ w2y + hs @ w2zs)
                dtau = num / (gdot1 - kappa / tau)
                dx = w2x + w1x * dtau
                dy = w2y + w1y * dtau
                dz_hat = w2zs + w1zs * dtau
                dkappa = (dtau_rhs - kappa * dtau) / tau
                # ds from the linearized primal residual keeps that residual exact under
                # an inaccurate solve; ld - dz_hat is its scaled form only in exact arithmetic
                ds = -eta * rz - G @ dx + h * dtau
                return dx, dy, dtau, dkappa, W.W_invT(ds), dz_hat, ds

            def step_to_boundary(dtau, dkappa, ds_hat, dz_hat, ds=None):
                amax = min(W.max_step(ds_hat), W.max_step(dz_hat))
                if dtau < 0:
                    amax = min(amax, -tau / dtau)
                if dkappa < 0:
                    amax = min(amax, -kappa / dkappa)
                return amax

            ll = kern.jordan(lam, lam)
            aff = direction(1.0, -ll, -tau * kappa)
            a_aff = min(1.0, step_to_boundary(*aff[2:]))
            sigma = (1.0 - a_aff) ** 3
            ds_rhs = -ll - kern.jordan(aff[4], aff[5]) + sigma * mu * kern.e
            dtau_rhs = -tau * kappa - aff[2] * aff[3] + sigma * mu
            dx, dy, dtau, dkappa, ds_hat, dz_hat, ds = direction(1.0 - sigma, ds_rhs, dtau_rhs)
            alpha = min(1.0, settings.step_fraction * step_to_boundary(dtau, dkappa, ds_hat, dz_hat))
        except np.linalg.LinAlgError as exc:
            status, message = Status.NUMERICAL_TROUBLE, f"linear algebra failure at iteration {it}: {exc}"
            break
        if not np.isfinite(alpha) or alpha < settings.min_step:
            status, message = Status.NUMERICAL_TROUBLE, f"step length {alpha:.3g} below {settings.min_step:g} at iteration {it}"
            break
        x = x + alpha * dx
        y = y + alpha * dy
        s = kern.symmetrize(s + alpha * ds)
        z = kern.symmetrize(z + alpha * W.W_inv(dz_hat))
        tau += alpha * dtau
        kappa += alpha * dkappa

    if best is None:
        return _empty(kern, Status.NUMERICAL_TROUBLE, message)
    xb, yb, zb, sb, pcost, dcost, pres, dres, gap, relgap, min_eig, it = best
    zl, zm = kern.split(zb)
    sl, sm = kern.split(sb)
    return ConicSolution(status, xb, yb, zl, zm, sl, sm, pcost, dcost, pres, dres, gap, relgap, min_eig, it, message=message)


def _empty(kern: _Kernel, status: Status, message: str) -> ConicSolution:
    nan = float("nan")
    return ConicSolution(
        status, np.full(kern.n, nan), np.zeros(kern.p), np.zeros(0), [], np.zeros(0), [],
        nan, nan, nan, nan, nan, nan, nan, 0, message=message,
    )


def _certificate(kern: _Kernel, status, it, residual, ray_a, ray_b) -> ConicSolution:
    nan = float("nan")
    if status is Status.PRIMAL_INFEASIBLE:
        zl, zm = kern.split(ray_b)
        return ConicSolution(
            status, np.full(kern.n, nan), ray_a, zl, zm, np.zeros(0), [],
            nan, nan, nan, nan, nan, nan, nan, it, residual,
            message=f"dual improving ray with normalized residual {residual:.3g}",
        )
    return ConicSolution(
        status, ray_a, np.zeros(kern.p), np.zeros(0), [], np.zeros(0), [],
        -np.inf, nan, nan, nan, nan, nan, nan, it, residual,
        message=f"primal improving ray with normalized residual {residual:.3g}",
    )


@dataclass
class SdpSolution:
    """Result of :func:`solve_sdp` in the user's sense and block layout."""

    status: Status
    values: dict
    objective: float
    dual_objective: float
    primal_residual: float
    dual_residual: float
    gap: float
    iterations: int
    message: str = ""
    raw: ConicSolution | None = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


def solve_sdp(problem, settings: SolverSettings = SolverSettings()) -> SdpSolution:
    """Compile and solve an :class:`~sdpbb.sdp.problem.SdpProblem`."""
    from .problem import compile_standard_form

    form = compile_standard_form(problem)
    sol = solve_conic(form, settings)
    values = form.block_values(sol.x) if np.all(np.isfinite(sol.x)) and sol.status is not Status.DUAL_INFEASIBLE else {}
    return SdpSolution(
        sol.status,
        values,
        form.user_objective(sol.primal_objective),
        form.user_objective(sol.dual_objective),
        sol.primal_residual,
        sol.dual_residual,
        sol.gap,
        sol.iterations,
        sol.message,
        sol,
    )
