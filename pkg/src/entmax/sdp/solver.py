"""Dense primal-dual interior-point method for :class:`SdpProblem`.

The problem is compiled to the conic form

    minimize  c.x   s.t.  G x + s = h,  A x = b,  s in K

where ``K`` is a product of a nonnegative orthant (the inequalities) and PSD
cones (real-symmetric or complex-Hermitian, handled natively in complex
arithmetic).  Iterates follow Nesterov-Todd scaling with a Mehrotra
predictor-corrector step.  The scaling matrices are kept in factored form
``s = R diag(l) R^H``, ``z = R^-H diag(l) R^-1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from ..errors import SolverError
from .coords import basis, pt_signed_perm, quad_form
from .problem import SdpProblem

STEP = 0.99
#: Best iterates within this factor of every tolerance are reported as
#: ``optimal_inaccurate`` when the path stalls.
INACCURATE_FACTOR = 100.0

#: Maximum number of iterative-refinement rounds per Newton solve.
REFINE_ROUNDS = 4

#: Stop after this many iterations without improving an acceptable best iterate.
STALL_ITERS = 20
RAY_TOL = 1e-8
FEASTOL = 1e-8


@dataclass(frozen=True, eq=False)
class SdpSolution:
    """Result of :func:`solve`.

    ``blocks`` holds one optimal matrix per problem variable, ``slacks`` and
    ``duals`` one matrix per PSD constraint.  ``gap`` is
    ``|primal - dual| / (1 + |primal|)``.
    """

    status: str
    primal_value: float
    dual_value: float
    gap: float
    iterations: int
    blocks: tuple
    slacks: tuple
    duals: tuple
    residuals: dict = field(default_factory=dict)
    message: str = ""

    def value(self, var) -> np.ndarray:
        return self.blocks[var.index]

    def scalar(self, var) -> float:
        return float(self.blocks[var.index].real[0, 0])

    @property
    def optimal(self) -> bool:
        return self.status in ("optimal", "optimal_inaccurate")


class _Block:
    """One PSD constraint in coordinate form."""

    def __init__(self, con, offsets):
        cplx = any(t.var.cplx for t in con.terms if t.op != "scale") or np.iscomplexobj(con.const)
        self.n = con.n
        self.B = basis(con.n, bool(cplx))
        self.name = con.name
        self.h = self.B.svec(con.const)
        self.mterms = []
        self.sterms = []
        for t in con.terms:
            o = offsets[t.var.index]
            if t.op == "scale":
                self.sterms.append((o, t.coef * self.B.svec(t.matrix)))
            elif t.op == "id":
                self.mterms.append((o, t.coef, None, None, None))
            else:
                perm, sign = pt_signed_perm(self.n, t.dims[0], t.dims[1], self.B.cplx)
                inv = np.empty_like(perm)
                inv[perm] = np.arange(len(perm))
                self.mterms.append((o, t.coef, perm, sign, inv))

    def forward(self, x):
        N = self.B.N
        out = np.zeros(N)
        for o, coef, perm, sign, _ in self.mterms:
            u = x[o:o + N]
            out += coef * (u if perm is None else sign * u[perm])
        for o, g in self.sterms:
            out += x[o] * g
        return out

    def adjoint(self, z, out):
        N = self.B.N
        for o, coef, perm, sign, inv in self.mterms:
            if perm is None:
                out[o:o + N] += coef * z
            else:
                w = np.empty(N)
                w[perm] = sign * z
                out[o:o + N] += coef * w
        for o, g in self.sterms:
            out[o] += g @ z

    def schur(self, Q, H):
        K = quad_form(self.B, Q)
        N = self.B.N
        for oa, ca, pa, sa, ia in self.mterms:
            for ob, cb, pb, sb, ib in self.mterms:
                M = K
                if pa is not None or pb is not None:
                    M = K * (sa[:, None] if sa is not None else 1.0) * (sb[None, :] if sb is not None else 1.0)
                    if ia is not None:
                        M = M[ia]
                    if ib is not None:
                        M = M[:, ib]
                H[oa:oa + N, ob:ob + N] += ca * cb * M
        for oa, g in self.sterms:
            Kg = K @ g
            for ob, g2 in self.sterms:
                H[oa, ob] += g2 @ Kg
            for ob, cb, pb, sb, ib in self.mterms:
                row = cb * (Kg if pb is None else (Kg * sb)[ib])
                H[oa, ob:ob + N] += row
                H[ob:ob + N, oa] += row


class _Compiled:
    def __init__(self, p: SdpProblem):
        self.offsets = []
        o = 0
        for v in p.variables:
            self.offsets.append(o)
            o += v.basis.N
        self.N = o
        self.variables = p.variables
        self.c = np.zeros(self.N)
        for v, coef in p.objective:
            self.c[self.offsets[v.index]:self.offsets[v.index] + len(coef)] += coef
        self.offset = p.offset
        self.blocks = [_Block(con, self.offsets) for con in p.psd]
        self.F = self._rows(p.inequalities)
        self.hl = np.array([c.rhs for c in p.inequalities], dtype=float)
        self.A = self._rows(p.equalities)
        self.b = np.array([c.rhs for c in p.equalities], dtype=float)
        self.degree = sum(blk.n for blk in self.blocks) + len(self.hl)
        if self.degree == 0:
            raise SolverError("problem has no conic constraints")

    def _rows(self, cons):
        M = np.zeros((len(cons), self.N))
        for r, con in enumerate(cons):
            for v, coef in con.terms:
                o = self.offsets[v.index]
                M[r, o:o + len(coef)] += coef
        return M

    def Gx(self, x):
        """``G x`` as (list of block coordinate vectors, lp vector)."""
        return [-blk.forward(x) for blk in self.blocks], self.F @ x

    def GTz(self, zs, zl):
        out = np.zeros(self.N)
        for blk, z in zip(self.blocks, zs):
            blk.adjoint(z, out)
        return -out + self.F.T @ zl

    def hdot(self, zs, zl):
        return sum(blk.h @ z for blk, z in zip(self.blocks, zs)) + self.hl @ zl

    def unpack(self, x):
        out = []
        for v, o in zip(self.variables, self.offsets):
            out.append(v.basis.smat(x[o:o + v.basis.N]))
        return tuple(out)


def _jordan(X, Y):
    return (X @ Y + Y @ X) / 2


def _max_step_psd(lam, D):
    r = 1 / np.sqrt(lam)
    m = np.linalg.eigvalsh(r[:, None] * D * r[None, :])[0]
    return np.inf if m >= 0 else -1.0 / m


def _max_step_lp(lam, d):
    neg = d < 0
    return np.inf if not np.any(neg) else float(np.min(-lam[neg] / d[neg]))


class _KKT:
    def __init__(self, H, A):
        scale = max(1.0, float(np.max(np.abs(np.diag(H))))) if H.size else 1.0
        reg = 0.0
        for attempt in range(6):
            try:
                self.Hc = sla.cho_factor(H + reg * np.eye(len(H)), lower=True, check_finite=False)
                break
            except np.linalg.LinAlgError:
                reg = scale * (1e-14 * 100**attempt)
        else:
            raise SolverError("KKT matrix is not positive definite")
        self.A = A
        if A.shape[0]:
            self.HiAt = sla.cho_solve(self.Hc, A.T, check_finite=False)
            S = A @ self.HiAt
            try:
                self.Sc = sla.cho_factor(S, lower=True, check_finite=False)
                self.Spinv = None
            except np.linalg.LinAlgError:
                self.Sc = None
                self.Spinv = np.linalg.pinv(S)

    def solve(self, r1, r2):
        Hr = sla.cho_solve(self.Hc, r1, check_finite=False)
        if not self.A.shape[0]:
            return Hr, np.zeros(0)
        t = self.A @ Hr - r2
        dy = sla.cho_solve(self.Sc, t, check_finite=False) if self.Sc is not None else self.Spinv @ t
        return Hr - self.HiAt @ dy, dy


def _nt_scaling(S, Z):
    """Factor ``W^T W = R R^H`` with ``R^H Z R = R^-1 S R^-H = diag(lam)``."""
    Ls = np.linalg.cholesky(S)
    Lz = np.linalg.cholesky(Z)
    _, lam, Vh = np.linalg.svd(Lz.conj().T @ Ls)
    rt = np.sqrt(lam)
    R = Ls @ Vh.conj().T / rt[None, :]
    Rinv = (rt[:, None] * Vh) @ sla.solve_triangular(Ls, np.eye(len(S)), lower=True)
    return R, Rinv, lam


def _herm(M):
    return (M + M.conj().T) / 2


def solve(p: SdpProblem, tol: float = 1e-8, max_iter: int = 200, feastol: float = FEASTOL,
          verbose: bool = False) -> SdpSolution:
    """Solve ``p`` and return primal/dual values, optimal blocks and certificates.

    ``status`` is ``optimal`` when residuals are at most ``feastol`` (relative
    to the data scale) and the relative gap is at most ``tol``; ``infeasible``
    when an approximate primal or dual ray is found; ``maxIter`` otherwise.
    """
    C = _compiled(p)
    blocks = C.blocks
    L = len(C.hl)
    nrm_c = max(1.0, np.linalg.norm(C.c))
    nrm_h = max(1.0, np.sqrt(sum(blk.h @ blk.h for blk in blocks) + C.hl @ C.hl))
    nrm_b = max(1.0, np.linalg.norm(C.b))

    # -- starting point: least-squares primal and dual, shifted into the cone
    kkt = _factor(C, [np.eye(blk.n) for blk in blocks], np.ones(L))
    x, _ = kkt.solve(C.GTz([blk.h for blk in blocks], C.hl), C.b)
    u, y = kkt.solve(-C.c, np.zeros(len(C.b)))
    gxs, gxl = C.Gx(x)
    Ss = [blk.B.smat(blk.h - g) for blk, g in zip(blocks, gxs)]
    sl = C.hl - gxl
    gus, gul = C.Gx(u)
    Zs = [blk.B.smat(g) for blk, g in zip(blocks, gus)]
    zl = gul.copy()

    def shift_all(mats, vec):
        mins = [np.linalg.eigvalsh(M)[0] for M in mats] + ([float(np.min(vec))] if L else [])
        a = -min(mins)
        if a >= -1e-8 * max([1.0] + [np.linalg.norm(M) for M in mats]):
            mats = [M + (1 + a) * np.eye(len(M)) for M in mats]
            vec = vec + (1 + a)
        return mats, vec

    Ss, sl = shift_all(Ss, sl)
    Zs, zl = shift_all(Zs, zl)

    status, message = "maxIter", "iteration limit reached"
    it = 0
    best = None
    while True:
        s_list = [blk.B.svec(S) for blk, S in zip(blocks, Ss)]
        z_list = [blk.B.svec(Z) for blk, Z in zip(blocks, Zs)]
        gxs, gxl = C.Gx(x)
        rx = C.GTz(z_list, zl) + C.A.T @ y + C.c
        ry = C.A @ x - C.b
        rzs = [g + s - blk.h for g, s, blk in zip(gxs, s_list, blocks)]
        rzl = gxl + sl - C.hl
        pcost = float(C.c @ x)
        hz = float(C.hdot(z_list, zl) + C.b @ y)
        dcost = -hz
        sz = float(sum(s @ z for s, z in zip(s_list, z_list)) + sl @ zl)
        pres = max(np.linalg.norm(ry) / nrm_b, np.sqrt(sum(r @ r for r in rzs) + rzl @ rzl) / nrm_h)
        dres = np.linalg.norm(rx) / nrm_c
        gap = abs(pcost - dcost) / (1 + abs(pcost))
        rel_sz = abs(sz) / (1 + abs(pcost))
        if verbose:
            print(f"{it:3d} p={pcost:+.10e} d={dcost:+.10e} pres={pres:.1e} dres={dres:.1e} gap={gap:.1e} sz={sz:.1e}")
        score = max(pres / feastol, dres / feastol, gap / tol, rel_sz / tol)
        if best is None or score < best[0]:
            best = (score, x, y, Ss, Zs, sl, zl, pres, dres)
            best_it = it
        if pres <= feastol and dres <= feastol and gap <= tol and rel_sz <= tol:
            status, message = "optimal", "converged"
            break
        # ray heuristics
        if hz < 0:
            ray = np.linalg.norm(C.GTz(z_list, zl) + C.A.T @ y) / nrm_c
            if ray <= RAY_TOL * (-hz):
                status, message = "infeasible", "primal infeasible (dual ray)"
                break
        if pcost < 0:
            ray = max(np.linalg.norm(C.A @ x) / nrm_b,
                      np.sqrt(sum((g + s) @ (g + s) for g, s in zip(gxs, s_list)) + (gxl + sl) @ (gxl + sl)) / nrm_h)
            if ray <= RAY_TOL * (-pcost):
                status, message = "infeasible", "dual infeasible (primal ray)"
                break
        if it >= max_iter:
            break
        if best[0] <= INACCURATE_FACTOR and it - best_it >= STALL_ITERS:
            message = "no progress since the best iterate"
            break
        it += 1

        try:
            scal = [_nt_scaling(S, Z) for S, Z in zip(Ss, Zs)]
            Qs = [Rinv.conj().T @ Rinv for _, Rinv, _ in scal]
            kkt = _factor(C, Qs, zl / sl if L else np.zeros(0))
        except (np.linalg.LinAlgError, SolverError) as exc:
            message = f"factorization failed: {exc}"
            break
        wl = np.sqrt(sl / zl) if L else np.zeros(0)
        laml = np.sqrt(sl * zl) if L else np.zeros(0)

        def newton0(bxv, byv, bzs, bzl, bss, bsl):
            # bss: per-block scaled complementarity rhs (matrices); bsl: lp
            Us = [2 * bs / (lam[:, None] + lam[None, :]) for bs, (_, _, lam) in zip(bss, scal)]
            Ul = bsl / laml if L else np.zeros(0)
            ts = [blk.B.svec(R @ U @ R.conj().T) - bz for blk, U, (R, _, _), bz in zip(blocks, Us, scal, bzs)]
            tl = wl * Ul - bzl
            gs = [blk.B.svec(Q @ blk.B.smat(t) @ Q) for blk, Q, t in zip(blocks, Qs, ts)]
            gl = tl / wl**2 if L else np.zeros(0)
            dx, dy = kkt.solve(bxv - C.GTz(gs, gl), byv)
            gdx, gdxl = C.Gx(dx)
            dzh, dsh = [], []
            for blk, Q, (R, _, _), g, t, U in zip(blocks, Qs, scal, gdx, ts, Us):
                zh = _herm(R.conj().T @ Q @ blk.B.smat(g + t) @ Q @ R)
                dzh.append(zh)
                dsh.append(U - zh)
            dzhl = wl * (gdxl + tl) / wl**2 if L else np.zeros(0)
            dshl = Ul - dzhl
            return dx, dy, dsh, dzh, dshl, dzhl

        def unscale(dsh, dzh, dshl, dzhl):
            ds = [_herm(R @ sh @ R.conj().T) for (R, _, _), sh in zip(scal, dsh)]
            dz = [_herm(Rinv.conj().T @ zh @ Rinv) for (_, Rinv, _), zh in zip(scal, dzh)]
            return ds, dz, (wl * dshl if L else dshl), (dzhl / wl if L else dzhl)

        def residual(sol, bxv, byv, bzs, bzl, bss, bsl):
            dx, dy, dsh, dzh, dshl, dzhl = sol
            ds, dz, dsl, dzl = unscale(dsh, dzh, dshl, dzhl)
            e1 = bxv - C.GTz([blk.B.svec(M) for blk, M in zip(blocks, dz)], dzl) - C.A.T @ dy
            e2 = byv - C.A @ dx
            gdx, gdxl = C.Gx(dx)
            e3 = [bz - g - blk.B.svec(M) for blk, bz, g, M in zip(blocks, bzs, gdx, ds)]
            e3l = bzl - gdxl - dsl
            e4 = []
            for bs, (_, _, lam), sh, zh in zip(bss, scal, dsh, dzh):
                U = sh + zh
                e4.append(bs - (lam[:, None] * U + U * lam[None, :]) / 2)
            e4l = bsl - laml * (dshl + dzhl) if L else np.zeros(0)
            size = np.sqrt(e1 @ e1 + e2 @ e2 + sum(e @ e for e in e3) + e3l @ e3l
                           + sum(np.sum(np.abs(e) ** 2) for e in e4) + e4l @ e4l)
            return (e1, e2, e3, e3l, e4, e4l), size

        def newton(bxv, byv, bzs, bzl, bss, bsl):
            # iterative refinement on the full linearized system, kept while it helps
            rhs = (bxv, byv, bzs, bzl, bss, bsl)
            sol = newton0(*rhs)
            err, size = residual(sol, *rhs)
            for _ in range(REFINE_ROUNDS):
                cor = newton0(*err)
                trial = (sol[0] + cor[0], sol[1] + cor[1], [a + b for a, b in zip(sol[2], cor[2])],
                         [a + b for a, b in zip(sol[3], cor[3])], sol[4] + cor[4], sol[5] + cor[5])
                err_t, size_t = residual(trial, *rhs)
                if not size_t < size:
                    break
                sol, err, size = trial, err_t, size_t
            return sol

        def step_len(dsh, dzh, dshl, dzhl):
            a = np.inf
            for (_, _, lam), ds, dz in zip(scal, dsh, dzh):
                a = min(a, _max_step_psd(lam, ds), _max_step_psd(lam, dz))
            if L:
                a = min(a, _max_step_lp(laml, dshl), _max_step_lp(laml, dzhl))
            return a

        rzs_neg = [-r for r in rzs]
        lam2 = [np.diag(lam**2) for _, _, lam in scal]
        # predictor
        aff = newton(-rx, -ry, rzs_neg, -rzl, [-m for m in lam2], -laml**2)
        a_aff = min(1.0, step_len(*aff[2:]))
        mu = sz / C.degree
        saff = sum(np.real(np.sum((np.diag(lam) + a_aff * ds) * (np.diag(lam) + a_aff * dz).T))
                   for (_, _, lam), ds, dz in zip(scal, aff[2], aff[3]))
        if L:
            saff += float((laml + a_aff * aff[4]) @ (laml + a_aff * aff[5]))
        sigma = float(np.clip(saff / sz, 0.0, 1.0) ** 3) if sz > 0 else 0.0
        # corrector
        bss = [sigma * mu * np.eye(len(lam)) - m - _jordan(ds, dz)
               for (_, _, lam), m, ds, dz in zip(scal, lam2, aff[2], aff[3])]
        bsl = sigma * mu - laml**2 - aff[4] * aff[5] if L else np.zeros(0)
        dx, dy, dsh, dzh, dshl, dzhl = newton(-rx, -ry, rzs_neg, -rzl, bss, bsl)
        alpha = min(1.0, STEP * step_len(dsh, dzh, dshl, dzhl))
        if not np.isfinite(alpha) or alpha <= 1e-14:
            message = "step length collapsed"
            break
        ds, dz, dsl, dzl = unscale(dsh, dzh, dshl, dzhl)
        x = x + alpha * dx
        y = y + alpha * dy
        Ss = [S + alpha * d for S, d in zip(Ss, ds)]
        Zs = [Z + alpha * d for Z, d in zip(Zs, dz)]
        sl = sl + alpha * dsl
        zl = zl + alpha * dzl

    if status != "optimal" and status != "infeasible":
        score, x, y, Ss, Zs, sl, zl, pres, dres = best
        if score <= INACCURATE_FACTOR:
            status = "optimal_inaccurate"
            message = f"{message}; best iterate within {INACCURATE_FACTOR:g}x of the tolerances"
    return _finish(C, status, message, x, y, Zs, zl, it, pres, dres)


def _finish(C, status, message, x, y, Zs, zl, it, pres, dres):
    slacks, duals, min_eigs = [], [], []
    gxs, _ = C.Gx(x)
    for blk, g, Z in zip(C.blocks, gxs, Zs):
        expr = blk.B.smat(blk.h - g)
        slacks.append(expr)
        duals.append(Z)
        min_eigs.append(float(np.linalg.eigvalsh(expr)[0]))
    pv = float(C.c @ x) + C.offset
    dv = float(-C.hdot([blk.B.svec(Z) for blk, Z in zip(C.blocks, duals)], zl) - C.b @ y) + C.offset
    gap = abs(pv - dv) / (1 + abs(pv))
    lin = (C.hl - C.F @ x) if len(C.hl) else np.zeros(0)
    res = {
        "primal": float(pres),
        "dual": float(dres),
        "min_eig": min(min_eigs) if min_eigs else 0.0,
        "max_ineq_violation": float(max(0.0, -lin.min())) if lin.size else 0.0,
        "max_eq_violation": float(np.max(np.abs(C.A @ x - C.b))) if len(C.b) else 0.0,
    }
    return SdpSolution(
        status=status,
        primal_value=pv,
        dual_value=dv,
        gap=float(gap),
        iterations=it,
        blocks=C.unpack(x),
        slacks=tuple(slacks),
        duals=tuple(duals),
        residuals=res,
        message=message,
    )


def _compiled(p):
    return _Compiled(p)


def _factor(C, Qs, dl):
    H = np.zeros((C.N, C.N))
    for blk, Q in zip(C.blocks, Qs):
        blk.schur(Q, H)
    if len(dl):
        H += (C.F.T * dl[None, :]) @ C.F
    H = (H + H.T) / 2
    return _KKT(H, C.A)
