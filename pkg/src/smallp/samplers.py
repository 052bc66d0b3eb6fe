"""MCMC samplers for a multivariate normal truncated to a constraint region.

Three kernels share one compiled geometry:

* Gibbs works in the original coordinates with exact univariate conditionals.
* Hit-and-run and exact HMC work in whitened coordinates ``z`` where the base
  distribution is ``N(0, I)`` and ``y = mean + chol @ z``. Linear regions become
  ``F z + g > 0``; quadratic regions become ``z'Az + 2b'z + c0 >= 0``.

All kernels are numba-compiled and take an explicit ``numpy.random.Generator``,
so a chain is a deterministic function of its seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import SamplerError
from .model import ChainConfig, Sampler, TailProblem
from .specialfn import _tn_draw

MAX_REFLECTIONS = 1000
_GRID_STEP = math.pi / 64
_ROOT_TOL = 1e-12
_MAX_REDRAWS = 100
# consecutive over-long HMC trajectories before the chain is declared stuck
_MAX_TRUNCATED_RUN = 100

_OK = 0
_ERR_EMPTY_SUPPORT = 1
_ERR_REFLECTIONS = 2
_ERR_NONFINITE = 3
_ERR_REDRAW = 4

_ERRORS = {
    _ERR_EMPTY_SUPPORT: "empty conditional support (state left the constraint region)",
    _ERR_REFLECTIONS: f"more than {MAX_REFLECTIONS} wall reflections per HMC step, repeatedly",
    _ERR_NONFINITE: "chain state became non-finite",
    _ERR_REDRAW: "could not draw a point strictly inside the region",
}


@dataclass(frozen=True)
class Geometry:
    """Compiled description of a problem shared by every kernel."""

    kind: int  # 0 = linear, 1 = quadratic
    mu: np.ndarray
    chol: np.ndarray
    prec: np.ndarray
    c_matrix: np.ndarray
    lam: np.ndarray
    q: float
    F: np.ndarray
    g: np.ndarray
    A: np.ndarray
    b: np.ndarray
    c0: float

    @classmethod
    def from_problem(cls, problem: TailProblem) -> "Geometry":
        theta = problem.theta0
        d = theta.dim
        mu = np.ascontiguousarray(theta.mean, dtype=float)
        chol = np.ascontiguousarray(theta.chol, dtype=float)
        inv_chol = np.linalg.solve(chol, np.eye(d))
        prec = np.ascontiguousarray(inv_chol.T @ inv_chol)
        con = problem.constraint
        if con.kind == "linear":
            c = np.ascontiguousarray(con.c_matrix, dtype=float)
            return cls(
                kind=0, mu=mu, chol=chol, prec=prec, c_matrix=c,
                lam=np.zeros(d), q=0.0,
                F=np.ascontiguousarray(c @ chol), g=np.ascontiguousarray(c @ mu),
                A=np.zeros((d, d)), b=np.zeros(d), c0=0.0,
            )
        lam = np.ascontiguousarray(con.canonical_lambdas, dtype=float)
        q = float(con.canonical_q)
        A = chol.T @ (lam[:, None] * chol)
        A = 0.5 * (A + A.T)
        return cls(
            kind=1, mu=mu, chol=chol, prec=prec, c_matrix=np.zeros((0, d)),
            lam=lam, q=q, F=np.zeros((0, d)), g=np.zeros(0),
            A=np.ascontiguousarray(A), b=np.ascontiguousarray(chol.T @ (lam * mu)),
            c0=float(mu @ (lam * mu)) - q,
        )

    def to_z(self, y: np.ndarray) -> np.ndarray:
        return np.linalg.solve(self.chol, np.asarray(y, dtype=float) - self.mu)

    def to_y(self, z: np.ndarray) -> np.ndarray:
        return self.mu + z @ self.chol.T


# ---------------------------------------------------------------------------
# Gibbs (original coordinates)
# ---------------------------------------------------------------------------


@njit(cache=True)
def _gibbs_support(i, y, kind, C, Cy, lam, S, q):
    """Feasible set for coordinate i given the others: ``(lo, hi, outside)``."""
    if kind == 0:
        lo = -math.inf
        hi = math.inf
        for r in range(C.shape[0]):
            cri = C[r, i]
            rest = Cy[r] - cri * y[i]
            if cri > 0.0:
                bound = -rest / cri
                if bound > lo:
                    lo = bound
            elif cri < 0.0:
                bound = -rest / cri
                if bound < hi:
                    hi = bound
            elif rest <= 0.0:
                return 1.0, 0.0, False
        return lo, hi, False
    rest = S - lam[i] * y[i] * y[i]
    r = q - rest
    if r <= 0.0:
        return -math.inf, math.inf, False
    a = math.sqrt(r / lam[i])
    return -a, a, True


@njit(cache=True)
def _gibbs_sweep(y, mu, prec, kind, C, Cy, lam, q, rng):
    d = y.shape[0]
    for i in range(d):
        s2 = 1.0 / prec[i, i]
        s = math.sqrt(s2)
        acc = 0.0
        for j in range(d):
            if j != i:
                acc += prec[i, j] * (y[j] - mu[j])
        m = mu[i] - s2 * acc
        S = 0.0
        if kind == 1:
            for j in range(d):
                S += lam[j] * y[j] * y[j]
        lo, hi, outside = _gibbs_support(i, y, kind, C, Cy, lam, S, q)
        if not outside and not lo < hi:
            return _ERR_EMPTY_SUPPORT
        ok = False
        t = y[i]
        for _ in range(_MAX_REDRAWS):
            if lo == -math.inf and hi == math.inf:
                t = m + s * rng.standard_normal()
            else:
                t = m + s * _tn_draw((lo - m) / s, (hi - m) / s, outside, rng)
            if kind == 0:
                ok = True
                for r in range(C.shape[0]):
                    if Cy[r] + C[r, i] * (t - y[i]) <= 0.0:
                        ok = False
                        break
            else:
                ok = S - lam[i] * y[i] * y[i] + lam[i] * t * t - q >= 0.0
            if ok:
                break
        if not ok:
            return _ERR_REDRAW
        if kind == 0:
            for r in range(C.shape[0]):
                Cy[r] += C[r, i] * (t - y[i])
        y[i] = t
        if not math.isfinite(t):
            return _ERR_NONFINITE
    return _OK


@njit(cache=True)
def _gibbs_chain(y0, mu, prec, kind, C, lam, q, n_out, burn_in, rng):
    d = y0.shape[0]
    out = np.empty((n_out, d))
    y = y0.copy()
    Cy = C @ y
    for it in range(burn_in + n_out):
        # refresh the cached margins once per sweep to stop drift
        if kind == 0:
            Cy = C @ y
        status = _gibbs_sweep(y, mu, prec, kind, C, Cy, lam, q, rng)
        if status != _OK:
            return out, status
        if it >= burn_in:
            out[it - burn_in] = y
    return out, _OK


# ---------------------------------------------------------------------------
# whitened-space helpers
# ---------------------------------------------------------------------------


@njit(cache=True)
def _margin_z(z, kind, F, g, A, b, c0):
    """Quadratic: h(z) >= 0 inside. Linear: min_j (F z + g)_j > 0 inside."""
    if kind == 0:
        m = math.inf
        for j in range(F.shape[0]):
            v = g[j]
            for k in range(z.shape[0]):
                v += F[j, k] * z[k]
            if v < m:
                m = v
        return m
    Az = A @ z
    return z @ Az + 2.0 * (b @ z) + c0


@njit(cache=True)
def _inside_z(z, kind, F, g, A, b, c0):
    m = _margin_z(z, kind, F, g, A, b, c0)
    return m > 0.0 if kind == 0 else m >= 0.0


@njit(cache=True)
def _line_set(kind, F, g, A, b, c0, z, w):
    """Set of t with ``z + t*w`` in the region: ``(lo, hi, outside)``."""
    if kind == 0:
        lo = -math.inf
        hi = math.inf
        for j in range(F.shape[0]):
            marg = g[j]
            slope = 0.0
            for k in range(z.shape[0]):
                marg += F[j, k] * z[k]
                slope += F[j, k] * w[k]
            if slope > 0.0:
                bound = -marg / slope
                if bound > lo:
                    lo = bound
            elif slope < 0.0:
                bound = -marg / slope
                if bound < hi:
                    hi = bound
        return lo, hi, False
    Az = A @ z
    Aw = A @ w
    qa = w @ Aw
    qb = 2.0 * (w @ Az + b @ w)
    qc = z @ Az + 2.0 * (b @ z) + c0
    disc = qb * qb - 4.0 * qa * qc
    if disc <= 0.0:
        return -math.inf, math.inf, False
    sq = math.sqrt(disc)
    qq = -0.5 * (qb + sq) if qb >= 0.0 else -0.5 * (qb - sq)
    if qq == 0.0:
        return -math.inf, math.inf, False
    r1 = qq / qa
    r2 = qc / qq
    if r1 > r2:
        r1, r2 = r2, r1
    if r1 == r2:
        return -math.inf, math.inf, False
    return r1, r2, True


@njit(cache=True)
def _hit_and_run_chain(z0, kind, F, g, A, b, c0, n_out, burn_in, rng):
    d = z0.shape[0]
    out = np.empty((n_out, d))
    z = z0.copy()
    w = np.empty(d)
    for it in range(burn_in + n_out):
        nrm = 0.0
        while nrm == 0.0:
            for k in range(d):
                w[k] = rng.standard_normal()
            nrm = math.sqrt(w @ w)
        w /= nrm
        lo, hi, outside = _line_set(kind, F, g, A, b, c0, z, w)
        # slice of N(0, I) along z + t w is N(-z.w, 1) since |w| = 1
        m = -(z @ w)
        ok = False
        for _ in range(_MAX_REDRAWS):
            if lo == -math.inf and hi == math.inf:
                t = m + rng.standard_normal()
            else:
                t = m + _tn_draw(lo - m, hi - m, outside, rng)
            znew = z + t * w
            if _inside_z(znew, kind, F, g, A, b, c0):
                ok = True
                break
        if not ok:
            return out, _ERR_REDRAW
        z = znew
        for k in range(d):
            if not math.isfinite(z[k]):
                return out, _ERR_NONFINITE
        if it >= burn_in:
            out[it - burn_in] = z
    return out, _OK


# ---------------------------------------------------------------------------
# exact HMC
# ---------------------------------------------------------------------------


@njit(cache=True)
def _trig_eval(t, a0, a1, b1, a2, b2):
    return a0 + a1 * math.cos(t) + b1 * math.sin(t) + a2 * math.cos(2.0 * t) + b2 * math.sin(2.0 * t)


@njit(cache=True)
def _bisect_exit(lo, hi, a0, a1, b1, a2, b2):
    # h(lo) >= 0 > h(hi); returns the feasible side of the crossing
    while hi - lo > _ROOT_TOL:
        mid = 0.5 * (lo + hi)
        if _trig_eval(mid, a0, a1, b1, a2, b2) < 0.0:
            hi = mid
        else:
            lo = mid
    return lo


@njit(cache=True)
def _first_exit_trig(a0, a1, b1, a2, b2, t_max):
    """Earliest t in (0, t_max] where h(t) = a0 + a1 cos t + b1 sin t + a2 cos 2t + b2 sin 2t
    drops below zero, assuming h(0) >= 0 up to rounding. Returns inf if none.

    The grid of width pi/64 is refined wherever the curvature bound
    |h''| <= K cannot rule out a dip below zero, so no crossing is skipped.
    """
    K = math.hypot(a1, b1) + 4.0 * math.hypot(a2, b2)
    h0 = max(_trig_eval(0.0, a0, a1, b1, a2, b2), 0.0)
    # h(t) >= h0 + h'(0) t - K t^2 / 2, so nothing can happen before t_safe
    dh0 = b1 + 2.0 * b2
    t_start = 0.0
    if K > 0.0:
        t_safe = (dh0 + math.sqrt(dh0 * dh0 + 2.0 * K * h0)) / K
        if t_safe > 0.0:
            t_start = min(t_safe, t_max)
    elif h0 >= 0.0 and dh0 >= 0.0:
        return math.inf
    if t_start >= t_max:
        return math.inf

    stack_a = np.empty(256)
    stack_b = np.empty(256)
    stack_ha = np.empty(256)
    stack_hb = np.empty(256)
    n_cells = max(1, int(math.ceil((t_max - t_start) / _GRID_STEP)))
    width = (t_max - t_start) / n_cells
    ta = t_start
    ha = max(_trig_eval(ta, a0, a1, b1, a2, b2), 0.0)
    for c in range(n_cells):
        tb = t_max if c == n_cells - 1 else t_start + (c + 1) * width
        hb = _trig_eval(tb, a0, a1, b1, a2, b2)
        sp = 0
        stack_a[0] = ta
        stack_b[0] = tb
        stack_ha[0] = ha
        stack_hb[0] = hb
        sp = 1
        while sp > 0:
            sp -= 1
            a = stack_a[sp]
            bb = stack_b[sp]
            fa = stack_ha[sp]
            fb = stack_hb[sp]
            w = bb - a
            if min(fa, fb) - K * w * w / 8.0 >= 0.0:
                continue
            if fb < 0.0 and w <= 1e-3:
                return _bisect_exit(a, bb, a0, a1, b1, a2, b2)
            if w < _ROOT_TOL or sp + 2 > 256:
                if fb < 0.0:
                    return a
                continue
            mid = 0.5 * (a + bb)
            fm = _trig_eval(mid, a0, a1, b1, a2, b2)
            stack_a[sp] = mid
            stack_b[sp] = bb
            stack_ha[sp] = fm
            stack_hb[sp] = fb
            stack_a[sp + 1] = a
            stack_b[sp + 1] = mid
            stack_ha[sp + 1] = fa
            stack_hb[sp + 1] = fm
            sp += 2
        ta = tb
        ha = hb
    return math.inf


@njit(cache=True)
def _first_exit_quad(x, v, A, b, c0, t_max):
    Ax = A @ x
    Av = A @ v
    xAx = x @ Ax
    vAv = v @ Av
    xAv = x @ Av
    a0 = 0.5 * (xAx + vAv) + c0
    a2 = 0.5 * (xAx - vAv)
    b2 = xAv
    a1 = 2.0 * (b @ x)
    b1 = 2.0 * (b @ v)
    if a1 == 0.0 and b1 == 0.0:
        # centred quadratic: h(t) = a0 + R cos(2t - phi), solved in closed form
        R = math.hypot(a2, b2)
        if R == 0.0 or a0 >= R:
            return math.inf
        phi = math.atan2(b2, a2)
        alpha = math.acos(min(1.0, max(-1.0, -a0 / R)))
        t = 0.5 * (phi + alpha)
        t = t - math.pi * math.floor(t / math.pi)
        if t <= 1e-10:
            t += math.pi
        return t if t <= t_max else math.inf
    return _first_exit_trig(a0, a1, b1, a2, b2, t_max)


@njit(cache=True)
def _first_exit_linear(x, v, F, g, t_max):
    best = math.inf
    wall = -1
    two_pi = 2.0 * math.pi
    for j in range(F.shape[0]):
        fx = 0.0
        fv = 0.0
        for k in range(x.shape[0]):
            fx += F[j, k] * x[k]
            fv += F[j, k] * v[k]
        u = math.hypot(fx, fv)
        if u == 0.0 or g[j] >= u:
            continue
        phi = math.atan2(fv, fx)
        alpha = math.acos(min(1.0, max(-1.0, -g[j] / u)))
        t = phi + alpha
        t = t - two_pi * math.floor(t / two_pi)
        if t <= 1e-10:
            t += two_pi
        if t < best:
            best = t
            wall = j
    if best > t_max:
        return math.inf, -1
    return best, wall


@njit(cache=True)
def _hmc_move(z, v, travel, kind, F, g, A, b, c0):
    """Follow z(t) = x cos t + v sin t for ``travel`` time, reflecting at walls.

    Returns ``(z_end, v_end, n_reflections, status)``.
    """
    x = z.copy()
    vel = v.copy()
    t_left = travel
    n_ref = 0
    while True:
        if kind == 0:
            t_hit, wall = _first_exit_linear(x, vel, F, g, t_left)
        else:
            t_hit = _first_exit_quad(x, vel, A, b, c0, t_left)
            wall = 0
        if t_hit == math.inf:
            c = math.cos(t_left)
            s = math.sin(t_left)
            xn = x * c + vel * s
            vn = vel * c - x * s
            return xn, vn, n_ref, _OK
        c = math.cos(t_hit)
        s = math.sin(t_hit)
        xn = x * c + vel * s
        vn = vel * c - x * s
        if kind == 0:
            normal = F[wall].copy()
        else:
            normal = A @ xn + b
        nn = normal @ normal
        if nn > 0.0:
            vn = vn - (2.0 * (vn @ normal) / nn) * normal
        x = xn
        vel = vn
        t_left -= t_hit
        n_ref += 1
        if n_ref > MAX_REFLECTIONS:
            return x, vel, n_ref, _ERR_REFLECTIONS


FLIP_NONE = 0
FLIP_GLOBAL = 1
FLIP_COORDINATES = 2


@njit(cache=True)
def _flip_signs(z, flip, rng):
    """Random reflection that leaves both the density and the region unchanged.

    Continuous HMC paths cannot jump between the mirror-image pieces of a
    centred quadratic exterior (the two half-lines in one dimension, or the
    two slabs of a strongly elongated ellipse), so this move supplies the jump.
    """
    if flip == FLIP_GLOBAL:
        if rng.random() < 0.5:
            for k in range(z.shape[0]):
                z[k] = -z[k]
    elif flip == FLIP_COORDINATES:
        for k in range(z.shape[0]):
            if rng.random() < 0.5:
                z[k] = -z[k]


def _flip_mode(geo) -> int:
    """Which sign flips preserve the whitened target (none for linear regions)."""
    if geo.kind != 1 or np.any(geo.b != 0.0):
        return FLIP_NONE
    if np.count_nonzero(geo.A - np.diag(np.diag(geo.A))) == 0:
        return FLIP_COORDINATES
    return FLIP_GLOBAL


@njit(cache=True)
def _hmc_chain(z0, travel, kind, F, g, A, b, c0, n_out, burn_in, flip, rng):
    d = z0.shape[0]
    out = np.empty((n_out, d))
    z = z0.copy()
    v = np.empty(d)
    total_ref = 0
    guard = 0
    truncated = 0
    run = 0
    for it in range(burn_in + n_out):
        for k in range(d):
            v[k] = rng.standard_normal()
        zn, _, n_ref, status = _hmc_move(z, v, travel, kind, F, g, A, b, c0)
        total_ref += n_ref
        if status == _ERR_REFLECTIONS:
            # The reversed trajectory has the same reflection count, so
            # rejecting over-long trajectories keeps the target invariant.
            truncated += 1
            run += 1
            if run >= _MAX_TRUNCATED_RUN:
                return out, status, total_ref, guard, truncated
            _flip_signs(z, flip, rng)
            if it >= burn_in:
                out[it - burn_in] = z
            continue
        run = 0
        finite = True
        for k in range(d):
            if not math.isfinite(zn[k]):
                finite = False
        if not finite:
            return out, _ERR_NONFINITE, total_ref, guard, truncated
        if _inside_z(zn, kind, F, g, A, b, c0):
            z = zn
        else:
            # rounding pushed the endpoint across a wall; stay put
            guard += 1
        _flip_signs(z, flip, rng)
        if it >= burn_in:
            out[it - burn_in] = z
    return out, _OK, total_ref, guard, truncated


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------


def _raise_on(status: int, sampler: Sampler) -> None:
    if status != _OK:
        raise SamplerError(f"{sampler.value}: {_ERRORS.get(status, 'unknown failure')}")


def _start_point(problem: TailProblem, state) -> np.ndarray:
    y = problem.feasible_point if state is None else np.asarray(state, dtype=float)
    if y.shape != (problem.dim,):
        raise SamplerError(f"state has shape {y.shape}, expected ({problem.dim},)")
    if not problem.contains(y):
        raise SamplerError("state is outside the constraint region")
    return np.ascontiguousarray(y, dtype=float)


def run_chain(
    problem: TailProblem,
    config: ChainConfig,
    rng: np.random.Generator | None = None,
    *,
    start=None,
    return_info: bool = False,
):
    """Draw ``config.n_samples`` post-burn-in states from the truncated base distribution.

    Deterministic given ``config.seed`` (or the supplied ``rng``). Every row of
    the returned ``(n_samples, d)`` matrix lies in the constraint region.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    sampler = config.resolve_sampler(problem)
    geo = Geometry.from_problem(problem)
    y0 = _start_point(problem, start)
    info = {"sampler": sampler.value, "reflections": 0, "guard_rejections": 0}

    if sampler is Sampler.GIBBS:
        samples, status = _gibbs_chain(
            y0, geo.mu, geo.prec, geo.kind, geo.c_matrix, geo.lam, geo.q,
            config.n_samples, config.burn_in, rng,
        )
        _raise_on(status, sampler)
    else:
        z0 = np.ascontiguousarray(geo.to_z(y0))
        if sampler is Sampler.HIT_AND_RUN:
            zs, status = _hit_and_run_chain(
                z0, geo.kind, geo.F, geo.g, geo.A, geo.b, geo.c0,
                config.n_samples, config.burn_in, rng,
            )
            _raise_on(status, sampler)
        else:
            zs, status, n_ref, guard, truncated = _hmc_chain(
                z0, float(config.hmc_travel_time), geo.kind, geo.F, geo.g, geo.A, geo.b, geo.c0,
                config.n_samples, config.burn_in, _flip_mode(geo), rng,
            )
            _raise_on(status, sampler)
            info["reflections"] = int(n_ref)
            info["guard_rejections"] = int(guard)
            info["truncated_trajectories"] = int(truncated)
        samples = geo.to_y(zs)

    if not np.all(np.isfinite(samples)):
        raise SamplerError(f"{sampler.value}: non-finite samples")
    if not np.all(problem.contains(samples)):
        raise SamplerError(f"{sampler.value}: emitted a sample outside the constraint region")
    return (samples, info) if return_info else samples


def gibbs_step(state, problem: TailProblem, rng: np.random.Generator) -> np.ndarray:
    """One full coordinate sweep of the Gibbs sampler."""
    config = ChainConfig(burn_in=0, n_samples=1, sampler=Sampler.GIBBS)
    return run_chain(problem, config, rng, start=state)[0]


def hit_and_run_step(state, problem: TailProblem, rng: np.random.Generator) -> np.ndarray:
    config = ChainConfig(burn_in=0, n_samples=1, sampler=Sampler.HIT_AND_RUN)
    return run_chain(problem, config, rng, start=state)[0]


def hmc_step(state, problem: TailProblem, rng: np.random.Generator, travel_time: float = math.pi / 2) -> np.ndarray:
    config = ChainConfig(burn_in=0, n_samples=1, sampler=Sampler.HMC, hmc_travel_time=travel_time)
    return run_chain(problem, config, rng, start=state)[0]


def gibbs_conditional_support(problem: TailProblem, state, i: int) -> tuple[float, float, bool]:
    """Feasible values of coordinate ``i`` given the rest: ``(lo, hi, outside)``.

    ``outside=False`` means the interval ``(lo, hi)``; ``True`` means its complement.
    """
    geo = Geometry.from_problem(problem)
    y = np.ascontiguousarray(state, dtype=float)
    Cy = geo.c_matrix @ y
    S = float(geo.lam @ (y * y))
    lo, hi, outside = _gibbs_support(int(i), y, geo.kind, geo.c_matrix, Cy, geo.lam, S, geo.q)
    return float(lo), float(hi), bool(outside)


def line_feasible_set(problem: TailProblem, state, direction) -> tuple[float, float, bool]:
    """Values of t with ``state + t * direction`` in the region: ``(lo, hi, outside)``."""
    geo = Geometry.from_problem(problem)
    z = np.ascontiguousarray(geo.to_z(state))
    w = np.ascontiguousarray(np.linalg.solve(geo.chol, np.asarray(direction, dtype=float)))
    lo, hi, outside = _line_set(geo.kind, geo.F, geo.g, geo.A, geo.b, geo.c0, z, w)
    return float(lo), float(hi), bool(outside)


def hmc_trajectory(problem: TailProblem, z0, p0, travel_time: float):
    """Deterministic whitened-space HMC move from ``z0`` with momentum ``p0``.

    Returns ``(z_end, p_end, n_reflections)``.
    """
    geo = Geometry.from_problem(problem)
    z0 = np.ascontiguousarray(z0, dtype=float)
    p0 = np.ascontiguousarray(p0, dtype=float)
    zn, vn, n_ref, status = _hmc_move(z0, p0, float(travel_time), geo.kind, geo.F, geo.g, geo.A, geo.b, geo.c0)
    _raise_on(status, Sampler.HMC)
    return zn, vn, int(n_ref)
