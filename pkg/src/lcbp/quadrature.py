"""Deterministic quadrature: half-lines, spheres, great subspheres, hyperplanes
and the full space.

Everything is built from two pieces.  ``ray_integrate`` integrates many rays
at once with composite Gauss-Kronrod (21-point) panels, splitting each ray at
caller-supplied break radii and doubling the panel count on rays whose
Kronrod/Gauss discrepancy is above tolerance.  ``polar_integral`` combines it
with a direction grid on a (sub)sphere, refining the grid until two
successive levels agree.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import gammaln, ndtri, roots_jacobi
from scipy.stats import qmc

from .config import IntegralResult, QuadratureConfig

# QUADPACK qk21 abscissae/weights on [-1, 1] (positive half, descending).
_XGK_HALF = np.array([
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0,
])
_WGK_HALF = np.array([
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077600525478526, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
_WG_HALF = np.array([
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])

GK_NODES = np.concatenate([-_XGK_HALF[:-1], _XGK_HALF[::-1]])
GK_WEIGHTS = np.concatenate([_WGK_HALF[:-1], _WGK_HALF[::-1]])
# Gauss 10-point rule lives on the odd positions of the Kronrod abscissae
_G_IDX = np.array([1, 3, 5, 7, 9, 11, 13, 15, 17, 19])
G_WEIGHTS = np.zeros(21)
G_WEIGHTS[_G_IDX] = np.concatenate([_WG_HALF, _WG_HALF[::-1]])


def sphere_area(n: int) -> float:
    """Surface measure of S^{n-1} (2 for S^0)."""
    return float(2.0 * math.exp(0.5 * n * math.log(math.pi) - gammaln(0.5 * n)))


def ball_volume(n: int) -> float:
    """omega_n, the volume of the unit ball in R^n (omega_0 = 1)."""
    return float(math.exp(0.5 * n * math.log(math.pi) - gammaln(1.0 + 0.5 * n)))


# --------------------------------------------------------------------------
# direction grids
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DirectionGrid:
    """Quadrature nodes on S^{dim-1} with positive weights.

    ``replicate`` labels the independent randomizations of a quasi-Monte
    Carlo grid (all zeros for product grids).
    """

    dim: int
    nodes: np.ndarray
    weights: np.ndarray
    scheme: str
    seed: int
    level: int
    replicate: np.ndarray | None = None

    def __len__(self) -> int:
        return self.nodes.shape[0]

    def map_into(self, Q: np.ndarray) -> np.ndarray:
        """Embed the nodes into R^n through the orthonormal columns of ``Q``."""
        return self.nodes @ Q.T


_PRODUCT_LEVELS = {
    1: [1],
    2: [8, 16, 32, 64, 128, 256, 512, 1024, 2048, 4096],
    3: [8, 12, 16, 24, 32, 48, 64, 96, 128, 192, 256],
    4: [6, 8, 12, 16, 24, 32, 48, 64],
}
_QMC_LEVELS = [256, 512, 1024, 2048, 4096, 8192, 16384, 32768, 65536]
_QMC_REPLICATES = 8


def _product_grid(n: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    if n == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if n == 2:
        N = 2 * m
        th = (np.arange(N) + 0.5) * (2.0 * np.pi / N)
        return np.column_stack([np.cos(th), np.sin(th)]), np.full(N, 2.0 * np.pi / N)
    a = 0.5 * (n - 3)
    x, wx = roots_jacobi(m, a, a)
    sub_nodes, sub_w = _product_grid(n - 1, m)
    s = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    nodes = np.concatenate(
        [x.repeat(len(sub_w))[:, None], (s[:, None, None] * sub_nodes[None, :, :]).reshape(-1, n - 1)],
        axis=1,
    )
    weights = np.outer(wx, sub_w).ravel()
    return nodes, weights


def _qmc_grid(n: int, N: int, seed: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    parts, reps = [], []
    for r in range(_QMC_REPLICATES):
        sob = qmc.Sobol(d=n, scramble=True, seed=np.random.default_rng([seed, r, n]))
        pts = sob.random(N)
        g = ndtri(np.clip(pts, 1e-15, 1 - 1e-15))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        parts.append(g)
        reps.append(np.full(N, r))
    nodes = np.concatenate(parts)
    weights = np.full(nodes.shape[0], sphere_area(n) / nodes.shape[0])
    return nodes, weights, np.concatenate(reps)


def sphere_levels(n: int, scheme: str = "auto") -> list[int]:
    if scheme == "qmc" or (scheme == "auto" and n >= 5):
        return list(range(len(_QMC_LEVELS)))
    if n >= 5:
        return [4, 6, 8, 12]
    return list(range(len(_PRODUCT_LEVELS[n])))


def direction_grid(n: int, level: int = 2, scheme: str = "auto", seed: int = 0) -> DirectionGrid:
    """Direction grid on S^{n-1}.

    n = 2 uses a uniform angular grid, n = 3, 4 tensor Gauss-Jacobi grids in
    nested polar coordinates, n >= 5 seeded scrambled-Sobol points (Gaussian
    mapped) with equal weights, split into independent replicates.
    """
    if n < 1:
        raise ValueError("sphere dimension must be >= 1")
    use_qmc = scheme == "qmc" or (scheme == "auto" and n >= 5)
    if use_qmc and n >= 2:
        N = _QMC_LEVELS[min(level, len(_QMC_LEVELS) - 1)]
        nodes, weights, rep = _qmc_grid(n, N // _QMC_REPLICATES, seed)
        return DirectionGrid(n, nodes, weights, "qmc", seed, level, rep)
    if n >= 5:
        m = [4, 6, 8, 12][min(level, 3)]
    else:
        lv = _PRODUCT_LEVELS[n]
        m = lv[min(level, len(lv) - 1)]
    nodes, weights = _product_grid(n, m)
    return DirectionGrid(n, nodes, weights, "product", seed, level, np.zeros(len(weights), dtype=int))


def quasi_random_directions(n: int, count: int, seed: int = 0) -> np.ndarray:
    """``count`` seeded low-discrepancy unit vectors in R^n."""
    sob = qmc.Sobol(d=n, scramble=True, seed=np.random.default_rng([seed, n, count]))
    m = int(math.ceil(math.log2(max(count, 2))))
    pts = sob.random_base2(m)[:count]
    g = ndtri(np.clip(pts, 1e-15, 1 - 1e-15))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def orthonormal_complement(u: np.ndarray) -> np.ndarray:
    """n x (n-1) matrix whose orthonormal columns span u^perp.

    Built from the Householder reflection exchanging e_1 and -+u, so the
    frame is a fixed function of u.
    """
    u = np.asarray(u, dtype=float)
    u = u / np.linalg.norm(u)
    n = u.size
    e1 = np.zeros(n)
    e1[0] = 1.0
    w = e1 + u if u[0] > 0 else e1 - u
    w /= np.linalg.norm(w)
    H = np.eye(n) - 2.0 * np.outer(w, w)
    return H[:, 1:]


# --------------------------------------------------------------------------
# rays
# --------------------------------------------------------------------------

@dataclass
class RayResult:
    values: np.ndarray
    errors: np.ndarray
    evals: int
    converged: bool
    rule_r: list
    rule_w: list


def _segment_nodes(lo, hi, P):
    """Radii and weights of P equal GK21 panels on each [lo, hi] segment."""
    L = hi - lo  # (m, B)
    j = np.arange(P)
    t = (j[:, None] + 0.5 * (GK_NODES[None, :] + 1.0)) / P  # (P, 21)
    r = lo[:, :, None, None] + L[:, :, None, None] * t[None, None]
    scale = (L / (2.0 * P))[:, :, None]
    return r, scale


def _gk_error(f: np.ndarray, K: np.ndarray, G: np.ndarray, scale: np.ndarray) -> np.ndarray:
    """QUADPACK's GK21 panel estimate from values f (..., 21), Kronrod and
    Gauss sums K, G (...) and half-widths ``scale``.

    |K - G| bounds the Gauss result; rescaling it against the spread of f
    over the panel gives a realistic bound for the Kronrod result without
    trusting it on kinks.
    """
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        mean = K / (2.0 * scale)
        asc = np.einsum("...q,q->...", np.abs(f - mean[..., None]), GK_WEIGHTS) * scale
        diff = np.abs(K - G)
        safe = np.where(asc > 0, asc, 1.0)
        return np.where(asc > 0, asc * np.minimum(1.0, (200.0 * diff / safe) ** 1.5), diff)


def ray_integrate(h: Callable[[np.ndarray, np.ndarray], np.ndarray], breaks: np.ndarray, power: float,
                  rtol: float, atol: float, budget: int, max_panels: int = 1024,
                  want_rule: bool = False) -> RayResult:
    """Integrate ``r**power * h(idx, r)`` over ``[0, breaks[:, -1]]`` for each ray.

    ``h(idx, r)`` receives the ray indices ``idx`` (shape (m,)) and radii
    ``r`` (shape (m, k)) and returns values of shape (m, k).  Segments between
    consecutive break radii are integrated separately, so jumps placed at a
    break cost nothing.  For ``power < 0`` the first segment is integrated
    after the substitution r = b * t**(1/(power+1)), which removes the
    endpoint singularity.
    """
    breaks = np.maximum(np.asarray(breaks, dtype=float), 0.0)
    breaks = np.maximum.accumulate(breaks, axis=1)
    m, B = breaks.shape
    lo_all = np.concatenate([np.zeros((m, 1)), breaks[:, :-1]], axis=1)
    hi_all = breaks
    vals = np.zeros(m)
    errs = np.zeros(m)
    done = np.zeros(m, dtype=bool)
    rule_r = [None] * m if want_rule else []
    rule_w = [None] * m if want_rule else []
    evals = 0
    P = 2
    active = np.arange(m)
    singular = power < 0
    while active.size:
        lo, hi = lo_all[active], hi_all[active]
        r, scale = _segment_nodes(lo, hi, P)
        if singular:
            # first segment in the substituted variable t in [0, 1]
            b = hi[:, 0]
            t, sc1 = _segment_nodes(np.zeros((len(active), 1)), np.ones((len(active), 1)), P)
            r[:, 0] = b[:, None, None] * t[:, 0] ** (1.0 / (power + 1.0))
        k = r.shape[1] * r.shape[2] * r.shape[3]
        if evals + k * len(active) > budget:
            break
        flat = r.reshape(len(active), k)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            fv = np.asarray(h(active, flat), dtype=float).reshape(r.shape)
            jac = flat.reshape(r.shape) ** power
            if singular:
                jac[:, 0] = (b ** (power + 1.0) / (power + 1.0))[:, None, None]
            integrand = np.where(fv == 0.0, 0.0, fv * jac)
        evals += k * len(active)
        if singular:
            scale = scale.copy()
            scale[:, 0] = sc1[:, 0]
        K = np.einsum("mbpq,q->mbp", integrand, GK_WEIGHTS) * scale
        G = np.einsum("mbpq,q->mbp", integrand, G_WEIGHTS) * scale
        val = K.sum(axis=(1, 2))
        err = _gk_error(integrand, K, G, scale).sum(axis=(1, 2))
        ok = err <= np.maximum(rtol * np.abs(val), atol)
        ok |= P >= max_panels
        bad_num = ~np.isfinite(val)
        ok |= bad_num
        idx = active[ok]
        vals[idx] = val[ok]
        errs[idx] = np.where(np.isfinite(err[ok]), err[ok], np.inf)
        done[idx] = err[ok] <= np.maximum(rtol * np.abs(val[ok]), atol)
        if want_rule:
            wgt = (GK_WEIGHTS[None, None, None, :] * scale[:, :, :, None])
            wj = wgt * np.where(np.isfinite(jac), jac, 0.0)
            for loc in np.flatnonzero(ok):
                rule_r[active[loc]] = flat[loc]
                rule_w[active[loc]] = wj[loc].reshape(-1)
        active = active[~ok]
        P *= 2
    if active.size:
        # budget exhausted: keep the last estimates for unfinished rays
        vals[active] = np.nan
        errs[active] = np.inf
    return RayResult(vals, errs, evals, bool(done.all()) and active.size == 0, rule_r, rule_w)


# --------------------------------------------------------------------------
# polar (sphere x ray) integration
# --------------------------------------------------------------------------

@dataclass
class PolarRule:
    """Frozen cubature rule: integral ~ sum(weights * g(points))."""

    points: np.ndarray
    weights: np.ndarray

    def apply(self, g: Callable[[np.ndarray], np.ndarray]) -> float:
        vals = np.asarray(g(self.points), dtype=float)
        vals = np.where(self.weights == 0.0, 0.0, vals)
        return float(np.sum(self.weights * vals))


# --------------------------------------------------------------------------
# adaptive angular quadrature on S^1
# --------------------------------------------------------------------------

_CIRCLE_START = 8
_CIRCLE_MAX_PANELS = 4096


def _adaptive_circle(panel_values, rtol: float, atol: float, budget: int):
    """Adaptive GK21 quadrature in the angle over [0, 2 pi).

    ``panel_values(theta)`` takes angles of shape (P, 21) and returns
    (values, value_errors, evals, extra) with values of shape (P, 21); panels
    whose Kronrod/Gauss gap exceeds their share of the tolerance are bisected.
    Kinks of the integrand in the angle cost a logarithmic number of panels.
    Returns (total, error, evals, converged, panels) where panels is a list of
    (a, b, theta, weights, extra) for the accepted panels.
    """
    return _adaptive_panels(panel_values, 0.0, 2.0 * np.pi, _CIRCLE_START, rtol, atol, budget)


def _adaptive_panels(panel_values, lo: float, hi: float, start: int, rtol: float, atol: float, budget: int):
    return _adaptive_panels_many(lambda owner, theta: panel_values(theta), 1, lo, hi, start, rtol, atol, budget)[0]


def _adaptive_panels_many(panel_values, count: int, lo: float, hi: float, start: int, rtol: float, atol: float,
                          budget: int):
    """``count`` independent adaptive GK21 integrals over [lo, hi] refined together.

    ``panel_values(owner, theta)`` receives the integral index of each pending
    panel and its nodes (P, 21), so one call serves every unfinished integral.
    Returns one (total, error, evals, converged, panels) tuple per integral;
    ``evals`` is the shared total.
    """
    edges = np.linspace(lo, hi, start + 1)
    pending = [(j, a, b) for j in range(count) for a, b in zip(edges[:-1], edges[1:])]
    accepted = [[] for _ in range(count)]
    results = [None] * count
    evals = 0
    while pending:
        owner = np.array([p[0] for p in pending])
        a = np.array([p[1] for p in pending])
        b = np.array([p[2] for p in pending])
        c, hw = 0.5 * (a + b), 0.5 * (b - a)
        theta = c[:, None] + hw[:, None] * GK_NODES[None, :]
        vals, verr, k, extra = panel_values(owner, theta)
        evals += k
        w = hw[:, None] * GK_WEIGHTS[None, :]
        with np.errstate(invalid="ignore", divide="ignore"):
            K = np.sum(w * vals, axis=1)
            G = hw * (vals @ G_WEIGHTS)
            est = _gk_error(vals, K, G, hw)
            inherited = np.sum(w * verr, axis=1)
            L1 = np.sum(w * np.abs(vals), axis=1)
        for i in range(len(pending)):
            accepted[owner[i]].append([a[i], b[i], theta[i], w[i], extra[i] if extra is not None else None, K[i],
                                       est[i], L1[i], inherited[i]])
        pending = []
        for j in sorted(set(owner.tolist())):
            acc = accepted[j]
            total = float(sum(p[5] for p in acc))
            own = float(sum(p[6] for p in acc))
            errsum = own + float(sum(p[8] for p in acc))
            # relative to the mass of |integrand| so cancelling integrands do not over-refine
            target = max(rtol * float(sum(p[7] for p in acc)), atol)
            if not np.isfinite(total):
                results[j] = (total, math.inf, evals, False, acc)
                continue
            # splitting only shrinks this rule's own error, never what the
            # nodes inherit, so refinement is driven by the former alone
            if own <= 0.5 * target:
                results[j] = (total, errsum, evals, errsum <= target, acc)
                continue
            if len(acc) >= _CIRCLE_MAX_PANELS or evals >= budget:
                results[j] = (total, errsum, evals, False, acc)
                continue
            share = 0.5 * target / len(acc)
            split = [p for p in acc if p[6] > share] or [max(acc, key=lambda p: p[6])]
            accepted[j] = [p for p in acc if all(p is not q for q in split)]
            for p in split:
                mid = 0.5 * (p[0] + p[1])
                pending += [(j, p[0], mid), (j, mid, p[1])]
    return [(r[0], r[1], evals, r[3], r[4]) for r in results]


_LATITUDE_START = 2
_LONGITUDE_START = 2


def _adaptive_sphere3(point_values, rtol: float, atol: float, budget: int):
    """Nested adaptive GK21 rule on S^2: polar angle outside, longitude inside.

    ``point_values(dirs)`` maps unit vectors (m, 3) to (values, errors, evals,
    extra) with per-point ``extra``.  All latitude rings of one outer pass are
    refined together.  Returns (total, error, evals, converged, nodes) where
    nodes is a list of (weight, extra).
    """
    used = [0]
    inner_ok = [True]

    def latitude(theta):
        st, ct = np.sin(theta).reshape(-1), np.cos(theta).reshape(-1)

        def ring(owner, phi):
            dirs = np.stack([st[owner][:, None] * np.cos(phi), st[owner][:, None] * np.sin(phi),
                             np.broadcast_to(ct[owner][:, None], phi.shape)], axis=-1).reshape(-1, 3)
            v, e, k, ex = point_values(dirs)
            return v.reshape(phi.shape), e.reshape(phi.shape), k, [ex[21 * q:21 * (q + 1)] for q in range(len(owner))]

        rings = _adaptive_panels_many(ring, st.size, 0.0, 2.0 * np.pi, _LONGITUDE_START, rtol / 4.0,
                                      atol / (4.0 * np.pi), max(budget - used[0], 1))
        k = rings[0][2]
        used[0] += k
        inner_ok[0] &= all(r[3] for r in rings)
        vals = np.array([r[0] for r in rings]) * st
        verr = np.array([r[1] for r in rings]) * st
        extra = [[(st[21 * i + j], rings[21 * i + j][4]) for j in range(21)] for i in range(theta.shape[0])]
        return vals.reshape(theta.shape), verr.reshape(theta.shape), k, extra

    total, err, evals, conv, panels = _adaptive_panels(latitude, 0.0, np.pi, _LATITUDE_START, rtol, atol, budget)
    nodes = []
    for p in panels:
        for j, (st, ring_panels) in enumerate(p[4]):
            for q in ring_panels:
                for t, ex in enumerate(q[4]):
                    nodes.append((p[3][j] * st * q[3][t], ex))
    return total, err, evals, bool(conv and inner_ok[0]), nodes


def _polar_sphere3(ray_fn, breaks_fn, Q, power, cfg, rtol, want_rule):
    def point_values(d3):
        dirs = d3 @ Q.T
        brk = np.atleast_2d(breaks_fn(dirs))
        rr = ray_integrate(lambda idx, r: ray_fn(dirs[idx], r), brk, power, rtol / 10.0, cfg.abs_tol, cfg.budget,
                           want_rule=want_rule)
        ex = [(dirs[i], rr.rule_r[i] if want_rule else None, rr.rule_w[i] if want_rule else None, rr.converged)
              for i in range(len(dirs))]
        return rr.values, rr.errors, rr.evals, ex

    total, err, evals, conv, nodes = _adaptive_sphere3(point_values, rtol, cfg.abs_tol, cfg.budget)
    if np.isposinf(total):
        return IntegralResult(math.inf, 0.0, evals, True, {"level": 0})
    if not np.isfinite(total):
        return IntegralResult(math.nan, math.inf, evals, False, {"level": 0})
    dirs = np.array([nd[1][0] for nd in nodes])
    dw = np.array([nd[0] for nd in nodes])
    rule = None
    if want_rule:
        rule = PolarRule(np.concatenate([nd[1][0][None, :] * nd[1][1][:, None] for nd in nodes]),
                         np.concatenate([nd[0] * nd[1][2] for nd in nodes]))
    rays_ok = all(nd[1][3] for nd in nodes)
    info = {"level": 0, "nodes": len(nodes), "rule": rule, "rays_converged": rays_ok,
            "directions": dirs, "direction_weights": dw}
    return IntegralResult(total, err, evals, bool(conv and rays_ok), info)


def _circle_level(count: int) -> int:
    lv = _PRODUCT_LEVELS[2]
    for i, m in enumerate(lv):
        if 2 * m >= count:
            return i
    return len(lv) - 1


def _polar_circle(ray_fn, breaks_fn, Q, power, cfg, rtol, want_rule):
    budget = cfg.budget

    def panel_values(theta):
        P = theta.shape[0]
        flat = theta.reshape(-1)
        dirs = np.column_stack([np.cos(flat), np.sin(flat)]) @ Q.T
        brk = np.atleast_2d(breaks_fn(dirs))
        rr = ray_integrate(lambda idx, r: ray_fn(dirs[idx], r), brk, power, rtol / 10.0, cfg.abs_tol, budget,
                           want_rule=want_rule)
        vals = rr.values.reshape(P, 21)
        verr = rr.errors.reshape(P, 21)
        extra = [(dirs[21 * i:21 * (i + 1)], rr.rule_r[21 * i:21 * (i + 1)] if want_rule else None,
                  rr.rule_w[21 * i:21 * (i + 1)] if want_rule else None, rr.converged) for i in range(P)]
        return vals, verr, rr.evals, extra

    total, err, evals, conv, panels = _adaptive_circle(panel_values, rtol, cfg.abs_tol, budget)
    if np.isposinf(total):
        return IntegralResult(math.inf, 0.0, evals, True, {"level": 0})
    if not np.isfinite(total):
        return IntegralResult(math.nan, math.inf, evals, False, {"level": 0})
    dirs = np.concatenate([p[4][0] for p in panels])
    dw = np.concatenate([p[3] for p in panels])
    rule = None
    if want_rule:
        pts, wts = [], []
        for p in panels:
            for j in range(21):
                pts.append(p[4][0][j][None, :] * p[4][1][j][:, None])
                wts.append(p[3][j] * p[4][2][j])
        rule = PolarRule(np.concatenate(pts), np.concatenate(wts))
    rays_ok = all(p[4][3] for p in panels)
    info = {"level": _circle_level(len(dirs)), "panels": len(panels), "rule": rule, "rays_converged": rays_ok,
            "directions": dirs, "direction_weights": dw}
    return IntegralResult(total, err, evals, bool(conv and rays_ok), info)



def polar_integral(ray_fn, breaks_fn, Q: np.ndarray, power: float, cfg: QuadratureConfig,
                   n_ambient: int, tol: float | None = None, want_rule: bool = False,
                   min_level: int = 0) -> IntegralResult:
    """Integrate over span(Q) in polar coordinates.

    ``ray_fn(dirs, r)`` gives integrand values at radii r along directions
    dirs (in R^n); ``breaks_fn(dirs)`` gives per-direction break radii whose
    last column is the truncation radius; ``Q`` (n x d) spans the integration
    subspace; ``power`` is the radial Jacobian exponent (d - 1).
    """
    d = Q.shape[1]
    rtol = cfg.tol(n_ambient) if tol is None else tol
    if d == 2 and cfg.sphere_scheme != "qmc":
        return _polar_circle(ray_fn, breaks_fn, Q, power, cfg, rtol, want_rule)
    if d == 3 and cfg.sphere_scheme != "qmc":
        return _polar_sphere3(ray_fn, breaks_fn, Q, power, cfg, rtol, want_rule)
    budget = cfg.budget
    levels = sphere_levels(d, cfg.sphere_scheme)
    evals = 0
    prev = None
    result = None
    history = []
    for level in levels[min_level:] if d > 1 else levels[:1]:
        grid = direction_grid(d, level, cfg.sphere_scheme, cfg.seed)
        dirs = grid.map_into(Q)
        brk = np.atleast_2d(breaks_fn(dirs))
        rr = ray_integrate(lambda idx, r: ray_fn(dirs[idx], r), brk, power,
                           rtol / 10.0, cfg.abs_tol, budget - evals, want_rule=want_rule)
        evals += rr.evals
        if not np.all(np.isfinite(rr.values)):
            if np.any(np.isposinf(rr.values)) and not np.any(np.isnan(rr.values)):
                return IntegralResult(math.inf, 0.0, evals, True, {"level": level})
            if result is not None:
                result.converged = False
                result.evals_used = evals
                return result
            return IntegralResult(math.nan, math.inf, evals, False, {"level": level})
        value = float(np.dot(grid.weights, rr.values))
        ray_err = float(np.dot(grid.weights, rr.errors))
        rule = None
        if want_rule:
            pts = [dirs[i][None, :] * rr.rule_r[i][:, None] for i in range(len(grid))]
            wts = [grid.weights[i] * rr.rule_w[i] for i in range(len(grid))]
            rule = PolarRule(np.concatenate(pts), np.concatenate(wts))
        if grid.scheme == "qmc":
            reps = np.array([
                np.dot(grid.weights[grid.replicate == k], rr.values[grid.replicate == k]) * _QMC_REPLICATES
                for k in range(_QMC_REPLICATES)
            ])
            sphere_err = float(np.std(reps, ddof=1) / math.sqrt(_QMC_REPLICATES))
        elif d == 1:
            sphere_err = 0.0
        elif prev is None:
            sphere_err = math.inf
        else:
            sphere_err = abs(value - prev)
        err = sphere_err + ray_err
        history.append((level, value, err))
        result = IntegralResult(value, err, evals, False, {"level": level, "rule": rule, "rays_converged": rr.converged,
                                                           "directions": dirs, "direction_weights": grid.weights})
        target = max(rtol * abs(value), cfg.abs_tol)
        if err <= target and rr.converged:
            result.converged = True
            return result
        if d == 1:
            return result
        prev = value
        if evals >= budget:
            break
    return result


def integrate_great_subsphere(h: Callable[[np.ndarray], np.ndarray], u, cfg: QuadratureConfig | None = None,
                              tol: float | None = None) -> IntegralResult:
    """Integral of ``h`` over the great subsphere S^{n-1} cap u^perp."""
    cfg = cfg or QuadratureConfig()
    u = np.asarray(u, dtype=float)
    n = u.size
    Q = orthonormal_complement(u)
    return integrate_sphere(n - 1, lambda w: h(w @ Q.T), cfg, tol if tol is not None else cfg.tol(n))


# --------------------------------------------------------------------------
# public engines
# --------------------------------------------------------------------------

def adaptive_gk(g: Callable[[np.ndarray], np.ndarray], a: float, b: float, rtol: float, atol: float,
                limit: int = 2000) -> tuple[float, float, int]:
    """Globally adaptive GK21 bisection on [a, b] for a scalar oracle."""
    if b <= a:
        return 0.0, 0.0, 0

    def panel(lo, hi):
        c, hw = 0.5 * (lo + hi), 0.5 * (hi - lo)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            v = np.asarray(g(c + hw * GK_NODES), dtype=float)
        k = hw * float(v @ GK_WEIGHTS)
        gg = hw * float(v @ G_WEIGHTS)
        return k, abs(k - gg)

    k, e = panel(a, b)
    heap = [(-e, a, b, k)]
    total, err, evals = k, e, 21
    while err > max(rtol * abs(total), atol) and len(heap) < limit:
        ne, lo, hi, kv = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        k1, e1 = panel(lo, mid)
        k2, e2 = panel(mid, hi)
        evals += 42
        total += k1 + k2 - kv
        err += e1 + e2 + ne
        heapq.heappush(heap, (-e1, lo, mid, k1))
        heapq.heappush(heap, (-e2, mid, hi, k2))
    # recompute sums to shed accumulated round-off
    total = sum(item[3] for item in heap)
    err = sum(-item[0] for item in heap)
    return total, err, evals


def integrate_radial(g: Callable[[np.ndarray], np.ndarray], cfg: QuadratureConfig | None = None, *,
                     radius: float | None = None, decay_rate: float | None = None,
                     breaks=(), tol: float | None = None) -> IntegralResult:
    """Integral of ``g`` over [0, infinity).

    The integrand must be supported in [0, radius], or decay at least like
    exp(-decay_rate * r); the truncation radius then follows from the
    configured absolute tolerance.  Interior ``breaks`` (e.g. jump locations)
    become panel endpoints.
    """
    cfg = cfg or QuadratureConfig()
    if radius is None:
        if decay_rate is None:
            raise ValueError("integrate_radial needs a support radius or a decay rate")
        radius = math.log(1.0 / cfg.abs_tol) / decay_rate
        radius *= 1.0 + 0.1 * math.log1p(radius)
    rtol = cfg.tol(1) if tol is None else tol
    pts = sorted({0.0, float(radius), *[float(x) for x in breaks if 0.0 < x < radius]})
    total, err, evals = 0.0, 0.0, 0
    per = max(rtol, 1e-14)
    for lo, hi in zip(pts[:-1], pts[1:]):
        v, e, k = adaptive_gk(g, lo, hi, per, cfg.abs_tol / len(pts), limit=4000)
        total += v
        err += e
        evals += k
    conv = err <= max(rtol * abs(total), cfg.abs_tol) and evals <= cfg.budget
    return IntegralResult(total, err, evals, conv)


def integrate_sphere(n: int, h: Callable[[np.ndarray], np.ndarray], cfg: QuadratureConfig | None = None,
                     tol: float | None = None) -> IntegralResult:
    """Integral of ``h`` over S^{n-1} with level refinement."""
    cfg = cfg or QuadratureConfig()
    rtol = cfg.tol(n) if tol is None else tol
    if n == 2 and cfg.sphere_scheme != "qmc":
        def panel_values(theta):
            v = np.asarray(h(np.column_stack([np.cos(theta.reshape(-1)), np.sin(theta.reshape(-1))])), dtype=float)
            return v.reshape(theta.shape), np.zeros(theta.shape), theta.size, None

        total, err, evals, conv, panels = _adaptive_circle(panel_values, rtol, cfg.abs_tol, cfg.budget)
        return IntegralResult(total, err, evals, conv, {"level": _circle_level(21 * len(panels)),
                                                        "panels": len(panels)})
    if n == 3 and cfg.sphere_scheme != "qmc":
        def point_values(dirs):
            v = np.asarray(h(dirs), dtype=float)
            return v, np.zeros(v.shape), v.size, [None] * v.size

        total, err, evals, conv, nodes = _adaptive_sphere3(point_values, rtol, cfg.abs_tol, cfg.budget)
        return IntegralResult(total, err, evals, conv, {"level": 0, "nodes": len(nodes)})
    prev = None
    evals = 0
    result = None
    for level in sphere_levels(n, cfg.sphere_scheme):
        grid = direction_grid(n, level, cfg.sphere_scheme, cfg.seed)
        vals = np.asarray(h(grid.nodes), dtype=float)
        evals += len(grid)
        value = float(grid.weights @ vals)
        if grid.scheme == "qmc":
            reps = np.array([
                grid.weights[grid.replicate == k] @ vals[grid.replicate == k] * _QMC_REPLICATES
                for k in range(_QMC_REPLICATES)
            ])
            err = float(np.std(reps, ddof=1) / math.sqrt(_QMC_REPLICATES))
        elif n == 1:
            err = 0.0
        else:
            err = math.inf if prev is None else abs(value - prev)
        result = IntegralResult(value, err, evals, False, {"level": level})
        if err <= max(rtol * abs(value), cfg.abs_tol):
            result.converged = True
            return result
        if n == 1 or evals >= cfg.budget:
            break
        prev = value
    return result


def integrate_hyperplane(f, u, t: float, cfg: QuadratureConfig | None = None,
                         tol: float | None = None) -> IntegralResult:
    """(n-1)-dimensional integral of the field ``f`` over {z : z.u = t}."""
    cfg = cfg or QuadratureConfig()
    n = f.dim
    if n < 2:
        raise ValueError("hyperplane integrals need n >= 2")
    u = np.asarray(u, dtype=float)
    u = u / np.linalg.norm(u)
    origin = t * u
    Q = orthonormal_complement(u)
    return polar_integral(
        lambda dirs, r: f.along_rays(dirs, r, origin),
        lambda dirs: f.rays(dirs, origin),
        Q, n - 2, cfg, n, tol,
    )


def integrate_space(f, cfg: QuadratureConfig | None = None, tol: float | None = None,
                    ray_fn=None, want_rule: bool = False) -> IntegralResult:
    """n-dimensional integral of ``f`` (or of ``ray_fn`` on f's rays)."""
    cfg = cfg or QuadratureConfig()
    n = f.dim
    fn = ray_fn if ray_fn is not None else (lambda dirs, r: f.along_rays(dirs, r))
    return polar_integral(fn, lambda dirs: f.rays(dirs), np.eye(n), n - 1, cfg, n, tol, want_rule=want_rule)


def space_rule(f, cfg: QuadratureConfig | None = None, tol: float | None = None) -> PolarRule:
    """Cubature rule adapted to ``f``: reuse it to integrate related integrands
    on identical nodes (finite differences in a parameter cancel the
    discretization error)."""
    res = integrate_space(f, cfg, tol, want_rule=True)
    return res.info["rule"]
