"""Arc-length curves with pinched positive curvature, and their direction
phase functions.

Only curve kinds with analytic third derivatives are admitted: the phase
derivative bounds need |kappa'|_inf, and finite-difference fallbacks would
poison the audits.  Construction rejects curvature sign changes, zero
curvature, and total curvature >= pi/2 (the regime every downstream bound
assumes).  Circular arcs are handled in closed form; other kinds invert the
cumulative arc length by Newton iteration on a Gauss-Legendre table, so the
returned parametrization is unit-speed to machine precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import InvariantViolation

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)
_GL_X01 = 0.5 * (_GL_NODES + 1.0)  # nodes mapped to [0, 1]
_GL_W01 = 0.5 * _GL_WEIGHTS

_TABLE_N = 2048
_VALIDATE_N = 4097


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


@dataclass(frozen=True)
class CircularArc:
    center: tuple[float, float]
    radius: float
    angle0: float
    angle1: float

    def point(self, u):
        u = np.asarray(u, dtype=float)
        return np.stack(
            [self.center[0] + self.radius * np.cos(u),
             self.center[1] + self.radius * np.sin(u)], axis=-1)

    def d1(self, u):
        u = np.asarray(u, dtype=float)
        return np.stack([-self.radius * np.sin(u), self.radius * np.cos(u)], axis=-1)

    def d2(self, u):
        u = np.asarray(u, dtype=float)
        return np.stack([-self.radius * np.cos(u), -self.radius * np.sin(u)], axis=-1)

    def d3(self, u):
        u = np.asarray(u, dtype=float)
        return np.stack([self.radius * np.sin(u), -self.radius * np.cos(u)], axis=-1)


@dataclass(frozen=True)
class EllipseArc:
    center: tuple[float, float]
    a: float
    b: float
    angle0: float
    angle1: float

    def point(self, u):
        u = np.asarray(u, dtype=float)
        return np.stack(
            [self.center[0] + self.a * np.cos(u),
             self.center[1] + self.b * np.sin(u)], axis=-1)

    def d1(self, u):
        u = np.asarray(u, dtype=float)
        return np.stack([-self.a * np.sin(u), self.b * np.cos(u)], axis=-1)

    def d2(self, u):
        u = np.asarray(u, dtype=float)
        return np.stack([-self.a * np.cos(u), -self.b * np.sin(u)], axis=-1)

    def d3(self, u):
        u = np.asarray(u, dtype=float)
        return np.stack([self.a * np.sin(u), -self.b * np.cos(u)], axis=-1)


@dataclass(frozen=True)
class CubicArc:
    """x(u), y(u) polynomials of degree <= 3, coefficients in ascending order."""

    x_coeffs: tuple[float, float, float, float]
    y_coeffs: tuple[float, float, float, float]
    angle0: float  # parameter range; named for config uniformity
    angle1: float

    def _eval(self, u, cx, cy):
        u = np.asarray(u, dtype=float)
        px = np.polynomial.polynomial.polyval(u, cx)
        py = np.polynomial.polynomial.polyval(u, cy)
        return np.stack([px, py], axis=-1)

    def point(self, u):
        return self._eval(u, self.x_coeffs, self.y_coeffs)

    def d1(self, u):
        dx = np.polynomial.polynomial.polyder(self.x_coeffs)
        dy = np.polynomial.polynomial.polyder(self.y_coeffs)
        return self._eval(u, dx, dy)

    def d2(self, u):
        dx = np.polynomial.polynomial.polyder(self.x_coeffs, 2)
        dy = np.polynomial.polynomial.polyder(self.y_coeffs, 2)
        return self._eval(u, dx, dy)

    def d3(self, u):
        dx = np.polynomial.polynomial.polyder(self.x_coeffs, 3)
        dy = np.polynomial.polynomial.polyder(self.y_coeffs, 3)
        return self._eval(u, dx, dy)


CurveSpec = Union[CircularArc, EllipseArc, CubicArc]


@dataclass
class ArcLengthCurve:
    """Unit-speed parametrization of a curvature-pinched arc on [0, L].

    Immutable after construction; the grid caches are append-only and safe
    for concurrent readers.
    """

    spec: CurveSpec
    length: float
    kmin: float
    kmax: float
    kprime_max: float
    total_curvature: float
    _u0: float
    _u1: float
    _orient: float  # sign of the signed curvature of the parametrization
    _u_nodes: np.ndarray = field(repr=False)
    _s_nodes: np.ndarray = field(repr=False)
    _grid_cache: dict = field(default_factory=dict, repr=False)

    # -- parameter <-> arc length ------------------------------------------

    def _speed(self, u):
        return np.linalg.norm(self.spec.d1(u), axis=-1)

    def _arclen(self, u):
        """Cumulative arc length s(u), via the table plus one partial panel."""
        u = np.asarray(u, dtype=float)
        idx = np.clip(np.searchsorted(self._u_nodes, u, side="right") - 1,
                      0, len(self._u_nodes) - 2)
        a = self._u_nodes[idx]
        du = u - a
        partial = np.zeros_like(du)
        for x, w in zip(_GL_X01, _GL_W01):
            partial += w * self._speed(a + x * du)
        return self._s_nodes[idx] + partial * du

    def u_of_t(self, t):
        t = np.clip(np.asarray(t, dtype=float), 0.0, self.length)
        if isinstance(self.spec, CircularArc):
            return self._u0 + t / self.spec.radius
        u = np.interp(t, self._s_nodes, self._u_nodes)
        for _ in range(5):
            u = u - (self._arclen(u) - t) / self._speed(u)
            u = np.clip(u, self._u0, self._u1)
        return u

    # -- geometry at arc length t ------------------------------------------

    def gamma(self, t):
        return self.spec.point(self.u_of_t(t))

    def _frame(self, t):
        """Tangent, curvature-side normal, and chain-rule helpers at t."""
        u = self.u_of_t(t)
        d1 = self.spec.d1(u)
        d2 = self.spec.d2(u)
        v = np.linalg.norm(d1, axis=-1)
        tangent = d1 / v[..., None]
        return u, d1, d2, v, tangent

    def tangent(self, t):
        return self._frame(t)[4]

    def curvature(self, t):
        u = self.u_of_t(t)
        d1 = self.spec.d1(u)
        d2 = self.spec.d2(u)
        v = np.linalg.norm(d1, axis=-1)
        return np.abs(_cross(d1, d2)) / v**3

    def normal(self, t):
        """Unit normal with gamma''(t) = kappa(t) * n(t), kappa > 0."""
        tang = self.tangent(t)
        return self._orient * np.stack([-tang[..., 1], tang[..., 0]], axis=-1)

    def second(self, t):
        """gamma''(t) by the chain rule (independent of the kappa*n identity)."""
        u, d1, d2, v, _ = self._frame(t)
        vp = np.einsum("...k,...k->...", d1, d2) / v
        t_prime = d2 / v[..., None] - d1 * (vp / v**2)[..., None]
        return t_prime / v[..., None]

    def third(self, t):
        u = self.u_of_t(t)
        d1 = self.spec.d1(u)
        d2 = self.spec.d2(u)
        d3 = self.spec.d3(u)
        v = np.linalg.norm(d1, axis=-1)
        vp = np.einsum("...k,...k->...", d1, d2) / v
        vpp = (np.einsum("...k,...k->...", d2, d2)
               + np.einsum("...k,...k->...", d1, d3) - vp**2) / v
        t_prime = d2 / v[..., None] - d1 * (vp / v**2)[..., None]
        t_second = (d3 / v[..., None]
                    - 2.0 * d2 * (vp / v**2)[..., None]
                    - d1 * (vpp / v**2)[..., None]
                    + 2.0 * d1 * (vp**2 / v**3)[..., None])
        return t_second / v[..., None] ** 2 - t_prime * (vp / v**3)[..., None]

    def curvature_rate(self, t):
        """d(kappa)/dt, analytic."""
        u = self.u_of_t(t)
        d1 = self.spec.d1(u)
        d2 = self.spec.d2(u)
        d3 = self.spec.d3(u)
        v = np.linalg.norm(d1, axis=-1)
        vp = np.einsum("...k,...k->...", d1, d2) / v
        ks = _cross(d1, d2) / v**3
        ksp = _cross(d1, d3) / v**3 - 3.0 * ks * vp / v
        return self._orient * ksp / v

    # -- cached uniform grids ----------------------------------------------

    def grid(self, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(t, gamma, tangent) on the uniform n+1-node grid over [0, L].

        Doubled grids are filled incrementally (only the new odd nodes are
        computed), which keeps refinement loops linear in the finest grid.
        """
        hit = self._grid_cache.get(n)
        if hit is not None:
            return hit
        prev = self._grid_cache.get(n // 2) if n % 2 == 0 else None
        if prev is None:
            t = np.linspace(0.0, self.length, n + 1)
            u = self.u_of_t(t)
            d1 = self.spec.d1(u)
            v = np.linalg.norm(d1, axis=-1)
            hit = (t, self.spec.point(u), d1 / v[..., None])
        else:
            t_prev, g_prev, tang_prev = prev
            t_odd = 0.5 * (t_prev[:-1] + t_prev[1:])
            u = self.u_of_t(t_odd)
            d1 = self.spec.d1(u)
            v = np.linalg.norm(d1, axis=-1)
            t = np.empty(n + 1)
            t[::2], t[1::2] = t_prev, t_odd
            g = np.empty((n + 1, 2))
            g[::2], g[1::2] = g_prev, self.spec.point(u)
            tang = np.empty((n + 1, 2))
            tang[::2], tang[1::2] = tang_prev, d1 / v[..., None]
            hit = (t, g, tang)
        self._grid_cache[n] = hit
        return hit


def make_arclength(spec: CurveSpec) -> ArcLengthCurve:
    """Build the unit-speed curve, enforcing the curvature contract.

    Rejects (ValueError): curvature of inconsistent sign, a zero-curvature
    point, or total curvature >= pi/2.
    """
    u0, u1 = spec.angle0, spec.angle1
    if not u1 > u0:
        raise ValueError("parameter range must have angle1 > angle0")
    uu = np.linspace(u0, u1, _VALIDATE_N)
    d1 = spec.d1(uu)
    d2 = spec.d2(uu)
    v = np.linalg.norm(d1, axis=-1)
    if np.min(v) <= 0.0:
        raise ValueError("spec has a singular point (|gamma'| = 0)")
    ks = _cross(d1, d2) / v**3
    if np.min(np.abs(ks)) <= 0.0 or np.min(ks) * np.max(ks) < 0.0:
        raise ValueError("curvature must be nonzero of constant sign")
    orient = 1.0 if ks[0] > 0 else -1.0

    # arc-length table and total curvature on the same panels
    u_nodes = np.linspace(u0, u1, _TABLE_N + 1)
    du = (u1 - u0) / _TABLE_N
    panel_s = np.zeros(_TABLE_N)
    panel_k = np.zeros(_TABLE_N)
    for x, w in zip(_GL_X01, _GL_W01):
        um = u_nodes[:-1] + x * du
        d1m = spec.d1(um)
        d2m = spec.d2(um)
        vm = np.linalg.norm(d1m, axis=-1)
        panel_s += w * vm
        panel_k += w * np.abs(_cross(d1m, d2m)) / vm**2  # kappa * v
    s_nodes = np.concatenate([[0.0], np.cumsum(panel_s * du)])
    total_curv = float(np.sum(panel_k * du))
    if total_curv >= 0.5 * math.pi:
        raise ValueError(
            f"total curvature {total_curv:.6f} >= pi/2; supply a shorter arc")

    kappa = np.abs(ks)
    ksp = _cross(d1, spec.d3(uu)) / v**3 - 3.0 * ks * (
        np.einsum("...k,...k->...", d1, d2) / v) / v
    if isinstance(spec, CircularArc):  # closed form, no table error
        length = spec.radius * (u1 - u0)
        kmin = kmax = 1.0 / spec.radius
        kprime = 0.0
        total_curv = u1 - u0
        if total_curv >= 0.5 * math.pi:
            raise ValueError("total curvature >= pi/2; supply a shorter arc")
    else:
        length = float(s_nodes[-1])
        kmin, kmax = float(np.min(kappa)), float(np.max(kappa))
        kprime = float(np.max(np.abs(ksp / v)))
    curve = ArcLengthCurve(
        spec=spec,
        length=length,
        kmin=kmin,
        kmax=kmax,
        kprime_max=kprime,
        total_curvature=total_curv,
        _u0=u0,
        _u1=u1,
        _orient=orient,
        _u_nodes=u_nodes,
        _s_nodes=s_nodes,
    )
    # unit-speed audit (construction-time, dense)
    taud = curve.tangent(np.linspace(0.0, curve.length, 1025))
    err = np.max(np.abs(np.linalg.norm(taud, axis=-1) - 1.0))
    if err > 1e-9:
        raise InvariantViolation(f"unit-speed audit failed: {err:.3e}")
    return curve


@dataclass(frozen=True)
class PhaseEval:
    phi: np.ndarray
    dphi: np.ndarray
    d2phi: np.ndarray
    d3phi: np.ndarray
    alpha: np.ndarray


def phase(curve: ArcLengthCurve, xi: tuple[float, float], t) -> PhaseEval:
    """The direction phase <xi/|xi|, gamma(t)> and its first three derivatives.

    alpha is the angle between xi and the normal, so dphi = sin(alpha) and
    d2phi = kappa * cos(alpha).
    """
    nx = math.hypot(xi[0], xi[1])
    if nx == 0.0:
        raise ValueError("xi must be nonzero")
    e = np.array([xi[0] / nx, xi[1] / nx])
    t = np.asarray(t, dtype=float)
    g = curve.gamma(t)
    tang = curve.tangent(t)
    sec = curve.second(t)
    thr = curve.third(t)
    nrm = curve.normal(t)
    dphi = tang @ e
    return PhaseEval(
        phi=g @ e,
        dphi=dphi,
        d2phi=sec @ e,
        d3phi=thr @ e,
        alpha=np.arctan2(dphi, nrm @ e),
    )


def near_stationary_interval(
    curve: ArcLengthCurve, xi: tuple[float, float], sigma: float
) -> tuple[tuple[float, float] | None, float]:
    """The sublevel set {t : |phi'_xi(t)| < 2 sigma} and its length.

    Under the total-curvature contract this set is a single interval (or
    empty); a disconnected set raises InvariantViolation, as does a length
    exceeding the proven bound 8*sigma/kmin.
    """
    if not 0.0 < sigma <= 0.25:
        raise ValueError("sigma must lie in (0, 1/4]")
    nx = math.hypot(xi[0], xi[1])
    if nx == 0.0:
        raise ValueError("xi must be nonzero")
    e = np.array([xi[0] / nx, xi[1] / nx])
    tt = np.linspace(0.0, curve.length, 4097)
    dphi = curve.tangent(tt) @ e
    inside = np.abs(dphi) < 2.0 * sigma
    if not np.any(inside):
        return None, 0.0
    idx = np.flatnonzero(inside)
    if idx[-1] - idx[0] + 1 != len(idx):
        raise InvariantViolation("near-stationary set is disconnected")

    def edge(t_in: float, t_out: float) -> float:
        for _ in range(60):
            mid = 0.5 * (t_in + t_out)
            if abs(float(curve.tangent(mid) @ e)) < 2.0 * sigma:
                t_in = mid
            else:
                t_out = mid
        return 0.5 * (t_in + t_out)

    left = 0.0 if idx[0] == 0 else edge(tt[idx[0]], tt[idx[0] - 1])
    right = (curve.length if idx[-1] == len(tt) - 1
             else edge(tt[idx[-1]], tt[idx[-1] + 1]))
    measured = right - left
    bound = 8.0 * sigma / curve.kmin
    if measured > bound + 1e-12:
        raise InvariantViolation(
            f"near-stationary interval length {measured:.6g} exceeds "
            f"8*sigma/kmin = {bound:.6g}")
    return (left, right), measured
