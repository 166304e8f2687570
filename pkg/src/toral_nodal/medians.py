"""The median map on pairs of circle lattice points, with exact arithmetic.

Medians z = (mu + nu)/2 are half-integer points; everything is stored via
doubled coordinates z2 = mu + nu so that all membership and separation tests
between medians reduce to integer comparisons.  The chord-gap quantity
Delta(z) = sqrt(lambda^2 - |z|^2) is carried as the exact integer
4*Delta^2 = 4n - |z2|^2; square roots are taken only at reporting boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

from .errors import AntipodalMedianError, InvariantViolation
from .lattice import LatticeCircle, Point, chord_arc_max

Vec = tuple[float, float]


@dataclass(frozen=True)
class Median:
    """Midpoint of a chord of the circle x^2 + y^2 = n, in doubled coordinates."""

    z2: Point
    parents: tuple[Point, Point]
    four_delta_sq: int
    n: int

    def __post_init__(self):
        a, b = self.z2
        if a * a + b * b + self.four_delta_sq != 4 * self.n:
            raise InvariantViolation(f"median {self.z2}: |2z|^2 + 4Delta^2 != 4n")
        if self.four_delta_sq < 0:
            raise InvariantViolation(f"median {self.z2}: negative 4Delta^2")

    @property
    def point(self) -> Vec:
        return (self.z2[0] / 2.0, self.z2[1] / 2.0)

    @property
    def delta(self) -> float:
        return 0.5 * math.sqrt(self.four_delta_sq)

    def mu_plus(self) -> Point:
        """The parent on the positive side of the perpendicular at z."""
        if self.z2 == (0, 0):
            raise AntipodalMedianError("mu_plus undefined for the zero median")
        a, b = self.z2
        p1, p2 = self.parents
        # (2*mu - z2) . z2_perp > 0 selects mu_plus; zero only when mu = z.
        t1 = (2 * p1[0] - a) * (-b) + (2 * p1[1] - b) * a
        return p1 if t1 >= 0 else p2

    def mu_minus(self) -> Point:
        p = self.mu_plus()
        return (self.z2[0] - p[0], self.z2[1] - p[1])


def median_map(mu: Point, nu: Point, n: int) -> Median:
    """Exact median of two lattice points on the circle x^2 + y^2 = n."""
    for x, y in (mu, nu):
        if x * x + y * y != n:
            raise ValueError(f"({x},{y}) not on circle n={n}")
    z2 = (mu[0] + nu[0], mu[1] + nu[1])
    fds = 4 * n - (z2[0] ** 2 + z2[1] ** 2)
    parents = tuple(sorted((mu, nu)))
    return Median(z2=z2, parents=parents, four_delta_sq=fds, n=n)


def invert_median(z2: Point, n: int) -> tuple[Point, Point] | None:
    """Recover the unique lattice parents {mu+, mu-} of a nonzero median.

    The closed form mu+- = z +- Delta(z) z_perp/|z_perp| is evaluated in
    floats, snapped to the nearest integer point, and verified exactly;
    a failed verification means z is not the median of a lattice chord and
    returns None (distinct from an error).  The zero median is refused as
    ambiguous (every antipodal pair produces it) and points outside the
    closed disk |z2|^2 <= 4n are rejected.
    """
    a, b = z2
    s2 = a * a + b * b
    if s2 == 0:
        raise AntipodalMedianError("the zero median has no unique parent pair")
    if s2 > 4 * n:
        raise ValueError(f"median {z2} lies outside the disk of radius 2*lambda")
    fds = 4 * n - s2
    delta = 0.5 * math.sqrt(fds)
    norm = math.sqrt(s2)
    ux, uy = -b / norm, a / norm  # unit perpendicular to z
    px = 0.5 * a + delta * ux
    py = 0.5 * b + delta * uy
    mu_p = (round(px), round(py))
    mu_m = (a - mu_p[0], b - mu_p[1])  # mu- = 2z - mu+, exactly
    for x, y in (mu_p, mu_m):
        if x * x + y * y != n:
            return None
    # orient: (2*mu+ - z2) . z2_perp > 0
    t = (2 * mu_p[0] - a) * (-b) + (2 * mu_p[1] - b) * a
    if t < 0:
        mu_p, mu_m = mu_m, mu_p
    return mu_p, mu_m


@dataclass(frozen=True)
class MedianSet:
    """All medians of unordered pairs (including mu = nu) of one circle."""

    circle: LatticeCircle
    medians: tuple[Median, ...]
    by_z2: Mapping[Point, Median] = field(repr=False)

    @property
    def n(self) -> int:
        return self.circle.n

    @property
    def radius(self) -> float:
        return self.circle.radius


def build_median_set(circle: LatticeCircle) -> MedianSet:
    """Materialize the median set; verifies nonzero medians have unique parents."""
    pts = circle.points
    medians: list[Median] = []
    by_z2: dict[Point, Median] = {}
    for i in range(len(pts)):
        for j in range(i, len(pts)):
            med = median_map(pts[i], pts[j], circle.n)
            medians.append(med)
            if med.z2 != (0, 0):
                prev = by_z2.get(med.z2)
                if prev is not None and prev.parents != med.parents:
                    raise InvariantViolation(
                        f"median {med.z2} on n={circle.n} has two parent pairs"
                    )
                by_z2[med.z2] = med
    return MedianSet(circle=circle, medians=tuple(medians), by_z2=by_z2)


def stability_count(
    mset: MedianSet, z: Vec, v: Vec
) -> tuple[int, float]:
    """Count medians w with |mu+(w) - v| < sqrt(lambda) and |w - z| < lambda^(1/3).

    Direct scan; the second return value is count / arc-crowding max, the
    empirically tracked ratio (the proven statement is count = O(B)).
    """
    lam = mset.radius
    r_mu = math.sqrt(lam)
    r_z = lam ** (1.0 / 3.0)
    count = 0
    for med in mset.medians:
        if med.z2 == (0, 0):
            continue
        mp = med.mu_plus()
        if math.hypot(mp[0] - v[0], mp[1] - v[1]) >= r_mu:
            continue
        if math.hypot(0.5 * med.z2[0] - z[0], 0.5 * med.z2[1] - z[1]) < r_z:
            count += 1
    b = chord_arc_max(mset.circle)
    return count, count / b


def _is_starred(med: Median) -> bool:
    """|z| >= lambda/2 and Delta(z) > sqrt(lambda), both exact in integers."""
    a, b = med.z2
    if a * a + b * b < med.n:  # |z2| >= lambda  <=>  |z2|^2 >= n
        return False
    return med.four_delta_sq**2 > 16 * med.n  # Delta > sqrt(lambda)


def _is_small_gap(med: Median) -> bool:
    """0 < Delta(z) <= sqrt(lambda), exact."""
    return med.four_delta_sq > 0 and med.four_delta_sq**2 <= 16 * med.n


@dataclass(frozen=True)
class DyadicShellDecomposition:
    """Starred medians sliced into dyadic shells K*sqrt(lambda) <= Delta < 2K*sqrt(lambda).

    ``shells`` maps dyadic K to its shell; ``sub_shells`` maps (L, l) to the
    unit-sqrt(lambda) slice (L+l)*sqrt(lambda) <= Delta < (L+l+1)*sqrt(lambda).
    ``small_gap`` collects the non-starred medians with 0 < Delta <= sqrt(lambda)
    (the other half of the bilinear bound).  ``locality`` is lambda^epsilon.
    """

    mset: MedianSet
    epsilon: float
    shells: Mapping[int, tuple[Median, ...]]
    sub_shells: Mapping[tuple[int, int], tuple[Median, ...]]
    small_gap: tuple[Median, ...]

    @property
    def locality(self) -> float:
        return self.mset.radius**self.epsilon

    def starred(self) -> tuple[Median, ...]:
        out: list[Median] = []
        for key in sorted(self.shells):
            out.extend(self.shells[key])
        return tuple(out)

    def shell_of(self, med: Median) -> tuple[int, int]:
        """(K, k) with med in sub-shell S_{K,k}; requires med starred."""
        if not _is_starred(med):
            raise ValueError("median is not in the starred set")
        fds, n = med.four_delta_sq, med.n
        k_exp = 0
        while True:
            K = 1 << k_exp
            if fds * fds < 256 * K**4 * n:  # Delta < 2K sqrt(lambda)
                break
            k_exp += 1
        K = 1 << k_exp
        for sub in range(K):
            # Delta < (K+sub+1) sqrt(lambda)
            if fds * fds < 16 * (K + sub + 1) ** 4 * n:
                return K, sub
        raise InvariantViolation(f"median {med.z2}: no sub-shell found")


def dyadic_decompose(mset: MedianSet, epsilon: float = 0.1) -> DyadicShellDecomposition:
    """Slice the starred medians into dyadic shells and their unit sub-shells."""
    if not 0.0 < epsilon < 0.5:
        raise ValueError("epsilon must lie in (0, 1/2)")
    shells: dict[int, list[Median]] = {}
    sub_shells: dict[tuple[int, int], list[Median]] = {}
    small: list[Median] = []
    seen: set[Point] = set()
    decomp = DyadicShellDecomposition(
        mset=mset, epsilon=epsilon, shells={}, sub_shells={}, small_gap=()
    )
    for med in mset.medians:
        if med.z2 in seen:
            continue  # antipodal duplicates share z2=(0,0) only; others unique
        seen.add(med.z2)
        if _is_small_gap(med) and not _is_starred(med):
            small.append(med)
            continue
        if not _is_starred(med):
            continue
        K, sub = decomp.shell_of(med)
        shells.setdefault(K, []).append(med)
        sub_shells.setdefault((K, sub), []).append(med)
    return DyadicShellDecomposition(
        mset=mset,
        epsilon=epsilon,
        shells={k: tuple(v) for k, v in sorted(shells.items())},
        sub_shells={k: tuple(v) for k, v in sorted(sub_shells.items())},
        small_gap=tuple(small),
    )


def median_dist(z: Median, w: Median) -> float:
    d2 = (z.z2[0] - w.z2[0]) ** 2 + (z.z2[1] - w.z2[1]) ** 2
    return 0.5 * math.sqrt(d2)


def shell_window_count(
    decomp: DyadicShellDecomposition, z: Median, L: int
) -> int:
    """#{w in S_L : |w - z| < lambda^epsilon}, by exact scan."""
    shell = decomp.shells.get(L, ())
    # |w - z| < lambda^eps  <=>  |w2 - z2|^2 < 4 n^eps (integer left side)
    thr = 4.0 * decomp.mset.n**decomp.epsilon
    count = 0
    for w in shell:
        d2 = (w.z2[0] - z.z2[0]) ** 2 + (w.z2[1] - z.z2[1]) ** 2
        if d2 < thr:
            count += 1
    return count


@dataclass(frozen=True)
class SeparationReport:
    dist: float
    lower_bound: float | None
    case: str
    ratio: float | None


def median_separation_audit(
    decomp: DyadicShellDecomposition, z: Median, w: Median
) -> SeparationReport:
    """Classify a close pair of starred medians and report |z - w| against
    its case's proven lower-bound shape.

    Cases for z in S_{K,k}, w in S_{L,l} with K <= L:
    "wide" (2K < L, bound ~ L^2), "adjacent" (K = L/2 and l != 0, bound ~ L*l),
    "equal" (K = L and |l-k| >= 2, bound ~ L*|l-k|), otherwise "exceptional"
    (no bound claimed).  The multiplicative constant is unspecified, so only
    the ratio dist/bound is reported, never asserted.
    """
    if z.z2 == w.z2:
        raise ValueError("need two distinct medians")
    K, k = decomp.shell_of(z)
    L, l = decomp.shell_of(w)
    if K > L:
        (K, k), (L, l) = (L, l), (K, k)
    dist = median_dist(z, w)
    if dist >= decomp.locality:
        raise ValueError("pair is farther apart than the locality cutoff")
    if 2 * K < L:
        case, bound = "wide", float(L * L)
    elif 2 * K == L and l != 0:
        case, bound = "adjacent", float(L * l)
    elif K == L and abs(l - k) >= 2:
        case, bound = "equal", float(L * abs(l - k))
    else:
        case, bound = "exceptional", None
    ratio = dist / bound if bound else None
    return SeparationReport(dist=dist, lower_bound=bound, case=case, ratio=ratio)
