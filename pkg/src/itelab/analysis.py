"""Binder-curve analysis: crossings, data collapse, drift, phase boundaries.

Curves are supplied as ordered (g, U4) samples per system size; crossing
detection interpolates with monotone piecewise cubics and locates roots of
the difference by bisection.  Curve generation is injected as a callable so
the analysis works identically on DMRG output and on synthetic data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import bisect

CROSSING_XTOL = 1e-5  # bisection tolerance, comfortably below the 1e-4 contract


class CoverageError(ValueError):
    """Rescaled curves do not overlap enough for a collapse fit."""


@dataclass(frozen=True)
class BinderCurve:
    """U4(g) samples for one system size (L = number of chain sites/rungs)."""

    length: int
    g_values: tuple[float, ...]
    u4_values: tuple[float, ...]
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if len(self.g_values) != len(self.u4_values):
            raise ValueError("g and U4 sample counts differ")
        if len(self.g_values) < 4:
            raise ValueError(f"need >= 4 points per curve, got {len(self.g_values)}")
        if any(b <= a for a, b in zip(self.g_values, self.g_values[1:])):
            raise ValueError("g values must be strictly increasing")
        if not all(np.isfinite(self.u4_values)):
            raise ValueError("U4 values must be finite")

    def interpolator(self) -> PchipInterpolator:
        return PchipInterpolator(self.g_values, self.u4_values)

    @property
    def g_min(self) -> float:
        return self.g_values[0]

    @property
    def g_max(self) -> float:
        return self.g_values[-1]


@dataclass
class CrossingReport:
    sizes: tuple[int, int]
    g_c: float | None
    bracket: tuple[float, float]
    all_crossings: list[float]
    status: str  # found | none_in_bracket | multiple


@dataclass
class CollapseFit:
    nu: float
    quality: float
    flat_landscape: bool
    qualities: dict[float, float]


@dataclass
class DriftReport:
    status: str  # scale_invariant | drifting
    pair_crossings: list[tuple[tuple[int, int], float | None]]
    threshold: float


@dataclass
class BoundaryPoint:
    lam: float
    g_c: float | None
    status: str
    sizes: tuple[int, int] | None = None


def find_crossing(a: BinderCurve, b: BinderCurve, bracket: tuple[float, float]) -> CrossingReport:
    """Scale-invariant crossing of two Binder curves inside ``bracket``.

    Roots of U4_a - U4_b on the monotone cubic interpolants, located by
    bisection; with several roots the one closest to the bracket midpoint
    is reported and the status is 'multiple'.
    """
    if a.length == b.length:
        raise ValueError("crossing needs two distinct system sizes")
    lo = max(bracket[0], a.g_min, b.g_min)
    hi = min(bracket[1], a.g_max, b.g_max)
    if hi <= lo:
        raise ValueError(f"curves do not cover the bracket {bracket}")
    fa, fb = a.interpolator(), b.interpolator()

    def delta(g):
        return fa(g) - fb(g)

    grid = np.linspace(lo, hi, max(200, int((hi - lo) / 5e-4)))
    values = delta(grid)
    roots = []
    for x0, x1, v0, v1 in zip(grid, grid[1:], values, values[1:]):
        if v0 == 0.0:
            roots.append(float(x0))
        elif v0 * v1 < 0.0:
            roots.append(float(bisect(delta, x0, x1, xtol=CROSSING_XTOL)))
    if values[-1] == 0.0:
        roots.append(float(grid[-1]))

    sizes = (a.length, b.length)
    if not roots:
        return CrossingReport(sizes, None, (lo, hi), [], "none_in_bracket")
    if len(roots) == 1:
        return CrossingReport(sizes, roots[0], (lo, hi), roots, "found")
    mid = 0.5 * (lo + hi)
    best = min(roots, key=lambda r: abs(r - mid))
    return CrossingReport(sizes, best, (lo, hi), roots, "multiple")


def _local_linear_fit(x: np.ndarray, y: np.ndarray, x_eval: np.ndarray, bandwidth: float) -> np.ndarray:
    """Tricube-weighted local linear regression evaluated at x_eval."""
    out = np.empty_like(x_eval)
    for k, x0 in enumerate(x_eval):
        t = np.abs(x - x0) / bandwidth
        w = np.where(t < 1.0, (1.0 - t**3) ** 3, 0.0)
        if np.count_nonzero(w) < 2:
            # widen until at least two points contribute
            order = np.argsort(np.abs(x - x0))
            w = np.zeros_like(x)
            w[order[:2]] = 1.0
        sw = w.sum()
        xm = (w * x).sum() / sw
        ym = (w * y).sum() / sw
        sxx = (w * (x - xm) ** 2).sum()
        slope = (w * (x - xm) * (y - ym)).sum() / sxx if sxx > 1e-300 else 0.0
        out[k] = ym + slope * (x0 - xm)
    return out


def collapse_fit(
    curves: list[BinderCurve],
    g_c: float,
    nu_grid=None,
    bandwidth_fraction: float = 0.25,
) -> CollapseFit:
    """Estimate nu by collapsing U4 onto a single function of (g-g_c) L^(1/nu).

    For each trial nu the curves are rescaled and pooled over their common
    x range, a local linear regression provides the reference curve, and
    the quality is the mean squared residual.  Ties prefer the smallest nu.
    """
    if len(curves) < 2:
        raise ValueError("collapse needs at least two curves")
    for c in curves:
        if not c.g_min <= g_c <= c.g_max:
            raise CoverageError(f"g_c = {g_c} outside curve range for L = {c.length}")
    if nu_grid is None:
        nu_grid = np.arange(0.5, 2.0 + 1e-9, 0.01)

    qualities: dict[float, float] = {}
    for nu in nu_grid:
        scaled = []
        for c in curves:
            x = (np.asarray(c.g_values) - g_c) * c.length ** (1.0 / nu)
            scaled.append((x, np.asarray(c.u4_values)))
        lo = max(x.min() for x, _ in scaled)
        hi = min(x.max() for x, _ in scaled)
        if hi <= lo:
            continue
        xs, ys = [], []
        for x, y in scaled:
            mask = (x >= lo) & (x <= hi)
            xs.append(x[mask])
            ys.append(y[mask])
        x_all = np.concatenate(xs)
        y_all = np.concatenate(ys)
        if x_all.size < 8:
            continue
        order = np.argsort(x_all)
        x_all, y_all = x_all[order], y_all[order]
        ref = _local_linear_fit(x_all, y_all, x_all, bandwidth_fraction * (hi - lo))
        qualities[float(nu)] = float(np.mean((y_all - ref) ** 2))

    if not qualities:
        raise CoverageError("no trial nu produced overlapping rescaled curves")
    best_nu = min(qualities, key=lambda nu: (qualities[nu], nu))
    q = np.array(list(qualities.values()))
    spread = (q.max() - q.min()) / max(q.max(), 1e-300)
    return CollapseFit(
        nu=best_nu,
        quality=qualities[best_nu],
        flat_landscape=bool(spread < 0.05),
        qualities=qualities,
    )


def crossing_drift_test(
    curves: list[BinderCurve],
    bracket: tuple[float, float],
    threshold: float = 0.05,
) -> DriftReport:
    """Classify a family of curves as scale invariant or drifting.

    Computes crossings for consecutive size pairs; 'drifting' means some
    pair lacks a crossing, or the crossing sequence moves monotonically by
    more than ``threshold`` in g per size doubling.
    """
    if len(curves) < 3:
        raise ValueError("drift test needs at least three sizes")
    curves = sorted(curves, key=lambda c: c.length)
    pairs = []
    for a, b in zip(curves, curves[1:]):
        report = find_crossing(a, b, bracket)
        pairs.append(((a.length, b.length), report.g_c))
    if any(g is None for _, g in pairs):
        return DriftReport("drifting", pairs, threshold)
    gs = [g for _, g in pairs]
    moves = np.diff(gs)
    monotone = np.all(moves > 0) or np.all(moves < 0)
    if monotone and np.max(np.abs(moves)) > threshold:
        return DriftReport("drifting", pairs, threshold)
    return DriftReport("scale_invariant", pairs, threshold)


def phase_boundary(
    make_curves,
    lambda_grid,
    sizes,
    g_bracket: tuple[float, float],
    bracket_halfwidth: float = 0.3,
) -> list[BoundaryPoint]:
    """Trace g_c(lambda) along a grid of noise rates.

    ``make_curves(lam, sizes, bracket)`` must return {L: BinderCurve}.  The
    crossing search bracket for each lambda is centred on the previous
    lambda's g_c (monotone-bracket warm start); per-point failures are
    recorded in the status and the sweep continues.
    """
    points: list[BoundaryPoint] = []
    prev_gc = None
    for lam in lambda_grid:
        if prev_gc is None:
            search = g_bracket
        else:
            search = (
                max(g_bracket[0], prev_gc - bracket_halfwidth),
                min(g_bracket[1], prev_gc + bracket_halfwidth),
            )
        try:
            curves = make_curves(lam, sizes, search)
            ordered = sorted(curves.values(), key=lambda c: c.length)
            report = find_crossing(ordered[-2], ordered[-1], search)
        except Exception as exc:  # record and continue the sweep
            points.append(BoundaryPoint(lam, None, f"error: {exc}"))
            continue
        points.append(BoundaryPoint(lam, report.g_c, report.status, report.sizes))
        if report.g_c is not None:
            prev_gc = report.g_c
    return points
