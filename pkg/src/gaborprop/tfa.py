"""Short-time Fourier transform and cone-wise decay orders.

The STFT uses the convention

    V_phi u(x, xi) = ∫ u(y) conj(phi(y - x)) e^{-i<y, xi>} dy,

approximated by the rectangle (= periodic trapezoid) rule on the signal grid.
Decay orders are estimated per direction by a log-log fit of |V_phi u| along
the ray ``center + r * omega``.  The rays are anchored at the phase-space
center of mass of ``u`` so that the estimate commutes with phase-space shifts.
"""
from __future__ import annotations

import csv
import re
from dataclasses import dataclass

import numpy as np

from .cones import DirectionSet, default_directions
from .signals import SampledSignal, hermite_function

FLOOR = 1e-13
RESIDUAL_GATE = 0.5
MONOTONE_TOL = 0.05
MIN_SAMPLES = 4
DEFAULT_MARGIN = 0.25
THRESHOLD_SLACK = 1e-9
_CHUNK = 512


class ResolutionError(ValueError):
    """Phase-space points or radii outside the resolvable region of the grid."""


# -- windows -----------------------------------------------------------------

_WINDOW_RE = re.compile(r"^(gaussian|hermite_(\d+))$")


@dataclass(frozen=True)
class WindowSpec:
    """Gaussian or Hermite window, tensorized in d = 2, unit L^2 norm."""

    kind: str = "gaussian"

    def __post_init__(self):
        if not _WINDOW_RE.match(self.kind):
            raise ValueError(f"unknown window {self.kind!r}; use 'gaussian' or 'hermite_<k>'")

    @property
    def order(self) -> int:
        m = _WINDOW_RE.match(self.kind)
        return int(m.group(2)) if m.group(2) else 0

    def profile(self, y) -> np.ndarray:
        """One-dimensional factor of the window."""
        return hermite_function(self.order, y)

    def sampled(self, N: int, L: float, d: int = 1) -> np.ndarray:
        from .signals import axis

        p = self.profile(axis(N, L))
        return p if d == 1 else np.multiply.outer(p, p)

    def grid_norm(self, N: int, L: float, d: int = 1) -> float:
        h = 2 * L / N
        return float(np.sqrt(np.sum(np.abs(self.sampled(N, L, d)) ** 2) * h**d))


# -- phase-space points ------------------------------------------------------

def _taper(x: np.ndarray, L: float) -> np.ndarray:
    """Hann bump cos^2(pi x / L) on the central half |x| <= L/2."""
    return np.where(np.abs(x) <= L / 2, np.cos(np.pi * x / L) ** 2, 0.0)


def phase_center(u: SampledSignal) -> np.ndarray:
    """Center of mass of |u|^2 in x and of |u^|^2 in xi, shape (2d,).

    Moments are taken of u tapered to the central half of the box, so that
    the wrap-around jump of non-periodic samples (plane waves, chirps) does
    not pull the center toward the boundary.  The boundary node x = -L and
    the Nyquist frequency are equidistant from both ends of the periodic box
    and carry no weight in the first moments.
    """
    d, N = u.d, u.N
    x = u.x.copy()
    tap = _taper(x, u.L)
    v = u.values
    for ax in range(d):
        shape = [1] * d
        shape[ax] = N
        v = v * tap.reshape(shape)
    if not np.any(v):
        v = u.values
    p = np.abs(v) ** 2
    P = np.abs(np.fft.fftn(v)) ** 2
    total, total_hat = p.sum(), P.sum()
    if total == 0:
        return np.zeros(2 * d)
    x[0] = 0.0
    k = 2 * np.pi * np.fft.fftfreq(N, u.h)
    k[N // 2] = 0.0
    c = np.zeros(2 * d)
    for i in range(d):
        others = tuple(j for j in range(d) if j != i)
        c[i] = np.dot(p.sum(axis=others) if others else p, x) / total
        c[d + i] = np.dot(P.sum(axis=others) if others else P, k) / total_hat
    return c


@dataclass(frozen=True, eq=False)
class PhaseGrid:
    """Geometric radii ``r_min * rho^k <= r_max`` along each direction."""

    radii: np.ndarray
    directions: DirectionSet
    center: object = "auto"

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        if r.ndim != 1:
            raise ValueError("radii must be one-dimensional")
        if len(r) and (np.any(np.diff(r) <= 0) or r[0] <= 0):
            raise ValueError("radii must be positive and strictly increasing")
        if not (isinstance(self.center, str) and self.center == "auto"):
            c = np.asarray(self.center, dtype=float)
            if c.shape != (self.directions.ambient,):
                raise ValueError("center must be 'auto' or a phase-space point")
            object.__setattr__(self, "center", c)
        object.__setattr__(self, "radii", r)

    @classmethod
    def geometric(cls, r_min: float, r_max: float, rho: float, directions: DirectionSet, center="auto"):
        if rho <= 1:
            raise ValueError("radial ratio rho must exceed 1")
        if r_min < 2:
            raise ValueError("r_min must be at least 2")
        n = int(np.floor(np.log(r_max / r_min) / np.log(rho) + 1e-9)) + 1 if r_max >= r_min else 0
        return cls(r_min * rho ** np.arange(n), directions, center)

    @classmethod
    def for_signal(
        cls,
        u: SampledSignal,
        *,
        r_min: float | None = None,
        r_max: float | None = None,
        rho: float = 2**0.25,
        directions: DirectionSet | None = None,
        center="auto",
        strict: bool = False,
    ) -> "PhaseGrid":
        """Default grid for ``u``, with r_max clipped to 0.5 min(L, pi/h).

        An explicit ``r_max`` beyond that bound raises :class:`ResolutionError`
        when ``strict``; otherwise it is clipped as well, which may leave too
        few radial samples for a reliable estimate.
        """
        defaults = {1: (4.0, 24.0), 2: (2.0, 8.0)}[u.d]
        r_min = defaults[0] if r_min is None else float(r_min)
        limit = 0.5 * min(u.L, u.xi_max)
        if r_max is None:
            r_max = min(defaults[1], limit)
        elif r_max > limit + 1e-12:
            if strict:
                raise ResolutionError(f"r_max={r_max:g} exceeds the resolvable bound 0.5*min(L, pi/h)={limit:g}")
            r_max = limit
        if strict and r_max < r_min:
            raise ResolutionError(f"grid too coarse: resolvable r_max={r_max:g} below r_min={r_min:g}")
        directions = default_directions(u.d) if directions is None else directions
        return cls.geometric(r_min, r_max, rho, directions, center)

    def resolve_center(self, u: SampledSignal) -> np.ndarray:
        if isinstance(self.center, str):
            return phase_center(u)
        return np.asarray(self.center, dtype=float)

    def points(self, center) -> np.ndarray:
        """Ray points, shape (n_dirs, n_radii, 2d)."""
        dirs = self.directions.dirs
        return center[None, None, :] + self.radii[None, :, None] * dirs[:, None, :]


def _check_points(u: SampledSignal, pts: np.ndarray) -> None:
    d = u.d
    eps = 1e-9
    if np.any(np.abs(pts[:, :d]) > u.L + eps):
        raise ResolutionError(f"STFT point outside the spatial box |x| <= L = {u.L:g}")
    if np.any(np.abs(pts[:, d:]) > u.xi_max + eps):
        raise ResolutionError(f"STFT point outside the resolvable band |xi| <= pi/h = {u.xi_max:g}")


def _analysis_rows(u: SampledSignal, w: WindowSpec, xs: np.ndarray, xis: np.ndarray) -> np.ndarray:
    y = u.x
    return np.conj(w.profile(y[None, :] - xs[:, None])) * np.exp(-1j * xis[:, None] * y[None, :])


def stft(u: SampledSignal, w: WindowSpec, points) -> np.ndarray:
    """V_phi u at the given phase-space points (rows of shape (2d,))."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    d = u.d
    if pts.shape[1] != 2 * d:
        raise ValueError(f"points must have {2 * d} coordinates")
    _check_points(u, pts)
    out = np.empty(len(pts), dtype=complex)
    for start in range(0, len(pts), _CHUNK):
        p = pts[start : start + _CHUNK]
        A = _analysis_rows(u, w, p[:, 0], p[:, d])
        if d == 1:
            out[start : start + len(p)] = A @ u.values
        else:
            B = _analysis_rows(u, w, p[:, 1], p[:, 3])
            out[start : start + len(p)] = np.sum((A @ u.values) * B, axis=1)
    return out * u.h**d


def stft_lattice(u: SampledSignal, w: WindowSpec, x_stride: int = 1):
    """V_phi u on (x_j, xi_k), x_j every ``x_stride`` nodes, xi_k the DFT frequencies.

    Returns (x, xi, V) with V of shape (len(x), N) and xi sorted ascending (d = 1).
    """
    if u.d != 1:
        raise NotImplementedError("lattice STFT is implemented for d = 1")
    N, L, h = u.N, u.L, u.h
    xs = u.x[::x_stride]
    xi = 2 * np.pi * np.fft.fftfreq(N, h)
    rows = np.conj(w.profile(u.x[None, :] - xs[:, None])) * u.values[None, :]
    # e^{-i y_n xi_k} = e^{i L xi_k} e^{-2 pi i n k / N}
    V = h * np.fft.fft(rows, axis=1) * np.exp(1j * L * xi)[None, :]
    order = np.argsort(xi, kind="stable")
    return xs, xi[order], V[:, order]


def lattice_energy(u: SampledSignal, w: WindowSpec, x_stride: int = 1) -> float:
    """sum |V|^2 dx dxi / (2 pi); equals ||u||^2 for a unit window."""
    xs, xi, V = stft_lattice(u, w, x_stride)
    dx = u.h * x_stride
    dxi = 2 * np.pi / (u.N * u.h)
    return float(np.sum(np.abs(V) ** 2) * dx * dxi / (2 * np.pi))


# -- decay orders ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class WavefrontReport:
    """Per-direction decay orders s*(omega) along the rays of a PhaseGrid."""

    directions: DirectionSet
    orders: np.ndarray
    residuals: np.ndarray
    reliable: np.ndarray
    radii: np.ndarray
    center: np.ndarray
    window: str = "gaussian"

    def threshold(self, s: float) -> DirectionSet:
        """Reliable directions with s*(omega) < s."""
        mask = self.reliable & (self.orders < s - THRESHOLD_SLACK)
        return self.directions.subset(mask)

    @property
    def unreliable_fraction(self) -> float:
        n = len(self.reliable)
        return float(np.sum(~self.reliable) / n) if n else 1.0

    def order_at(self, direction) -> float:
        ang = np.arccos(np.clip(self.directions.dirs @ np.asarray(direction, dtype=float), -1, 1))
        return float(self.orders[int(np.argmin(ang))])

    def to_dict(self) -> dict:
        rows = []
        for v, s, res, ok in zip(self.directions.dirs, self.orders, self.residuals, self.reliable):
            rows.append({"direction": v.tolist(), "order": float(s), "residual": float(res), "reliable": bool(ok)})
        return {
            "window": self.window,
            "center": self.center.tolist(),
            "radii": self.radii.tolist(),
            "angular_resolution": self.directions.angular_resolution,
            "directions": rows,
        }


def _fit_ray(lr: np.ndarray, v: np.ndarray):
    """(order, residual, reliable) for one ray of |V| samples."""
    K = len(v)
    if K == 0:
        return np.nan, np.nan, False
    if np.any(v[K // 2 :] < FLOOR):
        return np.inf, 0.0, True
    m = v >= FLOOR
    n = int(m.sum())
    if n < 2:
        return np.nan, np.nan, False
    lv = np.log(v[m])
    A = np.vstack([lr[m], np.ones(n)]).T
    coef, *_ = np.linalg.lstsq(A, lv, rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - lv) ** 2)))
    if n < MIN_SAMPLES:
        return float(-coef[0]), resid, False
    step = np.diff(lv)
    monotone = bool(np.all(step <= MONOTONE_TOL) or np.all(step >= -MONOTONE_TOL))
    return float(-coef[0]), resid, bool(resid <= RESIDUAL_GATE or monotone)


def decay_order(u: SampledSignal, w: WindowSpec, grid: PhaseGrid) -> WavefrontReport:
    if grid.directions.ambient != 2 * u.d:
        raise ValueError("phase grid and signal have different dimensions")
    center = grid.resolve_center(u)
    nd, K = len(grid.directions), len(grid.radii)
    if K:
        pts = grid.points(center).reshape(-1, 2 * u.d)
        V = np.abs(stft(u, w, pts)).reshape(nd, K)
    else:
        V = np.zeros((nd, 0))
    lr = np.log(grid.radii)
    fits = [_fit_ray(lr, V[j]) for j in range(nd)]
    orders = np.array([f[0] for f in fits], dtype=float)
    residuals = np.array([f[1] for f in fits], dtype=float)
    reliable = np.array([f[2] for f in fits], dtype=bool)
    return WavefrontReport(grid.directions, orders, residuals, reliable, grid.radii.copy(), center, w.kind)


def estimate_from_report(report: WavefrontReport, s: float, margin: float = DEFAULT_MARGIN) -> DirectionSet:
    """Directions with s* < s - margin, dilated by one angular step."""
    return report.threshold(s - margin).dilate(report.directions, 1.0)


def wavefront_estimate(u, w, grid, s: float, margin: float = DEFAULT_MARGIN) -> DirectionSet:
    return estimate_from_report(decay_order(u, w, grid), s, margin)


def window_independence_check(u: SampledSignal, grid: PhaseGrid, s: float, windows=("gaussian", "hermite_1")) -> dict:
    """Compare the two windows' orders and thresholded sets at order ``s``."""
    reps = [decay_order(u, WindowSpec(k), grid) for k in windows]
    a, b = reps
    both = a.reliable & b.reliable & np.isfinite(a.orders) & np.isfinite(b.orders)
    diff = np.abs(a.orders[both] - b.orders[both])
    est = [estimate_from_report(r, s) for r in reps]
    return {
        "windows": list(windows),
        "max_order_discrepancy": float(np.max(diff)) if len(diff) else 0.0,
        "compared_directions": int(both.sum()),
        "hausdorff": est[0].hausdorff(est[1]),
        "sets_match": est[0].matches(est[1]),
        "reports": reps,
    }


# -- export ------------------------------------------------------------------

def write_spectrogram_csv(u: SampledSignal, w: WindowSpec, grid: PhaseGrid, path) -> None:
    """STFT samples on the grid's rays; columns x, xi, re, im, abs (x1, x2, xi1, xi2 for d = 2)."""
    center = grid.resolve_center(u)
    pts = grid.points(center).reshape(-1, 2 * u.d)
    V = stft(u, w, pts) if len(pts) else np.zeros(0, dtype=complex)
    head = ["x", "xi"] if u.d == 1 else ["x1", "x2", "xi1", "xi2"]
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(head + ["re", "im", "abs"])
        for p, v in zip(pts, V):
            out.writerow(["%.17g" % c for c in p] + ["%.17g" % v.real, "%.17g" % v.imag, "%.17g" % abs(v)])
