"""Sampled signals on a uniform periodic grid and the builtin test signals.

A signal in d dimensions lives on ``x_n = -L + n h``, ``h = 2L/N``,
``n = 0..N-1`` along every axis, so the origin is node ``N/2``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class SignalFormatError(ValueError):
    """Malformed signal header or payload."""


def _is_power_of_two(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


@dataclass(frozen=True, eq=False)
class SampledSignal:
    values: np.ndarray
    L: float
    d: int = 1

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if self.d not in (1, 2):
            raise ValueError(f"only d in (1, 2) is supported, got {self.d}")
        if v.ndim != self.d or len(set(v.shape)) != 1:
            raise ValueError(f"values must be an N^{self.d} array, got shape {v.shape}")
        if not _is_power_of_two(v.shape[0]):
            raise ValueError(f"N must be a power of two, got {v.shape[0]}")
        if not self.L > 0:
            raise ValueError("half extent L must be positive")
        if not np.all(np.isfinite(v)):
            raise ValueError("signal has non-finite samples")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "L", float(self.L))

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def h(self) -> float:
        return 2 * self.L / self.N

    @property
    def x(self) -> np.ndarray:
        return axis(self.N, self.L)

    @property
    def xi_max(self) -> float:
        """Largest resolvable frequency pi/h."""
        return np.pi / self.h

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*([self.x] * self.d), indexing="ij")

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.h**self.d))

    def with_values(self, values) -> "SampledSignal":
        return SampledSignal(values, self.L, self.d)

    def __add__(self, other: "SampledSignal") -> "SampledSignal":
        if (self.N, self.L, self.d) != (other.N, other.L, other.d):
            raise ValueError("signals live on different grids")
        return self.with_values(self.values + other.values)


def axis(N: int, L: float) -> np.ndarray:
    h = 2 * L / N
    return -L + h * np.arange(N)


def rel_l2_error(a, b, *, up_to_phase: bool = False) -> float:
    """||a - b|| / ||b|| on sample arrays, optionally minimized over a global phase."""
    a = np.asarray(a.values if isinstance(a, SampledSignal) else a).ravel()
    b = np.asarray(b.values if isinstance(b, SampledSignal) else b).ravel()
    if up_to_phase:
        inner = np.vdot(a, b)
        if abs(inner) > 0:
            a = a * (inner / abs(inner))
    nb = np.linalg.norm(b)
    return float(np.linalg.norm(a - b) / (nb if nb > 0 else 1.0))


# -- builtin signals ---------------------------------------------------------

def hermite_function(k: int, x) -> np.ndarray:
    """L^2-normalized Hermite function h_k via the three-term recurrence."""
    x = np.asarray(x, dtype=float)
    h_prev = np.zeros_like(x)
    h_cur = np.pi**-0.25 * np.exp(-(x**2) / 2)
    for n in range(k):
        h_prev, h_cur = h_cur, np.sqrt(2.0 / (n + 1)) * x * h_cur - np.sqrt(n / (n + 1)) * h_prev
    return h_cur


def _as_matrix(a, d: int) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim == 0:
        return a * np.eye(d)
    if a.shape != (d, d):
        raise SignalFormatError(f"expected scalar or {d}x{d} matrix, got shape {a.shape}")
    return a


def _as_vector(v, d: int) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim == 0:
        return np.full(d, float(v)) if d == 1 else np.array([float(v)] + [0.0] * (d - 1))
    if v.shape != (d,):
        raise SignalFormatError(f"expected scalar or length-{d} vector, got shape {v.shape}")
    return v


def _quadratic(X: list[np.ndarray], M: np.ndarray) -> np.ndarray:
    d = len(X)
    return sum(M[i, j] * X[i] * X[j] for i in range(d) for j in range(d))


def _evaluate(spec: dict, X: list[np.ndarray], h: float, x0: np.ndarray) -> np.ndarray:
    d = len(X)
    name = spec.get("name")
    shape = X[0].shape
    if name == "delta":
        idx = []
        for i in range(d):
            n = (x0[i] - X[i].min()) / h
            if abs(n - round(n)) > 1e-9:
                raise SignalFormatError("delta position must lie on a grid node")
            idx.append(int(round(n)))
        out = np.zeros(shape, dtype=complex)
        out[tuple(idx)] = 1.0 / h**d
        return out
    Y = [X[i] - x0[i] for i in range(d)]
    if name == "constant":
        return np.ones(shape, dtype=complex)
    if name == "plane_wave":
        xi0 = _as_vector(spec.get("xi0", 4.0), d)
        return np.exp(1j * sum(xi0[i] * Y[i] for i in range(d)))
    if name == "chirp":
        A = _as_matrix(spec.get("a", 1.0), d).astype(float)
        return np.exp(0.5j * _quadratic(Y, A))
    if name == "gaussian":
        return np.pi ** (-d / 4) * np.exp(-0.5 * sum(y**2 for y in Y)) + 0j
    if name == "hermite":
        k = int(spec.get("k", 0))
        out = np.ones(shape, dtype=complex)
        for y in Y:
            out = out * hermite_function(k, y)
        return out
    if name == "gaussian_state":
        M = _as_matrix(np.asarray(spec.get("M_re", 0.0)) + 1j * np.asarray(spec.get("M_im", 1.0)), d)
        c = complex(spec.get("c_re", 1.0), spec.get("c_im", 0.0))
        return c * np.exp(0.5j * _quadratic(Y, M))
    if name == "sum":
        terms = spec.get("terms")
        if not terms:
            raise SignalFormatError("'sum' builtin needs a non-empty 'terms' list")
        return sum(_build(t, X, h) for t in terms)
    raise SignalFormatError(f"unknown builtin signal {name!r}")


def _build(spec: dict, X: list[np.ndarray], h: float) -> np.ndarray:
    if not isinstance(spec, dict):
        raise SignalFormatError("builtin spec must be an object")
    d = len(X)
    shift = np.asarray(spec.get("shift", [0.0] * (2 * d)), dtype=float)
    if shift.shape != (2 * d,):
        raise SignalFormatError(f"'shift' must have {2 * d} components (x0, xi0)")
    x0, xi0 = shift[:d], shift[d:]
    vals = _evaluate(spec, X, h, x0)
    if np.any(xi0):
        vals = vals * np.exp(1j * sum(xi0[i] * X[i] for i in range(d)))
    amp = complex(spec.get("amplitude", 1.0))
    return amp * vals


def builtin(spec: dict | str, N: int, L: float, d: int = 1) -> SampledSignal:
    """Sample a builtin signal, e.g. ``{"name": "chirp", "a": 1.0}``.

    Every spec accepts ``shift`` = (x0, xi0), applying the phase-space shift
    Pi(z0) = M_xi0 T_x0, and ``amplitude``.
    """
    if isinstance(spec, str):
        spec = {"name": spec}
    X = np.meshgrid(*([axis(N, L)] * d), indexing="ij")
    return SampledSignal(_build(spec, X, 2 * L / N), L, d)


def phase_space_shift(u: SampledSignal, z0) -> SampledSignal:
    """Pi(z0)u = M_xi0 T_x0 u with a band-limited (spectral) translation."""
    z0 = np.asarray(z0, dtype=float)
    d = u.d
    x0, xi0 = z0[:d], z0[d:]
    v = u.values
    if np.any(x0):
        k = 2 * np.pi * np.fft.fftfreq(u.N, u.h)
        K = np.meshgrid(*([k] * d), indexing="ij")
        v = np.fft.ifftn(np.fft.fftn(v) * np.exp(-1j * sum(K[i] * x0[i] for i in range(d))))
    X = u.mesh()
    return u.with_values(v * np.exp(1j * sum(xi0[i] * X[i] for i in range(d))))


# -- file format -------------------------------------------------------------

def read_signal(path) -> SampledSignal:
    """Load a JSON header with either a ``builtin`` spec or a raw ``data_file``.

    The payload is little-endian interleaved complex float64 in C order.
    """
    path = Path(path)
    text = path.read_text()
    try:
        header = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SignalFormatError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(header, dict):
        raise SignalFormatError(f"{path}:1: header must be a JSON object")
    try:
        d, N, L = int(header.get("d", 1)), int(header["N"]), float(header["L"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SignalFormatError(f"{path}: header needs integer 'N' and real 'L' ({exc})") from exc
    if "builtin" in header:
        try:
            return builtin(header["builtin"], N, L, d)
        except ValueError as exc:
            raise SignalFormatError(f"{path}: {exc}") from exc
    if "data_file" in header:
        data = path.parent / header["data_file"]
        raw = np.fromfile(data, dtype="<c16")
        if raw.size != N**d:
            raise SignalFormatError(f"{data}: expected {N**d} complex samples, found {raw.size}")
        try:
            return SampledSignal(raw.reshape((N,) * d), L, d)
        except ValueError as exc:
            raise SignalFormatError(f"{path}: {exc}") from exc
    raise SignalFormatError(f"{path}: header needs either 'builtin' or 'data_file'")


def write_signal(u: SampledSignal, path, extra: dict | None = None) -> Path:
    """Write ``<path>`` (JSON header) and ``<path stem>.bin`` (payload)."""
    path = Path(path)
    payload = path.with_suffix(".bin")
    np.ascontiguousarray(u.values, dtype="<c16").tofile(payload)
    header = {"d": u.d, "N": u.N, "L": u.L, "data_file": payload.name}
    if extra:
        header.update(extra)
    from .serialization import dumps

    path.write_text(dumps(header))
    return payload
