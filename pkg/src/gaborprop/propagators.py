"""Propagators e^{-t q^w(x, D)} and metaplectic operators.

Two independent paths are provided:

* exact Gaussian-state calculus (Mobius action of T = e^{-2itF} on the
  matrix M of ``c e^{i<x, Mx>/2}``), and
* grid propagators on :class:`SampledSignal` (Fourier multipliers,
  pointwise multipliers, fractional Fourier transform via chirp / scaled DFT
  / chirp).

Fourier transform convention: unitary, ``(2 pi)^{-d/2} ∫ u(x) e^{-i<x, xi>} dx``.
The fractional transform has eigenvalue ``e^{-i theta (k + 1/2)}`` on h_k,
so that theta = 2t realizes the harmonic oscillator q = i(|x|^2 + |xi|^2).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import czt

from .quadham import QuadraticHamiltonian, hamilton_matrix
from .signals import SampledSignal
from .symplectic import block, is_symplectic, standard_symplectic_form
from .tfa import ResolutionError

CAUSTIC_TOL = 1e-12
PARITY_TOL = 1e-6


class CausticError(ArithmeticError):
    """det(A + BM) vanishes: the Gaussian image is degenerate."""


class UnsupportedHamiltonian(ValueError):
    """q is outside the family the grid propagators implement."""


# -- Gaussian states ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GaussianState:
    """u(x) = c e^{i<x - x0, M(x - x0)>/2} e^{i<x, xi0>} with Im M >= 0."""

    M: np.ndarray
    c: complex = 1.0
    x0: np.ndarray | None = None
    xi0: np.ndarray | None = None

    def __post_init__(self):
        M = np.atleast_2d(np.asarray(self.M, dtype=complex))
        d = M.shape[0]
        if M.shape != (d, d):
            raise ValueError("M must be square")
        if np.max(np.abs(M - M.T)) > 1e-12:
            raise ValueError("M must be symmetric")
        if np.min(np.linalg.eigvalsh(0.5 * (M.imag + M.imag.T))) < -1e-10:
            raise ValueError("Im M must be positive semidefinite")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "c", complex(self.c))
        for name in ("x0", "xi0"):
            v = getattr(self, name)
            v = np.zeros(d) if v is None else np.asarray(v, dtype=float).reshape(d)
            object.__setattr__(self, name, v)

    @property
    def d(self) -> int:
        return self.M.shape[0]

    @property
    def centered(self) -> bool:
        return not (np.any(self.x0) or np.any(self.xi0))

    def sample(self, N: int, L: float) -> SampledSignal:
        from .signals import axis

        X = np.meshgrid(*([axis(N, L)] * self.d), indexing="ij")
        Y = [X[i] - self.x0[i] for i in range(self.d)]
        quad = sum(self.M[i, j] * Y[i] * Y[j] for i in range(self.d) for j in range(self.d))
        lin = sum(self.xi0[i] * X[i] for i in range(self.d))
        return SampledSignal(self.c * np.exp(0.5j * quad + 1j * lin), L, self.d)


def _mobius_det(T: np.ndarray, M: np.ndarray) -> complex:
    A, B, _, _ = block(T)
    return complex(np.linalg.det(A + B @ M))


def gaussian_propagate(g: GaussianState, q: QuadraticHamiltonian, t: float, max_steps: int = 1 << 16) -> GaussianState:
    """Image of a centered Gaussian under e^{-tq^w}.

    M' = (C + DM)(A + BM)^{-1} and c' = c det(A + BM)^{-1/2}, the square root
    continued from 1 at time 0 along [0, t].
    """
    if t < 0 and not q.real_part_vanishes:
        raise ValueError("gaussian_propagate: t must be non-negative when Re Q != 0")
    if not g.centered:
        raise ValueError("gaussian_propagate expects a centered state (x0 = xi0 = 0)")
    if q.dim_d != g.d:
        raise ValueError("state and Hamiltonian have different dimensions")
    if t == 0:
        return g
    h = hamilton_matrix(q)
    n = 8
    while True:
        # branch of det^{-1/2} by continuation: refine until each step turns < pi/2
        ts = np.linspace(0.0, t, n + 1)
        dets = np.array([_mobius_det(h.propagator_matrix(s), g.M) for s in ts])
        if np.min(np.abs(dets)) < CAUSTIC_TOL:
            raise CausticError(f"det(A + BM) vanishes along [0, {t:g}] (caustic)")
        turns = np.angle(dets[1:] / dets[:-1])
        if np.all(np.abs(turns) < np.pi / 2):
            break
        if n >= max_steps:
            raise CausticError("could not resolve the square-root branch")
        n *= 4
    phase = float(np.sum(turns))
    T = h.propagator_matrix(t)
    A, B, C, D = block(T)
    M_new = (C + D @ g.M) @ np.linalg.inv(A + B @ g.M)
    M_new = 0.5 * (M_new + M_new.T)
    c_new = g.c * abs(dets[-1]) ** -0.5 * np.exp(-0.5j * phase)
    if np.min(np.linalg.eigvalsh(0.5 * (M_new.imag + M_new.imag.T))) < -1e-9:
        raise ArithmeticError("propagated state lost Im M >= 0")
    return GaussianState(M_new, c_new)


# -- grid building blocks ----------------------------------------------------

def _frequencies(u: SampledSignal) -> list[np.ndarray]:
    k = 2 * np.pi * np.fft.fftfreq(u.N, u.h)
    return np.meshgrid(*([k] * u.d), indexing="ij")


def fourier_multiplier(u: SampledSignal, symbol) -> SampledSignal:
    """u -> IFFT(symbol(xi) FFT(u)), ``symbol`` called on the frequency mesh."""
    m = symbol(_frequencies(u))
    return u.with_values(np.fft.ifftn(np.fft.fftn(u.values) * m))


def heat_propagate(u: SampledSignal, t: float) -> SampledSignal:
    """e^{t Laplacian} = e^{-t q^w} for q = |xi|^2."""
    if t < 0:
        raise ValueError("heat_propagate: backward heat flow (t < 0) is not supported")
    if t == 0:
        return u
    return fourier_multiplier(u, lambda K: np.exp(-t * sum(k**2 for k in K)))


def schrodinger_free_propagate(u: SampledSignal, t: float) -> SampledSignal:
    """e^{-it|D|^2} = e^{-t q^w} for q = i|xi|^2."""
    if t == 0:
        return u
    return fourier_multiplier(u, lambda K: np.exp(-1j * t * sum(k**2 for k in K)))


def chirp_multiply(u: SampledSignal, A, mode: str = "chirp", t: float = 1.0) -> SampledSignal:
    """Multiply by e^{i<x, Ax>/2} (``mode="chirp"``) or e^{-t<x, Ax>} (``mode="damping"``)."""
    A = np.asarray(A, dtype=float)
    A = A * np.eye(u.d) if A.ndim == 0 else np.atleast_2d(A)
    if A.shape != (u.d, u.d) or np.max(np.abs(A - A.T)) > 1e-12:
        raise ValueError("A must be a real symmetric d x d matrix")
    X = u.mesh()
    quad = sum(A[i, j] * X[i] * X[j] for i in range(u.d) for j in range(u.d))
    if mode == "chirp":
        return u.with_values(u.values * np.exp(0.5j * quad))
    if mode == "damping":
        if t < 0:
            raise ValueError("damping needs t >= 0")
        if np.min(np.linalg.eigvalsh(A)) < -1e-12:
            raise ValueError("damping needs A positive semidefinite")
        return u.with_values(u.values * np.exp(-t * quad))
    raise ValueError(f"unknown chirp mode {mode!r}")


def _apply_axes(v: np.ndarray, fn) -> np.ndarray:
    """Apply a 1-D transform along every axis."""
    for ax in range(v.ndim):
        v = np.apply_along_axis(fn, ax, v)
    return v


def _scaled_dft(v: np.ndarray, N: int, L: float, sigma: float) -> np.ndarray:
    """out_m = h sum_n v_n e^{-i sigma x_m y_n} on the grid x_m, y_n = -L + nh."""
    h = 2 * L / N
    x = -L + h * np.arange(N)
    # czt: sum_n v_n a^{-n} w^{nm} with a = e^{i omega_0}, omega_0 = -sigma h L
    a = np.exp(-1j * sigma * h * L)
    w = np.exp(-1j * sigma * h * h)
    s = czt(v, m=N, w=w, a=a)
    return h * np.exp(1j * sigma * L * x) * s


def _fourier_1d(v: np.ndarray, N: int, L: float, sign: int = 1) -> np.ndarray:
    out = _scaled_dft(v, N, L, float(sign)) / np.sqrt(2 * np.pi)
    x = -L + (2 * L / N) * np.arange(N)
    out[np.abs(x) > np.pi * N / (2 * L)] = 0.0
    return out


def fourier(u: SampledSignal, inverse: bool = False) -> SampledSignal:
    """Unitary Fourier transform, output sampled on the input grid.

    Needs L <= pi/h so the grid covers the resolvable band; otherwise the
    output is not representable and :class:`ResolutionError` is raised.
    """
    if u.L > u.xi_max + 1e-12:
        raise ResolutionError(f"Fourier transform needs L <= pi/h (L={u.L:g}, pi/h={u.xi_max:g})")
    sign = -1 if inverse else 1
    return u.with_values(_apply_axes(u.values, lambda v: _fourier_1d(v, u.N, u.L, sign)))


def parity(u: SampledSignal) -> SampledSignal:
    """u(x) -> u(-x); node n maps to (N - n) mod N."""
    idx = (-np.arange(u.N)) % u.N
    v = u.values
    for ax in range(u.d):
        v = np.take(v, idx, axis=ax)
    return u.with_values(v)


def _frft_direct_1d(v: np.ndarray, N: int, L: float, theta: float) -> np.ndarray:
    s, c = np.sin(theta), np.cos(theta)
    h = 2 * L / N
    x = -L + h * np.arange(N)
    chirp = np.exp(0.5j * (c / s) * x**2)
    # (2 pi i sin theta)^{-1/2}, principal branch of the Mehler kernel
    pref = np.exp(-0.25j * np.pi * np.sign(s)) / np.sqrt(2 * np.pi * abs(s))
    return pref * chirp * _scaled_dft(chirp * v, N, L, 1.0 / s)


def _reduce_angle(theta: float) -> tuple[float, int]:
    """theta = th + 2 pi m with th in (-pi, pi]; returns (th, m)."""
    m = int(np.floor((theta + np.pi) / (2 * np.pi)))
    th = theta - 2 * np.pi * m
    if th <= -np.pi:
        th, m = th + 2 * np.pi, m - 1
    return float(th), m


def fractional_fourier(u: SampledSignal, theta: float) -> SampledSignal:
    """e^{-i theta (|x|^2 + |D|^2)/2}: the fractional Fourier transform of angle theta.

    The family is 4 pi periodic; each full turn contributes (-1)^d.
    """
    th, m = _reduce_angle(float(theta))
    sign = (-1.0) ** (m * u.d)
    if th == 0.0:
        return u if sign == 1 else u.with_values(sign * u.values)
    if abs(abs(th) - np.pi) <= PARITY_TOL:
        # e^{-i pi (k + 1/2)} = -i (-1)^k on h_k
        phase = (-1j * np.sign(th)) ** u.d
        return u.with_values(sign * phase * parity(u).values)
    if abs(np.sin(th)) >= 1 / np.sqrt(2):
        out = _apply_axes(u.values, lambda v: _frft_direct_1d(v, u.N, u.L, th))
        return u.with_values(sign * out)
    # near 0 or pi the chirps are too steep: split off a quarter turn
    rest = fractional_fourier(u, th - np.pi / 2)
    out = fractional_fourier(rest, np.pi / 2)
    return out.with_values(sign * out.values)


def harmonic_oscillator_propagate(u: SampledSignal, t: float) -> SampledSignal:
    """e^{-t q^w} for q = i(|x|^2 + |xi|^2), i.e. the fractional transform with theta = 2t."""
    return fractional_fourier(u, 2.0 * t)


def _resample_1d(v: np.ndarray, N: int, L: float, lam: float) -> np.ndarray:
    """Band-limited interpolant of v evaluated at x_m / lam (zero outside the box)."""
    h = 2 * L / N
    x = -L + h * np.arange(N)
    y = x / lam
    U = np.fft.fft(v)
    V = np.fft.fftshift(U)  # index p <-> frequency index p - N/2
    kappa = 2 * np.pi / (N * h)
    # sum_p V_p e^{i kappa (p - N/2)(y_m + L)}, y_m + L = (L - L/lam) + m h/lam
    omega0 = -kappa * (L - L / lam)
    domega = -kappa * h / lam
    s = czt(V, m=N, w=np.exp(-1j * domega), a=np.exp(1j * omega0))
    out = np.exp(-1j * kappa * (N / 2) * (y + L)) * s / N
    # split the Nyquist mode symmetrically so real signals stay real
    out += (V[0] / N) * 1j * np.sin(np.pi * (y + L) / h)
    out[np.abs(y) > L] = 0.0
    return out


def dilate(u: SampledSignal, lam) -> SampledSignal:
    """|det L|^{-1/2} u(L^{-1} x) for scalar (d = 1) or diagonal (d = 2) L."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if lam.ndim == 2:
        if np.max(np.abs(lam - np.diag(np.diag(lam)))) > 0:
            raise UnsupportedHamiltonian("only diagonal dilations are implemented")
        lam = np.diag(lam)
    if lam.size == 1:
        lam = np.full(u.d, lam[0])
    if lam.shape != (u.d,) or np.any(lam == 0):
        raise ValueError("dilation must be an invertible diagonal matrix")
    det = abs(float(np.prod(lam)))
    if not 1 / 8 <= det <= 8:
        raise ValueError(f"|det L| = {det:g} outside [1/8, 8]")
    v = u.values
    for ax in range(u.d):
        lam_i = lam[ax]
        if lam_i < 0:
            v = np.take(v, (-np.arange(u.N)) % u.N, axis=ax)
            lam_i = -lam_i
        if lam_i != 1:
            v = np.apply_along_axis(lambda w, s=lam_i: _resample_1d(w, u.N, u.L, s), ax, v)
    return u.with_values(v / np.sqrt(det))


# -- metaplectic generators --------------------------------------------------

@dataclass(frozen=True, eq=False)
class MetaplecticGenerator:
    """One of fourier, chirp(A), dilation(L), free_flow(t)."""

    kind: str
    param: object = None

    def chi(self, d: int) -> np.ndarray:
        I = np.eye(d)
        Z = np.zeros((d, d))
        if self.kind == "fourier":
            out = standard_symplectic_form(d)
        elif self.kind == "chirp":
            A = np.asarray(self.param, dtype=float)
            A = A * I if A.ndim == 0 else A
            out = np.block([[I, Z], [A, I]])
        elif self.kind == "dilation":
            Lm = np.asarray(self.param, dtype=float)
            Lm = Lm * I if Lm.ndim == 0 else (np.diag(Lm) if Lm.ndim == 1 else Lm)
            out = np.block([[Lm, Z], [Z, np.linalg.inv(Lm).T]])
        elif self.kind == "free_flow":
            out = np.block([[I, 2 * float(self.param) * I], [Z, I]])
        else:
            raise ValueError(f"unknown metaplectic generator {self.kind!r}")
        if not is_symplectic(out, 1e-10):
            raise ValueError(f"generator {self.kind} is not symplectic")
        return out

    def apply(self, u: SampledSignal) -> SampledSignal:
        if self.kind == "fourier":
            return fourier(u)
        if self.kind == "chirp":
            return chirp_multiply(u, self.param, "chirp")
        if self.kind == "dilation":
            return dilate(u, self.param)
        if self.kind == "free_flow":
            return schrodinger_free_propagate(u, float(self.param))
        raise ValueError(f"unknown metaplectic generator {self.kind!r}")


def composite_chi(gens, d: int) -> np.ndarray:
    """chi_n ... chi_2 chi_1 for generators applied in list order."""
    out = np.eye(2 * d)
    for g in gens:
        out = g.chi(d) @ out
    return out


def metaplectic_apply(u: SampledSignal, gens) -> SampledSignal:
    for g in gens:
        g.chi(u.d)
        u = g.apply(u)
    return u


# -- dispatcher --------------------------------------------------------------

def classify(q: QuadraticHamiltonian, tol: float = 1e-12) -> str:
    """Which grid propagator realizes e^{-tq^w}: identity, fourier_multiplier,
    multiplication or fractional_fourier."""
    Q = q.Q
    d = q.dim_d
    if np.max(np.abs(Q)) <= tol:
        return "identity"
    xx, xxi = Q[:d, :d], Q[:d, d:]
    xixi = Q[d:, d:]
    if np.max(np.abs(xxi)) <= tol:
        if np.max(np.abs(xx)) <= tol:
            return "fourier_multiplier"
        if np.max(np.abs(xixi)) <= tol and np.max(np.abs(xx.imag)) <= tol:
            return "multiplication"
        w = Q[0, 0]
        if abs(w.real) <= tol and np.max(np.abs(Q - w * np.eye(2 * d))) <= tol:
            return "fractional_fourier"
    raise UnsupportedHamiltonian(
        "no grid propagator for this q: supported are q(xi) only, real <x, Ax>, and i w(|x|^2 + |xi|^2)"
    )


def propagate(u: SampledSignal, q: QuadraticHamiltonian, t: float) -> tuple[SampledSignal, str]:
    """Apply e^{-tq^w} on the grid; returns (signal, path)."""
    if q.dim_d != u.d:
        raise ValueError("signal and Hamiltonian have different dimensions")
    path = classify(q)
    if t < 0 and not q.real_part_vanishes:
        raise ValueError("t must be non-negative when Re Q != 0")
    if t == 0 or path == "identity":
        return u, path
    d = u.d
    if path == "fourier_multiplier":
        B = q.Q[d:, d:]
        sym = lambda K: np.exp(-t * sum(B[i, j] * K[i] * K[j] for i in range(d) for j in range(d)))
        return fourier_multiplier(u, sym), path
    if path == "multiplication":
        A = q.Q[:d, :d].real
        return chirp_multiply(u, A, "damping", t), path
    w = q.Q[0, 0].imag
    return fractional_fourier(u, 2.0 * w * t), path
