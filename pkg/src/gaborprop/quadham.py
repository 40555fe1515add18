"""Quadratic Hamiltonians q(X) = <X, QX> on T*R^d and their propagation cones.

The predicted sets implement the inclusions for WF_r(e^{-tq^w}u) in terms of
WF_s(u):

* ``exact``   (Re Q = 0):        e^{-2itF} WF_s(u), r = s
* ``equal``   ([Re F, Im F] = 0): (e^{2t Im F}(WF_s(u) ∩ Ker Re F)) ∩ Ker Re F, r = s
* ``minus4d``:                    e^{-2itF}(WF_s(u) ∩ Ker Im e^{-2itF}), r < s - 4d
* ``minus8d``:                    (e^{2t Im F}(WF_s(u) ∩ S)) ∩ S, r < s - 8d

where S is the singular space of q.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cones import DirectionSet
from .symplectic import (
    DEFAULT_RANK_TOL,
    Subspace,
    as_phase_matrix,
    kernel,
    matrix_exponential,
    standard_symplectic_form,
)

RULES = ("exact", "equal", "minus4d", "minus8d")
DEFAULT_EPSILON = 0.5
NORMAL_TOL = 1e-10


class RuleError(ValueError):
    """Requested propagation rule does not apply to the Hamiltonian."""


@dataclass(frozen=True, eq=False)
class QuadraticHamiltonian:
    """Complex symmetric Q with Re Q positive semidefinite."""

    Q: np.ndarray

    def __post_init__(self):
        Q = as_phase_matrix(self.Q)
        if np.max(np.abs(Q - Q.T)) > 1e-12:
            raise ValueError("Q must be symmetric (Q = Q^t)")
        min_eig = np.min(np.linalg.eigvalsh(0.5 * (Q.real + Q.real.T)))
        if min_eig < -1e-10:
            raise ValueError(f"Re Q must be positive semidefinite (min eigenvalue {min_eig:.3e})")
        Q = Q.copy()
        Q.setflags(write=False)
        object.__setattr__(self, "Q", Q)

    @property
    def dim_d(self) -> int:
        return self.Q.shape[0] // 2

    @property
    def real_part_vanishes(self) -> bool:
        return bool(np.max(np.abs(self.Q.real)) <= 1e-12)

    def __call__(self, X) -> complex:
        X = np.asarray(X)
        return complex(X @ self.Q @ X)

    def to_dict(self) -> dict:
        return {"d": self.dim_d, "Q_re": self.Q.real.tolist(), "Q_im": self.Q.imag.tolist()}

    @classmethod
    def from_dict(cls, obj: dict) -> "QuadraticHamiltonian":
        try:
            d = int(obj["d"])
            Q = np.asarray(obj["Q_re"], dtype=float) + 1j * np.asarray(obj.get("Q_im", 0.0), dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed Hamiltonian object: {exc}") from exc
        if Q.shape != (2 * d, 2 * d):
            raise ValueError(f"Q has shape {Q.shape}, expected {(2 * d, 2 * d)} for d={d}")
        return cls(Q)


def load_hamiltonian(path) -> QuadraticHamiltonian:
    return QuadraticHamiltonian.from_dict(json.loads(Path(path).read_text()))


# -- presets -----------------------------------------------------------------

def heat(d: int = 1) -> QuadraticHamiltonian:
    """q = |xi|^2."""
    Q = np.zeros((2 * d, 2 * d), dtype=complex)
    Q[d:, d:] = np.eye(d)
    return QuadraticHamiltonian(Q)


def free_schrodinger(d: int = 1) -> QuadraticHamiltonian:
    """q = i|xi|^2."""
    Q = np.zeros((2 * d, 2 * d), dtype=complex)
    Q[d:, d:] = 1j * np.eye(d)
    return QuadraticHamiltonian(Q)


def harmonic(d: int = 1) -> QuadraticHamiltonian:
    """q = i(|x|^2 + |xi|^2)."""
    return QuadraticHamiltonian(1j * np.eye(2 * d))


def damping(A) -> QuadraticHamiltonian:
    """q = <x, A x> with real symmetric A >= 0."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    d = A.shape[0]
    Q = np.zeros((2 * d, 2 * d), dtype=complex)
    Q[:d, :d] = A
    return QuadraticHamiltonian(Q)


# -- Hamilton map ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class HamiltonData:
    q: QuadraticHamiltonian
    F: np.ndarray
    reF: np.ndarray
    imF: np.ndarray
    normal: bool

    @property
    def dim_d(self) -> int:
        return self.q.dim_d

    def propagator_matrix(self, t: float) -> np.ndarray:
        """T = e^{-2itF}."""
        return matrix_exponential(-2j * t * self.F)


def hamilton_matrix(q: QuadraticHamiltonian) -> HamiltonData:
    F = standard_symplectic_form(q.dim_d) @ q.Q
    reF, imF = F.real.copy(), F.imag.copy()
    comm = reF @ imF - imF @ reF
    return HamiltonData(q=q, F=F, reF=reF, imF=imF, normal=bool(np.max(np.abs(comm)) <= NORMAL_TOL))


def ker_re_f(h: HamiltonData, tol: float = DEFAULT_RANK_TOL) -> Subspace:
    return kernel(h.reF, tol)


def singular_space(h: HamiltonData, tol: float = DEFAULT_RANK_TOL) -> Subspace:
    """S = ∩_{j<2d} Ker(Re F (Im F)^j), from one SVD of the stacked blocks."""
    n = 2 * h.dim_d
    blocks = []
    P = np.eye(n)
    for _ in range(n):
        blocks.append(h.reF @ P)
        P = P @ h.imF
    return kernel(np.vstack(blocks), tol)


def available_rules(h: HamiltonData) -> list[str]:
    rules = []
    if h.q.real_part_vanishes:
        rules.append("exact")
    if h.normal:
        rules.append("equal")
    rules += ["minus4d", "minus8d"]
    return rules


def default_rule(h: HamiltonData) -> str:
    return available_rules(h)[0]


def check_rule(h: HamiltonData, rule: str) -> None:
    if rule not in RULES:
        raise RuleError(f"unknown rule {rule!r}; expected one of {RULES}")
    if rule == "exact" and not h.q.real_part_vanishes:
        raise RuleError("rule 'exact' requires Re Q = 0")
    if rule == "equal" and not h.normal:
        raise RuleError("rule 'equal' requires a normal Hamiltonian ([Re F, Im F] = 0)")


@dataclass(frozen=True)
class OrderBudget:
    """Input order s, guaranteed output order r, kernel order m."""

    s_in: float
    r_out: float
    rule: str
    d: int = 1
    m_kernel: float = 0.0

    def __post_init__(self):
        if self.rule not in RULES:
            raise RuleError(f"unknown rule {self.rule!r}")
        loss = {"exact": None, "equal": None, "minus4d": 4 * self.d, "minus8d": 8 * self.d}[self.rule]
        if loss is None:
            if self.r_out != self.s_in:
                raise ValueError(f"rule {self.rule!r} needs r_out == s_in")
        elif not self.r_out < self.s_in - self.m_kernel - loss:
            raise ValueError(f"rule {self.rule!r} needs r_out < s_in - {loss}")


def order_budget(h: HamiltonData, rule: str, s_in: float, epsilon: float = DEFAULT_EPSILON) -> OrderBudget:
    """Tightest output order the inclusions guarantee (m = 0 for these propagators)."""
    check_rule(h, rule)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    d = h.dim_d
    r = {
        "exact": s_in,
        "equal": s_in,
        "minus4d": s_in - 4 * d - epsilon,
        "minus8d": s_in - 8 * d - epsilon,
    }[rule]
    return OrderBudget(s_in=float(s_in), r_out=float(r), rule=rule, d=d)


def predicted_set(
    h: HamiltonData,
    t: float,
    input_dirs: DirectionSet,
    budget: OrderBudget,
    tol_angle: float | None = None,
    rank_tol: float = DEFAULT_RANK_TOL,
) -> DirectionSet:
    """Cone that must contain WF_r(e^{-tq^w}u) given WF_s(u) ≈ ``input_dirs``.

    The formulas are applied for every t >= 0; the inclusions themselves are
    statements about t > 0, and at t = 0 only the exact rule reduces to the
    identity.
    """
    if t < 0:
        raise ValueError("predicted_set: t must be non-negative")
    check_rule(h, budget.rule)
    if input_dirs.ambient != 2 * h.dim_d:
        raise ValueError("direction set and Hamiltonian have different dimensions")
    if len(input_dirs) == 0:
        return input_dirs
    tol_angle = input_dirs.angular_resolution if tol_angle is None else tol_angle
    rule = budget.rule
    if rule == "exact":
        T = h.propagator_matrix(t)
        return input_dirs.apply(T.real)
    if rule == "minus4d":
        T = h.propagator_matrix(t)
        K = kernel(T.imag, rank_tol)
        return input_dirs.restrict_to(K, tol_angle).apply(T.real)
    S = ker_re_f(h, rank_tol) if rule == "equal" else singular_space(h, rank_tol)
    flow = matrix_exponential(2 * t * h.imF)
    return input_dirs.restrict_to(S, tol_angle).apply(flow).restrict_to(S, tol_angle)


def describe(h: HamiltonData, tol: float = DEFAULT_RANK_TOL) -> dict:
    """Summary used by the ``singular-space`` command."""
    S = singular_space(h, tol)
    K = ker_re_f(h, tol)
    return {
        "d": h.dim_d,
        "normal": h.normal,
        "re_q_zero": h.q.real_part_vanishes,
        "singular_space": {"dim": S.dim, "basis": S.basis.T.tolist()},
        "ker_re_f": {"dim": K.dim, "basis": K.basis.T.tolist()},
        "rules": available_rules(h),
        "default_rule": default_rule(h),
    }


# -- seeded random Hamiltonians ----------------------------------------------

def random_real_symplectic(d: int, rng: np.random.Generator, scale: float = 0.5) -> np.ndarray:
    """exp(J S) with S a random real symmetric matrix."""
    S = rng.normal(scale=scale, size=(2 * d, 2 * d))
    return matrix_exponential(standard_symplectic_form(d) @ (0.5 * (S + S.T))).real


def random_hamiltonian(d: int, rng: np.random.Generator) -> QuadraticHamiltonian:
    """Generic Q: Re Q = B B^t of random rank, Im Q random symmetric, unit spectral norm."""
    n = 2 * d
    B = rng.normal(size=(n, int(rng.integers(0, n + 1))))
    C = rng.normal(size=(n, n))
    Q = B @ B.T + 1j * 0.5 * (C + C.T)
    return QuadraticHamiltonian(Q / np.linalg.norm(Q, 2))


def random_normal_hamiltonian(d: int, rng: np.random.Generator) -> QuadraticHamiltonian:
    """Q = chi^t Q0 chi with Q0 a sum of commuting one-dimensional pieces.

    Each coordinate pair carries one of (a + ib)(x^2 + xi^2), (a + ic) x^2,
    (a + ic) xi^2 or nothing, with a >= 0 drawn to vanish half of the time;
    conjugating by a real symplectic chi keeps [Re F, Im F] = 0.
    """
    Q0 = np.zeros((2 * d, 2 * d), dtype=complex)
    for j in range(d):
        a = 0.0 if rng.random() < 0.5 else rng.uniform(0.2, 2.0)
        b = rng.normal()
        kind = int(rng.integers(0, 4))
        if kind == 0:
            Q0[j, j] = Q0[d + j, d + j] = a + 1j * b
        elif kind == 1:
            Q0[j, j] = a + 1j * b
        elif kind == 2:
            Q0[d + j, d + j] = a + 1j * b
    chi = random_real_symplectic(d, rng)
    Q = chi.T @ Q0 @ chi
    return QuadraticHamiltonian(0.5 * (Q + Q.T))
