"""Density-matrix evolution under a superoperator and positivity auditing.

Density matrices are vectorised by stacking columns, so ``rho[i, j]`` sits
at index ``i + d*j`` and ``vec(A X B) = (B.T kron A) vec(X)``.

Superoperator text table::

    d=2
    <d*d comma-separated complex entries, e.g. -0.5+0i>   (one line per row, d*d rows)

Blank lines and ``#`` comments are ignored.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .integrate import integrate_samples
from .kinetics import RateGenerator

TRACE_TOLERANCE = 1e-10
HERMITICITY_TOLERANCE = 1e-6
DEFAULT_NEGATIVITY_TOLERANCE = 1e-9
DIVERGENCE_BOUND = 1e3


class SuperoperatorFormatError(ValueError):
    pass


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, d: int) -> np.ndarray:
    return np.asarray(v).reshape(d, d, order="F")


@dataclass(frozen=True, eq=False)
class Superoperator:
    matrix: np.ndarray
    d: int

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (self.d**2, self.d**2):
            raise ValueError(f"superoperator of shape {m.shape} does not act on {self.d}x{self.d} matrices")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def trace_defect(self) -> float:
        """Largest entry of ``vec(I)^T L``; zero for trace-preserving ``L``."""
        return float(np.abs(vec(np.eye(self.d)) @ self.matrix).max())

    @property
    def trace_preserving(self) -> bool:
        scale = max(1.0, np.abs(self.matrix).max())
        return self.trace_defect() <= TRACE_TOLERANCE * scale


def lindblad_superoperator(H: Optional[np.ndarray], jump_ops: Sequence[np.ndarray] = (), d: Optional[int] = None) -> Superoperator:
    """``L rho = -i[H, rho] + sum_k (A rho A^+ - {A^+ A, rho}/2)``."""
    if H is None:
        if d is None:
            d = np.asarray(jump_ops[0]).shape[0]
        H = np.zeros((d, d))
    H = np.asarray(H, dtype=complex)
    d = H.shape[0]
    eye = np.eye(d)
    L = -1j * (np.kron(eye, H) - np.kron(H.T, eye))
    for A in jump_ops:
        A = np.asarray(A, dtype=complex)
        AdA = A.conj().T @ A
        L += np.kron(A.conj(), A) - 0.5 * (np.kron(eye, AdA) + np.kron(AdA.T, eye))
    return Superoperator(L, d)


def pauli_superoperator(gen: RateGenerator, dephasing: float = 0.0) -> Superoperator:
    """Embed a rate generator as a Lindbladian with one jump per transition.

    Populations follow the Pauli equation exactly; each coherence only
    decays, at half the sum of its two levels' exit rates plus
    ``dephasing``.
    """
    m = gen.matrix
    d = len(m)
    jumps = []
    for src in range(d):
        for dst in range(d):
            if dst != src and m[dst, src] > 0:
                A = np.zeros((d, d))
                A[dst, src] = np.sqrt(m[dst, src])
                jumps.append(A)
    if dephasing > 0:
        for i in range(d):
            P = np.zeros((d, d))
            P[i, i] = np.sqrt(dephasing)
            jumps.append(P)
    return lindblad_superoperator(np.zeros((d, d)), jumps)


def nonsecular_toy_superoperator(gamma: float = 1.0, kappa: float = 2.0, omega: float = 0.0) -> Superoperator:
    """Two-level decay with population-to-coherence driving of strength ``kappa``.

    Basis ``(g, e)``. Populations decay as for spontaneous emission while
    the excited population feeds the coherence::

        d rho_ee/dt = -gamma rho_ee
        d rho_eg/dt = -(i omega + gamma/2) rho_eg + kappa rho_ee

    The map preserves trace and Hermiticity but is not positive: from
    ``|e>`` with ``omega = 0`` the determinant of ``rho`` turns negative
    once ``exp(-gamma t / 2) < (r - 1)/(r + 1)``, ``r = (2 kappa/gamma)**2``,
    which requires ``kappa > gamma/2``.
    """
    d = 2
    L = np.zeros((4, 4), dtype=complex)
    gg, eg, ge, ee = 0, 1, 2, 3  # column-stacked positions of rho[i, j]
    L[ee, ee] = -gamma
    L[gg, ee] = gamma
    L[eg, eg] = -(1j * omega + gamma / 2)
    L[ge, ge] = -(-1j * omega + gamma / 2)
    L[eg, ee] = kappa
    L[ge, ee] = kappa
    return Superoperator(L, d)


def toy_first_negative_time(gamma: float, kappa: float) -> Optional[float]:
    """Closed-form time at which the toy map from ``|e>`` loses positivity."""
    r = (2 * kappa / gamma) ** 2
    if r <= 1:
        return None
    return -2.0 / gamma * np.log((r - 1) / (r + 1))


def _parse_complex(token: str) -> complex:
    t = token.strip().replace(" ", "")
    if not t:
        raise ValueError("empty entry")
    try:
        return complex(t.replace("i", "j"))
    except ValueError:
        raise ValueError(f"cannot parse complex entry {token!r}") from None


def load_superoperator(text: str) -> Superoperator:
    """Parse a superoperator table; warns if the result is not trace-preserving."""
    lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append((lineno, line))
    if not lines:
        raise SuperoperatorFormatError("empty superoperator table")
    lineno, header = lines[0]
    m = re.fullmatch(r"d\s*=\s*(\d+)", header)
    if not m:
        raise SuperoperatorFormatError(f"line {lineno}: expected header 'd=<int>', got {header!r}")
    d = int(m.group(1))
    if d < 1:
        raise SuperoperatorFormatError(f"line {lineno}: dimension must be >= 1")
    n = d * d
    rows = []
    for lineno, line in lines[1:]:
        try:
            rows.append([_parse_complex(tok) for tok in line.split(",")])
        except ValueError as exc:
            raise SuperoperatorFormatError(f"line {lineno}: {exc}") from None
    count = sum(len(r) for r in rows)
    if len(rows) != n or any(len(r) != n for r in rows):
        raise SuperoperatorFormatError(
            f"dimension mismatch: d={d} needs {n} rows of {n} entries ({n * n} total), got {len(rows)} rows with {count} entries"
        )
    L = Superoperator(np.array(rows, dtype=complex), d)
    if not L.trace_preserving:
        warnings.warn(f"superoperator is not trace-preserving (defect {L.trace_defect():.3e})", stacklevel=2)
    return L


def dump_superoperator(L: Superoperator) -> str:
    def fmt(z: complex) -> str:
        return f"{z.real:.17g}{z.imag:+.17g}i"

    lines = [f"d={L.d}"]
    lines += [", ".join(fmt(z) for z in row) for row in L.matrix]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True, eq=False)
class DensityTrajectory:
    times: np.ndarray
    rhos: np.ndarray  # (n_samples, d, d), Hermitised
    hermiticity_drift: np.ndarray  # max |rho - rho^+| before Hermitisation

    @property
    def drift_flagged(self) -> bool:
        return bool(self.hermiticity_drift.max() > HERMITICITY_TOLERANCE)

    @property
    def traces(self) -> np.ndarray:
        return np.einsum("nii->n", self.rhos).real


def evolve_density_matrix(
    L: Superoperator,
    rho0: np.ndarray,
    t_end: float,
    dt_out: Optional[float] = None,
    atol: float = 1e-12,
    rtol: float = 1e-10,
) -> DensityTrajectory:
    """Integrate ``vec(rho)' = L vec(rho)`` and sample every ``dt_out``."""
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (L.d, L.d):
        raise ValueError("rho0 does not match the superoperator dimension")
    if np.abs(rho0 - rho0.conj().T).max() > 1e-12:
        raise ValueError("rho0 must be Hermitian")
    if abs(np.trace(rho0) - 1) > 1e-10:
        raise ValueError("rho0 must have unit trace")
    if not t_end > 0:
        raise ValueError("t_end must be > 0")
    if dt_out is None:
        dt_out = t_end / 100
    times = np.linspace(0.0, t_end, max(int(round(t_end / dt_out)), 1) + 1)
    m = L.matrix
    vs = integrate_samples(lambda t, v: m @ v, vec(rho0), times, atol=atol, rtol=rtol)
    raw = np.stack([unvec(v, L.d) for v in vs])
    adjoint = np.conj(np.transpose(raw, (0, 2, 1)))
    drift = np.abs(raw - adjoint).reshape(len(times), -1).max(axis=1)
    if drift.max() > HERMITICITY_TOLERANCE:
        warnings.warn(f"non-Hermitian drift {drift.max():.3e} exceeds {HERMITICITY_TOLERANCE:g}", stacklevel=2)
    return DensityTrajectory(times, 0.5 * (raw + adjoint), drift)


@dataclass(frozen=True, eq=False)
class PositivityReport:
    times: np.ndarray
    min_eigenvalues: np.ndarray
    first_negative_time: Optional[float]
    steady_min_eigenvalue: float
    diverged: bool
    tolerance: float

    @property
    def negative(self) -> bool:
        return self.first_negative_time is not None


def audit_positivity(
    trajectory: DensityTrajectory,
    tolerance: float = DEFAULT_NEGATIVITY_TOLERANCE,
    divergence_bound: float = DIVERGENCE_BOUND,
) -> PositivityReport:
    """Smallest eigenvalue of every sample and the first crossing below ``-tolerance``.

    The last sample stands in for the steady state.
    """
    if len(trajectory.times) == 0:
        raise ValueError("empty trajectory")
    rhos = trajectory.rhos
    herm = 0.5 * (rhos + np.conj(np.transpose(rhos, (0, 2, 1))))
    min_ev = np.linalg.eigvalsh(herm)[:, 0]
    bad = np.flatnonzero(min_ev < -tolerance)
    first = float(trajectory.times[bad[0]]) if len(bad) else None
    diverged = bool(np.abs(rhos).max() > divergence_bound)
    return PositivityReport(trajectory.times, min_ev, first, float(min_ev[-1]), diverged, tolerance)
