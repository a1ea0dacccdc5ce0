"""Pauli rate equations for the uncoupled and exciton-coupled photocell cycles.

Generators act on column vectors of populations: ``M[dst, src]`` is the
rate from ``src`` to ``dst`` and each column sums to zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .integrate import IntegrationError, integrate_samples
from .physics import ModelParams, OccupationSet, build_occupations

UNCOUPLED_LEVELS = ("b", "a1", "a2", "alpha", "beta")
COUPLED_LEVELS = ("b", "x1", "x2", "alpha", "beta")

#: Populations below this are treated as a correctness failure, not noise.
NEGATIVITY_FLOOR = -1e-12


class DisconnectedKineticsError(ValueError):
    """The generator has more than one stationary distribution."""


class NegativePopulationError(IntegrationError):
    """A population dropped below ``NEGATIVITY_FLOOR`` during evolution."""


@dataclass(frozen=True, eq=False)
class RateGenerator:
    matrix: np.ndarray
    levels: tuple[str, ...]

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        n = len(self.levels)
        if m.shape != (n, n):
            raise ValueError(f"generator shape {m.shape} does not match {n} levels")
        off = m - np.diag(np.diag(m))
        if np.any(off < 0):
            raise ValueError("off-diagonal rates must be >= 0")
        scale = max(np.abs(m).max(), 1e-300)
        if np.abs(m.sum(axis=0)).max() > 1e-12 * scale:
            raise ValueError("generator columns must sum to zero")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def index(self, label: str) -> int:
        return self.levels.index(label)

    def rate(self, src: str, dst: str) -> float:
        return float(self.matrix[self.index(dst), self.index(src)])

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return self.matrix @ rho


@dataclass(frozen=True, eq=False)
class PopulationState:
    rho: np.ndarray
    levels: tuple[str, ...]
    t: float = 0.0

    def __getitem__(self, label: str) -> float:
        return float(self.rho[self.levels.index(label)])

    def as_dict(self) -> dict[str, float]:
        return {lab: float(v) for lab, v in zip(self.levels, self.rho)}


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    populations: np.ndarray  # (n_samples, n_levels)
    levels: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.times)

    def __iter__(self) -> Iterator[PopulationState]:
        for t, rho in zip(self.times, self.populations):
            yield PopulationState(rho, self.levels, float(t))

    @property
    def final(self) -> PopulationState:
        return PopulationState(self.populations[-1], self.levels, float(self.times[-1]))

    def column(self, label: str) -> np.ndarray:
        return self.populations[:, self.levels.index(label)]


class _Builder:
    def __init__(self, levels):
        self.levels = levels
        self.m = np.zeros((len(levels), len(levels)))

    def flow(self, src, dst, rate):
        i, j = self.levels.index(src), self.levels.index(dst)
        self.m[j, i] += rate
        self.m[i, i] -= rate

    def thermal_pair(self, upper, lower, gamma, n):
        # downhill with stimulated emission, uphill with absorption
        self.flow(upper, lower, gamma * (1.0 + n))
        self.flow(lower, upper, gamma * n)

    def generator(self):
        return RateGenerator(self.m, self.levels)


def _closing_steps(b: _Builder, params: ModelParams, occ: OccupationSet):
    b.flow("alpha", "beta", params.Gamma)
    b.thermal_pair("beta", "b", params.Gamma_c, occ.N_c)


def build_generator_uncoupled(params: ModelParams, occ: Optional[OccupationSet] = None) -> RateGenerator:
    """Generator of the two independent donors cycle on ``UNCOUPLED_LEVELS``."""
    if occ is None:
        occ = build_occupations(params, coupled=False)
    b = _Builder(UNCOUPLED_LEVELS)
    b.thermal_pair("a1", "b", params.gamma_1h, occ.n_1h)
    b.thermal_pair("a1", "alpha", params.gamma_1c, occ.n_1c)
    b.thermal_pair("a2", "b", params.gamma_2h, occ.n_2h)
    b.thermal_pair("a2", "alpha", params.gamma_2c, occ.n_2c)
    _closing_steps(b, params, occ)
    return b.generator()


def build_generator_coupled(params: ModelParams, occ: Optional[OccupationSet] = None) -> RateGenerator:
    """Generator of the bright/dark exciton cycle on ``COUPLED_LEVELS``.

    Light couples only to the bright state x1 and charge transfer leaves
    only from the dark state x2, using the interference-summed rates.
    """
    if occ is None:
        occ = build_occupations(params, coupled=True)
    b = _Builder(COUPLED_LEVELS)
    b.thermal_pair("x1", "b", params.gamma_h, occ.n_h)
    b.thermal_pair("x1", "x2", params.gamma_x, occ.n_x)
    b.thermal_pair("x2", "alpha", params.gamma_c, occ.n_2c)
    _closing_steps(b, params, occ)
    return b.generator()


def build_generator(params: ModelParams, coupled: bool, occ: Optional[OccupationSet] = None) -> RateGenerator:
    if coupled:
        return build_generator_coupled(params, occ)
    return build_generator_uncoupled(params, occ)


def ground_state(levels: tuple[str, ...]) -> PopulationState:
    rho = np.zeros(len(levels))
    rho[levels.index("b") if "b" in levels else 0] = 1.0
    return PopulationState(rho, levels, 0.0)


def _reachability(transfer: np.ndarray) -> np.ndarray:
    """reach[i, j] is True when state j can be reached from state i."""
    n = len(transfer)
    reach = (transfer > 0) | np.eye(n, dtype=bool)
    for k in range(n):
        reach |= reach[:, [k]] & reach[[k], :]
    return reach


def _gth(q: np.ndarray) -> np.ndarray:
    """Grassmann-Taksar-Heyman elimination on row-convention rates ``q``.

    State 0 must be reachable from every state. No subtractions occur, so
    every stationary probability carries full relative precision, even
    populations of order 1e-30.
    """
    p = np.array(q, dtype=float)
    np.fill_diagonal(p, 0.0)
    n = len(p)
    for k in range(n - 1, 0, -1):
        s = p[k, :k].sum()
        if not s > 0:
            raise DisconnectedKineticsError(f"disconnected kinetics: state {k} cannot reach the reference state")
        p[:k, k] /= s
        p[:k, :k] += np.outer(p[:k, k], p[k, :k])
    pi = np.zeros(n)
    pi[0] = 1.0
    for j in range(1, n):
        pi[j] = pi[:j] @ p[:j, j]
    return pi / pi.sum()


def steady_state(gen: RateGenerator, method: str = "gth") -> PopulationState:
    """Stationary populations of ``gen``, normalised to one.

    ``method="gth"`` (default) eliminates states without subtraction,
    rooted at a state every other state can reach. ``method="solve"``
    replaces one row of ``M rho = 0`` by the normalisation condition and
    calls a dense LU solve; it is kept as a cross-check and loses relative
    accuracy on exponentially small populations.
    """
    m = gen.matrix
    n = len(m)
    transfer = m.T.copy()  # transfer[src, dst]
    np.fill_diagonal(transfer, 0.0)
    reach = _reachability(transfer)
    roots = np.flatnonzero(reach.all(axis=0))
    if len(roots) == 0:
        raise DisconnectedKineticsError(
            "disconnected kinetics: the generator has more than one closed class of states"
        )
    if method == "gth":
        root = int(roots[0])
        order = [root] + [i for i in range(n) if i != root]
        pi_ordered = _gth(transfer[np.ix_(order, order)])
        rho = np.empty(n)
        rho[order] = pi_ordered
    elif method == "solve":
        a = m.copy()
        a[0, :] = 1.0
        rhs = np.zeros(n)
        rhs[0] = 1.0
        rho = np.linalg.solve(a, rhs)
    else:
        raise ValueError(f"unknown steady-state method {method!r}")
    if rho.min() < NEGATIVITY_FLOOR:
        raise ArithmeticError(f"steady state has negative population {rho.min():.3e}")
    return PopulationState(rho, gen.levels, float("inf"))


def relaxation_time(gen: RateGenerator) -> float:
    """Inverse of the slowest nonzero relaxation rate of ``gen``."""
    ev = np.linalg.eigvals(gen.matrix).real
    rates = -ev[ev < -1e-14 * max(np.abs(ev).max(), 1e-300)]
    if len(rates) == 0:
        return float("inf")
    return 1.0 / rates.min()


def evolve(
    gen: RateGenerator,
    rho0: Optional[PopulationState | np.ndarray] = None,
    t_end: float = 1.0,
    dt_out: Optional[float] = None,
    atol: float = 1e-12,
    rtol: float = 1e-10,
) -> Trajectory:
    """Integrate ``d rho/dt = M rho`` from ``rho0`` (default: all in ``b``).

    Samples every ``dt_out`` up to ``t_end``. Raises
    ``NegativePopulationError`` if any sampled population falls below
    ``NEGATIVITY_FLOOR``; the error carries the last good state.
    """
    if not t_end > 0:
        raise ValueError("t_end must be > 0")
    if rho0 is None:
        rho0 = ground_state(gen.levels)
    y0 = np.asarray(rho0.rho if isinstance(rho0, PopulationState) else rho0, dtype=float)
    if y0.shape != (len(gen.levels),):
        raise ValueError("initial populations do not match the generator's levels")
    if y0.min() < 0 or abs(y0.sum() - 1.0) > 1e-10:
        raise ValueError("initial populations must be nonnegative and sum to 1")
    if dt_out is None:
        dt_out = t_end / 100
    n_out = int(round(t_end / dt_out))
    times = np.linspace(0.0, t_end, max(n_out, 1) + 1)

    m = gen.matrix
    last = [0.0, y0]

    def guard(t, y):
        if y.min() < NEGATIVITY_FLOOR:
            raise NegativePopulationError(
                f"population {gen.levels[int(np.argmin(y))]} reached {y.min():.3e}", last[0], last[1]
            )
        last[0], last[1] = t, y.copy()

    pops = integrate_samples(lambda t, y: m @ y, y0, times, atol=atol, rtol=rtol, callback=guard)
    return Trajectory(times, pops, gen.levels)
