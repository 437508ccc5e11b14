"""The discrimination problem: two hypotheses sharing noise and controls."""

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .core import (
    RHO_PLUS,
    CollapseOperator,
    control_generator_term,
    lindblad_generator,
    pauli_expectations,
    to_pauli_basis,
)
from .discrimination import PLUS_MINUS_POVM, SYMMETRIC, Povm, Priors
from .validation import check_density_matrix, check_hermitian

MEASUREMENTS = ("helstrom", "fixed_local")


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid of ``n_slices`` piecewise-constant slices on ``[0, T]``."""

    T: float
    n_slices: int

    def __post_init__(self):
        if not (np.isfinite(self.T) and self.T > 0):
            raise ValueError(f"total time T must be positive, got {self.T}")
        if int(self.n_slices) != self.n_slices or self.n_slices < 1:
            raise ValueError(f"n_slices must be a positive integer, got {self.n_slices}")
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "n_slices", int(self.n_slices))

    @classmethod
    def from_step(cls, T, dt=0.05):
        """Grid with slice width as close to ``dt`` as divides ``T``."""
        return cls(T, max(1, int(round(T / dt))))

    @property
    def dt(self):
        return self.T / self.n_slices

    @property
    def times(self):
        """Slice boundaries ``0, dt, ..., T`` (length N + 1)."""
        return np.linspace(0.0, self.T, self.n_slices + 1)


@dataclass(frozen=True, eq=False)
class DiscriminationProblem:
    """Two Lindblad dynamics sharing noise, controls and the initial state.

    Hypothesis ``j`` evolves under ``H_j + sum_k u_k(t) Hc_k`` plus the
    dissipator.  A nonzero ``detuning`` rescales the alternative Hamiltonian
    to ``(1 + detuning) H_1``.
    """

    hamiltonians: tuple
    collapses: tuple
    control_hamiltonians: tuple
    grid: TimeGrid
    rho_init: np.ndarray = field(default_factory=lambda: RHO_PLUS.copy())
    control_labels: tuple = ("x", "y")
    detuning: float = 0.0
    measurement: str = "helstrom"
    povm: Povm = PLUS_MINUS_POVM
    priors: Priors = SYMMETRIC
    kind: str = "custom"
    gamma: float = float("nan")

    def __post_init__(self):
        if len(self.hamiltonians) != 2:
            raise ValueError("a binary test needs exactly two hypothesis Hamiltonians")
        hs = tuple(check_hermitian(H, f"H_{j}") for j, H in enumerate(self.hamiltonians))
        hcs = tuple(check_hermitian(H, f"Hc_{k}") for k, H in enumerate(self.control_hamiltonians))
        if len(self.control_labels) != len(hcs):
            raise ValueError("one label per control Hamiltonian is required")
        if self.measurement not in MEASUREMENTS:
            raise ValueError(f"measurement must be one of {MEASUREMENTS}, got {self.measurement!r}")
        if not np.isfinite(self.detuning):
            raise ValueError("detuning must be finite")
        for c in self.collapses:
            if not isinstance(c, CollapseOperator):
                raise TypeError("collapses must be CollapseOperator instances")
        object.__setattr__(self, "hamiltonians", hs)
        object.__setattr__(self, "control_hamiltonians", hcs)
        object.__setattr__(self, "collapses", tuple(self.collapses))
        object.__setattr__(self, "rho_init", check_density_matrix(self.rho_init, "rho_init"))

    @property
    def n_controls(self):
        return len(self.control_hamiltonians)

    @property
    def n_slices(self):
        return self.grid.n_slices

    @property
    def control_shape(self):
        return (self.n_controls, self.grid.n_slices)

    def hamiltonian(self, j, detuning=None):
        """Drift Hamiltonian of hypothesis ``j``; detuning scales ``H_1`` only."""
        dw = self.detuning if detuning is None else detuning
        H = self.hamiltonians[j]
        return (1.0 + dw) * H if j == 1 else H

    def generator(self, j, detuning=None):
        """Column-stacked drift generator (no control) of hypothesis ``j``."""
        return lindblad_generator(self.hamiltonian(j, detuning), self.collapses)

    def control_generators(self):
        return np.stack([control_generator_term(H) for H in self.control_hamiltonians]) \
            if self.control_hamiltonians else np.zeros((0, 4, 4), dtype=complex)

    def with_detuning(self, detuning):
        return replace(self, detuning=float(detuning))

    def with_grid(self, grid):
        return replace(self, grid=grid)

    def zero_controls(self):
        return np.zeros(self.control_shape)

    # Real Pauli-basis forms used by the propagation engine.

    @cached_property
    def _controls_pauli(self):
        return to_pauli_basis(self.control_generators())

    @cached_property
    def _r_init(self):
        return pauli_expectations(self.rho_init)

    def _drift_pauli(self, j, detuning=None):
        key = (j, self.detuning if detuning is None else float(detuning))
        cache = self.__dict__.setdefault("_drift_cache", {})
        if key not in cache:
            cache[key] = to_pauli_basis(self.generator(j, detuning))
        return cache[key]
