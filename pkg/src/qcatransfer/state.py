"""Single-excitation-sector states and pair-local block updates.

A state is a dense N x N complex Hermitian matrix over the basis states
``|n>`` (site ``n`` excited, everything else in the ground state), indexed
1..N in the public API.  The three pair operations act on the two-dimensional
subspace of a neighbouring pair and extend to the rest of the sector the way
a physical two-qubit dilation acting as identity elsewhere does: dephasing
multiplies every coherence between a pair site and the outside by
``sqrt(1 - xi)`` (and the in-pair coherence by ``1 - xi``), damping scales
every coherence involving the drained site by ``sqrt(1 - |eta|)`` while
moving ``|eta|`` of its population across the pair.

Each operation mutates the state in place and returns it.  The vectorised
``*_on_pairs`` helpers apply one operation to many disjoint pairs at once and
are what the automaton's passes are built from; on a single pair they reduce
to the plain block rules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import UnitaryParams, build_unitary

HERMITICITY_TOL = 1e-12
PSD_TOL = 1e-10


@dataclass(frozen=True)
class PairIndex:
    """Adjacent pair of sites (1-based); ``(N, 1)`` closes a ring."""

    a: int
    b: int

    def __post_init__(self):
        if self.a < 1 or self.b < 1:
            raise ValueError(f"site indices must be >= 1, got ({self.a}, {self.b})")
        if self.a == self.b:
            raise ValueError(f"pair sites must differ, got ({self.a}, {self.b})")


class SectorState:
    """Dense density matrix restricted to the single-excitation sector.

    The trace may drop below one after conditioning on failed absorption;
    it then equals the survival probability of the run.
    """

    __slots__ = ("rho", "n_sites")

    def __init__(self, rho: np.ndarray, *, copy: bool = True):
        rho = np.array(rho, dtype=complex, copy=copy)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError(f"state matrix must be square, got shape {rho.shape}")
        self.rho = rho
        self.n_sites = rho.shape[0]

    def copy(self) -> "SectorState":
        return SectorState(self.rho)

    def trace(self) -> float:
        return float(np.trace(self.rho).real)

    def populations(self) -> np.ndarray:
        return self.rho.diagonal().real.copy()

    def population(self, site: int) -> float:
        self._check_site(site)
        return float(self.rho[site - 1, site - 1].real)

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.rho - self.rho.conj().T)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.rho + self.rho.conj().T))[0])

    def check(self, *, psd: bool = False) -> None:
        """Validate Hermiticity and trace bounds; eigenvalues only on request."""
        defect = self.hermiticity_defect()
        if defect > HERMITICITY_TOL:
            raise ValueError(f"state is not Hermitian (defect {defect:.3e})")
        tr = self.trace()
        if not -HERMITICITY_TOL <= tr <= 1.0 + HERMITICITY_TOL:
            raise ValueError(f"state trace {tr!r} outside [0, 1]")
        if psd:
            lo = self.min_eigenvalue()
            if lo < -PSD_TOL:
                raise ValueError(f"state is not PSD (min eigenvalue {lo:.3e})")

    def dump_csv(self, path) -> None:
        """Debug dump: one row per basis index, entries as ``re,im`` pairs."""
        lines = []
        for row in self.rho:
            parts = []
            for value in row:
                parts.append(repr(float(value.real)))
                parts.append(repr(float(value.imag)))
            lines.append(",".join(parts))
        with open(path, "w", encoding="ascii") as fh:
            fh.write("\n".join(lines) + "\n")

    def _check_site(self, site: int) -> None:
        if not 1 <= site <= self.n_sites:
            raise IndexError(f"site {site} out of range 1..{self.n_sites}")

    def _pair_arrays(self, pair: PairIndex) -> tuple[np.ndarray, np.ndarray]:
        self._check_site(pair.a)
        self._check_site(pair.b)
        return (
            np.array([pair.a - 1], dtype=np.intp),
            np.array([pair.b - 1], dtype=np.intp),
        )


def basis_state(n_sites: int, site: int) -> SectorState:
    """Pure state with the excitation localised on ``site``."""
    if n_sites < 1:
        raise ValueError(f"n_sites must be >= 1, got {n_sites}")
    if not 1 <= site <= n_sites:
        raise IndexError(f"site {site} out of range 1..{n_sites}")
    rho = np.zeros((n_sites, n_sites), dtype=complex)
    rho[site - 1, site - 1] = 1.0
    return SectorState(rho, copy=False)


def unitary_on_pairs(rho: np.ndarray, a: np.ndarray, b: np.ndarray, u2: np.ndarray) -> None:
    """Conjugate disjoint 2x2 blocks (rows/cols ``a[i], b[i]``) by ``u2``."""
    u00, u01 = u2[0, 0], u2[0, 1]
    u10, u11 = u2[1, 0], u2[1, 1]
    ra = rho[a, :]
    rb = rho[b, :]
    rho[a, :] = u00 * ra + u01 * rb
    rho[b, :] = u10 * ra + u11 * rb
    ca = rho[:, a]
    cb = rho[:, b]
    rho[:, a] = np.conj(u00) * ca + np.conj(u01) * cb
    rho[:, b] = np.conj(u10) * ca + np.conj(u11) * cb


def dephase_on_pairs(rho: np.ndarray, paired: np.ndarray, xi: float) -> None:
    """Scale coherences of the paired sites by ``sqrt(1 - xi)`` per site.

    Elements between two paired sites pick up the factor twice; populations
    and coherences among unpaired sites are untouched.
    """
    if xi == 0.0 or paired.size == 0:
        return
    f = math.sqrt(1.0 - xi)
    diag = rho[paired, paired]
    rho[paired, :] *= f
    rho[:, paired] *= f
    rho[paired, paired] = diag


def damp_on_pairs(rho: np.ndarray, a: np.ndarray, b: np.ndarray, eta: float) -> None:
    """Move ``|eta|`` of the drained site's population across each pair.

    ``eta >= 0`` drains ``b`` into ``a``; ``eta < 0`` drains ``a`` into
    ``b``.  All coherences involving a drained site are scaled by
    ``sqrt(1 - |eta|)``.
    """
    if eta == 0.0 or a.size == 0:
        return
    s = abs(eta)
    r = math.sqrt(1.0 - s)
    x, y = (a, b) if eta >= 0 else (b, a)
    yy = rho[y, y]
    rho[y, :] *= r
    rho[:, y] *= r
    rho[y, y] = (1.0 - s) * yy
    rho[x, x] = rho[x, x] + s * yy


def pair_unitary(state: SectorState, pair: PairIndex, u: UnitaryParams) -> SectorState:
    """Conjugate the pair block by the 2x2 unitary built from ``u``."""
    a, b = state._pair_arrays(pair)
    unitary_on_pairs(state.rho, a, b, build_unitary(u))
    return state


def pair_dephase(state: SectorState, pair: PairIndex, xi: float) -> SectorState:
    """Dephase the pair subspace with strength ``xi`` in [0, 1]."""
    if not 0.0 <= float(xi) <= 1.0:
        raise ValueError(f"xi must be in [0, 1], got {xi!r}")
    a, b = state._pair_arrays(pair)
    dephase_on_pairs(state.rho, np.concatenate([a, b]), float(xi))
    return state


def pair_damp(state: SectorState, pair: PairIndex, eta: float) -> SectorState:
    """Amplitude-damp the pair with signed strength ``eta`` in [-1, 1]."""
    if not -1.0 <= float(eta) <= 1.0:
        raise ValueError(f"eta must be in [-1, 1], got {eta!r}")
    a, b = state._pair_arrays(pair)
    damp_on_pairs(state.rho, a, b, float(eta))
    return state
