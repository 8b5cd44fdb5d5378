"""Two-level channels and the classical stochastic maps they embed.

The building blocks live on a single two-dimensional subspace (a pair of
neighbouring lattice sites, in the automaton's use): a parametrised unitary,
a dephasing channel that scales coherences by ``1 - xi``, and an amplitude
damping channel that pushes population toward one of the two basis states.
``classical_to_channel`` converts a 2x2 column-stochastic matrix into channel
parameters such that, on diagonal states, the composite channel reproduces
the stochastic map exactly for every dephasing strength.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


class DegenerateEmbeddingWarning(UserWarning):
    """Fully biased map (|q - p| = 1): the mixing angle is immaterial."""


def _check_prob(name: str, value) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {value!r}")
    return value


def _clamp_unit(name: str, value: float, tol: float = 1e-9) -> float:
    # Derived probabilities may overshoot [0, 1] by rounding noise.
    if -tol <= value < 0.0:
        return 0.0
    if 1.0 < value <= 1.0 + tol:
        return 1.0
    if 0.0 <= value <= 1.0:
        return float(value)
    raise ValueError(f"{name} must be in [0, 1], got {value!r}")


@dataclass(frozen=True)
class StochasticMatrix2:
    """Column-stochastic transition matrix [[1-p, q], [p, 1-q]].

    ``p`` is the hop probability from the first slot to the second, ``q``
    the reverse.  The map is doubly stochastic exactly when ``p == q``.
    """

    p: float
    q: float

    def __post_init__(self):
        object.__setattr__(self, "p", _check_prob("p", self.p))
        object.__setattr__(self, "q", _check_prob("q", self.q))

    def matrix(self) -> np.ndarray:
        return np.array([[1.0 - self.p, self.q], [self.p, 1.0 - self.q]])

    @property
    def doubly_stochastic(self) -> bool:
        return self.p == self.q


@dataclass(frozen=True)
class UnitaryParams:
    """Mixing angle and phases of a generic 2x2 unitary.

    ``theta`` must lie in [0, pi]; phases are stored reduced to [0, 2*pi).
    """

    theta: float
    phi1: float = 0.0
    phi2: float = 0.0

    def __post_init__(self):
        theta = float(self.theta)
        if not (math.isfinite(theta) and 0.0 <= theta <= math.pi):
            raise ValueError(f"theta must be in [0, pi], got {theta!r}")
        for name in ("phi1", "phi2"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value % TWO_PI)
        object.__setattr__(self, "theta", theta)

    @property
    def phi_sum(self) -> float:
        return (self.phi1 + self.phi2) % TWO_PI


@dataclass(frozen=True)
class ChannelParams:
    """Parameters of the composite pair channel: unitary, dephasing, damping.

    ``eta`` in [-1, 1] is the signed damping strength (negative values damp
    toward the second basis state), ``xi`` in [0, 1] the dephasing strength.
    """

    eta: float
    xi: float
    unitary: UnitaryParams

    def __post_init__(self):
        eta = float(self.eta)
        if not (math.isfinite(eta) and -1.0 <= eta <= 1.0):
            raise ValueError(f"eta must be in [-1, 1], got {eta!r}")
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "xi", _check_prob("xi", self.xi))


@dataclass(frozen=True)
class DiagState2:
    """Diagonal qubit state ``diag(m, 1-m)``; ``m`` is the excitation probability."""

    m: float

    def __post_init__(self):
        object.__setattr__(self, "m", _clamp_unit("m", float(self.m)))

    def rho(self) -> np.ndarray:
        return np.diag([complex(self.m), complex(1.0 - self.m)])

    def vector(self) -> np.ndarray:
        return np.array([self.m, 1.0 - self.m])


def build_unitary(u: UnitaryParams) -> np.ndarray:
    """Dense 2x2 unitary for the given mixing angle and phases.

    Layout: ``[[cos t, sin t e^{i phi2}], [-sin t e^{i phi1}, cos t e^{i (phi1+phi2)}]]``.
    """
    c = math.cos(u.theta)
    s = math.sin(u.theta)
    e1 = complex(math.cos(u.phi1), math.sin(u.phi1))
    e2 = complex(math.cos(u.phi2), math.sin(u.phi2))
    return np.array([[c, s * e2], [-s * e1, c * e1 * e2]], dtype=complex)


def dephasing_kraus(xi: float) -> list[np.ndarray]:
    """Kraus set of the dephasing channel with strength ``xi``."""
    _check_prob("xi", xi)
    k0 = math.sqrt(1.0 - xi) * np.eye(2, dtype=complex)
    k1 = math.sqrt(xi) * np.diag([1.0 + 0j, 0.0])
    k2 = math.sqrt(xi) * np.diag([0.0, -1.0 + 0j])
    return [k0, k1, k2]


def amp_damp_kraus(eta: float) -> list[np.ndarray]:
    """Kraus pair of the (possibly swapped) amplitude damping channel."""
    if not -1.0 <= float(eta) <= 1.0:
        raise ValueError(f"eta must be in [-1, 1], got {eta!r}")
    s = abs(eta)
    r = math.sqrt(1.0 - s)
    if eta >= 0:
        l0 = np.diag([1.0 + 0j, r])
        l1 = np.array([[0.0, math.sqrt(s)], [0.0, 0.0]], dtype=complex)
    else:
        l0 = np.diag([r + 0j, 1.0])
        l1 = np.array([[0.0, 0.0], [math.sqrt(s), 0.0]], dtype=complex)
    return [l0, l1]


def apply_kraus(kraus: list[np.ndarray], rho: np.ndarray) -> np.ndarray:
    """Sum over ``K rho K^dag``; reference implementation for tests."""
    out = np.zeros_like(np.asarray(rho, dtype=complex))
    for k in kraus:
        out += k @ rho @ k.conj().T
    return out


def dephase_2d(rho: np.ndarray, xi: float) -> np.ndarray:
    """Dephase a 2x2 state: off-diagonals scaled by ``1 - xi``, diagonal kept."""
    _check_prob("xi", xi)
    out = np.array(rho, dtype=complex)
    keep = 1.0 - xi
    out[0, 1] *= keep
    out[1, 0] *= keep
    return out


def amp_damp_2d(rho: np.ndarray, eta: float) -> np.ndarray:
    """Amplitude-damp a 2x2 state.

    For ``eta >= 0`` population flows from the second basis state into the
    first with strength ``eta`` and the coherence is scaled by
    ``sqrt(1 - eta)``; for ``eta < 0`` the roles of the basis states swap.
    """
    eta = float(eta)
    if not -1.0 <= eta <= 1.0:
        raise ValueError(f"eta must be in [-1, 1], got {eta!r}")
    s = abs(eta)
    r = math.sqrt(1.0 - s)
    x, y = (0, 1) if eta >= 0 else (1, 0)
    out = np.array(rho, dtype=complex)
    moved = s * out[y, y]
    out[x, y] *= r
    out[y, x] *= r
    out[y, y] *= 1.0 - s
    out[x, x] += moved
    return out


def classical_to_channel(
    t: StochasticMatrix2,
    xi: float,
    phi1: float = 0.0,
    phi2: float = 0.0,
) -> ChannelParams:
    """Channel parameters whose diagonal action reproduces ``t``.

    The damping strength is ``q - p`` and the mixing angle solves
    ``cos(2 theta) = (1 - p - q) / (1 - |q - p|)``.  The dephasing strength
    and the phases are not determined by ``(p, q)``: the caller picks ``xi``
    (1 gives the fully classical map, 0 the most coherent one) and the
    phases.  At ``|q - p| = 1`` the angle equation degenerates; the damping
    then maps every input to the same output, so ``theta = pi/4`` is set by
    convention and a :class:`DegenerateEmbeddingWarning` is emitted.
    """
    eta = t.q - t.p
    bias = abs(eta)
    if bias == 1.0:
        warnings.warn(
            "fully biased transition matrix (|q - p| = 1): mixing angle is "
            "immaterial, using theta = pi/4",
            DegenerateEmbeddingWarning,
            stacklevel=2,
        )
        theta = 0.25 * math.pi
    else:
        cos2t = (1.0 - t.p - t.q) / (1.0 - bias)
        cos2t = min(1.0, max(-1.0, cos2t))
        theta = 0.5 * math.acos(cos2t)
    return ChannelParams(eta=eta, xi=xi, unitary=UnitaryParams(theta, phi1, phi2))


def channel_to_stochastic(params: ChannelParams) -> StochasticMatrix2:
    """Invert :func:`classical_to_channel`: hop probabilities of the channel."""
    c = math.cos(2.0 * params.unitary.theta)
    hop_sum = 1.0 - c * (1.0 - abs(params.eta))
    p = _clamp_unit("p", 0.5 * (hop_sum - params.eta))
    q = _clamp_unit("q", 0.5 * (hop_sum + params.eta))
    return StochasticMatrix2(p=p, q=q)


def stochastic_apply(t: StochasticMatrix2, v: DiagState2) -> DiagState2:
    """Apply the stochastic matrix to a dichotomic distribution."""
    return DiagState2((1.0 - t.p - t.q) * v.m + t.q)


def embedded_apply(t: StochasticMatrix2, m: float, xi: float = 1.0) -> DiagState2:
    """Act on ``diag(m, 1-m)`` with the embedded channel and read the diagonal.

    Route: unitary conjugation, dephasing, damping, with parameters from
    :func:`classical_to_channel`.  The resulting excitation probability
    equals :func:`stochastic_apply` for every ``xi``.
    """
    params = classical_to_channel(t, xi=xi)
    u = build_unitary(params.unitary)
    rho = DiagState2(m).rho()
    rho = u @ rho @ u.conj().T
    rho = dephase_2d(rho, params.xi)
    rho = amp_damp_2d(rho, params.eta)
    return DiagState2(rho[0, 0].real)
