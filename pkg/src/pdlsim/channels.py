"""Fiber channel elements: polarization-dependent loss and first-order PMD dephasing.

A PDL element of magnitude gamma (nepers) along unit Stokes axis n acts on Jones
space as P = e^{-gamma/2} (cosh(gamma/2) I + sinh(gamma/2) n.sigma), a positive
filter with singular values {1, e^{-gamma}} and det e^{-gamma}. First-order PMD
at the pair bandwidth acts as a phase flip channel of weight q about its axis.
"""

from dataclasses import dataclass, field

import numpy as np

from .qmath import PAULI, SIGMA0, check_state

DB_PER_NEPER = 20.0 * np.log10(np.e)  # 8.685889638... dB of PDL per neper

CANONICAL_AXIS = np.array([0.0, 0.0, 1.0])
CANONICAL_AXIS.setflags(write=False)


class ExtinctionError(ValueError):
    """Raised when a channel extinguishes the state (post-selection rate ~ 0)."""


def gamma_from_db(db: float) -> float:
    """PDL magnitude in nepers from the usual dB figure 10*log10(Tmax/Tmin)."""
    if db < 0:
        raise ValueError(f"PDL in dB must be >= 0, got {db}")
    return db / DB_PER_NEPER


def db_from_gamma(gamma: float) -> float:
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    return gamma * DB_PER_NEPER


def unit_axis(axis, tol: float = 1e-9) -> np.ndarray:
    """Validate a Stokes axis (unit norm within tol) and return it renormalized."""
    a = np.asarray(axis, dtype=float)
    if a.shape != (3,):
        raise ValueError(f"axis must have 3 components, got shape {a.shape}")
    nrm = np.linalg.norm(a)
    if abs(nrm - 1.0) > tol:
        raise ValueError(f"axis is not unit length: |a| = {nrm}")
    a = a / nrm
    a.setflags(write=False)
    return a


def axis_from_polar(theta: float, phi: float = 0.0) -> np.ndarray:
    """Unit Stokes axis at polar angle theta from s3, azimuth phi from s1."""
    return np.array(
        [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)]
    )


@dataclass(frozen=True, eq=False)
class PdlElement:
    """One PDL element: magnitude gamma (nepers) along a unit Stokes axis."""

    gamma: float
    axis: np.ndarray = field(default_factory=lambda: CANONICAL_AXIS.copy())

    def __post_init__(self):
        if not np.isfinite(self.gamma) or self.gamma < 0:
            raise ValueError(f"gamma must be finite and >= 0, got {self.gamma}")
        object.__setattr__(self, "axis", unit_axis(self.axis))

    @property
    def gamma_db(self) -> float:
        return db_from_gamma(self.gamma)


@dataclass(frozen=True, eq=False)
class PmdElement:
    """First-order PMD dephasing: phase-flip weight q about a unit Stokes axis.

    tau_ps records the differential group delay the weight was derived from;
    it is bookkeeping only and does not enter the channel action.
    """

    q: float
    axis: np.ndarray = field(default_factory=lambda: CANONICAL_AXIS.copy())
    tau_ps: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.q <= 0.5:
            raise ValueError(f"dephasing weight q must be in [0, 0.5], got {self.q}")
        object.__setattr__(self, "axis", unit_axis(self.axis))


@dataclass(frozen=True, eq=False)
class ChannelOutcome:
    """Normalized post-channel state and the post-selection rate that produced it."""

    rho: np.ndarray
    rate: float


def pdl_operator(element: PdlElement) -> np.ndarray:
    """Jones-space filter of a PDL element; Hermitian PSD, singular values {1, e^-gamma}."""
    g = element.gamma
    n_sigma = sum(a * s for a, s in zip(element.axis, PAULI))
    return np.exp(-g / 2) * (np.cosh(g / 2) * SIGMA0 + np.sinh(g / 2) * n_sigma)


def apply_local(rho: np.ndarray, m_a: np.ndarray, m_b: np.ndarray) -> ChannelOutcome:
    """Apply local filters (m_a on qubit A, m_b on qubit B) and renormalize.

    Both filters must be trace-nonincreasing (singular values <= 1). Raises
    ExtinctionError when the post-selection rate falls below 1e-12.
    """
    for name, m in (("m_a", m_a), ("m_b", m_b)):
        sv = np.linalg.svd(np.asarray(m, dtype=complex), compute_uv=False)
        if sv.max() > 1 + 1e-9:
            raise ValueError(f"{name} is not trace-nonincreasing: max singular value {sv.max()}")
    big = np.kron(m_a, m_b)
    filtered = big @ rho @ big.conj().T
    rate = float(np.trace(filtered).real)
    if rate < 1e-12:
        raise ExtinctionError(f"channel extinguishes the state: rate {rate}")
    return ChannelOutcome(rho=check_state(filtered / rate), rate=rate)


def pmd_dephase(rho: np.ndarray, element: PmdElement, qubit: str = "A") -> np.ndarray:
    """Phase-flip channel (1-q) rho + q (n.sigma) rho (n.sigma) on one qubit."""
    n_sigma = sum(a * s for a, s in zip(element.axis, PAULI))
    if qubit == "A":
        u = np.kron(n_sigma, SIGMA0)
    elif qubit == "B":
        u = np.kron(SIGMA0, n_sigma)
    else:
        raise ValueError(f"qubit must be 'A' or 'B', got {qubit!r}")
    return check_state((1 - element.q) * rho + element.q * (u @ rho @ u))


def dephasing_from_dgd(tau_ps: float, sigma_omega: float) -> float:
    """Dephasing weight for DGD tau (ps) at Gaussian spectral width sigma_omega (rad/s).

    q = (1 - exp(-sigma_omega^2 tau^2 / 2)) / 2, the first-order PMD average
    over the pair spectrum; q -> 1/2 as the delay exceeds the coherence time.
    """
    if tau_ps < 0 or sigma_omega < 0:
        raise ValueError("tau_ps and sigma_omega must be >= 0")
    x = sigma_omega * tau_ps * 1e-12
    return float((1.0 - np.exp(-(x**2) / 2)) / 2)


def _stokes(v: np.ndarray) -> np.ndarray:
    return np.array([(v.conj() @ s @ v).real for s in PAULI])


def concat_pdl(first: PdlElement, second: PdlElement) -> PdlElement:
    """Aggregate PDL element equivalent to `first` followed by `second`.

    The product M = P2 P1 factors as (unitary) x (PDL of magnitude
    gamma_tot = ln(s_max/s_min)); the aggregate axis is the input-referred
    direction of maximum transmission, the Stokes image of the right singular
    vector for the larger singular value. Magnitudes satisfy
    cosh(gamma_tot) = cosh g1 cosh g2 + (a1.a2) sinh g1 sinh g2.
    """
    m = pdl_operator(second) @ pdl_operator(first)
    _, sv, vh = np.linalg.svd(m)
    gamma_tot = float(np.log(sv[0] / sv[1]))
    if gamma_tot < 1e-12:
        return PdlElement(0.0)
    return PdlElement(gamma_tot, _stokes(vh[0].conj()))


def angle_from_aggregate(g1: float, g2: float, gamma_tot: float, tol: float = 1e-9) -> float:
    """Angle between two PDL axes recovered from the aggregate magnitude.

    Inverts the concatenation law; raises when either magnitude is zero (the
    angle is undefined) or gamma_tot lies outside [|g1-g2|, g1+g2] beyond tol.
    """
    if g1 <= 0 or g2 <= 0:
        raise ValueError("angle is undefined when either magnitude is zero")
    cos_theta = (np.cosh(gamma_tot) - np.cosh(g1) * np.cosh(g2)) / (
        np.sinh(g1) * np.sinh(g2)
    )
    if not -1 - tol <= cos_theta <= 1 + tol:
        raise ValueError(
            f"aggregate {gamma_tot} outside reachable range for ({g1}, {g2}):"
            f" cos theta = {cos_theta}"
        )
    return float(np.arccos(np.clip(cos_theta, -1.0, 1.0)))
