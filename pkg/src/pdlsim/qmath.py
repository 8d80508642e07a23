"""Two-qubit polarization state kernel.

Jones convention: |H> = (1, 0), |V> = (0, 1), so sigma_3 = diag(1, -1) and
Stokes components are ordered (s1, s2, s3) against (sigma_1, sigma_2, sigma_3).
Density matrices are plain complex ndarrays; validators return a symmetrized
canonical copy rather than wrapping arrays in a class.
"""

from enum import Enum

import numpy as np

SIGMA0 = np.eye(2, dtype=complex)
SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (SIGMA1, SIGMA2, SIGMA3)
for _m in (SIGMA0, SIGMA1, SIGMA2, SIGMA3):
    _m.setflags(write=False)

# np.kron is the tensor-product workhorse; re-exported so callers stay in one namespace.
kron = np.kron

_YY = np.kron(SIGMA2, SIGMA2)
_YY.setflags(write=False)


class BellKind(Enum):
    """The four Bell states, keyed by their correlation signature (t1, t2, t3)."""

    PHI_PLUS = (1.0, -1.0, 1.0)
    PHI_MINUS = (-1.0, 1.0, 1.0)
    PSI_PLUS = (1.0, 1.0, -1.0)
    PSI_MINUS = (-1.0, -1.0, -1.0)

    @property
    def correlation(self) -> np.ndarray:
        return np.array(self.value)


_BELL_VECTORS = {
    BellKind.PHI_PLUS: np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2),
    BellKind.PHI_MINUS: np.array([1, 0, 0, -1], dtype=complex) / np.sqrt(2),
    BellKind.PSI_PLUS: np.array([0, 1, 1, 0], dtype=complex) / np.sqrt(2),
    BellKind.PSI_MINUS: np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2),
}
for _v in _BELL_VECTORS.values():
    _v.setflags(write=False)


def bell_vector(kind: BellKind) -> np.ndarray:
    """State vector of the given Bell state in the HH, HV, VH, VV basis."""
    return _BELL_VECTORS[kind].copy()


def bell_state(kind: BellKind) -> np.ndarray:
    """Density matrix of the given Bell state."""
    v = _BELL_VECTORS[kind]
    return np.outer(v, v.conj())


def symmetrize(m: np.ndarray) -> np.ndarray:
    """Hermitian part (m + m^dag)/2, the canonical form used before validation."""
    return (m + m.conj().T) / 2


def check_state(m: np.ndarray, dim: int = 4, tol: float = 1e-9) -> np.ndarray:
    """Validate a density matrix and return its symmetrized canonical copy.

    Requires finite entries, unit trace within tol, and eigenvalues >= -tol.
    """
    m = np.asarray(m, dtype=complex)
    if m.shape != (dim, dim):
        raise ValueError(f"expected a {dim}x{dim} matrix, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("density matrix has non-finite entries")
    m = symmetrize(m)
    tr = np.trace(m).real
    if abs(tr - 1.0) > tol:
        raise ValueError(f"trace {tr} is not 1 within {tol}")
    lo = np.linalg.eigvalsh(m).min()
    if lo < -tol:
        raise ValueError(f"negative eigenvalue {lo} beyond tolerance")
    return m


def bell_weights(t) -> np.ndarray:
    """Bell-basis weights of the diagonal state with correlation triple t.

    Ordered (phi+, phi-, psi+, psi-): weights are (1 +- t1 -+ t2 +- t3)/4.
    """
    t1, t2, t3 = (float(x) for x in t)
    return np.array(
        [
            (1 + t1 - t2 + t3) / 4,
            (1 - t1 + t2 + t3) / 4,
            (1 + t1 + t2 - t3) / 4,
            (1 - t1 - t2 - t3) / 4,
        ]
    )


def bell_diagonal(t, tol: float = 1e-9) -> np.ndarray:
    """Bell-diagonal density matrix (1/4)(I + sum_j t_j sigma_j x sigma_j).

    The triple t must give nonnegative Bell weights within tol.
    """
    w = bell_weights(t)
    if w.min() < -tol:
        raise ValueError(f"unphysical correlation triple {tuple(t)}: weight {w.min()}")
    rho = np.eye(4, dtype=complex)
    for tj, s in zip(t, PAULI):
        rho = rho + float(tj) * np.kron(s, s)
    return rho / 4


def correlation_of(rho: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Diagonal correlation triple t_j = Tr[rho (sigma_j x sigma_j)]."""
    t = np.empty(3)
    for j, s in enumerate(PAULI):
        val = np.trace(rho @ np.kron(s, s))
        if abs(val.imag) > tol:
            raise ValueError(f"correlation t{j + 1} has imaginary part {val.imag}")
        t[j] = val.real
    return t


def eigvals_desc(m: np.ndarray, imag_tol: float = 1e-9, clamp: float = 1e-12) -> np.ndarray:
    """Real eigenvalues of m in descending order.

    Raises if the spectrum is not real within imag_tol. Magnitudes below
    `clamp` are zeroed so downstream square roots stay exact on rank-deficient
    products.
    """
    lam = np.linalg.eigvals(np.asarray(m, dtype=complex))
    if np.abs(lam.imag).max() > imag_tol:
        raise ValueError(f"spectrum is not real: max imag {np.abs(lam.imag).max()}")
    lam = np.sort(lam.real)[::-1]
    lam[np.abs(lam) < clamp] = 0.0
    return lam


def concurrence(rho: np.ndarray) -> float:
    """Wootters concurrence of a two-qubit density matrix.

    C = max(0, sqrt(l1) - sqrt(l2) - sqrt(l3) - sqrt(l4)) with l_i the
    descending eigenvalues of rho (sy x sy) rho* (sy x sy).
    """
    m = rho @ _YY @ rho.conj() @ _YY
    lam = eigvals_desc(m)
    lam = np.clip(lam, 0.0, None)
    s = np.sqrt(lam)
    return float(max(0.0, s[0] - s[1] - s[2] - s[3]))


def purity(rho: np.ndarray) -> float:
    """Tr(rho^2), in [1/d, 1]."""
    return float(np.trace(rho @ rho).real)


def linear_entropy(q: np.ndarray) -> float:
    """Normalized linear entropy 2(1 - Tr q^2) of a single-qubit state."""
    q = np.asarray(q, dtype=complex)
    if q.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got {q.shape}")
    return float(2.0 * (1.0 - np.trace(q @ q).real))


def reduced_qubit(rho: np.ndarray, which: str) -> np.ndarray:
    """Partial trace onto qubit "A" (first factor) or "B" (second factor)."""
    r = np.asarray(rho, dtype=complex).reshape(2, 2, 2, 2)
    if which == "A":
        return np.trace(r, axis1=1, axis2=3)
    if which == "B":
        return np.trace(r, axis1=0, axis2=2)
    raise ValueError(f"which must be 'A' or 'B', got {which!r}")


def fidelity_to_pure(rho: np.ndarray, psi: np.ndarray, tol: float = 1e-9) -> float:
    """<psi|rho|psi> for a normalized pure target state psi."""
    psi = np.asarray(psi, dtype=complex)
    nrm = np.linalg.norm(psi)
    if abs(nrm - 1.0) > tol:
        raise ValueError(f"psi is not normalized: |psi| = {nrm}")
    return float((psi.conj() @ rho @ psi).real)


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """(1/2) * trace norm of a - b."""
    lam = np.linalg.eigvalsh(symmetrize(np.asarray(a) - np.asarray(b)))
    return float(0.5 * np.abs(lam).sum())
