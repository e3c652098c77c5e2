"""Fisher information, CRLB and HARQ-weighted MSE / throughput models.

Parameters are ordered ``(h, phi, tau, nu)`` with ``h = |alpha|`` and
``phi = arg(alpha)``.  For a measurement ``z = h e^{j phi} e^{-j2pi k df tau}
e^{j2pi l Ts nu} + w`` over a set of resource elements the Fisher matrix
depends on the set only through six index sums (``ReSums``).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import SingularFisherError
from .grid import ReSet
from .harq_link import McsEntry

PARAMS = ("h", "phi", "tau", "nu")
SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class ReSums:
    N: int
    S_k: int
    S_l: int
    S_kk: int
    S_ll: int
    S_kl: int


def re_sums(re_set: ReSet) -> ReSums:
    k, l = re_set.indices()
    if k.size == 0:
        raise ValueError("resource-element set is empty")
    k = k.astype(np.int64)
    l = l.astype(np.int64)
    return ReSums(int(k.size), int(k.sum()), int(l.sum()), int((k * k).sum()),
                  int((l * l).sum()), int((k * l).sum()))


def full_grid_sums(K: int, L: int) -> ReSums:
    """Closed-form index sums of the complete ``K x L`` grid."""
    sk = K * (K - 1) // 2
    sl = L * (L - 1) // 2
    skk = (K - 1) * K * (2 * K - 1) // 6
    sll = (L - 1) * L * (2 * L - 1) // 6
    return ReSums(K * L, L * sk, K * sl, L * skk, K * sll, sk * sl)


@dataclass(frozen=True, eq=False)
class FisherMatrix:
    entries: np.ndarray
    scenario: str | None = None


def fisher_matrix(h: float, sigma2: float, sums: ReSums, subcarrier_spacing: float,
                  symbol_duration: float, scenario: str | None = None) -> FisherMatrix:
    if not h > 0:
        raise ValueError("path amplitude h must be positive")
    if not sigma2 > 0:
        raise ValueError("noise variance must be positive")
    df, ts = subcarrier_spacing, symbol_duration
    tp = 2.0 * np.pi
    h2 = h * h
    F = np.array([
        [sums.N, 0.0, 0.0, 0.0],
        [0.0, h2 * sums.N, -tp * h2 * df * sums.S_k, tp * h2 * ts * sums.S_l],
        [0.0, -tp * h2 * df * sums.S_k, tp ** 2 * h2 * df ** 2 * sums.S_kk, -tp ** 2 * h2 * df * ts * sums.S_kl],
        [0.0, tp * h2 * ts * sums.S_l, -tp ** 2 * h2 * df * ts * sums.S_kl, tp ** 2 * h2 * ts ** 2 * sums.S_ll],
    ], dtype=float)
    return FisherMatrix((2.0 / sigma2) * F, scenario)


def fisher_matrix_numeric(h: float, phi: float, tau: float, nu: float, sigma2: float, re_set: ReSet,
                          subcarrier_spacing: float, symbol_duration: float, rel_step: float = 1e-6) -> np.ndarray:
    """Fisher matrix from central differences of the noiseless signal model.

    Steps are relative to the natural scale of each parameter (``h``, one
    radian, ``1/(K df)`` and ``1/(L Ts)``), not to the parameter value.
    """
    k, l = re_set.indices()
    K, L = re_set.shape

    def signal(p):
        hh, ph, ta, nn = p
        return hh * np.exp(1j * ph) * np.exp(-2j * np.pi * k * subcarrier_spacing * ta) \
            * np.exp(2j * np.pi * l * symbol_duration * nn)

    theta = np.array([h, phi, tau, nu], dtype=float)
    scales = np.array([h, 1.0, 1.0 / (K * subcarrier_spacing), 1.0 / (L * symbol_duration)])
    jac = []
    for i in range(4):
        step = rel_step * scales[i]
        e = np.zeros(4)
        e[i] = step
        jac.append((signal(theta + e) - signal(theta - e)) / (2 * step))
    J = np.array(jac)
    return (2.0 / sigma2) * np.real(np.conj(J) @ J.T)


@dataclass(frozen=True, eq=False)
class SensingBounds:
    diag_bound: np.ndarray
    _full: np.ndarray | None

    @property
    def full_bound(self) -> np.ndarray:
        if self._full is None:
            raise SingularFisherError("Fisher matrix is singular; no full-inverse bound")
        return self._full

    @property
    def is_singular(self) -> bool:
        return self._full is None

    def __getitem__(self, name: str) -> float:
        return float(self.full_bound[PARAMS.index(name)])


def crlb(F: FisherMatrix, singular_tol: float = 1e-12) -> SensingBounds:
    """Reciprocal-diagonal bound and the diagonal of the inverse Fisher matrix."""
    M = np.asarray(F.entries, dtype=float)
    d = np.diag(M)
    with np.errstate(divide="ignore"):
        diag_bound = np.where(d > 0, 1.0 / np.where(d > 0, d, 1.0), np.inf)
    full = None
    if np.all(d > 0):
        # scale to unit diagonal so the singularity test is unit-free
        s = 1.0 / np.sqrt(d)
        C = M * s[:, None] * s[None, :]
        if np.linalg.eigvalsh(C).min() > singular_tol:
            full = np.diag(np.linalg.inv(C)) * s * s
    return SensingBounds(diag_bound, full)


def _check_probabilities(P) -> np.ndarray:
    P = np.asarray(P, dtype=float).ravel()
    if P.size != 4:
        raise ValueError(f"expected four per-round error probabilities, got {P.size}")
    if np.any((P < 0) | (P > 1)) or not np.all(np.isfinite(P)):
        raise ValueError(f"error probabilities must lie in [0, 1]: {P.tolist()}")
    if np.any(np.diff(P) > 1e-12):
        warnings.warn(f"per-round error probabilities are not non-increasing: {P.tolist()}", stacklevel=3)
    return P


def expected_rounds(P) -> float:
    """``E[X] = 1 + P1 + P1 P2 + P1 P2 P3``."""
    P = _check_probabilities(P)
    return float(1.0 + P[0] + P[0] * P[1] + P[0] * P[1] * P[2])


def rho(P) -> float:
    """Fraction of slots sensed with all REs: ``(1 - P1 P2 P3 P4) / E[X]``."""
    P = _check_probabilities(P)
    return float((1.0 - np.prod(P)) / expected_rounds(P))


def mse_mix(mse1, mse2, P):
    """HARQ-weighted sensing MSE ``(1 - rho) mse1 + rho mse2``."""
    r = rho(P)
    mse1 = np.asarray(mse1, dtype=float)
    mse2 = np.asarray(mse2, dtype=float)
    if np.any(mse2 > mse1 * (1 + 1e-12)):
        warnings.warn("all-RE MSE exceeds DMRS-only MSE", stacklevel=2)
    out = (1.0 - r) * mse1 + r * mse2
    return float(out) if out.ndim == 0 else out


def throughput_analytic(P, num_data_res: int, mcs: McsEntry) -> float:
    """Average HARQ throughput in bits per slot."""
    return num_data_res * mcs.modulation_order * mcs.code_rate * rho(P)


def range_bound(delay_bound: float) -> float:
    """Delay variance bound (s^2) expressed as a range variance bound (m^2)."""
    return SPEED_OF_LIGHT ** 2 * delay_bound
