"""Steady-state behavior of the approximated normalized filter.

Linearizing the error recursion around the noise-dominated regime gives
x_err[k+1] = Z x_err[k] + mu * (noise drive), with Z = I - mu * B_n D_S * r
for an expected error-power weight r. From that the step-size stability
bound and the limiting mean-squared deviation follow in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .alpha_stable import AlphaStableModel, flom
from .errors import (
    DegenerateSystemError,
    InfiniteMomentError,
    SingularNormalizationError,
    StabilityViolationError,
)
from .filters import signed_power
from .graph import BandlimitOperator, SamplingOperator

# Readings of the expected error-power weight in the linearized recursion:
#   derivative       (p-1) * E|w|**(p-2), the mean slope of the signed error
#                    power at the noise; tracks simulated steady MSD closely
#   moment-of-power  E|w|**(p-2), the raw expected elementwise weight
#   power-of-moment  (E|w|**p)**(p-2), the scalar the precomputed filter
#                    operator itself is built from
# They are not numerically equal; all coincide at p = 2.
CONVENTIONS = ("derivative", "moment-of-power", "power-of-moment")

_KRON_MAX_N = 60  # Kronecker system is rank^2 x rank^2; fall back to the trace form above this


@dataclass(frozen=True, eq=False)
class SteadyStateInputs:
    """Everything the steady-state formulas need."""

    b_n: np.ndarray
    ds: SamplingOperator
    model: AlphaStableModel
    p: float
    mu: float

    def __post_init__(self):
        b = np.asarray(self.b_n, dtype=float)
        object.__setattr__(self, "b_n", b)
        if not 1.0 < self.p <= 2.0:
            raise ValueError(f"p must be in (1, 2], got {self.p}")
        if self.model.alpha < 2.0 and 2.0 * self.p - 2.0 >= self.model.alpha:
            raise InfiniteMomentError(
                f"E|w|^{2 * self.p - 2} diverges for alpha={self.model.alpha}"
            )
        if self.mu <= 0:
            raise ValueError("mu must be positive")


def expected_rp(model: AlphaStableModel, p: float, convention: str = "moment-of-power") -> float:
    """Expected residual-power weight appearing in the linearized recursion.

    Defaults to E|w|**(p-2); exactly 1 at p = 2 (zero exponent). See
    :data:`CONVENTIONS` for the alternatives.
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    if p == 2.0:
        return 1.0
    if not 1.0 < p <= 2.0:
        raise ValueError(f"p must be in (1, 2], got {p}")
    if convention == "moment-of-power":
        return flom(p - 2.0, model)
    if convention == "derivative":
        return (p - 1.0) * flom(p - 2.0, model)
    return flom(p, model) ** (p - 2.0)


def _system_matrix(
    b_n: np.ndarray, ds: SamplingOperator, model: AlphaStableModel, p: float, convention: str
) -> np.ndarray:
    return expected_rp(model, p, convention) * (b_n * ds.mask[None, :])


def stability_mu_max(
    b_n: np.ndarray,
    ds: SamplingOperator,
    model: AlphaStableModel,
    p: float,
    convention: str = "moment-of-power",
) -> float:
    """Largest stable step size, 2 over the spectral radius of the
    noise-weighted system matrix B_n D_S E{|w|**(p-2)}."""
    a_z = _system_matrix(np.asarray(b_n, dtype=float), ds, model, p, convention)
    radius = float(np.max(np.abs(np.linalg.eigvals(a_z))))
    if radius <= 1e-300:
        raise DegenerateSystemError("system matrix has zero spectral radius")
    return 2.0 / radius


def solve_msd_system(z: np.ndarray, g: np.ndarray, mu: float) -> float:
    """mu^2 * vec(G)^T (I - Z^T kron Z)^{-1} vec(I) via one linear solve."""
    m = z.shape[0]
    system = np.eye(m * m) - np.kron(z.T, z)
    v = np.linalg.solve(system, np.eye(m).flatten(order="F"))
    return float(mu**2 * (g.flatten(order="F") @ v))


def theoretical_msd(inputs: SteadyStateInputs, convention: str = "derivative") -> float:
    """Predicted limiting mean-squared deviation of the approximated filter.

    Forms Z = I - mu * B_n D_S * r with the contraction weight r of the
    chosen convention (default: the mean slope (p-1) E|w|**(p-2), which
    reproduces simulated steady MSD within fractions of a dB) and the
    noise-drive matrix G = B_n D_S E|w|**(2p-2) D_S B_n, then evaluates
    mu^2 * vec(G)^T (I - Z^T kron Z)^{-1} vec(I).

    Z acts as the identity on the orthogonal complement of the band (which
    the error recursion never enters when the initial estimate is
    bandlimited), so the system is assembled on the Z-invariant column space
    of B_n, where it is nonsingular; that restriction reproduces the
    geometric series of the full expression term by term. Beyond a size
    cutoff the identical trace form mu^2 * tr(G (I - Z^2)^{-1}) (restricted
    likewise) is used instead of the Kronecker solve.
    """
    b_n, ds, model, p, mu = inputs.b_n, inputs.ds, inputs.model, inputs.p, inputs.mu
    n = b_n.shape[0]
    a_z = _system_matrix(b_n, ds, model, p, convention)
    noise_power = flom(2.0 * p - 2.0, model)
    bd = b_n * ds.mask[None, :]
    g = noise_power * (bd @ bd.T)

    # orthonormal basis of range(b_n); Z-invariant since a_z maps into it
    u, s, _ = np.linalg.svd(b_n)
    rank = int(np.sum(s > s[0] * 1e-12)) if s.size else 0
    if rank == 0:
        return 0.0
    q = u[:, :rank]
    z_hat = np.eye(rank) - mu * (q.T @ a_z @ q)
    radius = float(np.max(np.abs(np.linalg.eigvals(z_hat))))
    if radius >= 1.0:
        raise StabilityViolationError(
            f"spectral radius {radius:.6f} >= 1 at mu={mu}; no steady state"
        )
    g_hat = q.T @ g @ q
    if rank <= _KRON_MAX_N:
        return solve_msd_system(z_hat, g_hat, mu)
    v = np.linalg.solve(np.eye(rank) - z_hat @ z_hat, np.eye(rank))
    return float(mu**2 * np.trace(g_hat @ v))


def q_residual(
    blo: BandlimitOperator,
    ds: SamplingOperator,
    y: np.ndarray,
    x_hat: np.ndarray,
    p: float,
    epsilon_clamp: float = 1e-8,
) -> float:
    """Stationarity check of the exact normalized update.

    Measures how far the normalized, band-projected signed error power is
    from reproducing the sampled error itself; zero certifies that the
    per-step normalization matrix solves the update's stationarity condition.
    """
    resid = y - x_hat
    e = ds.mask * resid
    weights = ds.mask * np.maximum(np.abs(resid), epsilon_clamp) ** (p - 2.0)
    gram = blo.u_f.T @ (weights[:, None] * blo.u_f)
    rhs = blo.u_f.T @ signed_power(e, p)
    try:
        spec = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularNormalizationError("residual-weighted band matrix is singular") from exc
    reproduced = ds.mask * (blo.u_f @ spec)
    return float(np.max(np.abs(reproduced - e)))
