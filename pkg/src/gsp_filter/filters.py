"""Per-iteration update rules for adaptive graph-signal estimation.

Four families are implemented, all estimating a bandlimited signal from noisy
samples ``y[k]`` observed on a fixed node subset:

* least-squares updates (``glms``, ``gnlms``), fast but fragile under
  heavy-tailed noise;
* minimum-dispersion updates driven by the signed error power
  ``phi_p(e) = |e|**(p-1) * sign(e)`` (``glmp``), robust for 1 < p < 2;
* their spectrally normalized variant (``gnlmp``) in an exact per-step form,
  a precomputed approximation, and a threshold-switched combination of the
  two;
* a multi-feature form that updates several signals on one graph at once
  with per-feature step sizes.

Every update direction lies inside the active frequency band, so estimates
that start bandlimited stay bandlimited.
"""

from __future__ import annotations

import numbers
from dataclasses import dataclass

import numpy as np

from .alpha_stable import AlphaStableModel, flom
from .errors import SingularNormalizationError, SingularSamplingError
from .graph import BandlimitOperator, SamplingOperator


@dataclass(frozen=True)
class FilterConfig:
    """Static parameters of one filter run.

    ``mu`` is a scalar step size, or a per-feature sequence for the
    multi-feature update. ``p`` is the error-power order; p = 2 recovers the
    least-squares updates exactly.
    """

    algorithm: str
    mu: float | tuple[float, ...] = 0.05
    p: float = 2.0
    epsilon_clamp: float = 1e-8
    ridge_delta: float = 0.0
    threshold_override: float | None = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; choose from {sorted(ALGORITHMS)}")
        if isinstance(self.mu, numbers.Real):
            if self.mu <= 0:
                raise ValueError("mu must be positive")
        else:
            object.__setattr__(self, "mu", tuple(float(m) for m in self.mu))
            if not self.mu or any(m <= 0 for m in self.mu):
                raise ValueError("all step sizes must be positive")
        if not 1.0 < self.p <= 2.0:
            raise ValueError(f"p must be in (1, 2], got {self.p}")
        if self.epsilon_clamp <= 0:
            raise ValueError("epsilon_clamp must be positive")
        if self.ridge_delta < 0:
            raise ValueError("ridge_delta must be nonnegative")

    def mu_scalar(self) -> float:
        if isinstance(self.mu, tuple):
            raise ValueError(f"{self.algorithm} takes a scalar step size")
        return float(self.mu)


@dataclass
class FilterState:
    """Mutable per-run state: current estimate, iteration count, and the
    branch the threshold-switched filter used last."""

    estimate: np.ndarray
    iteration: int = 0
    mode: str | None = None


@dataclass(frozen=True, eq=False)
class ConvergenceMatrices:
    """Precomputed normalization operators shared across iterations.

    ``m_n`` inverts the sampled band matrix; ``b_n`` is the spectral
    filter-and-normalize operator of the approximated update, which folds in
    the noise-dependent scalar ``r_scalar`` (the expected error power raised
    to p - 2).
    """

    m_n: np.ndarray
    b_n: np.ndarray
    r_scalar: float

    def __post_init__(self):
        for name in ("m_n", "b_n"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


ALGORITHMS = ("glms", "gnlms", "glmp", "gnlmp-full", "gnlmp-approx", "gnlmp-threshold")


def signed_power(e: np.ndarray, p: float) -> np.ndarray:
    """Elementwise |e|**(p-1) * sign(e); the descent direction of the
    p-th power error cost. Equals e itself at p = 2 and vanishes at e = 0."""
    return np.sign(e) * np.abs(e) ** (p - 1.0)


def normalization_matrix(blo: BandlimitOperator, ds: SamplingOperator) -> np.ndarray:
    """Inverse of the sampled band matrix. Exists whenever the sample set
    was produced by the greedy selector."""
    u_f = blo.u_f
    gram = u_f.T @ (ds.mask[:, None] * u_f)
    try:
        return np.linalg.inv(gram)
    except np.linalg.LinAlgError as exc:
        raise SingularSamplingError("sampled band matrix is singular") from exc


def build_bn(
    blo: BandlimitOperator,
    ds: SamplingOperator,
    model: AlphaStableModel,
    p: float,
) -> ConvergenceMatrices:
    """Precompute the normalization operators for the approximated update.

    The per-step error-power weights are replaced by the constant
    r = (E|w|**p) ** (p-2), so the whole normalization collapses to one
    fixed matrix b_n computed once.
    """
    r_scalar = flom(p, model) ** (p - 2.0) if p != 2.0 else 1.0
    u_f = blo.u_f
    gram = r_scalar * (u_f.T @ (ds.mask[:, None] * u_f))
    try:
        inner = np.linalg.solve(gram, u_f.T)
    except np.linalg.LinAlgError as exc:
        raise SingularSamplingError("sampled band matrix is singular") from exc
    b_n = u_f @ inner
    m_n = normalization_matrix(blo, ds)
    return ConvergenceMatrices(m_n=m_n, b_n=b_n, r_scalar=r_scalar)


def _check_dims(x_hat: np.ndarray, y: np.ndarray, n: int) -> None:
    if x_hat.shape != y.shape or x_hat.shape[0] != n:
        raise ValueError(f"estimate {x_hat.shape} / observation {y.shape} do not match n={n}")


def glms_step(
    x_hat: np.ndarray,
    y: np.ndarray,
    blo: BandlimitOperator,
    ds: SamplingOperator,
    mu: float,
) -> np.ndarray:
    """Least-squares update: project the sampled residual onto the band."""
    _check_dims(x_hat, y, blo.n)
    return x_hat + mu * (blo.b @ (ds.mask * (y - x_hat)))


def gnlms_step(
    x_hat: np.ndarray,
    y: np.ndarray,
    blo: BandlimitOperator,
    ds: SamplingOperator,
    mu: float,
    m_n: np.ndarray | None = None,
) -> np.ndarray:
    """Normalized least-squares update; at mu = 1 with bandlimited data it
    solves the sampled interpolation in a single step."""
    _check_dims(x_hat, y, blo.n)
    e = ds.mask * (y - x_hat)
    rhs = blo.u_f.T @ e
    if m_n is None:
        gram = blo.u_f.T @ (ds.mask[:, None] * blo.u_f)
        try:
            spec = np.linalg.solve(gram, rhs)
        except np.linalg.LinAlgError as exc:
            raise SingularSamplingError("sampled band matrix is singular") from exc
    else:
        spec = m_n @ rhs
    return x_hat + mu * (blo.u_f @ spec)


def glmp_step(
    x_hat: np.ndarray,
    y: np.ndarray,
    blo: BandlimitOperator,
    ds: SamplingOperator,
    mu: float,
    p: float,
) -> np.ndarray:
    """Minimum-dispersion update: band projection of the signed error power."""
    _check_dims(x_hat, y, blo.n)
    return x_hat + mu * (blo.b @ (ds.mask * signed_power(y - x_hat, p)))


def gnlmp_full_step(
    x_hat: np.ndarray,
    y: np.ndarray,
    blo: BandlimitOperator,
    ds: SamplingOperator,
    mu: float,
    p: float,
    epsilon_clamp: float = 1e-8,
    ridge_delta: float = 0.0,
) -> np.ndarray:
    """Exact normalized minimum-dispersion update.

    Rebuilds the time-varying normalization matrix from the current residual
    magnitudes each step: sampled |y - x_hat| values are clamped below at
    ``epsilon_clamp`` before the p - 2 exponent (which diverges at zero for
    p < 2), and ``ridge_delta`` regularizes the inversion if requested.
    """
    _check_dims(x_hat, y, blo.n)
    resid = y - x_hat
    if not np.all(np.isfinite(resid)):
        raise ValueError("observation produced non-finite residuals")
    e = ds.mask * resid
    weights = ds.mask * np.maximum(np.abs(resid), epsilon_clamp) ** (p - 2.0)
    f = blo.bandwidth
    gram = blo.u_f.T @ (weights[:, None] * blo.u_f)
    if ridge_delta:
        gram = gram + ridge_delta * np.eye(f)
    rhs = blo.u_f.T @ signed_power(e, p)
    try:
        spec = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularNormalizationError(
            "residual-weighted band matrix is singular; raise ridge_delta"
        ) from exc
    return x_hat + mu * (blo.u_f @ spec)


def gnlmp_approx_step(
    x_hat: np.ndarray,
    y: np.ndarray,
    cm: ConvergenceMatrices,
    ds: SamplingOperator,
    mu: float,
    p: float,
) -> np.ndarray:
    """Approximated normalized update using the precomputed operator."""
    _check_dims(x_hat, y, cm.b_n.shape[0])
    e = ds.mask * (y - x_hat)
    return x_hat + mu * (cm.b_n @ signed_power(e, p))


def multifeature_gnlmp_step(
    x_hat: np.ndarray,
    y: np.ndarray,
    cm: ConvergenceMatrices,
    ds: SamplingOperator,
    mu: tuple[float, ...] | np.ndarray,
    p: float,
) -> np.ndarray:
    """Approximated update for a d-feature signal (n x d matrices).

    Each feature column gets its own step size, so the update is exactly a
    stack of d independent single-feature updates.
    """
    x_hat = np.asarray(x_hat, dtype=float)
    y = np.asarray(y, dtype=float)
    if x_hat.ndim != 2 or x_hat.shape != y.shape:
        raise ValueError(f"expected matching n x d arrays, got {x_hat.shape} and {y.shape}")
    mu = np.asarray(mu, dtype=float)
    if mu.ndim != 1 or mu.shape[0] != x_hat.shape[1]:
        raise ValueError(
            f"need one step size per feature: {mu.shape[0] if mu.ndim == 1 else mu.shape} "
            f"step sizes for {x_hat.shape[1]} features"
        )
    e = ds.mask[:, None] * (y - x_hat)
    return x_hat + (cm.b_n @ signed_power(e, p)) * mu[None, :]


def switch_threshold(ds: SamplingOperator, model: AlphaStableModel, p: float) -> float:
    """Residual-power level below which the error is noise-dominated:
    |S| times the expected (p-1)-th absolute noise moment."""
    return len(ds.sample_set) * flom(p - 1.0, model)


def gnlmp_threshold_run(
    initial: np.ndarray,
    observations,
    blo: BandlimitOperator,
    ds: SamplingOperator,
    model: AlphaStableModel,
    config: FilterConfig,
    max_iter: int,
    cm: ConvergenceMatrices | None = None,
):
    """Threshold-switched run: per step, apply the cheap approximated update
    when the summed sampled error power sits below the noise-level threshold,
    the exact update otherwise.

    ``observations`` is any iterable of per-step observation vectors; at most
    ``max_iter`` of them are consumed. Returns the (max_iter + 1, n) estimate
    trajectory and the branch label chosen at each step.
    """
    if max_iter <= 0:
        raise ValueError("max_iter must be positive")
    mu = config.mu_scalar()
    p = config.p
    if cm is None:
        cm = build_bn(blo, ds, model, p)
    threshold = (
        config.threshold_override
        if config.threshold_override is not None
        else switch_threshold(ds, model, p)
    )
    x_hat = np.asarray(initial, dtype=float).copy()
    trajectory = np.empty((max_iter + 1, blo.n))
    trajectory[0] = x_hat
    branches: list[str] = []
    for k, y in enumerate(observations):
        if k >= max_iter:
            break
        e = ds.mask * (y - x_hat)
        if float(np.sum(np.abs(e) ** (p - 1.0))) < threshold:
            x_hat = gnlmp_approx_step(x_hat, y, cm, ds, mu, p)
            branches.append("approx")
        else:
            x_hat = gnlmp_full_step(
                x_hat, y, blo, ds, mu, p, config.epsilon_clamp, config.ridge_delta
            )
            branches.append("full")
        trajectory[k + 1] = x_hat
    used = len(branches)
    return trajectory[: used + 1], branches


def make_stepper(
    config: FilterConfig,
    blo: BandlimitOperator,
    ds: SamplingOperator,
    model: AlphaStableModel | None = None,
    cm: ConvergenceMatrices | None = None,
):
    """Bind a config and its operators into a ``step(state, y) -> state``
    callable; the state records the branch taken for threshold runs."""
    algorithm = config.algorithm
    needs_bn = algorithm in ("gnlmp-approx", "gnlmp-threshold")
    if needs_bn and cm is None:
        if model is None:
            raise ValueError(f"{algorithm} needs a noise model to precompute its operator")
        cm = build_bn(blo, ds, model, config.p)
    m_n = cm.m_n if cm is not None else None
    if algorithm == "gnlms" and m_n is None:
        m_n = normalization_matrix(blo, ds)
    threshold = None
    if algorithm == "gnlmp-threshold":
        if config.threshold_override is not None:
            threshold = config.threshold_override
        else:
            if model is None:
                raise ValueError("threshold switching needs a noise model or an override")
            threshold = switch_threshold(ds, model, config.p)

    def step(state: FilterState, y: np.ndarray) -> FilterState:
        x_hat = state.estimate
        mode = None
        if algorithm == "glms":
            nxt = glms_step(x_hat, y, blo, ds, config.mu_scalar())
        elif algorithm == "gnlms":
            nxt = gnlms_step(x_hat, y, blo, ds, config.mu_scalar(), m_n=m_n)
        elif algorithm == "glmp":
            nxt = glmp_step(x_hat, y, blo, ds, config.mu_scalar(), config.p)
        elif algorithm == "gnlmp-full":
            nxt = gnlmp_full_step(
                x_hat, y, blo, ds, config.mu_scalar(), config.p,
                config.epsilon_clamp, config.ridge_delta,
            )
        elif algorithm == "gnlmp-approx":
            nxt = gnlmp_approx_step(x_hat, y, cm, ds, config.mu_scalar(), config.p)
        else:  # gnlmp-threshold
            e = ds.mask * (y - x_hat)
            if float(np.sum(np.abs(e) ** (config.p - 1.0))) < threshold:
                nxt = gnlmp_approx_step(x_hat, y, cm, ds, config.mu_scalar(), config.p)
                mode = "approx"
            else:
                nxt = gnlmp_full_step(
                    x_hat, y, blo, ds, config.mu_scalar(), config.p,
                    config.epsilon_clamp, config.ridge_delta,
                )
                mode = "full"
        return FilterState(estimate=nxt, iteration=state.iteration + 1, mode=mode)

    return step
