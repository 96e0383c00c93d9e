"""Choice of the frequency band and the sampled node set.

Both choices are made once, before filtering starts, and stay fixed while the
filters run. The greedy node selection guarantees that the sampled band matrix
is invertible, which every normalized filter in this package relies on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleSamplingError, SingularSamplingError
from .graph import BandlimitOperator, LaplacianEigensystem, SamplingOperator

_EIG_TIE_TOL = 1e-12


@dataclass(frozen=True)
class SelectionReport:
    """Diagnostic record of a greedy selection run."""

    chosen_set: tuple[int, ...]
    score_trace: tuple[float, ...]
    objective_name: str


def select_frequencies(es: LaplacianEigensystem, reference, count: int) -> tuple[int, ...]:
    """Pick the ``count`` spectral indices carrying the most reference energy.

    With no reference signal the lowest-frequency indices are returned, which
    keeps purely synthetic setups deterministic. Ties break toward the lower
    eigenvalue index.
    """
    if count < 1 or count > es.n:
        raise ValueError(f"count must be in [1, {es.n}], got {count}")
    if reference is None:
        return tuple(range(count))
    reference = np.asarray(reference, dtype=float)
    if not np.all(np.isfinite(reference)):
        raise ValueError("reference signal has non-finite entries")
    magnitude = np.abs(es.eigenvectors.T @ reference)
    # stable sort on negated magnitude: equal magnitudes keep index order
    order = np.argsort(-magnitude, kind="stable")
    return tuple(sorted(int(i) for i in order[:count]))


def _ascending_spectrum(mat: np.ndarray) -> np.ndarray:
    return np.linalg.eigvalsh(mat)


def _lex_greater(a: np.ndarray, b: np.ndarray, tol: float = _EIG_TIE_TOL) -> bool:
    """True when spectrum ``a`` beats ``b`` lexicographically from the bottom."""
    diff = a - b
    idx = np.nonzero(np.abs(diff) > tol)[0]
    if idx.size == 0:
        return False
    return diff[idx[0]] > 0


def greedy_sample(blo: BandlimitOperator, count: int, objective: str = "lambda-min") -> SamplingOperator:
    """Greedy sampling-set selection over the band's eigenvector rows.

    ``lambda-min`` maximizes the smallest eigenvalue of the sampled band
    matrix at every step. While the matrix is still rank-deficient the
    smallest eigenvalue ties at zero for all candidates, so equal-bottom
    spectra are compared lexicographically upward; exact full ties break
    toward the lower node index. ``logdet`` maximizes the ridged
    log-determinant instead.
    """
    op, _, _ = _greedy(blo, count, objective)
    return op


def greedy_sample_report(blo: BandlimitOperator, count: int, objective: str = "lambda-min") -> SelectionReport:
    _, chosen, trace = _greedy(blo, count, objective)
    return SelectionReport(chosen_set=tuple(chosen), score_trace=tuple(trace), objective_name=objective)


def _greedy(blo: BandlimitOperator, count: int, objective: str):
    n, f = blo.u_f.shape
    if objective not in ("lambda-min", "logdet"):
        raise ValueError(f"unknown objective {objective!r}")
    if count < f:
        raise InfeasibleSamplingError(
            f"sample count {count} below bandwidth {f}; the sampled band matrix cannot be invertible"
        )
    if count > n:
        raise ValueError(f"sample count {count} exceeds node count {n}")

    rows = blo.u_f  # row i is node i's band signature
    chosen: list[int] = []
    gram = np.zeros((f, f))
    trace: list[float] = []
    remaining = list(range(n))

    for _ in range(count):
        best_node = None
        best_spectrum = None
        best_score = None
        for node in remaining:
            candidate = gram + np.outer(rows[node], rows[node])
            spectrum = _ascending_spectrum(candidate)
            if objective == "lambda-min":
                if best_spectrum is None or _lex_greater(spectrum, best_spectrum):
                    best_spectrum = spectrum
                    best_node = node
            else:
                score = float(np.sum(np.log(spectrum + 1e-12)))
                if best_score is None or score > best_score + _EIG_TIE_TOL:
                    best_score = score
                    best_node = node
                    best_spectrum = spectrum
        chosen.append(best_node)
        remaining.remove(best_node)
        gram = gram + np.outer(rows[best_node], rows[best_node])
        trace.append(float(best_spectrum[0]) if objective == "lambda-min" else best_score)

    if float(_ascending_spectrum(gram)[0]) <= 0.0:
        raise SingularSamplingError(
            f"no sample set of size {count} makes the band matrix invertible"
        )
    op = SamplingOperator(sample_set=tuple(sorted(chosen)), n=n)
    return op, chosen, trace
