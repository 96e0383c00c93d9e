"""Experiment harness: config files, signal generation, data ingestion,
Monte Carlo execution, and metric/report output.

An experiment is described by a flat ``key = value`` text file (see
:class:`ExperimentConfig` for the key set), built into graph + operators +
noise model, run over independent seeded repetitions, and reduced to
per-iteration mean-squared-deviation traces written as CSV alongside a flat
summary file and (optionally) a rendered figure.
"""

from __future__ import annotations

import csv
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .alpha_stable import AlphaStableModel, draw_sas
from .analysis import SteadyStateInputs, stability_mu_max, theoretical_msd
from .errors import (
    ExperimentError,
    InfiniteMomentError,
    IngestError,
    StabilityViolationError,
)
from .filters import (
    ConvergenceMatrices,
    FilterConfig,
    FilterState,
    build_bn,
    make_stepper,
    multifeature_gnlmp_step,
    normalization_matrix,
)
from .graph import (
    BandlimitOperator,
    Graph,
    LaplacianEigensystem,
    SamplingOperator,
    bandlimit,
    build_knn_graph,
    eigensystem,
    mean_knn_distance,
    planar_from_latlon,
    random_sensor_graph,
)
from .selection import greedy_sample, select_frequencies

DIVERGE_CLIP = 1e12
DIVERGE_FLAG = 1e6
_DB_FLOOR = 1e-300

MD_ALGORITHMS = ("glmp", "gnlmp-full", "gnlmp-approx", "gnlmp-threshold")


@dataclass
class ExperimentConfig:
    """Flat experiment description; every field maps to one config-file key."""

    graph_kind: str = "sensor"  # sensor | knn-file
    graph_n: int = 50
    graph_k: int = 7
    graph_seed: int = 1
    graph_coords: str | None = None

    signal_kind: str = "synthetic"  # synthetic | synthetic-timevarying | file
    signal_bandwidth: int = 20
    signal_seed: int = 7
    signal_amplitude: float = 1.0
    signal_steps: int = 95
    signal_drift: float = 0.1
    signal_features: tuple[str, ...] = ()  # feature CSV paths for kind=file
    signal_d: int = 1  # synthetic feature count

    sampling_size: int = 30
    sampling_strategy: str = "greedy-lambda-min"  # | greedy-logdet
    frequency_size: int = 20
    frequency_policy: str = "lowpass"  # energy | lowpass

    noise_alpha: float = 1.5
    noise_gamma: float = 0.1

    filter_algorithm: str = "gnlmp-threshold"
    filter_mu: tuple[float, ...] = (0.05,)
    filter_p: float | None = None  # default: noise_alpha - 0.05
    filter_iterations: int = 400
    filter_runs: int = 100
    filter_base_seed: int = 1000
    filter_epsilon_clamp: float = 1e-8
    filter_ridge_delta: float = 0.0

    output_dir: str = "out"

    def __post_init__(self):
        if self.filter_runs < 1:
            raise ValueError("filter.runs must be >= 1")
        if self.filter_iterations < 1:
            raise ValueError("filter.iterations must be >= 1")
        if self.graph_kind not in ("sensor", "knn-file"):
            raise ValueError(f"unknown graph kind {self.graph_kind!r}")
        if self.signal_kind not in ("synthetic", "synthetic-timevarying", "file"):
            raise ValueError(f"unknown signal kind {self.signal_kind!r}")
        if self.graph_kind == "knn-file":
            if not self.graph_coords:
                raise ValueError("graph.coords is required for graph = knn-file")
            if not Path(self.graph_coords).exists():
                raise ValueError(f"coords file not found: {self.graph_coords}")
        if self.signal_kind == "file":
            if not self.signal_features:
                raise ValueError("signal.features is required for signal = file")
            for path in self.signal_features:
                if not Path(path).exists():
                    raise ValueError(f"feature file not found: {path}")
            if self.graph_kind != "knn-file":
                raise ValueError("signal = file requires graph = knn-file (shared station coords)")
        if self.d > 1 and self.filter_algorithm != "gnlmp-approx":
            raise ValueError("multi-feature signals run on filter.algorithm = gnlmp-approx")

    @property
    def p(self) -> float:
        return self.filter_p if self.filter_p is not None else self.noise_alpha - 0.05

    @property
    def d(self) -> int:
        if self.signal_kind == "file":
            return len(self.signal_features)
        return self.signal_d

    def mu_for_filter(self) -> float | tuple[float, ...]:
        if self.d > 1:
            if len(self.filter_mu) != self.d:
                raise ValueError(
                    f"filter.mu needs {self.d} entries for {self.d} features, got {len(self.filter_mu)}"
                )
            return self.filter_mu
        if len(self.filter_mu) != 1:
            raise ValueError("filter.mu must be a single value for one-feature signals")
        return self.filter_mu[0]


_KEY_MAP = {f.name.replace("_", ".", 1): f.name for f in fields(ExperimentConfig)}

_INT_FIELDS = {
    "graph_n", "graph_k", "graph_seed", "signal_bandwidth", "signal_seed",
    "signal_steps", "signal_d", "sampling_size", "frequency_size",
    "filter_iterations", "filter_runs", "filter_base_seed",
}
_FLOAT_FIELDS = {
    "signal_amplitude", "signal_drift", "noise_alpha", "noise_gamma",
    "filter_p", "filter_epsilon_clamp", "filter_ridge_delta",
}


def parse_config(path) -> ExperimentConfig:
    """Read a flat ``key = value`` config file ('#' starts a comment)."""
    values: dict[str, object] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, text = (part.strip() for part in line.split("=", 1))
            if key not in _KEY_MAP:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            values[_KEY_MAP[key]] = _coerce(_KEY_MAP[key], text, path, lineno)
    return ExperimentConfig(**values)


def _coerce(field_name: str, text: str, path, lineno: int):
    try:
        if field_name == "signal_features":
            return tuple(part.strip() for part in text.split(",") if part.strip())
        if field_name == "filter_mu":
            return tuple(float(part) for part in text.split(","))
        if field_name in _INT_FIELDS:
            return int(text)
        if field_name in _FLOAT_FIELDS:
            return float(text)
    except ValueError as exc:
        raise ValueError(f"{path}:{lineno}: bad value {text!r} for key {field_name}") from exc
    return text


def config_items(config: ExperimentConfig) -> list[tuple[str, str]]:
    """Config echoed back as (file-key, rendered value) pairs."""
    items = []
    for f in fields(ExperimentConfig):
        value = getattr(config, f.name)
        if value is None:
            continue
        if isinstance(value, tuple):
            value = ",".join(str(v) for v in value)
        items.append((f.name.replace("_", ".", 1), str(value)))
    return items


def synth_bandlimited_signal(
    es: LaplacianEigensystem, freq_set, seed: int, amplitude: float = 1.0
) -> np.ndarray:
    """Random signal supported exactly on ``freq_set``: uniform spectral
    coefficients on [-amplitude, amplitude]."""
    freq_set = list(freq_set)
    rng = np.random.default_rng(seed)
    s = rng.uniform(-amplitude, amplitude, size=len(freq_set))
    return es.eigenvectors[:, freq_set] @ s


def synth_timevarying_signal(
    es: LaplacianEigensystem,
    freq_set,
    steps: int,
    drift: float,
    seed: int,
    amplitude: float = 1.0,
) -> np.ndarray:
    """Sequence of bandlimited frames whose spectral coefficients random-walk
    with per-step standard deviation ``drift``. Shape (steps, n)."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if drift < 0:
        raise ValueError("drift must be nonnegative")
    freq_set = list(freq_set)
    rng = np.random.default_rng(seed)
    s = rng.uniform(-amplitude, amplitude, size=len(freq_set))
    u_f = es.eigenvectors[:, freq_set]
    frames = np.empty((steps, es.n))
    for k in range(steps):
        frames[k] = u_f @ s
        s = s + drift * rng.standard_normal(len(freq_set))
    return frames


def ingest_stations(coords_path, feature_paths):
    """Load station coordinates and one or more wide feature files.

    The coordinates file is ``station_id,lat,lon`` CSV. Each feature file is
    wide CSV: header row of station ids, one row per time step. Station ids
    must agree across files (columns may be permuted); missing or
    non-numeric cells are rejected outright.

    Returns (planar coords (n, 2) in km, tensor (n, steps, d), station ids).
    """
    ids: list[str] = []
    latlon: list[tuple[float, float]] = []
    with open(coords_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:3]] != ["station_id", "lat", "lon"]:
            raise IngestError(f"{coords_path}: expected header 'station_id,lat,lon'")
        for lineno, row in enumerate(reader, start=2):
            if not row or not any(cell.strip() for cell in row):
                continue
            if len(row) < 3:
                raise IngestError(f"{coords_path}:{lineno}: expected 3 columns")
            sid = row[0].strip()
            if sid in ids:
                raise IngestError(f"{coords_path}:{lineno}: duplicate station id {sid!r}")
            try:
                latlon.append((float(row[1]), float(row[2])))
            except ValueError as exc:
                raise IngestError(f"{coords_path}:{lineno}: non-numeric coordinate") from exc
            ids.append(sid)
    if not ids:
        raise IngestError(f"{coords_path}: no stations")

    id_pos = {sid: i for i, sid in enumerate(ids)}
    n = len(ids)
    feature_paths = list(feature_paths)
    blocks: list[np.ndarray] = []
    steps = None
    for path in feature_paths:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise IngestError(f"{path}: empty file")
            columns = [h.strip() for h in header]
            unknown = [c for c in columns if c not in id_pos]
            if unknown:
                raise IngestError(f"{path}: unknown station id {unknown[0]!r}")
            if len(set(columns)) != len(columns):
                raise IngestError(f"{path}: duplicate station column")
            if set(columns) != set(ids):
                missing = sorted(set(ids) - set(columns))
                raise IngestError(f"{path}: missing station column {missing[0]!r}")
            rows = []
            for lineno, row in enumerate(reader, start=2):
                if not row or not any(cell.strip() for cell in row):
                    continue
                if len(row) != len(columns):
                    raise IngestError(
                        f"{path}:{lineno}: ragged row ({len(row)} cells, header has {len(columns)})"
                    )
                parsed = np.empty(n)
                for col, cell in zip(columns, row):
                    cell = cell.strip()
                    if not cell:
                        raise IngestError(f"{path}:{lineno}: missing value in column {col!r}")
                    try:
                        parsed[id_pos[col]] = float(cell)
                    except ValueError as exc:
                        raise IngestError(
                            f"{path}:{lineno}: non-numeric value {cell!r} in column {col!r}"
                        ) from exc
                rows.append(parsed)
            if not rows:
                raise IngestError(f"{path}: no data rows")
            block = np.vstack(rows)  # steps x n
            if steps is None:
                steps = block.shape[0]
            elif block.shape[0] != steps:
                raise IngestError(
                    f"{path}: {block.shape[0]} time steps, earlier file had {steps}"
                )
            blocks.append(block)

    tensor = np.stack([b.T for b in blocks], axis=2)  # n x steps x d
    coords = planar_from_latlon(np.asarray(latlon))
    return coords, tensor, ids


@dataclass
class MetricSeries:
    """Per-iteration metric traces of one experiment (averaged over runs)."""

    msd: np.ndarray
    msd_db: np.ndarray
    nmsd: np.ndarray | None = None
    nmsd_db: np.ndarray | None = None
    branch_full_fraction: np.ndarray | None = None
    wall_per_iter: float = 0.0
    runs: int = 1
    diverged_runs: int = 0

    @property
    def iterations(self) -> int:
        return len(self.msd)


def to_db(values: np.ndarray) -> np.ndarray:
    return 10.0 * np.log10(np.maximum(values, _DB_FLOOR))


def compute_metrics(trajectory: np.ndarray, truth: np.ndarray, mode: str = "steady") -> MetricSeries:
    """Deviation metrics of one estimate trajectory against the truth.

    ``trajectory`` holds the post-update estimates, one per iteration (a
    leading axis of length T). ``truth`` is a single frame or a matching
    length-T sequence. Time-varying mode adds the running mean of the
    normalized per-frame deviation.
    """
    trajectory = np.asarray(trajectory, dtype=float)
    truth = np.asarray(truth, dtype=float)
    t_steps = trajectory.shape[0]
    if truth.shape == trajectory.shape[1:]:
        diff = trajectory - truth[None, ...]
        frames = np.broadcast_to(truth, trajectory.shape)
    elif truth.shape == trajectory.shape:
        diff = trajectory - truth
        frames = truth
    else:
        raise ValueError(f"truth shape {truth.shape} does not match trajectory {trajectory.shape}")
    axes = tuple(range(1, trajectory.ndim))
    msd = np.sum(diff**2, axis=axes)
    series = MetricSeries(msd=msd, msd_db=to_db(msd))
    if mode == "time-varying":
        energy = np.sum(np.asarray(frames, dtype=float) ** 2, axis=axes)
        if np.any(energy == 0.0):
            bad = int(np.nonzero(energy == 0.0)[0][0])
            raise ValueError(f"truth frame {bad} has zero energy; normalized deviation undefined")
        ratio = msd / energy
        nmsd = np.cumsum(ratio) / np.arange(1, t_steps + 1)
        series.nmsd = nmsd
        series.nmsd_db = to_db(nmsd)
    elif mode != "steady":
        raise ValueError(f"unknown metrics mode {mode!r}")
    return series


@dataclass
class ExperimentSetup:
    """Materialized operators and truth for one config."""

    config: ExperimentConfig
    graph: Graph
    es: LaplacianEigensystem
    blo: BandlimitOperator
    ds: SamplingOperator
    model: AlphaStableModel | None
    truth: np.ndarray  # (n,) | (steps, n) | (n, d) | (steps, n, d)
    time_varying: bool
    filter_config: FilterConfig
    cm: ConvergenceMatrices | None


def build_setup(config: ExperimentConfig) -> ExperimentSetup:
    """Resolve a config into graph, operators, truth signal, and noise model."""
    if config.graph_kind == "sensor":
        graph = random_sensor_graph(config.graph_n, config.graph_k, config.graph_seed)
        file_tensor = None
    else:
        if config.signal_kind == "file":
            coords, file_tensor, _ = ingest_stations(config.graph_coords, config.signal_features)
        else:
            coords, file_tensor = _load_station_coords(config.graph_coords), None
        scale = mean_knn_distance(coords, config.graph_k)
        graph = build_knn_graph(coords, config.graph_k, scale)
    es = eigensystem(graph)

    if config.frequency_policy == "energy":
        reference = _frequency_reference(config, es, file_tensor)
        freq_set = select_frequencies(es, reference, config.frequency_size)
    elif config.frequency_policy == "lowpass":
        freq_set = select_frequencies(es, None, config.frequency_size)
    else:
        raise ValueError(f"unknown frequency policy {config.frequency_policy!r}")
    blo = bandlimit(es, freq_set)

    if config.sampling_strategy == "greedy-lambda-min":
        ds = greedy_sample(blo, config.sampling_size, objective="lambda-min")
    elif config.sampling_strategy == "greedy-logdet":
        ds = greedy_sample(blo, config.sampling_size, objective="logdet")
    else:
        raise ValueError(f"unknown sampling strategy {config.sampling_strategy!r}")

    truth, time_varying = _build_truth(config, es, file_tensor)

    model = None
    if config.noise_gamma > 0.0:
        model = AlphaStableModel(config.noise_alpha, config.noise_gamma)

    fc = FilterConfig(
        algorithm=config.filter_algorithm,
        mu=config.mu_for_filter(),
        p=config.p,
        epsilon_clamp=config.filter_epsilon_clamp,
        ridge_delta=config.filter_ridge_delta,
    )
    cm = None
    if config.filter_algorithm in ("gnlms", "gnlmp-approx", "gnlmp-threshold") or config.d > 1:
        if config.filter_algorithm in ("gnlmp-approx", "gnlmp-threshold"):
            if model is None:
                raise ExperimentError(
                    f"{config.filter_algorithm} needs noise.gamma > 0 to precompute its operator"
                )
            cm = build_bn(blo, ds, model, fc.p)
        else:
            m_n = normalization_matrix(blo, ds)
            cm = ConvergenceMatrices(m_n=m_n, b_n=blo.u_f @ (m_n @ blo.u_f.T), r_scalar=1.0)
    return ExperimentSetup(
        config=config, graph=graph, es=es, blo=blo, ds=ds, model=model,
        truth=truth, time_varying=time_varying, filter_config=fc, cm=cm,
    )


def _load_station_coords(path) -> np.ndarray:
    ids, latlon = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:3]] != ["station_id", "lat", "lon"]:
            raise IngestError(f"{path}: expected header 'station_id,lat,lon'")
        for row in reader:
            if not row or not any(cell.strip() for cell in row):
                continue
            ids.append(row[0].strip())
            latlon.append((float(row[1]), float(row[2])))
    return planar_from_latlon(np.asarray(latlon))


def _frequency_reference(config, es, file_tensor):
    if config.signal_kind == "file":
        return file_tensor[:, :, 0].mean(axis=1)
    return None  # synthetic runs fall back to the lowpass band


def _build_truth(config: ExperimentConfig, es, file_tensor):
    freq = list(range(config.signal_bandwidth))
    if config.signal_kind == "synthetic":
        if config.signal_d > 1:
            cols = [
                synth_bandlimited_signal(es, freq, config.signal_seed + j, config.signal_amplitude)
                for j in range(config.signal_d)
            ]
            return np.column_stack(cols), False
        return synth_bandlimited_signal(es, freq, config.signal_seed, config.signal_amplitude), False
    if config.signal_kind == "synthetic-timevarying":
        if config.signal_d > 1:
            feats = [
                synth_timevarying_signal(
                    es, freq, config.signal_steps, config.signal_drift,
                    config.signal_seed + j, config.signal_amplitude,
                )
                for j in range(config.signal_d)
            ]
            return np.stack(feats, axis=2), True  # steps x n x d
        frames = synth_timevarying_signal(
            es, freq, config.signal_steps, config.signal_drift,
            config.signal_seed, config.signal_amplitude,
        )
        return frames, True
    # file: tensor is n x steps x d
    if file_tensor.shape[2] == 1:
        return file_tensor[:, :, 0].T, True  # steps x n
    return np.transpose(file_tensor, (1, 0, 2)), True  # steps x n x d


@dataclass
class RunOutcome:
    msd: np.ndarray
    branch_full: np.ndarray | None
    diverged: bool
    wall_per_iter: float


def _truth_at(setup: ExperimentSetup, k: int):
    if setup.time_varying:
        return setup.truth[k]
    return setup.truth


def _iterations(setup: ExperimentSetup) -> int:
    if setup.time_varying:
        return setup.truth.shape[0]
    return setup.config.filter_iterations


def _single_run(setup: ExperimentSetup, run_index: int) -> RunOutcome:
    config = setup.config
    rng = np.random.default_rng(config.filter_base_seed + run_index)
    iters = _iterations(setup)
    multi = config.d > 1
    n = setup.es.n
    shape = (n, config.d) if multi else (n,)
    x_hat = np.zeros(shape)
    track_branch = config.filter_algorithm == "gnlmp-threshold"
    branch = np.zeros(iters) if track_branch else None
    msd = np.empty(iters)
    stepper = None
    if not multi:
        stepper = make_stepper(setup.filter_config, setup.blo, setup.ds, setup.model, setup.cm)
        state = FilterState(estimate=x_hat)
    diverged = False
    mask = setup.ds.mask
    start = time.perf_counter()
    for k in range(iters):
        truth_k = _truth_at(setup, k)
        if diverged:
            msd[k] = DIVERGE_CLIP
            continue
        if setup.model is not None:
            w = draw_sas(setup.model, n * config.d, rng).reshape(shape)
        else:
            w = 0.0
        y = (mask[:, None] if multi else mask) * (truth_k + w)
        if multi:
            x_hat = multifeature_gnlmp_step(
                x_hat, y, setup.cm, setup.ds, setup.filter_config.mu, setup.filter_config.p
            )
        else:
            state = stepper(state, y)
            x_hat = state.estimate
            if track_branch:
                branch[k] = 1.0 if state.mode == "full" else 0.0
        value = float(np.sum((x_hat - truth_k) ** 2))
        if not np.isfinite(value) or value > DIVERGE_CLIP:
            diverged = True
            value = DIVERGE_CLIP
        msd[k] = min(value, DIVERGE_CLIP)
    elapsed = time.perf_counter() - start
    if not diverged and np.max(msd) > DIVERGE_FLAG:
        diverged = True
    return RunOutcome(msd=msd, branch_full=branch, diverged=diverged, wall_per_iter=elapsed / iters)


def _worker_count() -> int:
    raw = os.environ.get("GSP_FILTER_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    setup: ExperimentSetup
    series: MetricSeries
    csv_path: Path | None = None
    summary_path: Path | None = None
    figure_path: Path | None = None


def run_experiment(
    config: ExperimentConfig,
    write_outputs: bool = True,
    render_figure: bool = True,
) -> ExperimentResult:
    """Execute the configured Monte Carlo experiment.

    Per run r the noise generator is seeded with base_seed + r, so reruns of
    the same config are bit-identical regardless of worker count (runs are
    reduced in index order). Diverged runs are clipped at 1e12 and flagged;
    an experiment with a robust-criterion filter fails outright if more than
    half its runs diverge.
    """
    setup = build_setup(config)
    runs = config.filter_runs
    workers = _worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(lambda r: _single_run(setup, r), range(runs)))
    else:
        outcomes = [_single_run(setup, r) for r in range(runs)]

    msd = np.zeros(_iterations(setup))
    branch = np.zeros_like(msd) if outcomes[0].branch_full is not None else None
    diverged_count = 0
    wall = 0.0
    for outcome in outcomes:  # deterministic ordered fold
        msd += outcome.msd
        if branch is not None:
            branch += outcome.branch_full
        diverged_count += int(outcome.diverged)
        wall += outcome.wall_per_iter
    msd /= runs
    if branch is not None:
        branch /= runs
    wall /= runs

    if diverged_count > runs // 2 and config.filter_algorithm in MD_ALGORITHMS:
        raise ExperimentError(
            f"{diverged_count}/{runs} runs diverged for {config.filter_algorithm}; "
            "experiment rejected (expected only for least-squares baselines)"
        )

    series = MetricSeries(
        msd=msd, msd_db=to_db(msd), branch_full_fraction=branch,
        wall_per_iter=wall, runs=runs, diverged_runs=diverged_count,
    )
    if setup.time_varying:
        axes = tuple(range(1, setup.truth.ndim))
        energy = np.sum(setup.truth**2, axis=axes)
        if np.any(energy == 0.0):
            raise ExperimentError("a truth frame has zero energy; normalized deviation undefined")
        series.nmsd = np.cumsum(msd / energy) / np.arange(1, len(msd) + 1)
        series.nmsd_db = to_db(series.nmsd)

    result = ExperimentResult(config=config, setup=setup, series=series)
    if write_outputs:
        _write_outputs(result, render_figure=render_figure)
    return result


def _write_outputs(result: ExperimentResult, render_figure: bool) -> None:
    out_dir = Path(result.config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result.csv_path = out_dir / "metrics.csv"
    result.summary_path = out_dir / "summary.txt"
    write_metrics_csv(result.series, result.csv_path)
    write_summary(result, result.summary_path)
    if render_figure:
        from .plotting import render_metrics_figure

        result.figure_path = out_dir / "metrics.png"
        render_metrics_figure(result.series, result.figure_path,
                              title=result.config.filter_algorithm)


def write_metrics_csv(series: MetricSeries, path) -> None:
    """Per-iteration CSV: iter,msd,msd_db[,nmsd,nmsd_db][,branch]."""
    header = ["iter", "msd", "msd_db"]
    if series.nmsd is not None:
        header += ["nmsd", "nmsd_db"]
    if series.branch_full_fraction is not None:
        header += ["branch"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k in range(series.iterations):
            row = [k + 1, f"{series.msd[k]:.17g}", f"{series.msd_db[k]:.17g}"]
            if series.nmsd is not None:
                row += [f"{series.nmsd[k]:.17g}", f"{series.nmsd_db[k]:.17g}"]
            if series.branch_full_fraction is not None:
                row += [f"{series.branch_full_fraction[k]:.17g}"]
            writer.writerow(row)


def theory_report(setup: ExperimentSetup) -> dict[str, float]:
    """Stability bound and predicted steady deviation for a built setup.

    Only meaningful for the normalized robust filters on steady signals with
    actual noise; returns an empty dict otherwise.
    """
    config = setup.config
    if setup.model is None or setup.cm is None or setup.time_varying or config.d > 1:
        return {}
    if config.filter_algorithm not in ("gnlmp-approx", "gnlmp-threshold", "gnlms"):
        return {}
    p = setup.filter_config.p
    out: dict[str, float] = {}
    out["mu_max"] = stability_mu_max(setup.cm.b_n, setup.ds, setup.model, p)
    mu = setup.filter_config.mu_scalar()
    try:
        inputs = SteadyStateInputs(b_n=setup.cm.b_n, ds=setup.ds, model=setup.model, p=p, mu=mu)
        msd = theoretical_msd(inputs)
        out["theoretical_msd"] = msd
        out["theoretical_msd_db"] = float(to_db(np.asarray([msd]))[0])
    except (InfiniteMomentError, StabilityViolationError):
        pass  # no finite prediction at this (p, alpha, mu); bound alone is reported
    return out


def write_summary(result: ExperimentResult, path) -> None:
    series = result.series
    tail = max(1, series.iterations // 10)
    steady = float(series.msd[-tail:].mean())
    lines = [f"config.{key} = {value}" for key, value in config_items(result.config)]
    lines += [
        f"runs = {series.runs}",
        f"diverged_runs = {series.diverged_runs}",
        f"iterations = {series.iterations}",
        f"msd_final = {series.msd[-1]:.17g}",
        f"msd_final_db = {series.msd_db[-1]:.17g}",
        f"msd_steady = {steady:.17g}",
        f"msd_steady_db = {float(to_db(np.asarray([steady]))[0]):.17g}",
        f"wall_per_iter_s = {series.wall_per_iter:.6g}",
    ]
    if series.nmsd is not None:
        lines.append(f"nmsd_final = {series.nmsd[-1]:.17g}")
        lines.append(f"nmsd_final_db = {series.nmsd_db[-1]:.17g}")
    if series.branch_full_fraction is not None:
        lines.append(f"branch_full_fraction = {float(series.branch_full_fraction.mean()):.6g}")
    for key, value in theory_report(result.setup).items():
        lines.append(f"{key} = {value:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")
