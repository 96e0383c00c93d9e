"""Adaptive graph-signal estimation under impulsive alpha-stable noise.

Library layout:

* :mod:`gsp_filter.graph` - graphs, Laplacian spectra, band/sampling projections
* :mod:`gsp_filter.selection` - frequency-set and sampling-set choice
* :mod:`gsp_filter.alpha_stable` - symmetric alpha-stable noise model
* :mod:`gsp_filter.filters` - the per-iteration update rules
* :mod:`gsp_filter.analysis` - stability bound and steady-state deviation
* :mod:`gsp_filter.harness` - Monte Carlo experiments, metrics, reports
"""

from .alpha_stable import AlphaStableModel, char_fn, draw_sas, flom, sample_sas
from .analysis import (
    SteadyStateInputs,
    expected_rp,
    q_residual,
    stability_mu_max,
    theoretical_msd,
)
from .filters import (
    ConvergenceMatrices,
    FilterConfig,
    FilterState,
    build_bn,
    glmp_step,
    glms_step,
    gnlmp_approx_step,
    gnlmp_full_step,
    gnlmp_threshold_run,
    gnlms_step,
    multifeature_gnlmp_step,
    normalization_matrix,
    signed_power,
    switch_threshold,
)
from .graph import (
    BandlimitOperator,
    Graph,
    LaplacianEigensystem,
    SamplingOperator,
    apply_sampling,
    bandlimit,
    build_knn_graph,
    eigensystem,
    gft,
    igft,
    load_graph_csv,
    mean_knn_distance,
    planar_from_latlon,
    random_sensor_graph,
    save_graph_csv,
)
from .harness import (
    ExperimentConfig,
    MetricSeries,
    compute_metrics,
    ingest_stations,
    parse_config,
    run_experiment,
    synth_bandlimited_signal,
    synth_timevarying_signal,
)
from .selection import SelectionReport, greedy_sample, greedy_sample_report, select_frequencies

__version__ = "0.1.0"
