import numpy as np
import pytest

from gsp_filter.alpha_stable import AlphaStableModel
from gsp_filter.filters import build_bn
from gsp_filter.graph import bandlimit, eigensystem, random_sensor_graph
from gsp_filter.selection import greedy_sample, select_frequencies


@pytest.fixture(scope="session")
def reference_setup():
    """The 50-node benchmark rig shared across suites: 7-NN sensor graph,
    20 lowpass bands, 30 greedily sampled nodes, alpha=1.5 / gamma=0.1 noise."""
    graph = random_sensor_graph(50, 7, seed=1)
    es = eigensystem(graph)
    blo = bandlimit(es, select_frequencies(es, None, 20))
    ds = greedy_sample(blo, 30)
    model = AlphaStableModel(alpha=1.5, gamma=0.1)
    p = model.alpha - 0.05
    cm = build_bn(blo, ds, model, p)
    truth = blo.u_f @ np.random.default_rng(99).uniform(-1.0, 1.0, blo.bandwidth)
    return {
        "graph": graph, "es": es, "blo": blo, "ds": ds,
        "model": model, "p": p, "cm": cm, "truth": truth,
    }


def random_instance(rng, n_choices=(5, 20, 50)):
    """Random (graph, band, sampling, observation, estimate) test case."""
    n = int(rng.choice(n_choices))
    k = min(4, n - 1)
    graph = random_sensor_graph(n, k, seed=int(rng.integers(100_000)))
    es = eigensystem(graph)
    f = int(rng.integers(2, max(3, n // 2)))
    blo = bandlimit(es, select_frequencies(es, None, f))
    s = int(rng.integers(f, n + 1))
    ds = greedy_sample(blo, s)
    y = rng.normal(0.0, 1.0, n)
    x_hat = rng.normal(0.0, 1.0, n)
    return graph, es, blo, ds, y, x_hat
