import math

import numpy as np
import pytest

from qgpes.bayesopt import (SearchSpace, acquisition, fit_surrogate, optimize, propose_next,
                            read_trace_csv, write_trace_csv)
from qgpes.core import NumericalFailure
from qgpes.gp import KernelConfig, gp_fit


def quad(theta):
    return -float(np.sum((np.asarray(theta) - 0.5) ** 2))


def toy_surrogate():
    # one training point at 0 with value 2; prior std 3 far away
    return gp_fit([[0.0]], [2.0], KernelConfig.rbf(1.0), y_scale=3.0)


def test_acquisition_examples():
    s = toy_surrogate()
    assert np.allclose(acquisition(s, np.array([[0.0], [50.0]]), 0.0), [2.0, 2.0])
    assert abs(acquisition(s, np.array([[50.0]]), 1.0)[0] - 5.0) < 1e-12


def test_space_roundtrip_and_bounds():
    sp = SearchSpace.box(3, 0.05, 20.0, log_scale=True)
    t = sp.sample(np.random.default_rng(0), 500)
    assert np.all((t >= 0.05) & (t <= 20.0))
    assert np.allclose(sp.from_unit(sp.to_unit(t)), t, rtol=1e-12)
    with pytest.raises(ValueError):
        SearchSpace(((1.0, 1.0),))
    with pytest.raises(ValueError):
        SearchSpace(((0.0, 1.0),), log_scale=True)


def test_kappa_controls_exploration():
    # with kappa large, proposals land farther from the observed points
    space = SearchSpace.box(2, 0.0, 1.0)
    r = np.random.default_rng(0)
    U = r.uniform(0.4, 0.6, (6, 2))
    sur = fit_surrogate(U, [quad(u) for u in U])
    dist = {}
    for kappa in (0.0, 10.0):
        d = []
        for rep in range(100):
            p = propose_next(sur, space, kappa, np.random.default_rng(rep), 256)
            d.append(np.min(np.linalg.norm(U - p, axis=1)))
        dist[kappa] = np.mean(d)
    assert dist[10.0] > dist[0.0]


def test_exploit_concave_1d():
    space = SearchSpace.box(1, 0.0, 1.0)
    f = lambda t: -(t[0] - 0.3) ** 2
    trace = optimize(f, space, init_count=5, iterations=15, kappa=0.0, seed=1)
    assert abs(trace.best_theta[0] - 0.3) < 0.1


def test_deterministic_and_monotone():
    space = SearchSpace.box(3, 0.0, 1.0)
    a = optimize(quad, space, 10, 10, seed=4)
    b = optimize(quad, space, 10, 10, seed=4)
    assert np.array_equal(a.thetas, b.thetas) and np.array_equal(a.objectives, b.objectives)
    assert np.all(np.diff(a.best_so_far) >= 0)
    assert len(a) == 20 and len(a.surrogate_thetas) == 10


def test_zero_iterations_is_random_search():
    space = SearchSpace.box(2, 0.0, 1.0)
    trace = optimize(quad, space, 7, 0, seed=2)
    assert len(trace) == 7
    assert np.array_equal(trace.thetas, space.sample(np.random.default_rng(2), 7))


def test_argument_validation():
    space = SearchSpace.box(1, 0.0, 1.0)
    with pytest.raises(ValueError):
        optimize(quad, space, 1, 5)
    with pytest.raises(ValueError):
        optimize(quad, space, 5, -1)


def test_failures_are_floored_and_run_continues():
    space = SearchSpace.box(1, 0.0, 1.0)

    def f(theta):
        if theta[0] > 0.5:
            raise NumericalFailure("boom")
        return -theta[0], -2 * theta[0]

    trace = optimize(f, space, 8, 5, seed=0)
    assert len(trace) == 13
    ok = [e for e in trace.evaluations if not e.failed]
    bad = [e for e in trace.evaluations if e.failed]
    assert ok and bad
    assert all(math.isnan(e.lml) for e in bad)
    assert all(e.objective < min(o.objective for o in ok) for e in bad)
    assert trace.best_theta[0] <= 0.5


def test_nonfinite_value_counts_as_failure():
    space = SearchSpace.box(1, 0.0, 1.0)
    trace = optimize(lambda t: math.nan if t[0] < 0.5 else 1.0, space, 6, 2, seed=3)
    assert all(math.isfinite(v) for v in trace.objectives)


def test_cached_repeats(monkeypatch):
    calls = []
    space = SearchSpace.box(1, 0.0, 1.0)
    monkeypatch.setattr(SearchSpace, "sample", lambda self, rng, n: np.full((n, 1), 0.25))

    def f(t):
        calls.append(float(t[0]))
        return 0.0

    trace = optimize(f, space, 4, 0, seed=0)
    assert calls == [0.25] and len(trace) == 4


def test_trace_csv_roundtrip(tmp_path):
    space = SearchSpace.box(2, 0.05, 20.0, log_scale=True, names=("a", "b"))
    trace = optimize(lambda t: (quad(t), 2.0), space, 5, 3, seed=9)
    path = tmp_path / "t.csv"
    write_trace_csv(trace, path, {"seed": 9})
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# ")
    assert lines[1] == "iter,theta_1,theta_2,objective,lml,best_so_far"
    meta, cols = read_trace_csv(path)
    assert meta["names"] == ["a", "b"] and meta["config"] == {"seed": 9}
    assert np.array_equal(cols["iter"], np.arange(1, 9))
    assert np.array_equal(cols["objective"], trace.objectives)
    assert np.array_equal(cols["best_so_far"], trace.best_so_far)
