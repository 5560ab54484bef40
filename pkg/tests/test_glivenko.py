import math

import numpy as np
import pytest

from overlapbounds import DomainError
from overlapbounds.applications import exponential_dist, gc_simulate, uniform01
from overlapbounds.applications.glivenko import scan_window


def test_single_sample_statistic_always_large():
    # D_1 = max(U, 1-U) >= 1/2, so with eps = 0.45 every index-1 scan exceeds
    report = gc_simulate(
        uniform01, eps=0.45, n_max=1, reps=4000, seed=3, eta=0.2, checkpoints=[1], count_from=1
    )
    assert report.extra["checkpoints"][0]["empirical"] == 1.0
    assert report.extra["tail_counts"][1] == 1.0


def test_large_eps_counts_mostly_zero():
    # beyond the validity threshold (n >= 3 for eps = 0.9) exceedances are rare
    report = gc_simulate(uniform01, eps=0.9, n_max=100, reps=3000, seed=5, eta=0.4)
    assert report.extra["count_from"] == 3
    assert report.extra["tail_counts"][1] <= 0.01


def test_checkpoint_exceedance_below_cell_bound():
    report = gc_simulate(
        uniform01, eps=0.2, n_max=200, reps=3000, seed=11, eta=0.1, checkpoints=[10, 50, 100, 200]
    )
    for cp in report.extra["checkpoints"]:
        assert cp["empirical"] <= cp["cell_hoeffding"] + 1e-12


def test_report_is_within_bounds():
    report = gc_simulate(uniform01, eps=0.2, n_max=300, reps=2000, seed=7, eta=0.1)
    assert report.within_bounds()
    exp_row = report.rows[0]
    assert math.isfinite(exp_row.theoretical)
    assert exp_row.empirical <= exp_row.theoretical


def test_thread_invariance():
    kwargs = dict(eps=0.25, n_max=150, reps=2000, seed=13, eta=0.1)
    base = gc_simulate(uniform01, **kwargs, threads=1)
    for threads in (2, 8):
        other = gc_simulate(uniform01, **kwargs, threads=threads)
        assert other.rows == base.rows
        assert other.extra == base.extra


def test_eta_domain():
    with pytest.raises(DomainError, match="eta"):
        gc_simulate(uniform01, eps=0.2, n_max=10, reps=10, seed=1, eta=0.2)
    with pytest.raises(DomainError):
        gc_simulate(uniform01, eps=1.2, n_max=10, reps=10, seed=1, eta=0.1)


def test_exponential_distribution_is_distribution_free():
    # the KS statistic only sees F(X); any continuous model obeys the bounds
    report = gc_simulate(exponential_dist(2.0), eps=0.3, n_max=100, reps=2000, seed=17, eta=0.1)
    assert report.within_bounds()
    for cp in report.extra["checkpoints"]:
        assert cp["empirical"] <= cp["cell_hoeffding"] + 1e-12


def test_scan_window_covers_requested_tail():
    eps, reps = 0.2, 10_000
    w = scan_window(eps, 2000, reps)
    cells = math.ceil(1.0 / eps)
    b = math.exp(-2.0 * eps * eps)
    remainder = reps * 2.0 * cells * b ** (w + 1) / (1.0 - b)
    assert remainder <= 1e-6
    assert w < 2000


def test_incremental_scan_matches_direct_sort():
    # checkpoints computed inside the scan window agree with a from-scratch
    # sorted evaluation of the same sample paths
    eps = 0.3
    rep_a = gc_simulate(
        uniform01, eps=eps, n_max=60, reps=500, seed=23, eta=0.1, checkpoints=[5, 20, 60], count_from=1
    )
    # force the sort path by shrinking the window via a tiny n_max... instead
    # rebuild the empirical frequencies directly from the same generator layout
    from overlapbounds.engine import chunk_rng

    rng = chunk_rng(23, 0)
    v = rng.random((500, 60))
    for idx, n in enumerate([5, 20, 60]):
        s = np.sort(v[:, :n], axis=1)
        grid = np.arange(1, n + 1, dtype=float)
        d = np.maximum((grid / n - s).max(axis=1), (s - (grid - 1) / n).max(axis=1))
        assert rep_a.extra["checkpoints"][idx]["empirical"] == pytest.approx(
            float(np.mean(d >= eps)), abs=1e-12
        )
