"""Reflection-chain skeleton: product structure, drift, exports."""

import numpy as np
import pytest
from scipy.stats import ks_2samp

from svprocess import analytic as an
from svprocess.chain import (
    DriftClass,
    chain_log_stats,
    classify_drift,
    export_ensemble_csv,
    simulate_chain,
    simulate_chain_ensemble,
)
from svprocess.samplers import RngStream
from svprocess.stats import mean_ci


class TestChainPath:
    def test_shapes_and_signs(self):
        p = simulate_chain(1.3, 1.0, 50, RngStream(5, 0))
        assert p.n_reflections == 50
        assert np.all(p.V > 0)
        assert np.all(p.exits < 0)
        assert np.all(p.holds > 0)

    def test_product_consistency(self):
        p = simulate_chain(1.3, 2.0, 200, RngStream(5, 1))
        rel = np.abs(p.log_positions() - np.log(p.V))
        assert np.max(rel) < 1e-12

    def test_zero_steps_edge(self):
        p = simulate_chain(1.3, 1.0, 0, RngStream(5, 2))
        assert p.n_reflections == 0
        assert p.V.size == 0

    def test_negative_start_prepends_hold(self):
        p = simulate_chain(1.3, -2.0, 5, RngStream(5, 3))
        assert p.exits[0] == -2.0
        assert p.holds[0] > 0
        assert p.V.size == 6  # prepended return plus five chain steps
        assert p.log_w.size == 5

    def test_origin_rejected(self):
        with pytest.raises(ValueError):
            simulate_chain(1.3, 0.0, 5, RngStream(5, 4))


class TestDrift:
    def test_slope_signs(self):
        ens = simulate_chain_ensemble(1.3, 1.0, 200, 50, RngStream(6, 0))
        st = chain_log_stats(ens)["mean_log_w"]
        assert st.mean + 3 * st.se < 0
        ens = simulate_chain_ensemble(0.7, 1.0, 200, 50, RngStream(6, 100))
        st = chain_log_stats(ens)["mean_log_w"]
        assert st.mean - 3 * st.se > 0

    def test_classifier_trichotomy(self):
        assert (
            classify_drift(0.7, simulate_chain_ensemble(0.7, 1.0, 200, 50, RngStream(6, 200)))
            is DriftClass.ESCAPES_TO_INFINITY
        )
        assert (
            classify_drift(1.5, simulate_chain_ensemble(1.5, 1.0, 200, 50, RngStream(6, 300)))
            is DriftClass.ABSORBED_AT_ZERO
        )
        assert (
            classify_drift(1.0, simulate_chain_ensemble(1.0, 1.0, 200, 100, RngStream(6, 400)))
            is DriftClass.OSCILLATES
        )

    def test_short_chains_indeterminate(self):
        ens = simulate_chain_ensemble(1.3, 1.0, 30, 50, RngStream(6, 500))
        assert classify_drift(1.3, ens) is DriftClass.INDETERMINATE

    def test_critical_moments(self):
        ens = simulate_chain_ensemble(1.0, 1.0, 500, 2000, RngStream(6, 600))
        st = chain_log_stats(ens)
        assert st["mean_log_w"].contains(0.0)
        assert st["var_log_w"].contains(an.log_moment_variance_critical())

    def test_moment_identity_any_alpha(self):
        a = 1.4
        ens = simulate_chain_ensemble(a, 1.0, 100, 1000, RngStream(6, 700))
        w_pow = np.concatenate([np.exp(p.log_w * ((a - 1.0) / 2.0)) for p in ens])
        assert mean_ci(w_pow).contains(an.rho(a))

    def test_empty_ensemble_rejected(self):
        with pytest.raises(ValueError):
            chain_log_stats([])


class TestInvariants:
    def test_start_point_invariance(self):
        a = 1.2
        n, reps = 5, 10_000
        e1 = simulate_chain_ensemble(a, 1.0, n, reps, RngStream(7, 0))
        e3 = simulate_chain_ensemble(a, 3.0, n, reps, RngStream(7, 20_000))
        v1 = np.array([p.V[-1] / p.x0 for p in e1])
        v3 = np.array([p.V[-1] / p.x0 for p in e3])
        assert ks_2samp(v1, v3).pvalue > 0.01

    def test_holds_independent_of_next_ratio(self):
        ens = simulate_chain_ensemble(1.1, 1.0, 100, 200, RngStream(7, 50_000))
        holds = np.concatenate([p.holds[:-1] / np.abs(p.exits[:-1]) ** 1.1 for p in ens])
        next_logw = np.concatenate([p.log_w[1:] for p in ens])
        r = np.corrcoef(holds, next_logw)[0, 1]
        assert abs(r) < 3.0 / np.sqrt(holds.size)


class TestExport:
    def test_csv_schema(self, tmp_path):
        ens = simulate_chain_ensemble(1.3, 1.0, 5, 3, RngStream(8, 0))
        path = tmp_path / "chains.csv"
        export_ensemble_csv(ens, path)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("# sv-process v")
        assert "schema=1" in lines[0]
        assert lines[1] == "replica,k,V_k,exit_k,hold_k"
        assert len(lines) == 2 + 3 * 5

    def test_deterministic_bytes(self, tmp_path):
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        export_ensemble_csv(simulate_chain_ensemble(1.3, 1.0, 5, 3, RngStream(8, 1)), p1)
        export_ensemble_csv(simulate_chain_ensemble(1.3, 1.0, 5, 3, RngStream(8, 1)), p2)
        assert p1.read_bytes() == p2.read_bytes()
