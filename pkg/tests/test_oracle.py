import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pllsurrogate.oracle import (BASELINE_WN, BASELINE_WP, LinearVcoModel, OracleConfig,
                                 assemble_mesh, contact_count, effective_load, fit_linear_model,
                                 mesh_effective_load, oracle_eval)

width = st.floats(5e-6, 25e-6)


def test_baseline_tuning_range_brackets_target(oracle_cfg):
    f_lo, _ = oracle_eval(oracle_cfg, BASELINE_WP, BASELINE_WN, 0.0)
    f_hi, _ = oracle_eval(oracle_cfg, BASELINE_WP, BASELINE_WN, 1.8)
    assert 2.16e9 <= f_lo <= 2.18e9
    assert 2.30e9 <= f_hi <= 2.32e9


def test_baseline_mid_range_within_tuning_range(oracle_cfg):
    f_lo = oracle_eval(oracle_cfg, BASELINE_WP, BASELINE_WN, 0.0)[0]
    f_hi = oracle_eval(oracle_cfg, BASELINE_WP, BASELINE_WN, 1.8)[0]
    f_mid = oracle_eval(oracle_cfg, BASELINE_WP, BASELINE_WN, 0.9)[0]
    assert f_lo < f_mid < f_hi


def test_baseline_power_magnitude(oracle_cfg):
    _, p = oracle_eval(oracle_cfg, BASELINE_WP, BASELINE_WN, 0.66)
    assert 5.5e-4 < p < 6.5e-4


def test_transfer_curve_is_monotone(oracle_cfg):
    vc = np.linspace(0, 1.8, 50)
    f = np.array([oracle_eval(oracle_cfg, BASELINE_WP, BASELINE_WN, v)[0] for v in vc])
    assert np.all(np.diff(f) > 0)


@given(wp=width, wn=width, vc=st.floats(0, 1.8), dw=st.floats(0.5e-6, 5e-6))
def test_power_strictly_increases_with_width(wp, wn, vc, dw):
    cfg = OracleConfig()
    p = oracle_eval(cfg, wp, wn, vc)[1]
    assert oracle_eval(cfg, wp + dw, wn, vc)[1] > p
    assert oracle_eval(cfg, wp, wn + dw, vc)[1] > p


def test_oracle_is_deterministic(oracle_cfg):
    a = oracle_eval(oracle_cfg, 13e-6, 7e-6, 0.4)
    b = oracle_eval(oracle_cfg, 13e-6, 7e-6, 0.4)
    assert a == b


def test_mesh_is_symmetric_positive_definite(oracle_cfg):
    G, c = assemble_mesh(oracle_cfg, 12e-6, 9e-6)
    assert G.shape == (64, 64)
    np.testing.assert_allclose(G, G.T)
    assert np.linalg.eigvalsh(G).min() > 0
    assert np.all(c > 0)


def test_effective_load_of_single_node():
    G = np.array([[2.0]])
    c = np.array([3e-15])
    ceff, reff = effective_load(G, c)
    assert reff == pytest.approx(0.5)
    assert ceff == pytest.approx(3e-15)


def test_load_follows_contact_grid(oracle_cfg):
    pitch = oracle_cfg.contact_pitch
    assert contact_count(3.5 * pitch, pitch) == 3
    assert contact_count(0.1 * pitch, pitch) == 1
    # widths inside one contact cell share the same extracted load
    a = mesh_effective_load(oracle_cfg, 10.1 * pitch, 10e-6)
    b = mesh_effective_load(oracle_cfg, 10.6 * pitch, 10e-6)
    assert a == b


def test_work_factor_scales_cost():
    cheap, dear = OracleConfig(), OracleConfig(work_factor=8)
    assert oracle_eval(cheap, 1e-5, 1e-5, 0.5) == oracle_eval(dear, 1e-5, 1e-5, 0.5)

    def clock(cfg):
        t = time.perf_counter()
        for _ in range(40):
            oracle_eval(cfg, 1e-5, 1e-5, 0.5)
        return time.perf_counter() - t

    assert clock(dear) > 3 * clock(cheap)


@pytest.mark.parametrize("wp,wn,vc", [(0.0, 1e-5, 0.5), (1e-5, -1e-6, 0.5), (1e-5, 1e-5, float("nan"))])
def test_oracle_rejects_invalid_inputs(oracle_cfg, wp, wn, vc):
    with pytest.raises(ValueError):
        oracle_eval(oracle_cfg, wp, wn, vc)


def test_config_validation_and_json(tmp_path):
    with pytest.raises(ValueError):
        OracleConfig(mesh_nodes=1)
    with pytest.raises(ValueError):
        OracleConfig(work_factor=0)
    with pytest.raises(ValueError):
        OracleConfig.from_dict({"bogus": 1})
    cfg = OracleConfig(work_factor=3)
    path = tmp_path / "o.json"
    path.write_text(cfg.to_json())
    assert OracleConfig.load(path) == cfg


def test_linear_model_fit(oracle_cfg):
    lin = fit_linear_model(oracle_cfg, BASELINE_WP, BASELINE_WN)
    assert 60e6 < lin.kvco < 90e6
    assert lin.frequency(0.0) == lin.f0
    with pytest.raises(ValueError):
        fit_linear_model(oracle_cfg, BASELINE_WP, BASELINE_WN, (1.0, 0.5))


def test_linear_model_validation():
    assert LinearVcoModel(2e9, 5e8, 1e-3).frequency(0.4) == pytest.approx(2.2e9)
    with pytest.raises(ValueError):
        LinearVcoModel(-1.0, 1.0, 0.0)
