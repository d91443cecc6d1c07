import numpy as np
import pytest

import dyngame


def test_design_and_equilibrium():
    spec = dyngame.design(1)
    assert spec.lambda_rn == pytest.approx(2.8)
    assert spec.lambda_fc == pytest.approx((0.6, 0.4))
    eq = dyngame.solve_equilibrium(spec)
    assert eq["residual"] <= 1e-10
    p = np.asarray(eq["p_star"])
    assert p.shape == (8,)
    br = dyngame.best_response(spec.alpha(), p, spec)
    assert np.max(np.abs(br - p)) <= 1e-10
    assert np.sum(eq["m_star"]) == pytest.approx(1.0)


def test_spec_json_round_trip():
    spec = dyngame.GameSpec(1.0, 0.5, 0.3, 0.2, 0.1, 0.9)
    back = dyngame.GameSpec.from_json(spec.to_json())
    assert back.lambda_ec == pytest.approx(0.5)
    assert back.beta == pytest.approx(0.9)


def test_asymptotic_variances():
    spec = dyngame.design(1)
    assert dyngame.sigma_kpml(spec, 1)[0, 0] == pytest.approx(121.98, rel=5e-3)
    star = dyngame.sigma_star(spec)
    assert star[0, 0] == pytest.approx(89.33, rel=5e-3)
    for k in (1, 5, 20):
        assert dyngame.sigma_kmd(spec, k, "optimal")[0, 0] == pytest.approx(star[0, 0], rel=1e-6)
    np.testing.assert_allclose(dyngame.sigma_kmd(spec, 4, "pml"), dyngame.sigma_kpml(spec, 4), rtol=1e-8)
    curve = dyngame.variance_curve(spec, 20)
    assert curve.shape == (20, 5)
    assert curve[0, 1] > curve[-1, 1]


def test_simulate_and_estimate():
    spec = dyngame.design(1)
    rec = dyngame.draw_dataset(spec, 2000, 11)
    assert rec.shape == (2000, 4)
    np.testing.assert_array_equal(rec, dyngame.draw_dataset(spec, 2000, 11))
    np.testing.assert_array_equal(rec[:, 3], 1 + 2 * rec[:, 1] + rec[:, 2])
    pml = dyngame.estimate(rec, spec, 3, "pml")
    assert len(pml) == 3
    md = dyngame.estimate(rec, spec, 2, "md", "optimal")
    assert len(md) == 2
    assert np.all(np.isfinite(md[-1]))


def test_errors_become_value_errors():
    spec = dyngame.design(1)
    with pytest.raises(ValueError):
        dyngame.design(7)
    with pytest.raises(ValueError):
        dyngame.draw_dataset(spec, 0, 1)
    bad = np.array([[1, 1, 1, 2]], dtype=np.int32)
    with pytest.raises(ValueError):
        dyngame.estimate(bad, spec, 1)


def test_highorder_table():
    table = dyngame.highorder_table(dyngame.design(1), 200, 500, [1, 10])
    assert table.shape == (2, 7)
    assert table[1, 3] < table[0, 3]
