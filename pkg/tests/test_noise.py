import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rdipe.distributions import bell_distribution, tv_distance
from rdipe.errors import CalibrationFailed, InvalidChannelParam
from rdipe.noise import (Channel, apply_channel, calibrate, depolarized_purity, mix_delta, pure_trace_distance,
                         robustness_experiment, robustness_pair, trace_distance, trace_distance_svd, two_copy_check,
                         write_robustness_report)
from rdipe.states import DenseState, cosine_oracle, purity, random_cw, to_dense


def test_depolarizing_identity_and_purity():
    s = to_dense(random_cw(4, 0))
    out = apply_channel(s, Channel("depolarizing", p=0.0))
    np.testing.assert_allclose(out.density_matrix(), s.density_matrix(), atol=1e-12)
    for p in (0.1, 0.5, 1.0):
        out = apply_channel(s, Channel("depolarizing", p=p))
        closed = (1 - p) ** 2 + 2 * (1 - p) * p / 16 + p**2 / 16
        assert math.isclose(purity(out), closed, rel_tol=1e-10)
        assert math.isclose(depolarized_purity(1.0, p, 4), closed)


def test_phase_noise_breaks_realness():
    s = random_cw(4, 1)
    out = apply_channel(s, Channel("phase", theta=math.pi / 4, sites=(0,)))
    assert out.is_pure_vector and not out.is_real
    assert np.sum(out.data.imag**2) > 0
    assert apply_channel(s, Channel("phase", theta=math.pi, sites=(0,))).is_real


def test_pauli_channel_output_is_state():
    rho = DenseState.random_mixed(3, 2)
    out = apply_channel(rho, Channel("pauli", px=0.1, py=0.05, pz=0.2, sites=(0, 2)))
    m = out.density_matrix()
    assert math.isclose(np.trace(m).real, 1.0, abs_tol=1e-12)
    assert np.linalg.eigvalsh(m).min() > -1e-10


def test_channel_validation_and_parse():
    with pytest.raises(InvalidChannelParam):
        Channel("depolarizing", p=1.5)
    with pytest.raises(InvalidChannelParam):
        Channel("pauli", px=0.6, py=0.6)
    with pytest.raises(InvalidChannelParam):
        Channel("amplitude")
    with pytest.raises(InvalidChannelParam):
        Channel.parse("phase:abc")
    with pytest.raises(InvalidChannelParam):
        apply_channel(random_cw(3, 0), Channel("phase", theta=0.1, sites=(5,)))
    assert Channel.parse("phase:0.3@1,2") == Channel("phase", theta=0.3, sites=(1, 2))
    assert Channel.parse("depolarizing:0.2").p == 0.2
    assert Channel.parse("pauli:0.1,0,0.2").pz == 0.2


def test_trace_distance_examples():
    a, b = DenseState.basis(2, 0), DenseState.basis(2, 3)
    assert trace_distance(a, a) == pytest.approx(0, abs=1e-12)
    assert trace_distance(a, b) == pytest.approx(2.0)
    rng = np.random.default_rng(5)
    r, s = DenseState.random_mixed(2, rng), DenseState.random_mixed(2, rng)
    assert trace_distance(r, s) == pytest.approx(trace_distance_svd(r, s), abs=1e-12)
    u, v = DenseState.random_pure(3, rng, real=False), DenseState.random_pure(3, rng, real=False)
    assert trace_distance(u, v) == pytest.approx(pure_trace_distance(u.data, v.data), abs=1e-10)


@pytest.mark.parametrize("kind", ["phase", "depolarizing", "pauli"])
@pytest.mark.parametrize("tau", [0.0, 0.02, 0.1])
def test_calibration_hits_target(kind, tau):
    s = random_cw(5, 3)
    ch, dist = calibrate(s, Channel(kind), tau)
    assert dist == pytest.approx(trace_distance(s, apply_channel(s, ch)), abs=1e-12)
    if tau == 0:
        assert ch.strength == 0
    else:
        assert abs(dist - tau) <= 0.01 * tau


def test_calibration_failure():
    with pytest.raises(CalibrationFailed):
        calibrate(random_cw(3, 0), Channel("phase", sites=(0,)), 1.99)


def test_data_processing_for_bell_tables():
    rng = np.random.default_rng(7)
    for _ in range(30):
        n = int(rng.integers(1, 5))
        r = DenseState.random_pure(n, rng, real=bool(rng.integers(2)))
        s = DenseState.random_mixed(n, rng, int(rng.integers(1, 2**n + 1)))
        # Bell tables of rho (x) rho come from a measurement, so TV is bounded by the two-copy distance
        two = trace_distance(np.kron(r.density_matrix(), r.density_matrix()),
                             np.kron(s.density_matrix(), s.density_matrix()))
        assert tv_distance(bell_distribution(r), bell_distribution(s)) <= two / 2 + 1e-12


def test_bell_shift_bounded_by_distance():
    for seed in range(5):
        rho = to_dense(random_cw(4, seed))
        ch, dist = calibrate(rho, Channel("phase"), 0.1)
        assert tv_distance(bell_distribution(rho), bell_distribution(apply_channel(rho, ch))) <= dist + 1e-12


@pytest.mark.parametrize("theta,p", [(0.05, 0.0), (0.1, 0.02), (0.3, 0.1)])
def test_two_copy_check(theta, p):
    r = two_copy_check(random_cw(3, 1), theta, p)
    assert r["holds"] and r["trace_distance"] > 0


def test_robustness_pair_overlap():
    rho, sigma = robustness_pair("w", 6, 0)
    assert cosine_oracle(rho, sigma) == pytest.approx(4 / 9)
    rho, sigma = robustness_pair("dicke2", 6, 0)
    assert cosine_oracle(rho, sigma) == pytest.approx(1 / 9)


def test_mix_delta_zero_for_real_pure():
    rho, sigma = robustness_pair("w", 4, 0)
    assert mix_delta(rho, sigma) < 1e-12


def test_robustness_small(tmp_path):
    rho, sigma = robustness_pair("w", 4, 1)
    rep = robustness_experiment(rho, sigma, [0.0, 0.1], Channel("phase"), runs=3, seed=2)
    assert rep["passed"]
    assert rep["rows"][0]["bound"] == 0.1 and rep["rows"][1]["bound"] == pytest.approx(2.9)
    threaded = robustness_experiment(rho, sigma, [0.0, 0.1], Channel("phase"), runs=3, seed=2, threads=3)
    assert threaded["rows"] == rep["rows"]
    write_robustness_report(rep, tmp_path / "r.csv", tmp_path / "r.json")
    head = (tmp_path / "r.csv").read_text().splitlines()[0]
    assert head.startswith("# norm: schatten-1")


@given(st.integers(1, 3), st.integers(0, 2**31), st.floats(0, 1))
def test_depolarizing_contracts(n, seed, p):
    rng = np.random.default_rng(seed)
    r, s = DenseState.random_mixed(n, rng), DenseState.random_mixed(n, rng)
    ch = Channel("depolarizing", p=p)
    assert trace_distance(apply_channel(r, ch), apply_channel(s, ch)) <= trace_distance(r, s) + 1e-10
    m = apply_channel(r, ch).density_matrix()
    assert np.linalg.eigvalsh(m).min() >= -1e-10


@given(st.integers(1, 3), st.integers(0, 2**31))
def test_trace_distance_metric(n, seed):
    rng = np.random.default_rng(seed)
    a, b, c = (DenseState.random_mixed(n, rng) for _ in range(3))
    assert 0 <= trace_distance(a, b) <= 2 + 1e-12
    assert trace_distance(a, c) <= trace_distance(a, b) + trace_distance(b, c) + 1e-10
    assert trace_distance(a, b) == pytest.approx(trace_distance(b, a), abs=1e-12)
