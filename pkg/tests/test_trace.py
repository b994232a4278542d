import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tdm_mbqc import trace as tr


def test_continuous_mode_function_values():
    mf = tr.ModeFunction(k=3)
    assert mf(mf.center) == 0.0
    assert mf(mf.center + 20) == pytest.approx(20 * np.exp(-8))
    assert mf(mf.center - 20) == pytest.approx(-20 * np.exp(-8))
    assert mf(mf.center + 20.5) == 0.0


def test_samples_normalised_and_antisymmetric():
    f = tr.mode_function_samples()
    assert f.shape == (40,)
    assert np.linalg.norm(f) == pytest.approx(1.0, abs=1e-14)
    np.testing.assert_array_equal(f, -f[::-1])


def test_shifted_modes_exactly_orthogonal():
    frame = np.zeros((3, tr.FRAME_SAMPLES))
    for i, k in enumerate((0, 1, 249)):
        frame[i, 40 * k: 40 * k + 40] = tr.mode_function_samples(tr.ModeFunction(k=k))
    gram = frame @ frame.T
    np.testing.assert_allclose(np.diag(gram), 1.0, atol=1e-12)
    assert gram[0, 1] == 0.0 and gram[0, 2] == 0.0 and gram[1, 2] == 0.0


def test_zero_values_zero_trace():
    assert not np.any(tr.synthesize_frame(np.zeros(250)).samples)


def test_single_bin_roundtrip():
    t = tr.synthesize_frame([0.0] * 17 + [1.25])
    assert tr.integrate_frame(t, 17) == pytest.approx(1.25, abs=1e-9)
    assert tr.integrate_frame(t, 16) == 0.0


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), power=st.floats(0, 100))
def test_roundtrip_with_complement_noise(seed, power):
    values = np.random.default_rng(seed).normal(size=250)
    t = tr.synthesize_frame(values, noise_seed=seed, noise_power=power)
    np.testing.assert_allclose(tr.integrate_frame(t), values, atol=1e-9)


def test_noise_changes_trace_not_values():
    values = np.ones(250)
    quiet = tr.synthesize_frame(values)
    noisy = tr.synthesize_frame(values, noise_seed=1, noise_power=1.0)
    assert np.abs(noisy.samples - quiet.samples).max() > 0.1
    np.testing.assert_allclose(tr.integrate_frame(noisy), values, atol=1e-9)


def test_linearity():
    rng = np.random.default_rng(0)
    t1 = tr.synthesize_frame(rng.normal(size=250), 1, 0.5)
    t2 = tr.synthesize_frame(rng.normal(size=250), 2, 0.5)
    combo = 2.0 * t1 + (-0.5) * t2
    expected = 2.0 * tr.integrate_frame(t1) - 0.5 * tr.integrate_frame(t2)
    np.testing.assert_allclose(tr.integrate_frame(combo), expected, atol=1e-12)


def test_vacuum_trace_statistics():
    # white noise of unit power projects onto each bin as a unit-variance value
    rng = np.random.default_rng(4)
    vals = np.concatenate([
        tr.integrate_frame(tr.Trace(rng.normal(size=tr.FRAME_SAMPLES))) for _ in range(40)
    ])
    assert vals.var() == pytest.approx(1.0, abs=4 * np.sqrt(2 / vals.size))
    assert abs(np.corrcoef(vals[:-1], vals[1:])[0, 1]) < 4 / np.sqrt(vals.size)


def test_errors():
    with pytest.raises(tr.TraceError):
        tr.synthesize_frame(np.zeros(251))
    t = tr.synthesize_frame(np.zeros(3))
    with pytest.raises(tr.TraceError):
        tr.integrate_frame(t, 250)
    with pytest.raises(tr.TraceError):
        tr.integrate_frame(t, -1)
    with pytest.raises(tr.TraceError):
        tr.Trace(np.zeros(10))


def test_binary_and_csv_roundtrip(tmp_path):
    t = tr.synthesize_frame(np.arange(250) / 10, noise_seed=3, noise_power=0.2, channel="B")
    tr.write_trace(t, tmp_path / "f.trace")
    back = tr.read_trace(tmp_path / "f.trace")
    np.testing.assert_array_equal(back.samples, t.samples)
    assert back.channel == "B" and back.sample_rate == 1e9
    raw = (tmp_path / "f.trace").read_bytes()
    assert raw[:8] == b"TDMTRACE" and len(raw) == 23 + 8 * 10_000
    tr.write_trace_csv(t, tmp_path / "f.csv")
    np.testing.assert_array_equal(tr.read_trace_csv(tmp_path / "f.csv").samples, t.samples)


def test_read_rejects_foreign_file(tmp_path):
    p = tmp_path / "x.trace"
    p.write_bytes(b"NOTATRACE" + bytes(40))
    with pytest.raises(tr.TraceError):
        tr.read_trace(p)
