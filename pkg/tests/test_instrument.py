import numpy as np
import pytest

from pdlsim.channels import ChannelOutcome, PdlElement
from pdlsim.instrument import (
    ANALYZERS,
    CountRecord,
    DetectorModel,
    ProjectorSetting,
    SourceModel,
    calibrate_source,
    derive_rng,
    derive_seed,
    expected_coincidences,
    project_physical,
    reconstruct,
    settings_16,
    settings_36,
    simulate_counts,
    source_state,
)
from pdlsim.qmath import (
    BellKind,
    bell_state,
    bell_vector,
    concurrence,
    fidelity_to_pure,
    purity,
    trace_distance,
)


def exact_counts(outcome, settings, src, det, pulses):
    """Noise-free count records: observed set to the rounded expectation."""
    return [
        CountRecord(
            index=i,
            expected=expected_coincidences(outcome, s, src, det, pulses),
            observed=int(round(expected_coincidences(outcome, s, src, det, pulses))),
        )
        for i, s in enumerate(settings)
    ]


def random_state(rng):
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    m = g @ g.conj().T
    return m / np.trace(m).real


QUIET = DetectorModel(efficiency=0.20, dark_prob=0.0, accidental_floor=0.0)


def test_derive_seed_deterministic_and_distinct():
    assert derive_seed(12345, "b2b", 0) == derive_seed(12345, "b2b", 0)
    seen = {derive_seed(12345, "b2b", i) for i in range(100)}
    assert len(seen) == 100
    assert derive_seed(12345, "x") != derive_seed(12345, "y")
    assert derive_seed(1, "x") != derive_seed(2, "x")
    assert all(0 <= derive_seed(9, i) < 2**64 for i in range(10))


def test_derive_rng_streams():
    a = derive_rng(7, "s", 0).poisson(100.0, size=5)
    b = derive_rng(7, "s", 0).poisson(100.0, size=5)
    c = derive_rng(7, "s", 1).poisson(100.0, size=5)
    assert (a == b).all()
    assert (a != c).any()


def test_calibrate_source_frozen():
    src = calibrate_source(0.925, 1.38)
    assert abs(src.source_pdl.gamma - 0.1610417495845566) < 1e-15
    assert abs(src.werner_v - 0.9580137508217952) < 1e-15
    assert np.allclose(src.source_pdl.axis, [0, 0, 1])


def test_calibrate_source_ideal():
    src = calibrate_source(1.0, 1.0)
    assert src.werner_v == 1.0
    assert src.source_pdl.gamma == 0.0
    rho = source_state(src).rho
    assert trace_distance(rho, bell_state(BellKind.PHI_PLUS)) < 1e-12


def test_calibrate_source_errors():
    with pytest.raises(ValueError):
        calibrate_source(1.0, 1.38)  # v > 1, unreachable
    with pytest.raises(ValueError):
        calibrate_source(0.4, 1.38)
    with pytest.raises(ValueError):
        calibrate_source(0.925, 0.9)


def test_source_state_frozen_metrics():
    out = source_state(calibrate_source(0.925, 1.38))
    assert abs(concurrence(out.rho) - 0.925) < 1e-12
    assert abs(out.rho[0, 0].real / out.rho[3, 3].real - 1.38) < 1e-12
    assert abs(purity(out.rho) - 0.9388666934958378) < 1e-12
    assert abs(out.rate - 0.8623188405797102) < 1e-12
    assert abs(fidelity_to_pure(out.rho, bell_vector(BellKind.PHI_PLUS)) - 0.962365344210641) < 1e-12


def test_detector_model_validation():
    DetectorModel(efficiency=1.0, dark_prob=0.0)
    with pytest.raises(ValueError):
        DetectorModel(efficiency=0.0)
    with pytest.raises(ValueError):
        DetectorModel(efficiency=0.2, dark_prob=1.0)
    with pytest.raises(ValueError):
        DetectorModel(efficiency=0.2, accidental_floor=-1e-9)


def test_source_model_validation():
    with pytest.raises(ValueError):
        SourceModel(werner_v=0.2, source_pdl=PdlElement(0.0), mu=0.01)
    with pytest.raises(ValueError):
        SourceModel(werner_v=0.9, source_pdl=PdlElement(0.0), mu=0.5)


def test_analyzers():
    for a, b in (("H", "V"), ("D", "A"), ("R", "L")):
        assert abs(ANALYZERS[a].conj() @ ANALYZERS[b]) < 1e-12
        assert abs(np.linalg.norm(ANALYZERS[a]) - 1) < 1e-12
    assert np.allclose(ANALYZERS["H"], [1, 0])
    # right circular carries +1 on sigma_2
    r = ANALYZERS["R"]
    s2 = np.array([[0, -1j], [1j, 0]])
    assert abs((r.conj() @ s2 @ r).real - 1.0) < 1e-12


def test_settings_schedules():
    s36 = settings_36()
    s16 = settings_16()
    assert len(s36) == 36 and len(s16) == 16
    assert len({s.label for s in s36}) == 36
    for s in s36:
        assert abs(np.linalg.norm(s.ket) - 1) < 1e-12


def test_projector_setting_validation():
    with pytest.raises(ValueError):
        ProjectorSetting(np.array([1.0, 1.0]), np.array([1.0, 0.0]))
    s = ProjectorSetting(ANALYZERS["D"].copy(), ANALYZERS["L"].copy())
    assert np.allclose(s.ket, np.kron(ANALYZERS["D"], ANALYZERS["L"]))


def test_expected_coincidences_frozen():
    src = calibrate_source(0.925, 1.38)
    det = DetectorModel()
    out = source_state(src)
    hh = ProjectorSetting(ANALYZERS["H"].copy(), ANALYZERS["H"].copy())
    vv = ProjectorSetting(ANALYZERS["V"].copy(), ANALYZERS["V"].copy())
    n_hh = expected_coincidences(out, hh, src, det, 1_000_000)
    n_vv = expected_coincidences(out, vv, src, det, 1_000_000)
    assert abs(n_hh - 195.80297508217956) < 1e-9
    assert abs(n_vv - 141.8866544073765) < 1e-9
    # dark floor included: dark_prob^2 * pulses = 1.6e-3
    assert abs(n_hh / n_vv - 1.38) < 1e-4
    assert abs(expected_coincidences(out, hh, src, det, 2_000_000) - 2 * n_hh) < 1e-9


def test_expected_coincidences_floors():
    src = calibrate_source(0.925, 1.38)
    out = source_state(src)
    hh = ProjectorSetting(ANALYZERS["H"].copy(), ANALYZERS["H"].copy())
    base = expected_coincidences(out, hh, src, QUIET, 1_000_000)
    with_floor = expected_coincidences(
        out, hh, src, DetectorModel(efficiency=0.20, dark_prob=0.0, accidental_floor=1e-6), 1_000_000
    )
    assert abs(with_floor - base - 1.0) < 1e-9


def test_simulate_counts_deterministic():
    src = calibrate_source(0.925, 1.38)
    det = DetectorModel()
    out = source_state(src)
    s36 = settings_36()
    a = simulate_counts(out, s36, src, det, 1_000_000, seed=42)
    b = simulate_counts(out, s36, src, det, 1_000_000, seed=42)
    c = simulate_counts(out, s36, src, det, 1_000_000, seed=43)
    assert [r.observed for r in a] == [r.observed for r in b]
    assert [r.observed for r in a] != [r.observed for r in c]
    for i, r in enumerate(a):
        assert r.index == i and r.observed >= 0
        assert abs(r.expected - expected_coincidences(out, s36[i], src, det, 1_000_000)) < 1e-9


def test_simulate_counts_poisson_mean():
    src = calibrate_source(0.925, 1.38)
    det = DetectorModel()
    out = source_state(src)
    s36 = settings_36()
    totals = np.zeros(36)
    n_rep = 200
    for k in range(n_rep):
        totals += [r.observed for r in simulate_counts(out, s36, src, det, 1_000_000, seed=k)]
    expect = np.array([r.expected for r in simulate_counts(out, s36, src, det, 1_000_000, seed=0)])
    # relative agreement ~ 5 sigma / sqrt(n_rep * N)
    assert np.abs(totals / n_rep - expect).max() < 5 * np.sqrt(expect.max() / n_rep)


def test_count_record_validation():
    with pytest.raises(ValueError):
        CountRecord(index=0, expected=1.0, observed=-1)


def test_reconstruct_roundtrip_exact():
    src = calibrate_source(0.925, 1.38)
    out = source_state(src)
    for settings in (settings_36(), settings_16()):
        counts = exact_counts(out, settings, src, QUIET, 10**10)
        rho = project_physical(reconstruct(counts, settings))
        assert trace_distance(rho, out.rho) < 1e-6  # rounding-limited at 1e10 pulses


def test_reconstruct_roundtrip_random_states():
    rng = np.random.default_rng(73)
    src = calibrate_source(0.925, 1.38)
    for settings in (settings_36(), settings_16()):
        for _ in range(10):
            rho = random_state(rng)
            outcome = ChannelOutcome(rho=rho, rate=1.0)
            expect = [
                expected_coincidences(outcome, s, src, QUIET, 1_000_000) for s in settings
            ]
            recon = reconstruct(expect, settings)  # plain reals accepted
            assert trace_distance(recon, rho) < 1e-8


def test_reconstruct_errors():
    s36 = settings_36()
    with pytest.raises(ValueError):
        reconstruct([0.0] * 36, s36)
    with pytest.raises(ValueError):
        reconstruct([1.0] * 10, s36)  # wrong length
    with pytest.raises(ValueError):
        reconstruct([1.0] * 10, s36[:10])  # rank deficient


def test_project_physical():
    rho = bell_state(BellKind.PHI_PLUS)
    assert trace_distance(project_physical(rho), rho) < 1e-12
    # small negative eigenvalue gets clipped, deficit redistributed
    bad = np.diag([0.6, 0.3, 0.15, -0.05]).astype(complex)
    fixed = project_physical(bad)
    vals = np.linalg.eigvalsh(fixed)
    assert vals.min() >= -1e-12
    assert abs(np.trace(fixed).real - 1) < 1e-12
    assert np.allclose(np.diag(fixed).real[:3], [0.6 - 0.05 / 3, 0.3 - 0.05 / 3, 0.15 - 0.05 / 3])
    # idempotent
    assert trace_distance(project_physical(fixed), fixed) < 1e-12
    with pytest.raises(ValueError):
        project_physical(np.eye(4, dtype=complex))


def test_noisy_reconstruction_sanity():
    src = calibrate_source(0.925, 1.38)
    det = DetectorModel()
    out = source_state(src)
    s36 = settings_36()
    counts = simulate_counts(out, s36, src, det, 1_000_000, seed=2026)
    rho = project_physical(reconstruct(counts, s36))
    assert trace_distance(rho, out.rho) < 0.1
    assert abs(concurrence(rho) - 0.925) < 0.06
