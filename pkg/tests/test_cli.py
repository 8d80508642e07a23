import numpy as np
import pytest

from pdlsim.cli import RunConfig, load_config, main

G51 = 0.5871591987134815
DB_PER_NEPER = 8.685889638065037


def read_csv(path):
    return np.genfromtxt(path, delimiter=",", names=True)


def read_metrics(path):
    out = {}
    for line in path.read_text().splitlines():
        k, v = line.split("=")
        out[k] = float(v)
    return out


def test_load_config_full(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text(
        "# comment line\n"
        "source.c_b2b = 0.9\n"
        "source.hh_vv_ratio = 1.2   # trailing comment\n"
        "source.mu = 0.02\n"
        "\n"
        "det.efficiency = 0.5\n"
        "det.dark_prob = 1e-5\n"
        "tomo.pulses = 500000\n"
        "run.seed = 99\n"
        "run.noisy = yes\n"
    )
    cfg = load_config(p)
    assert cfg == RunConfig(
        c_b2b=0.9,
        hh_vv_ratio=1.2,
        mu=0.02,
        efficiency=0.5,
        dark_prob=1e-5,
        pulses=500_000,
        seed=99,
        noisy=True,
    )


def test_load_config_defaults(tmp_path):
    p = tmp_path / "empty.cfg"
    p.write_text("# nothing here\n\n")
    assert load_config(p) == RunConfig()


def test_load_config_errors(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("bogus.key = 1\n")
    with pytest.raises(ValueError):
        load_config(p)
    p.write_text("run.seed 99\n")
    with pytest.raises(ValueError):
        load_config(p)
    p.write_text("run.noisy = maybe\n")
    with pytest.raises(ValueError):
        load_config(p)


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig(pulses=0)
    with pytest.raises(ValueError):
        RunConfig(seed=-1)


def test_b2b_noiseless(tmp_path):
    assert main(["b2b", "--out", str(tmp_path)]) == 0
    metrics = read_metrics(tmp_path / "b2b_metrics.txt")
    assert abs(metrics["concurrence"] - 0.925) < 1e-9
    assert abs(metrics["hh_vv_ratio"] - 1.38) < 1e-9
    assert abs(metrics["purity"] - 0.938866693) < 1e-9
    assert abs(metrics["fidelity"] - 0.962365344) < 1e-9
    lines = (tmp_path / "b2b_density_matrix.csv").read_text().splitlines()
    assert lines[0] == "i,j,re,im"
    assert len(lines) == 17
    d = read_csv(tmp_path / "b2b_density_matrix.csv")
    rho = np.zeros((4, 4), dtype=complex)
    for row in d:
        rho[int(row["i"]), int(row["j"])] = row["re"] + 1j * row["im"]
    assert abs(np.trace(rho).real - 1) < 1e-8


def test_b2b_ideal_source(tmp_path):
    cfg = tmp_path / "ideal.cfg"
    cfg.write_text("source.c_b2b = 1\nsource.hh_vv_ratio = 1\n")
    main(["b2b", "--config", str(cfg), "--out", str(tmp_path)])
    d = read_csv(tmp_path / "b2b_density_matrix.csv")
    for row in d:
        i, j = int(row["i"]), int(row["j"])
        expect = 0.5 if (i in (0, 3) and j in (0, 3)) else 0.0
        assert abs(row["re"] - expect) < 1e-12 and abs(row["im"]) < 1e-12


def test_b2b_reruns_byte_identical(tmp_path):
    d1, d2 = tmp_path / "a", tmp_path / "b"
    main(["b2b", "--out", str(d1)])
    main(["b2b", "--out", str(d2)])
    assert (d1 / "b2b_density_matrix.csv").read_bytes() == (d2 / "b2b_density_matrix.csv").read_bytes()
    assert (d1 / "b2b_metrics.txt").read_bytes() == (d2 / "b2b_metrics.txt").read_bytes()


def test_b2b_noisy_determinism(tmp_path):
    d1, d2, d3 = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    main(["b2b", "--noisy", "--seed", "7", "--out", str(d1)])
    main(["b2b", "--noisy", "--seed", "7", "--out", str(d2)])
    main(["b2b", "--noisy", "--seed", "8", "--out", str(d3)])
    a = (d1 / "b2b_density_matrix.csv").read_bytes()
    assert a == (d2 / "b2b_density_matrix.csv").read_bytes()
    assert a != (d3 / "b2b_density_matrix.csv").read_bytes()
    metrics = read_metrics(d1 / "b2b_metrics.txt")
    assert abs(metrics["concurrence"] - 0.925) < 0.06  # shot noise envelope


def test_sweep_pdl_law_and_shape(tmp_path):
    main(["sweep-pdl", "--out", str(tmp_path), "--orientations", "6"])
    d = read_csv(tmp_path / "sweep_pdl.csv")
    assert d.shape[0] == 30  # five magnitudes x six orientations
    g = d["aggregate_pdl_db"] / DB_PER_NEPER
    assert np.abs(d["concurrence"] * np.cosh(g) - 0.925).max() < 1e-6
    assert np.abs(d["kappa"]).max() <= 1 + 1e-9
    axes = np.column_stack([d["ax1"], d["ax2"], d["ax3"]])
    assert np.abs(np.linalg.norm(axes, axis=1) - 1).max() < 1e-8


def test_sweep_pdl_zero_magnitude(tmp_path):
    main(["sweep-pdl", "--out", str(tmp_path), "--pdl-db", "0", "--orientations", "4"])
    d = read_csv(tmp_path / "sweep_pdl.csv")
    assert d.shape[0] == 4
    # aggregate reduces to the 1.4 dB source element regardless of orientation
    assert np.abs(d["aggregate_pdl_db"] - 1.39879086).max() < 1e-6
    assert np.abs(d["concurrence"] - 0.925 / np.cosh(np.log(1.38) / 2)).max() < 1e-6


def test_compensate_restores_baseline(tmp_path):
    theta = "0,0.7853981633974483,1.5707963267948966,2.356194490192345,3.141592653589793"
    main(["compensate", "--out", str(tmp_path), "--theta-list", theta])
    d = read_csv(tmp_path / "compensate.csv")
    assert d.shape[0] == 5
    assert np.abs(d["c_compensated"] - 0.925).max() < 1e-8
    assert (d["c_uncompensated"] < 0.925).all()
    assert (d["rate_comp"] <= d["rate_uncomp"] + 1e-12).all()
    # aggregate endpoints at theta = 0 and pi
    assert abs(d["aggregate_pdl_db"][-1] - 3.70120914) < 1e-6
    assert abs(d["aggregate_pdl_db"][0] - 6.49879086) < 1e-6
    axes = np.column_stack([d["axB1"], d["axB2"], d["axB3"]])
    assert np.abs(np.linalg.norm(axes, axis=1) - 1).max() < 1e-8


def test_compensate_pmd(tmp_path):
    main(["compensate", "--out", str(tmp_path), "--pmd-q", "0.155", "--theta-list", "0"])
    d = read_csv(tmp_path / "compensate.csv")
    assert abs(float(d["c_compensated"]) - 0.69) < 1e-8
    assert float(d["c_uncompensated"]) < 0.69


def test_tradeoff_envelope(tmp_path):
    main(["tradeoff", "--out", str(tmp_path), "--orientations", "16"])
    d = read_csv(tmp_path / "tradeoff.csv")
    assert d.shape[0] == 18  # lattice plus both exact endpoints
    assert (np.diff(d["kappa"]) >= 0).all()
    assert abs(d["kappa"][0] + 1) < 1e-12 and abs(d["kappa"][-1] - 1) < 1e-12
    assert abs(d["concurrence_norm"][0] - 1.0) < 1e-8
    assert abs(d["rate_norm"][0] - np.exp(-2 * G51)) < 1e-8
    assert abs(d["concurrence_norm"][-1] - 1 / np.cosh(2 * G51)) < 1e-8
    assert abs(d["rate_norm"][-1] - (1 + np.exp(-4 * G51)) / 2) < 1e-8
    assert np.abs(d["avg_entanglement"] - np.exp(-2 * G51)).max() < 1e-8


def test_tradeoff_with_pmd(tmp_path):
    main(["tradeoff", "--out", str(tmp_path), "--orientations", "8", "--pmd-q", "0.155"])
    d = read_csv(tmp_path / "tradeoff.csv")
    # normalized columns stay on the same conserved envelope
    assert np.abs(d["avg_entanglement"] - np.exp(-2 * G51)).max() < 1e-8
    assert abs(d["concurrence_norm"][0] - 1.0) < 1e-8


def test_entropy_feedback_outputs(tmp_path):
    main(["entropy-feedback", "--out", str(tmp_path), "--orientations", "16"])
    d = read_csv(tmp_path / "entropy_feedback.csv")
    assert d.shape[0] == 18
    assert (np.diff(d["kappa"]) >= 0).all()
    assert int(d["s_linear_A"].argmax()) == int(d["concurrence"].argmax())
    lines = (tmp_path / "entropy_feedback_reduced.csv").read_text().splitlines()
    assert lines[0] == "label,i,j,re,im"
    assert len(lines) == 13
    labels = [ln.split(",")[0] for ln in lines[1:]]
    assert labels == ["min"] * 4 + ["median"] * 4 + ["max"] * 4
    # each reduced block has unit trace
    for label in ("min", "median", "max"):
        rows = [ln.split(",") for ln in lines[1:] if ln.split(",")[0] == label]
        tr = sum(float(r[3]) for r in rows if r[1] == r[2])
        assert abs(tr - 1) < 1e-8


def test_entropy_feedback_span_default_rig(tmp_path):
    main(["entropy-feedback", "--out", str(tmp_path)])
    d = read_csv(tmp_path / "entropy_feedback.csv")
    assert d["s_linear_A"].min() <= 0.3
    assert d["s_linear_A"].max() >= 0.95


def test_verify_subcommand():
    assert main(["verify"]) == 0


def test_csv_formatting(tmp_path):
    main(["tradeoff", "--out", str(tmp_path), "--orientations", "16"])
    text = (tmp_path / "tradeoff.csv").read_text()
    assert text.endswith("\n")
    for line in text.splitlines()[1:]:
        for field in line.split(","):
            float(field)  # parses
            if "." in field and "e" not in field:
                assert len(field.replace("-", "").replace(".", "").lstrip("0")) <= 9


def test_noisy_sweep_runs(tmp_path):
    main(["sweep-pdl", "--out", str(tmp_path), "--noisy", "--pdl-db", "2.55",
          "--orientations", "4", "--seed", "3"])
    d = read_csv(tmp_path / "sweep_pdl.csv")
    assert d.shape[0] == 4
    # reconstructed concurrences track the law within shot noise
    g = d["aggregate_pdl_db"] / DB_PER_NEPER
    assert np.abs(d["concurrence"] * np.cosh(g) - 0.925).max() < 0.1
