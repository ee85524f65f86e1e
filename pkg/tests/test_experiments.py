import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tikcurve import ConfigError, DiscreteVectorField, bregman_error, l2_norm, load_field
from tikcurve.cli import main
from tikcurve.experiments import (
    PUBLISHED_GAMMA,
    ExperimentConfig,
    default_config,
    fit_rate_slope,
    level_rng,
    run_denoising_rates,
    run_magnetization,
    run_seminorm_compare,
    synthesize_noisy_data,
    validate_schedule,
)
from tikcurve.geometry import circle, parameter_grid, semicircle_graph, sine_graph


@pytest.fixture(scope="module")
def denoising_report():
    return run_denoising_rates(default_config("denoising_rates"), include_zero_noise=True)


def unit_field(scale=1.0):
    c = circle()
    t = parameter_grid(c, 256)
    return DiscreteVectorField(c, t, np.tile([scale, 0.0], (256, 1)))


def test_noise_examples():
    u = unit_field(10 / np.sqrt(2 * np.pi))  # ||u|| = 10
    assert l2_norm(u) == pytest.approx(10.0)
    same, delta = synthesize_noisy_data(u, 0.0, 1)
    np.testing.assert_array_equal(same.values, u.values)
    assert delta == 0.0
    noisy, delta = synthesize_noisy_data(u, 0.5, 1)
    assert delta == pytest.approx(5.0, rel=1e-12)
    assert l2_norm(noisy - u) == pytest.approx(5.0, rel=1e-12)
    again, _ = synthesize_noisy_data(u, 0.5, 1)
    np.testing.assert_array_equal(again.values, noisy.values)
    with pytest.raises(ValueError):
        synthesize_noisy_data(unit_field(0.0), 0.5, 1)
    with pytest.raises(ValueError):
        synthesize_noisy_data(u, -0.1, 1)


@settings(max_examples=30, deadline=None)
@given(st.floats(1e-3, 10.0), st.integers(0, 2**63 - 1))
def test_noise_hits_nsr_exactly(nsr, seed):
    u = unit_field(2.0)
    noisy, delta = synthesize_noisy_data(u, nsr, seed)
    assert delta / l2_norm(u) == pytest.approx(nsr, rel=1e-10)


def test_level_streams_are_independent():
    a = level_rng(42, 0, 0).standard_normal(4)
    b = level_rng(42, 0, 1).standard_normal(4)
    c = level_rng(42, 1, 0).standard_normal(4)
    np.testing.assert_array_equal(a, level_rng(42, 0, 0).standard_normal(4))
    assert not np.allclose(a, b) and not np.allclose(a, c)


def test_config_validation(tmp_path):
    base = default_config("magnetization").to_dict()
    for broken in (
        {**base, "kind": "nope"},
        {**base, "schedule": {**base["schedule"], "alpha": [1.0]}},
        {**base, "schedule": {**base["schedule"], "h_s": [-1.0, 1, 1, 1]}},
        {**base, "schedule": {**base["schedule"], "alpha": [0.0, 1, 1, 1]}},
        {k: v for k, v in base.items() if k != "schedule"},
    ):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(broken)
    ok = {**base, "kind": "direct_inverse", "schedule": {**base["schedule"], "alpha": [0.0] * 4}}
    ExperimentConfig.from_dict(ok)
    path = tmp_path / "c.json"
    path.write_text(json.dumps(base))
    assert ExperimentConfig.from_file(path).to_dict() == base
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file(path)


def test_denoising_report_structure(denoising_report):
    r = denoising_report
    assert [row["level"] for row in r.rows] == [1, 2, 3, 4, 5]
    np.testing.assert_allclose(np.diag(r.cross_table), r.diagonal)
    deltas = [row["delta"] for row in r.rows]
    # delta scales the discrete norm of the truth, which converges with the grid
    np.testing.assert_allclose(np.array(deltas[:-1]) / deltas[1:], 2.0, rtol=1e-3)
    for row in r.rows:
        truth = r.fields[f"level{row['level']}_truth"]
        assert row["delta"] == pytest.approx(row["nsr"] * l2_norm(truth), rel=1e-12)
    assert r.slope == pytest.approx(fit_rate_slope(deltas, r.diagonal))
    assert all(o["passed"] for o in r.optimality)


def test_cross_table_patterns(denoising_report):
    T = denoising_report.cross_table
    assert np.all(np.diff(T, axis=1) < 0), "errors decrease as the noise decreases along a row"
    assert np.all(denoising_report.zero_noise_column < T.min(axis=1))


def test_alpha_sweep_shape():
    cfg = default_config("denoising_rates")
    errs = []
    for a in np.logspace(-4, 1, 9):
        sch = {k: [v[2]] * 2 for k, v in cfg.schedule.items()}
        sch["alpha"] = [a, a]
        r = run_denoising_rates(ExperimentConfig("denoising_rates", sch, cfg.geometry),
                                keep_fields=False)
        errs.append(r.rows[0]["bregman_error"])
    k = int(np.argmin(errs))
    assert all(np.diff(errs[:k + 1]) <= 0) and all(np.diff(errs[k:]) >= 0)


def test_emitted_error_is_reproducible(tmp_path, denoising_report):
    from tikcurve.experiments import write_outputs

    write_outputs(denoising_report, tmp_path, default_config("denoising_rates"))
    c = sine_graph()
    for row in denoising_report.rows:
        k = row["level"]
        u = load_field(tmp_path / "fields" / f"level{k}_solution.txt", c)
        truth = load_field(tmp_path / "fields" / f"level{k}_truth.txt", c)
        assert bregman_error(u, truth) == pytest.approx(row["bregman_error"], rel=1e-12)
    header = (tmp_path / "table.csv").read_text().splitlines()[0]
    assert header == "level,h_s,h_u,gamma,nsr,delta,alpha,bregman_error"


def test_magnetization_errors_decrease():
    r = run_magnetization(default_config("magnetization"), keep_fields=False)
    errs = [row["relative_l2_error"] for row in r.rows]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert all(row["normal_ratio"] < 0.05 for row in r.rows)
    assert all(row["optimality_ok"] for row in r.rows)


def test_noiseless_fine_magnetization():
    cfg = default_config("magnetization")
    sch = {k: [v[-1]] for k, v in cfg.schedule.items()}
    sch["nsr"], sch["alpha"] = [0.0], [1e-6]
    r = run_magnetization(ExperimentConfig("magnetization", sch, cfg.geometry), keep_fields=False)
    assert r.rows[0]["relative_l2_error"] < 0.1


def test_seminorm_compare_large_alpha_limit():
    cfg = default_config("seminorm_compare")
    cfg.options["alpha_grid"] = [1e-3, 1e6]
    r = run_seminorm_compare(cfg)
    assert r.summary["truth_split_seminorm"] < 1e-4
    assert r.summary["truth_ambient_seminorm"] > 1.0
    u = r.fields["best_split_seminorm"]
    a, b = u.frame_components()
    # constant in the spline frame, so only up to the frame mismatch in the exact one
    assert np.std(a) < 0.01 * np.abs(a).mean() and np.std(b) < 0.01 * np.abs(b).mean()


def test_validate_schedule_examples():
    halving = [{"alpha": 0.04 / 2**k, "delta": 1.0 / 2**k, "gamma": g} for k, g in enumerate(PUBLISHED_GAMMA)]
    diag = validate_schedule(halving)
    assert diag.ok
    ratios = [lv["delta^2/alpha"] for lv in diag.levels]
    np.testing.assert_allclose(np.array(ratios) / [lv["delta"] for lv in halving], 25.0)
    constant_alpha = [{"alpha": 0.01, "delta": 1.0 / 2**k} for k in range(4)]
    flags = validate_schedule(constant_alpha).flags
    assert any("alpha not decreasing" in f and "gamma1" in f for f in flags)
    fast = [{"alpha": 0.1 / 8**k, "delta": 1.0 / 2**k} for k in range(4)]
    assert any(f.startswith("delta^2/alpha") for f in validate_schedule(fast).flags)
    with pytest.raises(ConfigError):
        validate_schedule(halving[:1])
    assert {lv["dominant"] for lv in diag.levels} <= {"rho^2/alpha", "gamma2^2/alpha",
                                                      "delta^2/alpha", "gamma1"}


def test_cli_denoise_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["denoise-rates", "--out", str(a)]) == 0
    assert main(["denoise-rates", "--out", str(b), "--seed", "42"]) == 0
    assert (a / "table.csv").read_bytes() == (b / "table.csv").read_bytes()
    assert (a / "cross_table.csv").exists()
    report = dict(line.split(" = ") for line in (a / "report.txt").read_text().splitlines())
    assert report["rng_seed"] == "42"
    c = tmp_path / "c"
    assert main(["denoise-rates", "--out", str(c), "--seed", "7"]) == 0
    assert (a / "table.csv").read_bytes() != (c / "table.csv").read_bytes()


def test_cli_config_and_errors(tmp_path):
    cfg = default_config("seminorm_compare").to_dict()
    cfg["options"]["alpha_grid"] = [1e-3, 1e-1]
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    assert main(["seminorm-compare", "--config", str(path), "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "fields" / "truth.txt").exists()
    # a config of the wrong kind is a validation failure
    assert main(["magnetize", "--config", str(path), "--out", str(tmp_path / "x")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["magnetize", "--config", str(bad), "--out", str(tmp_path / "y")]) == 2


def test_cli_validate_schedule(tmp_path, capsys):
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"levels": [{"alpha": 0.04 / 2**k, "delta": 1 / 2**k}
                                           for k in range(3)]}))
    assert main(["validate-schedule", "--config", str(good)]) == 0
    assert "schedule ok" in capsys.readouterr().out
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"levels": [{"alpha": 0.01, "delta": 1 / 2**k} for k in range(3)]}))
    assert main(["validate-schedule", "--config", str(bad), "--out", str(tmp_path / "r.txt")]) == 2
    assert "FLAG" in (tmp_path / "r.txt").read_text()


def test_cli_solver_failure_exit_code(tmp_path, monkeypatch):
    from tikcurve import SolverError
    import tikcurve.cli as cli

    def boom(config):
        raise SolverError("indefinite system", {"min_diag": -1.0})

    monkeypatch.setattr(cli, "run_experiment", boom)
    assert main(["magnetize", "--out", str(tmp_path / "z")]) == 3


def test_magnetize_cli_outputs(tmp_path):
    cfg = default_config("magnetization").to_dict()
    cfg["schedule"] = {k: v[:2] for k, v in cfg["schedule"].items()}
    path = tmp_path / "m.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / "m"
    assert main(["magnetize", "--config", str(path), "--out", str(out)]) == 0
    rows = (out / "table.csv").read_text().splitlines()
    assert len(rows) == 3
    report = (out / "report.txt").read_text()
    assert "best_relative_l2_error" in report
    S = semicircle_graph()
    u = load_field(out / "fields" / "level2_solution.txt", S)
    truth = load_field(out / "fields" / "level2_truth.txt", S)
    err = l2_norm(u - truth) / l2_norm(truth)
    assert f"{err:.6g}" == f"{float(rows[2].split(',')[header_index(rows[0], 'relative_l2_error')]):.6g}"


def header_index(header, name):
    return header.split(",").index(name)
