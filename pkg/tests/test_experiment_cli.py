import math
import os

import numpy as np
import pytest

from saltls.cli import main
from saltls.completion import default_parameters, default_t_median
from saltls.errors import UsageError
from saltls.experiment import (
    CellResult,
    ExperimentSpec,
    parse_noise_model,
    read_sweep_csv,
    resolve_config,
    run_cell,
    run_sweep,
    success_rates,
    write_sweep_csv,
)
from saltls.generators import InstanceSpec, generate_instance
from saltls.nsi import NoiseModel


@pytest.fixture(scope="module")
def truth():
    return generate_instance(
        InstanceSpec(n=40, k=2, mu_target=6.0, seed=5, condition_number=2.0)
    )


def write_cfg(path, lines):
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return str(path)


INSTANCE_LINES = [
    "instance.n=40",
    "instance.k=2",
    "instance.mu_target=6.0",
    "instance.seed=5",
    "instance.condition_number=2.0",
]


def test_resolve_config_defaults(truth):
    cfg = resolve_config(truth)
    mu, L = default_parameters(truth.n, truth.k, 1e-3, truth.gamma_k, truth.mu_star)
    assert cfg.k == truth.k
    assert cfg.mu == pytest.approx(mu)
    assert cfg.L == L
    assert cfg.t_median == default_t_median(truth.n)
    assert cfg.init_iters == math.ceil(10.0 * math.log(truth.n) / truth.gamma_k)
    over = resolve_config(truth, eps=0.05, L=4, mu=40.0, t_median=1,
                          mu_init=8.0, init_iters=20, seed=9)
    assert (over.eps, over.L, over.mu, over.t_median) == (0.05, 4, 40.0, 1)
    assert (over.mu_init, over.init_iters, over.seed) == (8.0, 20, 9)


def test_run_cell_deterministic(truth):
    cfg = resolve_config(truth, eps=0.05, L=4, mu=40.0, t_median=1)
    a = run_cell(truth, 0.9, 3, cfg)
    b = run_cell(truth, 0.9, 3, cfg)
    assert a.subspace_err == b.subspace_err
    assert a.frob_rel_err == b.frob_rel_err
    assert a.success == b.success
    assert a.p == 0.9 and a.seed == 3


def make_spec():
    return ExperimentSpec(
        instance=InstanceSpec(n=40, k=2, mu_target=6.0, seed=5,
                              condition_number=2.0),
        p_grid=(0.85, 0.95),
        seeds=(0, 1),
        eps=0.05,
        L=4,
        mu=40.0,
        t_median=1,
    )


def test_run_sweep_parallel_matches_serial():
    spec = make_spec()
    serial = run_sweep(spec, jobs=1)
    parallel = run_sweep(spec, jobs=2)
    assert len(serial) == len(parallel) == 4
    for a, b in zip(serial, parallel):
        assert (a.p, a.seed) == (b.p, b.seed)
        assert a.subspace_err == b.subspace_err
        assert a.frob_rel_err == b.frob_rel_err
        assert a.success == b.success
    assert [(r.p, r.seed) for r in serial] == [
        (0.85, 0), (0.85, 1), (0.95, 0), (0.95, 1)
    ]


def test_sweep_csv_round_trip(tmp_path):
    spec = make_spec()
    results = run_sweep(spec, jobs=1)
    path = tmp_path / "sweep.csv"
    write_sweep_csv(path, results)
    back = read_sweep_csv(path)
    for a, b in zip(results, back):
        assert a.p == b.p and a.seed == b.seed
        assert a.subspace_err == b.subspace_err
        assert a.frob_rel_err == b.frob_rel_err
        assert a.success == b.success
    bad = tmp_path / "bad.csv"
    bad.write_text("wrong,header\n1,2\n")
    with pytest.raises(UsageError):
        read_sweep_csv(bad)


def test_experiment_spec_from_config_round_trip(tmp_path):
    path = write_cfg(tmp_path / "sweep.cfg", INSTANCE_LINES + [
        "p_grid=0.85,0.95",
        "seeds=2",
        "algo.eps=0.05",
        "algo.L=4",
        "algo.mu=40.0",
        "algo.t_median=1",
    ])
    from saltls.experiment import load_experiment_spec

    spec = load_experiment_spec(path)
    assert spec == make_spec()
    with pytest.raises(UsageError):
        load_experiment_spec(str(tmp_path / "missing.cfg"))
    nogrid = write_cfg(tmp_path / "nogrid.cfg", INSTANCE_LINES + ["seeds=2"])
    with pytest.raises(UsageError):
        load_experiment_spec(nogrid)
    explicit = write_cfg(tmp_path / "list.cfg", INSTANCE_LINES + [
        "p_grid=0.9", "seeds=4,7",
    ])
    assert load_experiment_spec(explicit).seeds == (4, 7)


def test_success_rates():
    rows = [
        CellResult(p=0.5, seed=0, subspace_err=0.0, frob_rel_err=0.0,
                   success=True, seconds=0.0),
        CellResult(p=0.5, seed=1, subspace_err=0.0, frob_rel_err=0.0,
                   success=False, seconds=0.0),
        CellResult(p=0.9, seed=0, subspace_err=0.0, frob_rel_err=0.0,
                   success=True, seconds=0.0),
    ]
    assert success_rates(rows) == [(0.5, 0.5), (0.9, 1.0)]


def test_parse_noise_model():
    assert parse_noise_model("zero").kind == NoiseModel.zero().kind
    assert parse_noise_model("gaussian:0.1").kind == "gaussian"
    assert parse_noise_model("admissible:1e-3").kind == "admissible-gaussian"
    for bad in ("zero:1", "gaussian:x", "admissible:", "frobnicate"):
        with pytest.raises(UsageError):
            parse_noise_model(bad)


def test_cli_generate_and_complete(tmp_path, capsys):
    spec_path = write_cfg(tmp_path / "inst.cfg", [
        "n=40", "k=2", "mu_target=6.0", "seed=5", "condition_number=2.0",
    ])
    inst_dir = str(tmp_path / "inst")
    assert main(["generate", "--spec", spec_path, "--out", inst_dir]) == 0
    assert os.path.isfile(os.path.join(inst_dir, "instance.cfg"))
    assert os.path.isfile(os.path.join(inst_dir, "basis.txt"))

    algo_path = write_cfg(tmp_path / "algo.cfg", [
        "algo.eps=0.05", "algo.L=4", "algo.mu=40.0", "algo.t_median=1",
    ])
    out_dir = str(tmp_path / "run")
    code = main(["complete", "--instance", inst_dir, "--p", "0.9",
                 "--seed", "3", "--config", algo_path, "--out", out_dir])
    assert code == 0
    assert os.path.isfile(os.path.join(out_dir, "X.txt"))
    assert os.path.isfile(os.path.join(out_dir, "Y.txt"))
    with open(os.path.join(out_dir, "metrics.csv")) as fh:
        lines = fh.read().splitlines()
    assert lines[0].startswith("p,seed,subspace_err")
    assert len(lines) == 2
    out = capsys.readouterr().out
    assert "rel_err=" in out


def test_cli_sweep_report_and_determinism(tmp_path):
    spec_path = write_cfg(tmp_path / "sweep.cfg", INSTANCE_LINES + [
        "p_grid=0.85,0.95",
        "seeds=2",
        "algo.eps=0.05",
        "algo.L=4",
        "algo.mu=40.0",
        "algo.t_median=1",
    ])
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    assert main(["sweep", "--spec", spec_path, "--out", out1]) == 0
    assert main(["sweep", "--spec", spec_path, "--out", out2, "--jobs", "2"]) == 0
    with open(os.path.join(out1, "sweep.csv"), "rb") as fh:
        first = fh.read()
    with open(os.path.join(out2, "sweep.csv"), "rb") as fh:
        second = fh.read()
    assert first == second  # byte identical, timing lives in the sidecar
    assert os.path.isfile(os.path.join(out1, "timing.csv"))

    fig_dir = str(tmp_path / "figs")
    assert main(["report", "--results", out1, "--out", fig_dir]) == 0
    assert os.path.isfile(os.path.join(fig_dir, "sweep_success.png"))
    assert os.path.isfile(os.path.join(fig_dir, "sweep_error.png"))

    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["report", "--results", str(empty)]) == 1


def test_cli_nsi(tmp_path):
    cfg_path = write_cfg(tmp_path / "nsi.cfg", [
        "instance.n=30",
        "instance.k=2",
        "instance.mu_target=6.0",
        "instance.seed=1",
        "instance.condition_number=2.0",
        "L=8",
        "seeds=2",
        "x0_sin=0.3",
        "noise=gaussian:0.05",
    ])
    out_dir = str(tmp_path / "traces")
    assert main(["nsi", "--config", cfg_path, "--out", out_dir]) == 0
    assert os.path.isfile(os.path.join(out_dir, "trace_0.csv"))
    assert os.path.isfile(os.path.join(out_dir, "trace_1.csv"))
    from saltls.nsi import ConvergenceTrace

    trace = ConvergenceTrace.read_csv(os.path.join(out_dir, "trace_0.csv"))
    assert len(trace) == 9  # step 0 plus L

    out2 = str(tmp_path / "traces2")
    assert main(["nsi", "--config", cfg_path, "--out", out2]) == 0
    with open(os.path.join(out_dir, "trace_0.csv"), "rb") as fh:
        a = fh.read()
    with open(os.path.join(out2, "trace_0.csv"), "rb") as fh:
        b = fh.read()
    assert a == b

    report_dir = str(tmp_path / "nsi_figs")
    assert main(["report", "--results", out_dir, "--out", report_dir]) == 0
    assert os.path.isfile(os.path.join(report_dir, "nsi_convergence.png"))


def test_cli_error_exit_codes(tmp_path, capsys):
    # usage problems: exit 1
    assert main(["frobnicate"]) == 1
    assert main([]) == 1
    inst_cfg = write_cfg(tmp_path / "inst.cfg", [
        "n=40", "k=2", "mu_target=6.0", "seed=5", "condition_number=2.0",
    ])
    inst_dir = str(tmp_path / "inst")
    assert main(["generate", "--spec", inst_cfg, "--out", inst_dir]) == 0
    assert main(["complete", "--instance", inst_dir, "--p", "1.5",
                 "--seed", "0", "--out", str(tmp_path / "x")]) == 1
    assert main(["generate", "--spec", str(tmp_path / "nope.cfg"),
                 "--out", str(tmp_path / "y")]) == 1
    missing_keys = write_cfg(tmp_path / "short.cfg", ["n=40", "k=2"])
    assert main(["generate", "--spec", missing_keys,
                 "--out", str(tmp_path / "z")]) == 1

    # numerical failure: exit 2 (size-derived step count starves the
    # per-step samples at this small n, the first solve comes back zero)
    assert main(["complete", "--instance", inst_dir, "--p", "0.5",
                 "--seed", "0", "--out", str(tmp_path / "fail")]) == 2

    # infeasible generation: exit 3
    low_mu = write_cfg(tmp_path / "low.cfg", [
        "n=40", "k=2", "mu_target=0.5", "seed=5", "condition_number=2.0",
    ])
    assert main(["generate", "--spec", low_mu, "--out", str(tmp_path / "w")]) == 3
    bad_noise = write_cfg(tmp_path / "noise.cfg", [
        "n=40", "k=2", "mu_target=6.0", "seed=5", "condition_number=2.0",
        "noise_fraction=0.5", "mu_n=0.001",
    ])
    assert main(["generate", "--spec", bad_noise,
                 "--out", str(tmp_path / "v")]) == 3
    capsys.readouterr()
