import numpy as np
import pytest
from click.testing import CliRunner

from tracesweep.errors import ConfigurationError, DataError, MemoryGuardError
from tracesweep.geometry import Box, UniformGrid
from tracesweep.globalsys import GlobalSystem
from tracesweep.harness.cli import main
from tracesweep.harness.config import RunConfig, parse_override
from tracesweep.harness.experiments import run
from tracesweep.harness.io import read_csv, read_field, write_csv, write_field
from tracesweep.harness.metrics import compute_errors, fit_rate
from tracesweep.media import Constant
from tracesweep.pml import PmlSpec
from tracesweep.reference import make_reference
from tracesweep.sources import Gaussian, GridDelta


# configuration

def test_overrides_and_defaults():
    cfg = RunConfig.from_dict({"grid": {"n": 41}}, ["pml.width=8", "partition=[4, 2]", ("sweep.rounds", 2)])
    assert cfg.pml.width == 8 and cfg.partition_counts == (4, 2) and cfg.rounds == 2
    assert cfg.grid.shape == (41, 41) and cfg.dim == 2
    assert cfg.computational_box.lo == pytest.approx((-0.2, -0.2))
    assert parse_override("gmres.tol=1e-8") == ("gmres.tol", 1e-8)
    assert parse_override("media.kind=two_layered") == ("media.kind", "two_layered")


@pytest.mark.parametrize("tree,override", [
    ({"mode": "nope"}, None),
    ({}, "partition=[7, 7]"),
    ({"media": {"kind": "two_layered"}}, None),
    ({"media": {"kind": "foam"}}, None),
    ({}, "sweep.rounds=0"),
])
def test_config_errors(tree, override):
    with pytest.raises(ConfigurationError):
        cfg = RunConfig.from_dict(tree, [override] if override else [])
        cfg.rounds
    with pytest.raises(ConfigurationError):
        parse_override("no_equals_sign")


def test_density_floor():
    with pytest.raises(ConfigurationError, match="density"):
        RunConfig.from_dict({"grid": {"n": 21}, "media": {"kappa": 20 * np.pi}})
    cfg = RunConfig.from_dict({"grid": {"n": 61}, "media": {"kappa": 10 * np.pi}})
    assert cfg.check_density() == pytest.approx(2 * np.pi / (10 * np.pi / 60))


def test_load_errors(tmp_path):
    with pytest.raises(ConfigurationError):
        RunConfig.load(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("- just\n- a list\n")
    with pytest.raises(ConfigurationError):
        RunConfig.load(bad)


# outputs

def test_field_round_trip_is_bit_exact(tmp_path, rng):
    u = rng.standard_normal((5, 6, 7)) + 1j * rng.standard_normal((5, 6, 7))
    path = write_field(tmp_path / "u.bin", u, (0.1, 0.2, 0.3))
    v, h = read_field(path)
    assert v.tobytes() == u.tobytes() and h == (0.1, 0.2, 0.3)


def test_field_dump_errors(tmp_path):
    p = tmp_path / "x.bin"
    p.write_bytes(b"XXXX" + bytes(20))
    with pytest.raises(DataError):
        read_field(p)
    write_field(p, np.ones((2, 2)), (1.0, 1.0))
    p.write_bytes(p.read_bytes()[:-1])
    with pytest.raises(DataError):
        read_field(p)


def test_csv_round_trip(tmp_path):
    path = write_csv(tmp_path / "t.csv", [dict(a=0.1, b=(2, 3)), dict(a=1e-17, b="x")])
    rows = read_csv(path)
    assert float(rows[0]["a"]) == 0.1 and rows[0]["b"] == "2x3" and float(rows[1]["a"]) == 1e-17


# metrics

def test_errors_trivial_cases(rng):
    u = rng.standard_normal((8, 8)) + 1j
    assert compute_errors(u, u, (0.1, 0.1)) == (0.0, 0.0)
    l2, h1 = compute_errors(1.01 * u, u, (0.1, 0.1))
    assert l2 == pytest.approx(0.01) and h1 == pytest.approx(0.01)
    with pytest.raises(DataError):
        compute_errors(u, np.zeros_like(u), (0.1, 0.1))


def test_errors_manufactured_sine():
    """u_ref = 1 and u = 1 + a sin(pi x) on 10 x 10 nodes of the unit square.

    Per row, sum sin^2(pi i / 9) = 9/2 and the squared forward differences sum
    to 18 sin^2(pi / 18); with h = 1/9 the gradient term is 81 times that.
    """
    a = 0.01
    x = np.linspace(0.0, 1.0, 10)
    u_ref = np.ones((10, 10))
    u = u_ref + a * np.sin(np.pi * x)[:, None]
    l2, h1 = compute_errors(u, u_ref, (1 / 9, 1 / 9))
    assert l2 == pytest.approx(a * np.sqrt(45 / 100), rel=1e-12)
    assert h1 == pytest.approx(a * np.sqrt((45 + 14580 * np.sin(np.pi / 18) ** 2) / 100), rel=1e-12)


def test_fit_rate():
    h = np.array([0.1, 0.05, 0.025])
    assert fit_rate(h, 3 * h ** 2) == pytest.approx(2.0)


# references

def _unit(n):
    return UniformGrid(Box((0.0, 0.0), (1.0, 1.0)), (n, n))


def test_reference_r1_is_global_solve():
    g, m, pml = _unit(21), Constant(2 * np.pi), PmlSpec(6)
    src = Gaussian((0.4, 0.5), 2 * np.pi)
    gs = GlobalSystem(g, m, pml)
    np.testing.assert_array_equal(make_reference(g, m, pml, src, r=1), gs.solve(gs.embed(src.sample(g))))
    with pytest.raises(ConfigurationError):
        make_reference(g, m, pml, src, r=1, extrapolate=True)


def test_reference_refinement_changes_errors_little():
    g, m, pml = _unit(33), Constant(4 * np.pi), PmlSpec(8)
    src = Gaussian((0.45, 0.5), 4 * np.pi)
    gs = GlobalSystem(g, m, pml)
    u = gs.solve(gs.embed(src.sample(g)))[gs.interior]
    e = [compute_errors(u, make_reference(g, m, pml, src, r=r, extrapolate=True)[gs.interior], g.h)[0]
         for r in (2, 4)]
    assert abs(e[0] - e[1]) < 0.1 * e[1]


def test_delta_reference_decays_like_inverse_sqrt_distance():
    g, kappa = _unit(81), 10 * np.pi
    pml = PmlSpec(20)
    u = make_reference(g, Constant(kappa), pml, GridDelta((0.5, 0.5)), r=1)
    c = 20 + 40
    a, b = 8, 32  # nodes from the source: distances 0.1 and 0.4
    ratio = abs(u[c + b, c]) / abs(u[c + a, c])
    assert ratio == pytest.approx(np.sqrt(a / b), rel=0.15)


def test_reference_memory_guard():
    with pytest.raises(MemoryGuardError):
        make_reference(_unit(101), Constant(1.0), PmlSpec(10), GridDelta((0.5, 0.5)), r=4,
                       memory_limit=1e6)


# experiments

def _small(mode, tmp_path, **extra):
    tree = {"mode": mode, "grid": {"n": 33}, "partition": [2, 2],
            "media": {"kind": "constant", "kappa": 4 * np.pi}, "pml": {"width": 8},
            "output": {"dir": str(tmp_path)}}
    tree.update(extra)
    return RunConfig.from_dict(tree)


def test_direct_zero_source(tmp_path):
    res = run(_small("direct", tmp_path, source={"kind": "zero"}))
    assert res.rows[0]["l2_error"] == 0.0 and res.rows[0]["h1_error"] == 0.0
    u, _ = read_field(tmp_path / "field_0.bin")
    assert u.shape == (33, 33) and not np.any(u)
    assert (tmp_path / "direct.csv").exists()


def test_direct_gaussian(tmp_path):
    res = run(_small("direct", tmp_path, pml={"width": 16}))
    assert res.rows[0]["l2_error"] < 1e-3
    assert res.report.residual_history[-1] < 1e-3


def test_direct_four_sources(tmp_path):
    res = run(_small("direct", tmp_path, source={"kind": "four"}, output={"dir": str(tmp_path), "fields": False}))
    assert len(res.rows) == 4 and all(r["l2_error"] < 1e-2 for r in res.rows)


def test_converge_mode(tmp_path):
    cfg = _small("converge", tmp_path, grid={"n": 17, "min_density": 4},
                 media={"kind": "constant", "kappa": 2 * np.pi}, pml={"width": 8},
                 converge={"levels": [17, 33, 65]})
    res = run(cfg)
    assert res.summary["l2_rate"] == pytest.approx(2.0, abs=0.25)
    assert res.rows[-1]["mesh"] == "fit" and (tmp_path / "converge.csv").exists()


def test_converge_needs_three_levels(tmp_path):
    with pytest.raises(ConfigurationError):
        run(_small("converge", tmp_path, converge={"levels": [17, 33]}))


def test_precond_mode(tmp_path):
    cfg = _small("precond", tmp_path, precond={"ladder": [[2, 2]], "subdomain_intervals": 20, "density": 10},
                 gmres={"tol": 1e-6, "maxit": 10})
    res = run(cfg)
    row = res.rows[0]
    assert row["converged"] and row["n_iter"] <= 3 and row["true_residual"] < 1e-5


def test_pipeline_mode(tmp_path):
    cfg = RunConfig.from_dict({"mode": "pipeline", "output": {"dir": str(tmp_path)},
                               "pipeline": {"counts": [2, 2], "n_iter": 3, "n_rhs": 6, "t0": 1.0,
                                            "weak_scaling": [{"counts": [2, 2], "n_iter": 3, "n_rhs": 6},
                                                             {"counts": [4, 4], "n_iter": 3, "n_rhs": 7}]}})
    res = run(cfg)
    assert res.rows[0]["predicted"] == 12.5
    assert res.rows[-1]["efficiency"] < 1.0
    assert (tmp_path / "weak_scaling.csv").exists()


# command line

def test_cli_pipeline_and_errors(tmp_path):
    runner = CliRunner()
    out = runner.invoke(main, ["pipeline", "--out", str(tmp_path), "--set", "pipeline.counts=[2,2]",
                               "--set", "pipeline.n_iter=3", "--set", "pipeline.n_rhs=6"])
    assert out.exit_code == 0, out.output
    assert "predicted=12.5" in out.output and "wrote" in out.output
    bad = runner.invoke(main, ["solve", "--set", "grid.n=5", "--set", "media.kappa=100"])
    assert bad.exit_code != 0 and "density" in bad.output


def test_cli_solve_with_config_file(tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text("grid: {n: 33}\npartition: [2, 2]\nmedia: {kind: constant, kappa: 12.566}\n"
                   "pml: {width: 8}\nsource: {kind: zero}\n")
    out = CliRunner().invoke(main, ["solve", str(cfg), "--out", str(tmp_path / "o")])
    assert out.exit_code == 0, out.output
    assert "l2_error=0" in out.output
