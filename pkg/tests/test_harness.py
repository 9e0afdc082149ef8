import json
import math

import numpy as np
import pytest

from levelline.boundary import MeasurePair, RadonMeasure, reversed_pair
from levelline.harness import (
    OBSERVABLE_HEADER,
    SUITES,
    ExperimentConfig,
    HarnessError,
    StudyReport,
    circle_exits,
    config_hash,
    exit_angles,
    flip_signs,
    load_config,
    reversal_ks,
    run_approximation_study,
    run_reversal_study,
    run_simulate,
    run_suite,
    write_table,
)
from levelline.loewner import DrivingPath


# config


def test_config_round_trip_and_hash():
    cfg = ExperimentConfig(paths=3, seed=4, out="a")
    again = ExperimentConfig.from_dict(cfg.to_dict())
    assert again == cfg
    other = ExperimentConfig(paths=3, seed=4, out="b")
    assert config_hash(cfg) == config_hash(other)
    assert config_hash(cfg) != config_hash(ExperimentConfig(paths=3, seed=5))


def test_config_rejects_unknown_keys_and_bad_grids():
    with pytest.raises(HarnessError):
        ExperimentConfig.from_dict({"paht": 3})
    with pytest.raises(HarnessError):
        ExperimentConfig(dt=0)
    with pytest.raises(HarnessError):
        ExperimentConfig(paths=0)


def test_load_config_with_boundary_file(tmp_path):
    (tmp_path / "pair.json").write_text(json.dumps({"atomsR": [[0.0, -0.5]]}))
    (tmp_path / "cfg.json").write_text(json.dumps({"boundary": "pair.json", "paths": 2}))
    cfg = load_config(tmp_path / "cfg.json")
    assert cfg.pair().right.atoms == ((0.0, -0.5),)
    with pytest.raises(HarnessError):
        load_config(tmp_path / "missing.json")


def test_density_pairs_are_quantized_before_simulation():
    cfg = ExperimentConfig(boundary="tanh", atoms=8)
    exact, atomic = cfg.pair(), cfg.atomic_pair()
    assert not exact.is_atomic and atomic.is_atomic
    for a, b in ((exact.left, atomic.left), (exact.right, atomic.right)):
        assert len(b.atoms) <= 8 + len(a.atoms)
        assert b.total_mass == pytest.approx(a.total_mass, abs=1e-12)
    assert cfg.sle().pair == atomic
    with pytest.raises(HarnessError):
        ExperimentConfig(atoms=0)


# simulate


def test_run_simulate_files(tmp_path):
    cfg = ExperimentConfig(paths=10, T=0.05, dt=1e-3, out=str(tmp_path / "run"))
    files = run_simulate(cfg)
    csvs = [f for f in files if f.suffix == ".csv"]
    assert len(csvs) == 30
    for i in range(10):
        rows = [len((tmp_path / "run" / f"{kind}_{i:04d}.csv").read_text().splitlines()) for kind in ("path", "curve", "observable")]
        assert len(set(rows)) == 1
    head = (tmp_path / "run" / "observable_0000.csv").read_text().splitlines()[0]
    assert head == ",".join(OBSERVABLE_HEADER)
    manifest = json.loads((tmp_path / "run" / "manifest.json").read_text())
    assert manifest["config_hash"] == config_hash(cfg)


def test_run_simulate_is_byte_identical(tmp_path):
    a = ExperimentConfig(paths=2, T=0.05, boundary={"atomsR": [[0.0, -0.5]]}, out=str(tmp_path / "a"))
    b = ExperimentConfig.from_dict({**a.to_dict(), "out": str(tmp_path / "b")})
    fa = run_simulate(a)
    fb = run_simulate(b)
    for x, y in zip(fa, fb):
        assert x.read_bytes() == y.read_bytes()


def test_run_simulate_threshold_sidecar(tmp_path):
    cfg = ExperimentConfig(paths=1, T=0.1, boundary={"atomsR": [[0.0, -2.0]]}, out=str(tmp_path / "t"))
    files = run_simulate(cfg)
    ev = [f for f in files if f.name.startswith("events_")]
    assert len(ev) == 1
    assert json.loads(ev[0].read_text())[0]["side"] == "R"
    rows = (tmp_path / "t" / "path_0000.csv").read_text().splitlines()
    assert len(rows) - 1 < 101


def test_run_simulate_with_density_boundary(tmp_path):
    cfg = ExperimentConfig(paths=1, T=0.05, boundary={"densityR": [[0.0, 1.0, 0.5]]}, atoms=4, out=str(tmp_path))
    run_simulate(cfg)
    header = (tmp_path / "path_0000.csv").read_text().splitlines()[0]
    assert header.startswith("t,W,V1")


def test_write_table_full_precision(tmp_path):
    p = write_table(tmp_path / "x.csv", ["a", "b"], [[1 / 3, math.pi]])
    back = np.loadtxt(p, delimiter=",", skiprows=1)
    assert back[0] == 1 / 3 and back[1] == math.pi


# studies


def test_approximation_study_atomic_input_is_flat(tmp_path):
    pair = MeasurePair(RadonMeasure("L"), RadonMeasure("R", ((0.0, -0.5), (1.0, 0.5))))
    rep = run_approximation_study(pair, (2, 4), paths=5, T=0.1, dt=1e-3, out=tmp_path)
    assert rep.stats["sup_error"] == [0.0, 0.0]
    assert rep.stats["ks"] == [0.0]
    assert rep.stats["dstar_mean"] == [0.0]
    assert (tmp_path / "approx_sup.csv").exists()


def test_approximation_study_needs_two_resolutions():
    with pytest.raises(HarnessError):
        run_approximation_study(MeasurePair(), (4,), paths=2)


def test_circle_exits():
    z = np.array([0.0, 0.5j, 2.0j, 0.5 + 0.5j, 2.0 + 0.0j])
    ex = circle_exits(z)
    assert ex[0] == pytest.approx(math.pi / 2)
    assert len(ex) == 2


def test_exit_angles_of_vertical_slit():
    path = DrivingPath(1e-3, np.zeros(1001))
    first, last = exit_angles(path)
    assert first == pytest.approx(math.pi / 2)
    assert last == pytest.approx(math.pi / 2)


def test_flip_signs_and_reversal_of_atom_pair():
    p = MeasurePair(RadonMeasure("L"), RadonMeasure("R", ((1.0, 1.0),)))
    r = reversed_pair(p)
    assert r.left.atoms == ((0.0, 1.0), (-1.0, -1.0))
    f = flip_signs(r)
    assert f.left.atoms == ((0.0, -1.0), (-1.0, 1.0))
    assert flip_signs(MeasurePair()) == MeasurePair()


@pytest.mark.filterwarnings("ignore:ks_2samp")
def test_reversal_ks_of_identical_mirror_ensembles():
    rng = np.random.default_rng(0)
    a = rng.uniform(0.2, 2.9, (200, 2))
    b = math.pi - a[:, ::-1]
    res = reversal_ks(a, b)
    # pi - (pi - x) may differ from x in the last bit
    assert all(v["statistic"] <= 0.01 and v["p"] > 0.99 for v in res.values())


def test_reversal_study_small(tmp_path):
    rep = run_reversal_study(MeasurePair(), paths=8, T=2.0, dt=2e-3, control=False, out=tmp_path)
    assert set(rep.flags) == {"reversal_ks"}
    assert (tmp_path / "reversal_exits.csv").exists()


def test_symmetric_pair_has_symmetric_exits():
    # mirror-symmetric measures: the first exit law is symmetric about pi/2
    from levelline.harness import exit_ensemble
    from scipy import stats

    pair = MeasurePair(RadonMeasure("L", ((-1.0, 0.5),)), RadonMeasure("R", ((1.0, 0.5),)))
    a = exit_ensemble(pair, 60, 3, T=2.0, dt=2e-3)[:, 0]
    assert stats.ks_2samp(a, math.pi - a).pvalue >= 0.01


# suites and reports


def test_report_dict_and_write(tmp_path):
    rep = StudyReport("x", {"v": np.float64(1.5), "a": np.arange(3)}, {"ok": np.True_}, "h", 1)
    d = rep.to_dict()
    assert d["passed"] is True
    assert d["stats"]["a"] == [0, 1, 2]
    assert d["provenance"] == {"config_hash": "h", "seed": 1, "version": rep.version}
    p = rep.write(tmp_path / "r.json")
    assert json.loads(p.read_text())["scenario"] == "x"


def test_loewner_oracle_suite(tmp_path):
    rep = run_suite("loewner-oracle", out=tmp_path)
    assert rep.passed
    assert (tmp_path / "loewner-oracle.json").exists()


def test_unknown_suite():
    assert "bm" in SUITES
    with pytest.raises(HarnessError):
        run_suite("nope")


def test_small_qv_suite():
    rep = run_suite("qv", paths=10, dt=1e-3)
    assert rep.passed
