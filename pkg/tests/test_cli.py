import csv
import io
import json

import numpy as np
import pytest

from troop import constants as C
from troop.cli import fmt, main
from troop.config import RunConfig, parse_config
from troop.errors import ValidationError


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_empty_config_gives_defaults():
    cfg = parse_config("")
    assert cfg == RunConfig()
    spec = cfg.transition_spec()
    assert spec.jg.twice_value == 8
    beams = cfg.beamset()
    assert beams.focus_distance == pytest.approx(0.035)
    assert beams.detuning == pytest.approx(-2 * C.CS_GAMMA)
    assert beams.reference_rabi == pytest.approx(0.8 * C.CS_GAMMA)
    assert beams.helicity_pattern == (-1, -1, 1)
    assert np.degrees(beams.beams[0].half_angle) == pytest.approx(22)


def test_gamma_scaled_keys_and_same_helicity():
    cfg = parse_config("[transition]\nlinewidth_mhz = 5.2\n[beams]\nhelicities = 1, 1, 1\n"
                       "[operating]\ndetuning_gamma = -3\nrabi_gamma = 1.5\n")
    g = 2 * np.pi * 5.2e6
    assert cfg.transition.gamma == pytest.approx(g)
    assert cfg.operating.detuning == pytest.approx(-3 * g)
    assert cfg.operating.rabi == pytest.approx(1.5 * g)
    assert cfg.beams.helicities == (1, 1, 1)


@pytest.mark.parametrize("text, match", [
    ("[transition]\njg = 0\n", "J_g >= 1/2"),
    ("[beams]\ncolour = red\n", "beams.colour"),
    ("[lasers]\n", "lasers"),
    ("[operating]\ndetuning = -1e7\ndetuning_gamma = -2\n", "more than once"),
    ("[beams]\nhelicities = 1, 2, 1\n", "helicities"),
    ("[simulate]\nn_atoms = many\n", "simulate.n_atoms"),
    ("[simulate]\nboundary = 1.0\n", "boundary"),
])
def test_invalid_configs_rejected(text, match):
    with pytest.raises(ValidationError, match=match):
        parse_config(text)


def test_config_round_trip():
    cfg = parse_config("[transition]\njg = 3/2\n[operating]\ndetuning_gamma = -1.7\n[scan]\nrabis_gamma = 0.5, 1\n"
                       "[simulate]\nseed = 99\ngravity = true\n")
    assert parse_config(cfg.to_text()) == cfg
    assert parse_config(RunConfig().to_text()) == RunConfig()


def test_characterize_json(capsys):
    code, out, _ = run(capsys, "characterize")
    assert code == 0
    data = json.loads(out)
    assert data["stiffness_ratio_zz_xx"] == pytest.approx(2.0, rel=0.05)
    assert data["mu_reference"] == 0.1
    for key in ("stiffness", "friction", "mu_xi", "mu_z", "earnshaw_trace", "f0"):
        assert key in data


def test_scan_empty_range_exits_1(capsys):
    code, _, err = run(capsys, "scan", "--detunings=-1:-3:0")
    assert code == 1 and "empty" in err


def test_scan_csv(capsys, tmp_path):
    path = tmp_path / "scan.csv"
    assert main(["scan", "--detunings=-1:-3:2", "--rabis", "0.8", "--out", str(path)]) == 0
    rows = list(csv.DictReader(path.open()))
    assert [float(r["detuning_gamma"]) for r in rows] == [-3.0, -1.0]
    assert all(r["status"] == "ok" for r in rows)


def test_simulate_seed_is_reproducible(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[simulate]\nn_atoms = 8\nn_steps = 200\n")
    outs = []
    for i in range(2):
        out = tmp_path / f"stats{i}.json"
        traj = tmp_path / f"traj{i}.csv"
        assert main(["simulate", "--config", str(cfg), "--seed", "7", "--out", str(out),
                     "--trajectory", str(traj)]) == 0
        outs.append((out.read_bytes(), traj.read_bytes()))
    assert outs[0] == outs[1]
    assert outs[0][1].startswith(b"t,atom_id,x,y,z,vx,vy,vz\n")
    assert json.loads(outs[0][0])["seed"] == 7


def test_field_outputs(capsys):
    code, out, _ = run(capsys, "field", "--n", "3", "--extent", "1e-3")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["x", "y", "z", "I_sigma_plus", "I_sigma_minus", "I_pi", "axis_x", "axis_y", "axis_z"]
    assert len(rows) == 28
    center = next(r for r in rows[1:] if all(float(x) == 0 for x in r[:3]))
    assert float(center[3]) == pytest.approx(float(center[5]))
    code, out, _ = run(capsys, "field", "--n", "2", "--force")
    assert code == 0
    assert out.splitlines()[0] == "x,y,z,Fx,Fy,Fz,scatter_rate"


def test_pump_outputs(capsys):
    code, out, _ = run(capsys, "pump", "--dump-lines")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["m", "q", "numerator", "denominator"]
    assert ["4", "1", "1", "1"] in rows
    code, out, _ = run(capsys, "pump", "--at", "0,0,0.001")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 9
    assert sum(float(r["pi_m"]) for r in rows) == pytest.approx(1.0, abs=1e-12)


def test_exit_codes(capsys, tmp_path):
    assert run(capsys, "pump", "--at", "0,0,0.035")[0] == 2
    assert run(capsys, "pump", "--at", "0,0")[0] == 1
    assert run(capsys, "characterize", "--config", str(tmp_path / "missing.ini"))[0] == 1
    with pytest.raises(SystemExit) as exc:
        main(["bogus"])
    assert exc.value.code == 1


def test_float_format_has_17_digits():
    assert fmt(0.1) == "0.10000000000000001"
    assert float(fmt(np.float64(1 / 3))) == 1 / 3
    assert fmt(3) == "3"
