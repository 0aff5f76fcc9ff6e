import io
import json
import random
import subprocess
import sys

import pytest

from conftest import series
from resnf.cli import main
from resnf.interpolation import interpolate
from resnf.lie import time_one_map
from resnf.pipeline import map_from_hamiltonian
from resnf.sampling import random_generic_hamiltonian
from resnf.scalars import QQi


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def run(argv, tmp_path):
    out = tmp_path / "out.json"
    code = main(argv + ["--output", str(out)])
    return code, (json.loads(out.read_text()) if out.exists() else None)


@pytest.fixture
def h3(tmp_path):
    h = series({(3, 0): (3, 4), (0, 3): (3, -4), (2, 2): 1, (4, 1): (0.5, 1), (1, 4): (0.5, -1), (3, 3): -2}, 9)
    return write(tmp_path, "h3.json", {"hamiltonian": h.to_json(), "resonance": {"n": 3}})


def test_normalize_hamiltonian(h3, tmp_path):
    code, out = run(["normalize", "--input", h3], tmp_path)
    assert code == 0
    assert out["b"][0] == "5"
    assert out["provenance"]["regime"] == "n3" and out["provenance"]["mode"] == "exact"


def test_normalize_float_mode(h3, tmp_path):
    code, out = run(["normalize", "--input", h3, "--mode", "float", "--prec", "128"], tmp_path)
    assert code == 0 and float(out["b"][0]) == pytest.approx(5, abs=1e-30)
    assert out["provenance"]["prec_bits"] == 128


def test_normalize_stdin(h3, tmp_path, monkeypatch):
    monkeypatch.setattr(sys, "stdin", io.StringIO(open(h3).read()))
    code, out = run(["normalize"], tmp_path)
    assert code == 0 and out["b"][0] == "5"


def test_deterministic_output(h3, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["normalize", "--input", h3, "--output", str(a)]) == 0
    assert main(["normalize", "--input", h3, "--output", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_verify_seeded(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["verify", "--seed", "1", "--trials", "5", "--output", str(a)]) == 0
    assert main(["verify", "--seed", "1", "--trials", "5", "--output", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    out = json.loads(a.read_text())
    assert out["pass"] and len(out["trials"]) == 5
    assert float(out["max_deviation"]) <= float(out["tolerance"])


def test_verify_exact_quarter_turn(tmp_path):
    code, out = run(["verify", "--n", "4", "--mode", "exact", "--trunc", "7", "--trials", "2"], tmp_path)
    assert code == 0 and out["max_deviation"] == "0"


def test_verify_hamiltonian_input(h3, tmp_path):
    code, out = run(["verify", "--input", h3, "--trials", "2"], tmp_path)
    assert code == 0 and out["max_deviation"] == "0"


def test_selftest(tmp_path):
    code, out = run(["selftest", "--trunc", "9"], tmp_path)
    assert code == 0 and out["pass"]
    assert out["dimensions"]["3"][:7] == [1, 0, 1, 2, 1, 2, 3]
    assert all(out["bracket_matches_closed_form"].values())


def test_birkhoff_and_interpolate(tmp_path):
    h = random_generic_hamiltonian(4, 8, random.Random(1), resonant_only=False, density=0.5)
    m = map_from_hamiltonian(h, QQi(0, 1))
    path = write(tmp_path, "m.json", {"map": m.f.to_json()})
    code, out = run(["birkhoff", "--input", path], tmp_path)
    assert code == 0 and out["commutation_residual"] == "0" and out["provenance"]["n"] == 4
    # a tangent-to-identity map interpolates to its generator
    t = time_one_map(h)
    path = write(tmp_path, "t.json", {"map": t.f.to_json()})
    code, out = run(["interpolate", "--input", path], tmp_path)
    assert code == 0 and out["h"] == interpolate(t).to_json()


def test_family(tmp_path):
    h = random_generic_hamiltonian(5, 8, random.Random(2), trunc_eps=2)
    path = write(tmp_path, "f.json", {"hamiltonian": h.to_json(), "resonance": {"n": 5}})
    code, out = run(["family", "--input", path], tmp_path)
    assert code == 0 and out["trunc_eps"] == 2 and out["a"][0][0] == "0"


@pytest.mark.parametrize(
    "argv, code",
    [
        ([], 1),
        (["normalize", "--input", "/nonexistent.json"], 1),
        (["birkhoff", "--input", "HAM"], 1),
        (["normalize", "--input", "DEG"], 2),
        (["normalize", "--input", "NONRES"], 2),
    ],
)
def test_exit_codes(argv, code, tmp_path, h3):
    deg = series({(2, 2): 1, (3, 3): 1}, 6)
    nonres = series({(5, 0): 1, (0, 5): 1, (2, 2): 1, (2, 1): 1, (1, 2): 1}, 6)
    subs = {
        "HAM": h3,
        "DEG": write(tmp_path, "deg.json", {"hamiltonian": deg.to_json(), "resonance": {"n": 5}}),
        "NONRES": write(tmp_path, "nr.json", {"hamiltonian": nonres.to_json(), "resonance": {"n": 5}}),
    }
    argv = [subs.get(a, a) for a in argv]
    assert main(argv) == code


def test_usage_error_from_parser():
    with pytest.raises(SystemExit) as exc:
        main(["normalize", "--bogus"])
    assert exc.value.code == 1


def test_console_entry_point(h3):
    proc = subprocess.run([sys.executable, "-m", "resnf.cli", "normalize", "--input", h3], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["b"][0] == "5"
    proc = subprocess.run([sys.executable, "-m", "resnf.cli", "frobnicate"], capture_output=True, text=True)
    assert proc.returncode == 1
