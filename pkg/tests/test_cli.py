import csv
import subprocess
import sys

import numpy as np
import pytest

from psbohm import gaussian_oracle as go
from psbohm.cli import EXIT_MASK, EXIT_NUMERIC, EXIT_SPEC, EXIT_USAGE, main
from psbohm.specfile import SpecError, load_spec, parse_spec
from psbohm.states import coherent_state

COHERENT = """[state]
kind = coherent
x0 = {x0}
p0 = {p0}

[grid]
min = {lo}
max = {hi}
count = {n}
"""


def write_spec(tmp_path, name="coh.ini", x0=0.0, p0=0.0, lo=-32, hi=32, n=512):
    path = tmp_path / name
    path.write_text(COHERENT.format(x0=x0, p0=p0, lo=lo, hi=hi, n=n))
    return path


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def summary(out):
    text = (out.parent / (out.name + ".summary")).read_text()
    return dict(line.split("=", 1) for line in text.splitlines())


@pytest.fixture(scope="module")
def spec512(tmp_path_factory):
    return write_spec(tmp_path_factory.mktemp("spec"), x0=0.5, p0=0.7)


def test_canonical_round_trip(tmp_path):
    text = """[physics]
mass = 1.0
hbar = 1

[state]
p0 = 0.7
kind = coherent
x0 = .5

[grid]
count = 512
max = 32
min = -32
"""
    spec = parse_spec(text)
    canon = spec.canonical()
    assert parse_spec(canon) == spec
    assert parse_spec(canon).canonical() == canon
    assert "dx = 1.0" in canon


@pytest.mark.parametrize("text", [
    "[state]\nkind = coherent\n",
    "[state]\nkind = squeezed\n[grid]\nmin = -1\nmax = 1\ncount = 8\n",
    "[state]\nkind = coherent\nx0 = a\n[grid]\nmin = -1\nmax = 1\ncount = 8\n",
    "[state]\nkind = coherent\ncolor = red\n[grid]\nmin = -1\nmax = 1\ncount = 8\n",
    "[state]\nkind = oscillator_eigenstate\nn = 1.5\n[grid]\nmin = -1\nmax = 1\ncount = 8\n",
    "[state]\nkind = coherent\n[grid]\nmin = -1\nmax = 1\ncount = 8.5\n",
    "[state]\nkind = coherent\n[grid]\nmin = -1\nmax = 1\ncount = 8\n[physics]\nhbar = -1\n",
    "[state]\nkind = two_gaussian_superposition\ncomponent1 = 1 0 0 0\n"
    "component2 = 1 0 1 0 1\n[grid]\nmin = -1\nmax = 1\ncount = 8\n",
    "this is not a spec",
])
def test_malformed_spec(text):
    with pytest.raises(SpecError):
        parse_spec(text)


def test_malformed_file_exit_code(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[state]\nkind = nope\n")
    assert main(["wigner", "--spec", str(bad), "--out", str(tmp_path / "w.csv")]) == EXIT_SPEC
    assert main(["wigner", "--spec", str(tmp_path / "missing.ini"), "--out", str(tmp_path / "w.csv")]) == EXIT_SPEC


def test_wigner_csv(tmp_path, capsys):
    out = tmp_path / "w.csv"
    assert main(["wigner", "--spec", str(write_spec(tmp_path)), "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "MARGINAL_CHECK=PASS" in text and "FINGERPRINT=" in text
    header, data = read_csv(out)
    assert header == ["x", "p", "value"]
    row = data[np.argmax(data[:, 2])]
    assert row[0] == 0.0 and row[1] == 0.0
    assert row[2] == pytest.approx(1 / np.pi, abs=1e-12)
    s = summary(out)
    assert float(s["NORMALIZATION"]) == pytest.approx(1.0, abs=1e-12)


def test_csv_is_deterministic(tmp_path, spec512):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert main(["bohm", "kernel", "--spec", str(spec512), "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.csv.summary").read_bytes() == (tmp_path / "b.csv.summary").read_bytes()


def test_seventeen_digit_round_trip(tmp_path):
    out = tmp_path / "w.csv"
    main(["wigner", "--spec", str(write_spec(tmp_path, x0=0.3, p0=-0.2, lo=-20, hi=20, n=256)), "--out", str(out)])
    _, data = read_csv(out)
    c = go.CoherentStateParams(x0=0.3, p0=-0.2)
    assert np.max(np.abs(data[:, 2] - go.oracle_wigner(c, data[:, 0], data[:, 1]))) < 1e-8


def test_bohm_kernel_summary(tmp_path, spec512):
    out = tmp_path / "k.csv"
    assert main(["bohm", "kernel", "--spec", str(spec512), "--out", str(out)]) == 0
    s = summary(out)
    assert float(s["KERNEL_ORACLE_REL_ERROR"]) < 1e-6
    assert 0 < float(s["KERNEL_MASKED_FRACTION"]) < 1
    assert "XI_VARIATION" in s and s["STATUS"] == "PASS"
    header, data = read_csv(out)
    assert header[:2] == ["xi", "eta"]
    ok = data[:, header.index("masked")] == 0
    ref = np.exp(data[ok, 1] ** 2 / 8)
    assert np.max(np.abs(data[ok, header.index("re")] - ref) / ref) < 1e-6


def test_bohm_prob_x_and_measure(tmp_path, spec512):
    out = tmp_path / "px.csv"
    assert main(["bohm", "prob-x", "--spec", str(spec512), "--out", str(out)]) == 0
    _, data = read_csv(out)
    psi = coherent_state(load_spec(spec512).grid(), x0=0.5, p0=0.7)
    assert np.max(np.abs(data[:, 1] - np.abs(psi.samples) ** 2)) < 1e-8
    out = tmp_path / "m.csv"
    assert main(["bohm", "measure", "--spec", str(spec512), "--out", str(out)]) == 0
    assert float(summary(out)["TOTAL_WEIGHT"]) == pytest.approx(1.0, abs=1e-8)


def test_bohm_prob_p(tmp_path, spec512):
    out = tmp_path / "pp.csv"
    assert main(["bohm", "prob-p", "--spec", str(spec512), "--out", str(out)]) == 0
    _, data = read_csv(out)
    c = go.CoherentStateParams(x0=0.5, p0=0.7)
    assert np.max(np.abs(data[:, 1] - go.oracle_momentum_probability(c, data[:, 0]))) < 1e-6


def test_bohm_prob_p_out_of_scope(tmp_path):
    # an excited state has a xi-dependent inverse kernel, outside the closed momentum route
    path = tmp_path / "n2.ini"
    path.write_text("[state]\nkind = oscillator_eigenstate\nn = 2\n[grid]\nmin = -20\nmax = 20\ncount = 256\n")
    out = tmp_path / "o.csv"
    assert main(["bohm", "prob-p", "--spec", str(path), "--out", str(out)]) == EXIT_NUMERIC
    assert summary(out)["STATUS"].startswith("SCOPE:")


def test_bohm_mask_exit(tmp_path, monkeypatch):
    import psbohm.cli
    monkeypatch.setattr(psbohm.cli, "MASK_TOLERANCE", 0.0)
    spec = write_spec(tmp_path, lo=-20, hi=20, n=256)
    out = tmp_path / "k.csv"
    assert main(["bohm", "kernel", "--spec", str(spec), "--out", str(out)]) == EXIT_MASK
    assert summary(out)["STATUS"] == "MASK_OCCUPANCY"
    assert not out.exists()


@pytest.mark.parametrize("suite", ["bohm", "wigner", "all"])
def test_verify_suite(suite, capsys):
    assert main(["verify", "--suite", suite]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "suite,check,value,tolerance,status"
    assert all(line.endswith(",PASS") for line in lines[1:])


def test_verify_unknown_suite():
    assert main(["verify", "--suite", "nope"]) == EXIT_USAGE


def test_usage_errors(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["bohm", "density", "--spec", "x", "--out", "y"])
    assert exc.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == EXIT_USAGE


def evolve(tmp_path, dt, steps, obs="x,p,1", record=None, potential="x**2/2", name="e.csv"):
    spec = write_spec(tmp_path, x0=0.5, p0=0.7, lo=-20, hi=20, n=256)
    out = tmp_path / name
    argv = ["evolve", "--spec", str(spec), "--out", str(out), "--dt", str(dt), "--steps", str(steps),
            "--observables", obs, "--potential", potential]
    if record:
        argv += ["--record", str(record)]
    return main(argv), out


def test_evolve_traces(tmp_path):
    code, out = evolve(tmp_path, 2e-3, 500, record=50)
    assert code == 0
    header, data = read_csv(out)
    t = data[:, 0]
    xc, pc = go.oracle_center(go.CoherentStateParams(x0=0.5, p0=0.7), t)
    for name, ref in (("x", xc), ("p", pc)):
        for pic in ("schrodinger", "heisenberg"):
            assert np.max(np.abs(data[:, header.index(f"{pic}[{name}]")] - ref)) < 1e-6
    assert np.max(np.abs(data[:, header.index("heisenberg[1]")] - 1.0)) < 1e-12
    assert np.max(np.abs(data[:, header.index("schrodinger[1]")] - 1.0)) < 1e-12
    assert np.max(np.abs(data[:, header.index("rate_rhs[1]")])) < 1e-12
    s = summary(out)
    assert s["SCHEME"] == "strang-split-spectral-2" and s["STATUS"] == "PASS"


def test_evolve_rate_columns_are_second_order(tmp_path):
    gaps = []
    for dt in (2e-3, 1e-3):
        code, out = evolve(tmp_path, dt, 4, obs="p", name=f"e{dt}.csv")
        assert code == 0
        header, data = read_csv(out)
        gaps.append(np.max(np.abs(data[:, header.index("rate_lhs[p]")] - data[:, header.index("rate_rhs[p]")])))
    assert gaps[0] / gaps[1] == pytest.approx(4.0, rel=0.2)


def test_evolve_stability_and_scope(tmp_path):
    assert evolve(tmp_path, 0.05, 2)[0] == EXIT_NUMERIC
    code, out = evolve(tmp_path, 1e-3, 4, obs="x", potential="x**4/4")
    assert code == 0
    assert summary(out)["HEISENBERG"] == "SKIPPED_OUT_OF_SCOPE"
    assert evolve(tmp_path, 1e-3, 4, potential="x*t")[0] == EXIT_USAGE


def test_sampled_spec(tmp_path):
    g = load_spec(write_spec(tmp_path, lo=-20, hi=20, n=256)).grid()
    psi = coherent_state(g, x0=0.5, p0=0.7)
    with open(tmp_path / "psi.csv", "w") as fh:
        fh.write("x,re,im\n")
        for xv, z in zip(g.points(), psi.samples):
            fh.write(f"{xv:.17g},{z.real:.17g},{z.imag:.17g}\n")
    path = tmp_path / "sampled.ini"
    path.write_text("[state]\nkind = sampled\npath = psi.csv\n[grid]\nmin = -20\nmax = 20\ncount = 256\n")
    spec = load_spec(path)
    assert np.max(np.abs(spec.build().samples - psi.samples)) < 1e-14
    out = tmp_path / "w.csv"
    assert main(["wigner", "--spec", str(path), "--out", str(out)]) == 0
    bad = tmp_path / "bad.ini"
    bad.write_text("[state]\nkind = sampled\npath = psi.csv\n[grid]\nmin = -20\nmax = 20\ncount = 128\n")
    assert main(["wigner", "--spec", str(bad), "--out", str(out)]) == EXIT_SPEC


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "psbohm", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("psbohm ")
