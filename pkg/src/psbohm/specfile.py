"""State specification files: a small INI dialect with one canonical form.

Example::

    [state]
    kind = coherent
    x0 = 0.5
    p0 = 0.7
    dx = 1

    [grid]
    min = -32
    max = 32
    count = 512

    [physics]
    hbar = 1
    mass = 1

Kinds and their keys: ``coherent`` (x0, p0, dx), ``oscillator_eigenstate``
(n, omega), ``two_gaussian_superposition`` (component1, component2, each
"re im x0 p0 dx"), ``sampled`` (path to a CSV with columns x, re, im).
"""
from __future__ import annotations

import configparser
import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import PSBohmError
from .states import coherent_state, oscillator_eigenstate, superposition_state
from .transforms import SpatialGrid, WaveFunction, check_support

KINDS = {
    "coherent": {"x0": 0.0, "p0": 0.0, "dx": 1.0},
    "oscillator_eigenstate": {"n": 0, "omega": 1.0},
    "two_gaussian_superposition": {"component1": None, "component2": None},
    "sampled": {"path": None},
}


class SpecError(PSBohmError):
    """Malformed or inconsistent state specification."""


def _num(s: str) -> float:
    try:
        return float(s)
    except ValueError as exc:
        raise SpecError(f"not a number: {s!r}") from exc


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, tuple):
        return " ".join(_fmt(u) for u in v)
    return repr(float(v))


@dataclass(frozen=True)
class StateSpec:
    kind: str
    params: tuple[tuple[str, object], ...]
    grid_min: tuple[float, ...]
    grid_max: tuple[float, ...]
    grid_count: tuple[int, ...]
    hbar: float = 1.0
    mass: float = 1.0
    base_dir: str = field(default=".", compare=False)

    def param(self, key):
        return dict(self.params)[key]

    def grid(self) -> SpatialGrid:
        if len(self.grid_min) != 1:
            return SpatialGrid(tuple(SpatialGrid.uniform(a, b, n).axes[0]
                                     for a, b, n in zip(self.grid_min, self.grid_max, self.grid_count)))
        return SpatialGrid.uniform(self.grid_min[0], self.grid_max[0], self.grid_count[0])

    def canonical(self) -> str:
        lines = ["[state]", f"kind = {self.kind}"]
        lines += [f"{k} = {_fmt(v)}" for k, v in sorted(self.params)]
        lines += ["", "[grid]", f"min = {_fmt(self.grid_min)}", f"max = {_fmt(self.grid_max)}",
                  f"count = {_fmt(self.grid_count)}"]
        lines += ["", "[physics]", f"hbar = {_fmt(self.hbar)}", f"mass = {_fmt(self.mass)}", ""]
        return "\n".join(lines)

    def build(self) -> WaveFunction:
        """Sample the state on the spec grid (1D kinds)."""
        g = self.grid()
        if g.dims != 1:
            raise SpecError("the stock state kinds are one-dimensional")
        try:
            if self.kind == "coherent":
                return coherent_state(g, self.param("x0"), self.param("p0"), self.param("dx"),
                                      self.hbar, self.mass)
            if self.kind == "oscillator_eigenstate":
                return oscillator_eigenstate(g, self.param("n"), self.hbar, self.mass, self.param("omega"))
            if self.kind == "two_gaussian_superposition":
                comps = []
                for key in ("component1", "component2"):
                    re, im, x0, p0, dx = self.param(key)
                    comps.append((complex(re, im), x0, p0, dx))
                return superposition_state(g, comps, self.hbar, self.mass)
            return _load_sampled(Path(self.base_dir) / self.param("path"), g, self.hbar, self.mass)
        except (ValueError, OSError) as exc:
            if isinstance(exc, SpecError):
                raise
            raise SpecError(str(exc)) from exc


def _load_sampled(path: Path, g: SpatialGrid, hbar: float, mass: float) -> WaveFunction:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["x", "re", "im"]:
        raise SpecError(f"{path}: expected header x,re,im")
    data = np.array([[_num(c) for c in r] for r in rows[1:] if r])
    if data.shape != (g.shape[0], 3):
        raise SpecError(f"{path}: {data.shape[0]} rows for a {g.shape[0]}-point grid")
    if np.max(np.abs(data[:, 0] - g.points())) > 1e-9 * max(1.0, g.axes[0].span):
        raise SpecError(f"{path}: sample coordinates do not match the grid block")
    psi = WaveFunction(g, data[:, 1] + 1j * data[:, 2], hbar, mass)
    check_support(psi.samples)
    return psi.normalize()


def _axes(s: str, cast):
    vals = tuple(cast(_num(v)) for v in s.split())
    if not vals:
        raise SpecError("empty grid entry")
    return vals


def parse_spec(text: str, base_dir: str = ".") -> StateSpec:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise SpecError(f"unreadable spec: {exc}") from exc
    for sec in ("state", "grid"):
        if not cp.has_section(sec):
            raise SpecError(f"missing [{sec}] section")
    st = dict(cp["state"])
    kind = st.pop("kind", None)
    if kind not in KINDS:
        raise SpecError(f"unknown state kind {kind!r}")
    params = {}
    for key, default in KINDS[kind].items():
        raw = st.pop(key, None)
        if raw is None:
            if default is None:
                raise SpecError(f"{kind} needs '{key}'")
            params[key] = default
        elif key == "n":
            n = _num(raw)
            if n != int(n) or n < 0:
                raise SpecError("n must be a non-negative integer")
            params[key] = int(n)
        elif key == "path":
            params[key] = raw
        elif key.startswith("component"):
            vals = tuple(_num(v) for v in raw.split())
            if len(vals) != 5:
                raise SpecError(f"{key} needs 're im x0 p0 dx'")
            params[key] = vals
        else:
            params[key] = _num(raw)
    if st:
        raise SpecError(f"unknown keys for {kind}: {sorted(st)}")
    gr = cp["grid"]
    try:
        gmin, gmax = _axes(gr["min"], float), _axes(gr["max"], float)
        count = _axes(gr["count"], float)
    except KeyError as exc:
        raise SpecError(f"grid block needs {exc}") from exc
    if any(c != int(c) or c < 2 for c in count):
        raise SpecError("grid counts must be integers >= 2")
    count = tuple(int(c) for c in count)
    if not len(gmin) == len(gmax) == len(count):
        raise SpecError("grid min/max/count disagree on the number of axes")
    if set(gr) - {"min", "max", "count"}:
        raise SpecError(f"unknown grid keys {sorted(set(gr) - {'min', 'max', 'count'})}")
    phys = cp["physics"] if cp.has_section("physics") else {}
    hbar = _num(phys.get("hbar", "1"))
    mass = _num(phys.get("mass", "1"))
    if not (hbar > 0 and mass > 0):
        raise SpecError("hbar and mass must be positive")
    spec = StateSpec(kind, tuple(sorted(params.items())), gmin, gmax, count, hbar, mass, base_dir)
    try:
        spec.grid()
    except PSBohmError as exc:
        raise SpecError(str(exc)) from exc
    return spec


def load_spec(path) -> StateSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SpecError(f"cannot read {path}: {exc}") from exc
    return parse_spec(text, str(path.parent))
