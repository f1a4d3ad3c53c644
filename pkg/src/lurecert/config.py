"""Experiment configuration: a YAML document validated before any computation.

Errors carry the line number of the offending key where one is known.
See ``data/template.yaml`` for an annotated description of every block.
"""

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from . import catalog
from .certify import LureSystem
from .errors import ConfigError, LureCertError
from .signals import from_descriptor
from .simulate import (
    SimConfig,
    make_diagonal_slope_nonlinearity,
    make_linear_nonlinearity,
    make_saturation_nonlinearity,
    make_zero_nonlinearity,
)
from .system import Nonlinearity

__all__ = ["ExperimentConfig", "TrajectorySpec", "load_config", "parse_config", "bundled_config"]

DATA_DIR = Path(__file__).parent / "data"
KNOWN_ESTIMATES = ("thm1_H1", "thm1_H2", "cor1_Ls", "cor_Sp", "S1_io", "L1xi_gain")


class _Mapping(dict):
    """``dict`` remembering the source line of each key."""

    lines: dict

    def line(self, key):
        return getattr(self, "lines", {}).get(key)


class _LineLoader(yaml.SafeLoader):
    pass


def _construct_mapping(loader, node):
    loader.flatten_mapping(node)
    out = _Mapping()
    out.lines = {}
    out.start_line = node.start_mark.line + 1
    for key_node, value_node in node.value:
        key = loader.construct_object(key_node, deep=True)
        if key in out:
            raise ConfigError(f"duplicate key '{key}'", key_node.start_mark.line + 1)
        out[key] = loader.construct_object(value_node, deep=True)
        out.lines[key] = key_node.start_mark.line + 1
    return out


_LineLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)


@dataclass(frozen=True, eq=False)
class TrajectorySpec:
    name: str
    forcing: str
    x0: np.ndarray


@dataclass(eq=False)
class ExperimentConfig:
    """Validated configuration; ``raw`` is the source text and ``sha256`` its hash."""

    system: LureSystem
    nonlinearity: Nonlinearity
    delta_pattern: np.ndarray
    delta_value: float
    forcing: dict
    certificate: dict
    sim: SimConfig
    trajectories: list
    verification: dict
    equilibrium: list
    threshold: dict
    raw: str
    sha256: str
    source: Optional[str] = None
    extras: dict = field(default_factory=dict)

    @property
    def Delta(self):
        return self.delta_value * self.delta_pattern

    def trajectory(self, name):
        for spec in self.trajectories:
            if spec.name == name:
                return spec
        raise ConfigError(f"unknown trajectory '{name}'")


def _get(block, key, where, required=True, default=None):
    if not isinstance(block, dict):
        raise ConfigError(f"'{where}' must be a mapping", getattr(block, "start_line", None))
    if key not in block:
        if required:
            raise ConfigError(f"'{where}' is missing required key '{key}'",
                              getattr(block, "start_line", None))
        return default
    return block[key]


def _line(block, key):
    return block.line(key) if isinstance(block, _Mapping) else None


def _number(value, block, key):
    if isinstance(value, str):
        # YAML 1.1 reads exponent forms such as 1e-3 as strings
        text = value.strip().lower()
        if text in ("inf", "+inf", "infinity", ".inf"):
            return math.inf
        try:
            value = float(text)
        except ValueError:
            pass
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"'{key}' must be a number, got {value!r}", _line(block, key))
    if math.isnan(value):
        raise ConfigError(f"'{key}' is NaN", _line(block, key))
    return float(value)


def _matrix(value, block, key, ndim=2):
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"'{key}' is not a numeric array: {exc}", _line(block, key)) from exc
    if ndim == 2:
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2 or arr.size == 0:
            raise ConfigError(f"'{key}' must be a non-empty matrix given as a list of rows",
                              _line(block, key))
    else:
        arr = np.atleast_1d(arr)
        if arr.ndim != 1:
            raise ConfigError(f"'{key}' must be a vector", _line(block, key))
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"'{key}' has non-finite entries", _line(block, key))
    return arr


def _build_nonlinearity(block, m1, p1):
    kind = _get(block, "kind", "nonlinearity")
    if kind == "example1_sine":
        delta0 = _number(_get(block, "delta0", "nonlinearity", False, catalog.EXAMPLE1_DELTA0),
                         block, "delta0")
        if p1 != 3 or m1 != 3:
            raise ConfigError("example1_sine needs m1 = p1 = 3", _line(block, "kind"))
        return catalog.example1_nonlinearity(delta0)
    if kind == "sine_slope":
        delta0 = _number(_get(block, "delta0", "nonlinearity"), block, "delta0")
        if m1 != p1:
            raise ConfigError("a repeated nonlinearity needs m1 = p1", _line(block, "kind"))
        half = 0.5 * delta0

        def g(z):
            return half * (z + np.sin(z))

        return make_diagonal_slope_nonlinearity(g, delta0, p1, True, "sine_slope",
                                                {"kind": "sine_slope", "delta0": delta0})
    if kind == "saturation":
        if m1 != 1 or p1 != 1:
            raise ConfigError("saturation needs m1 = p1 = 1", _line(block, "kind"))
        return make_saturation_nonlinearity()
    if kind == "linear":
        K = _matrix(_get(block, "K", "nonlinearity"), block, "K")
        if K.shape != (m1, p1):
            raise ConfigError(f"K must have shape {(m1, p1)}", _line(block, "K"))
        return make_linear_nonlinearity(K)
    if kind == "zero":
        return make_zero_nonlinearity(m1, p1)
    raise ConfigError(f"unknown nonlinearity kind '{kind}'", _line(block, "kind"))


def _check_shape(arr, shape, block, key):
    if arr.shape != shape:
        raise ConfigError(f"'{key}' must have shape {shape}, got {arr.shape}", _line(block, key))


def _parse_equilibrium(eb, forcing, states, n):
    wname = _get(eb, "w_star", "equilibrium")
    if wname not in forcing:
        raise ConfigError(f"equilibrium refers to unknown forcing '{wname}'", _line(eb, "w_star"))
    entry = {"w_star": wname, "tol": _number(eb.get("tol", 1e-10), eb, "tol")}
    if "v" in eb:
        entry["v"] = _matrix(eb["v"], eb, "v", ndim=1)
    if "rho" in eb:
        entry["rho"] = _number(eb["rho"], eb, "rho")
    cc = eb.get("cross_check")
    if cc is not None:
        x0 = cc.get("x0", "zero") if isinstance(cc, dict) else None
        if x0 is None:
            raise ConfigError("cross_check must be a mapping", _line(eb, "cross_check"))
        if isinstance(x0, str):
            if x0 in states:
                x0 = states[x0]
            elif x0 == "zero":
                x0 = np.zeros(n)
            else:
                raise ConfigError(f"cross_check refers to unknown initial state '{x0}'",
                                  _line(cc, "x0"))
        else:
            x0 = _matrix(x0, cc, "x0", ndim=1)
        if x0.size != n:
            raise ConfigError(f"cross_check x0 must have length {n}", _line(cc, "x0"))
        try:
            sim = SimConfig(dt=_number(cc.get("dt", 1e-3), cc, "dt"),
                            T=_number(cc.get("T", 40.0), cc, "T"))
        except LureCertError as exc:
            raise ConfigError(f"cross_check: {exc}", _line(eb, "cross_check")) from exc
        entry["cross_check"] = {"x0": x0, "sim": sim,
                                "tol": _number(cc.get("tol", 1e-3), cc, "tol")}
    return entry


def parse_config(text, source=None, overrides=None) -> ExperimentConfig:
    """Parse and validate configuration text.

    ``overrides`` maps dotted keys (``"simulation.dt"``, ``"delta.value"``)
    to replacement values applied after parsing and before validation.
    """
    try:
        doc = yaml.load(text, Loader=_LineLoader)
    except yaml.MarkedYAMLError as exc:
        line = exc.problem_mark.line + 1 if exc.problem_mark is not None else None
        raise ConfigError(f"YAML syntax error: {exc.problem}", line) from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"YAML error: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a mapping at top level", 1)
    for dotted, value in (overrides or {}).items():
        node = doc
        parts = dotted.split(".")
        for part in parts[:-1]:
            if part not in node or not isinstance(node[part], dict):
                node[part] = _Mapping()
            node = node[part]
        node[parts[-1]] = value

    sysb = _get(doc, "system", "top level")
    mats = {k: _matrix(_get(sysb, k, "system"), sysb, k) for k in ("A", "B1", "B2", "C1", "C2")}
    n = mats["A"].shape[0]
    _check_shape(mats["A"], (n, n), sysb, "A")
    m1, m2 = mats["B1"].shape[1], mats["B2"].shape[1]
    p1, p2 = mats["C1"].shape[0], mats["C2"].shape[0]
    _check_shape(mats["B1"], (n, m1), sysb, "B1")
    _check_shape(mats["B2"], (n, m2), sysb, "B2")
    _check_shape(mats["C1"], (p1, n), sysb, "C1")
    _check_shape(mats["C2"], (p2, n), sysb, "C2")
    try:
        system = LureSystem(**mats)
    except LureCertError as exc:
        raise ConfigError(f"system: {exc}", getattr(sysb, "start_line", None)) from exc

    nlb = _get(doc, "nonlinearity", "top level")
    f = _build_nonlinearity(nlb, m1, p1)

    db = _get(doc, "delta", "top level", False, None)
    if db is None:
        pattern, value = np.array(f.Delta, dtype=float), 1.0
    else:
        pattern = _matrix(_get(db, "pattern", "delta", False, np.eye(m1, p1).tolist()), db,
                          "pattern")
        _check_shape(pattern, (m1, p1), db, "pattern")
        if np.any(pattern < 0):
            raise ConfigError("delta pattern must be nonnegative", _line(db, "pattern"))
        value = _number(_get(db, "value", "delta", False, 1.0), db, "value")
        if value < 0:
            raise ConfigError("delta value must be nonnegative", _line(db, "value"))

    forcing = {}
    fb = _get(doc, "forcing", "top level", False, {}) or {}
    if not isinstance(fb, dict):
        raise ConfigError("'forcing' must map names to signal descriptors", _line(doc, "forcing"))
    for name in sorted(fb):
        try:
            sig = from_descriptor(fb[name])
        except ConfigError as exc:
            raise ConfigError(f"forcing '{name}': {exc}", _line(fb, name)) from exc
        except LureCertError as exc:
            raise ConfigError(f"forcing '{name}': {exc}", _line(fb, name)) from exc
        if sig.m != m2:
            raise ConfigError(f"forcing '{name}' has dimension {sig.m}, expected {m2}",
                              _line(fb, name))
        forcing[name] = sig

    cb = _get(doc, "certificate", "top level", False, {}) or {}
    certificate = {}
    if "xi" in cb:
        certificate["xi"] = _number(cb["xi"], cb, "xi")
    for key, size in (("q", p2), ("r", m2), ("c", n), ("p", n), ("l", n), ("k", m2)):
        if key in cb:
            vec = _matrix(cb[key], cb, key, ndim=1)
            if vec.size != size:
                raise ConfigError(f"'{key}' must have length {size}", _line(cb, key))
            if np.any(vec < 0):
                raise ConfigError(f"'{key}' must be nonnegative", _line(cb, key))
            certificate[key] = vec
    if ("q" in certificate) != ("r" in certificate):
        raise ConfigError("certificate needs both q and r, or neither",
                          getattr(cb, "start_line", None))
    if ("l" in certificate or "k" in certificate) and "p" not in certificate:
        raise ConfigError("certificate l and k are only meaningful with a supplied p",
                          getattr(cb, "start_line", None))
    certificate["rescale_q"] = bool(cb.get("rescale_q", False))

    sb = _get(doc, "simulation", "top level", False, {}) or {}
    try:
        sim = SimConfig(
            dt=_number(sb.get("dt", 1e-3), sb, "dt"),
            T=_number(sb.get("T", 10.0), sb, "T"),
            method=str(sb.get("method", "rk4")),
            positivity_check=bool(sb.get("positivity_check", True)),
        )
    except LureCertError as exc:
        raise ConfigError(f"simulation: {exc}", getattr(sb, "start_line", None)) from exc
    states = {}
    isb = sb.get("initial_states", {}) or {}
    for name in sorted(isb):
        vec = _matrix(isb[name], isb, name, ndim=1)
        if vec.size != n:
            raise ConfigError(f"initial state '{name}' must have length {n}", _line(isb, name))
        states[name] = vec
    trajectories = []
    seen = set()
    for idx, tb in enumerate(sb.get("trajectories", []) or []):
        tname = str(_get(tb, "name", f"simulation.trajectories[{idx}]"))
        if tname in seen:
            raise ConfigError(f"duplicate trajectory name '{tname}'", _line(tb, "name"))
        seen.add(tname)
        fname = _get(tb, "forcing", f"trajectory '{tname}'")
        if fname not in forcing:
            raise ConfigError(f"trajectory '{tname}' refers to unknown forcing '{fname}'",
                              _line(tb, "forcing"))
        x0 = tb.get("x0", "zero")
        if isinstance(x0, str):
            if x0 == "zero" and "zero" not in states:
                vec = np.zeros(n)
            elif x0 in states:
                vec = states[x0]
            else:
                raise ConfigError(f"trajectory '{tname}' refers to unknown initial state '{x0}'",
                                  _line(tb, "x0"))
        else:
            vec = _matrix(x0, tb, "x0", ndim=1)
            if vec.size != n:
                raise ConfigError(f"x0 must have length {n}", _line(tb, "x0"))
        trajectories.append(TrajectorySpec(tname, fname, vec))

    vb = _get(doc, "verification", "top level", False, {}) or {}
    estimates = list(vb.get("estimates", []) or [])
    for est in estimates:
        if est not in KNOWN_ESTIMATES:
            raise ConfigError(f"unknown estimate '{est}' (known: {', '.join(KNOWN_ESTIMATES)})",
                              _line(vb, "estimates"))
    pairs = []
    for pair in vb.get("pairs", []) or []:
        if not (isinstance(pair, list) and len(pair) == 2):
            raise ConfigError("each verification pair must be [name_a, name_b]", _line(vb, "pairs"))
        for nm in pair:
            if nm not in seen:
                raise ConfigError(f"verification pair refers to unknown trajectory '{nm}'",
                                  _line(vb, "pairs"))
        pairs.append((str(pair[0]), str(pair[1])))
    if estimates and not pairs:
        raise ConfigError("estimates requested but no trajectory pairs given", _line(vb, "estimates"))
    s_list = [_number(s, vb, "s") for s in (vb.get("s", [1.0]) or [1.0])]
    samp = vb.get("sampling", {}) or {}
    verification = {
        "estimates": estimates,
        "pairs": pairs,
        "s": s_list,
        "coarse": int(samp.get("coarse", 25)),
        "random": int(samp.get("random", 100)),
        "seed": int(samp.get("seed", 0)),
        "beta0": None if vb.get("beta0") is None else _number(vb["beta0"], vb, "beta0"),
        "xi0": None if vb.get("xi0") is None else _number(vb["xi0"], vb, "xi0"),
    }
    if verification["estimates"] and any(e in ("thm1_H2", "S1_io", "L1xi_gain")
                                         for e in estimates) and "q" not in certificate:
        raise ConfigError("H2-based estimates need certificate q and r", _line(vb, "estimates"))

    eq_raw = _get(doc, "equilibrium", "top level", False, []) or []
    if isinstance(eq_raw, dict):
        eq_raw = [eq_raw]
    if not isinstance(eq_raw, list):
        raise ConfigError("'equilibrium' must be a mapping or a list of mappings",
                          _line(doc, "equilibrium"))
    equilibrium = [_parse_equilibrium(eb, forcing, states, n) for eb in eq_raw]

    thb = _get(doc, "threshold", "top level", False, {}) or {}
    threshold = {
        "lo": _number(thb.get("lo", 0.0), thb, "lo"),
        "hi": _number(thb.get("hi", 1.0), thb, "hi"),
        "tol": _number(thb.get("tol", 1e-2), thb, "tol"),
    }
    return ExperimentConfig(
        system=system,
        nonlinearity=f,
        delta_pattern=pattern,
        delta_value=value,
        forcing=forcing,
        certificate=certificate,
        sim=sim,
        trajectories=trajectories,
        verification=verification,
        equilibrium=equilibrium,
        threshold=threshold,
        raw=text,
        sha256=hashlib.sha256(text.encode("utf-8")).hexdigest(),
        source=source,
    )


def load_config(path, overrides=None) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config '{path}': {exc.strerror}") from exc
    return parse_config(text, str(path), overrides)


def bundled_config(name):
    """Path of a configuration shipped with the package (``example1``, ``example2``, ``template``)."""
    path = DATA_DIR / f"{name}.yaml"
    if not path.exists():
        raise ConfigError(f"no bundled config named '{name}'")
    return path
