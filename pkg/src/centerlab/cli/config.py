"""Scenario files: a small line-oriented format.

::

    # comment
    [field X]
    catalog = rotation
    [field Y]
    expr = "(y + x*(1-x^2-y^2), -x + y*(1-x^2-y^2))"
    [analysis centralizer]
    x = X
    y = Y
    box = (-2, 2, -2, 2)

Numbers may be written as constant expressions in ``pi`` (``2*pi``).  Every
key is checked against the schema of its section; unknown keys, bad values
and dangling references raise :class:`ConfigError` with line and column.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..catalog import HAMILTONIAN_NAMES, CatalogError, catalog
from ..dsl import FieldSource, compile_scalar, compile_source, compile_vector, evaluate, parse_expression
from ..errors import CenterlabError, ConfigError
from ..fields import HamiltonianSystem, VectorField
from ..flow import SCHEMES, IntegratorConfig
from ..centralizer import Thresholds

WORD = re.compile(r"[A-Za-z_][A-Za-z0-9_.-]*\Z")
HEADER = re.compile(r"\[\s*([A-Za-z]+)(?:\s+([^\]\s]+))?\s*\]\s*(#.*)?\Z")
KEY = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*=\s*")


@dataclass(frozen=True)
class Key:
    type: str  # real | int | word | ref | vec | dsl | words | str
    default: object = None
    repeat: bool = False
    required: bool = False


INTEGRATOR_KEYS = {
    "abs_tol": Key("real", 1e-10),
    "rel_tol": Key("real", 1e-10),
    "max_step": Key("real", math.inf),
    "max_steps": Key("int", 10**7),
    "scheme": Key("word", "adaptive-rk45"),
    "step": Key("real", 1e-3),
    "blowup_box": Key("real", 1e3),
}

THRESHOLD_KEYS = {name: Key("real", value) for name, value in Thresholds().to_dict().items()}

FIELD_KEYS = {
    "catalog": Key("word"),
    "params": Key("vec"),
    "expr": Key("dsl"),
    "variables": Key("words"),
    "from": Key("ref"),
    "scale": Key("real", 1.0),
    "add": Key("ref"),
    "add_scale": Key("real", 1.0),
}

HAMILTONIAN_KEYS = {
    "catalog": Key("word"),
    "energy": Key("str"),
    "variables": Key("words"),
}

_OUT = {"out": Key("str")}

ANALYSIS_KEYS = {
    "bracket": {
        "kind": Key("word", "lie"),
        "left": Key("ref", required=True),
        "right": Key("ref", required=True),
        "box": Key("vec"),
        "resolution": Key("int", 20),
        "probe": Key("vec", repeat=True),
        **_OUT,
    },
    "flow": {
        "field": Key("ref", required=True),
        "x0": Key("vec", required=True),
        "t_start": Key("real", 0.0),
        "t_end": Key("real", required=True),
        "samples": Key("int", 101),
        **INTEGRATOR_KEYS,
        **_OUT,
    },
    "orbits": {
        "field": Key("ref", required=True),
        "box": Key("vec", required=True),
        "grid": Key("int", 5),
        "guess": Key("vec", repeat=True),
        "scan_from": Key("vec"),
        "burn_in": Key("real", 50.0),
        "scan_time": Key("real", 200.0),
        "eps": Key("real", 0.5),
        "max_seeds": Key("int", 12),
        "mult_tol": Key("real", 1e-4),
        "eig_tol": Key("real", 1e-6),
        **INTEGRATOR_KEYS,
        **_OUT,
    },
    "centralizer": {
        "x": Key("ref", required=True),
        "y": Key("ref", required=True),
        "samples": Key("word", "grid"),
        "box": Key("vec"),
        "resolution": Key("int", 10),
        "r_min": Key("real", 0.25),
        "r_max": Key("real", 2.0),
        "n_radii": Key("int", 8),
        "n_angles": Key("int", 16),
        "x0": Key("vec"),
        "t_span": Key("vec", (0.0, 20.0)),
        "n": Key("int", 200),
        "orbit_probe": Key("vec", repeat=True),
        "s_grid": Key("vec", (-1.0, -0.5, 0.5, 1.0)),
        "t_grid": Key("vec", (-1.0, -0.5, 0.5, 1.0)),
        **THRESHOLD_KEYS,
        **INTEGRATOR_KEYS,
        **_OUT,
    },
    "plot": {
        "field": Key("ref", required=True),
        "x0": Key("vec", repeat=True),
        "t_end": Key("real", 20.0),
        "samples": Key("int", 2001),
        "orbit": Key("vec", repeat=True),
        "view": Key("vec"),
        "axes": Key("vec", (0, 1)),
        **INTEGRATOR_KEYS,
        **_OUT,
    },
}

SECTION_KINDS = ("field", "hamiltonian", "analysis")


@dataclass
class _Item:
    text: str
    quoted: bool
    column: int


@dataclass
class _Entry:
    key: str
    items: list
    is_tuple: bool
    line: int
    column: int
    value_column: int


@dataclass
class _Section:
    kind: str
    name: str
    line: int
    entries: list = field(default_factory=list)


@dataclass
class Scenario:
    """A parsed scenario: named fields, one analysis and its resolved options."""

    fields: dict
    hamiltonians: dict
    analysis: str
    options: dict
    positions: dict
    sections: list
    source: str = ""

    def integrator(self) -> IntegratorConfig:
        o = self.options
        return IntegratorConfig(
            abs_tol=o["abs_tol"], rel_tol=o["rel_tol"], max_step=o["max_step"],
            max_steps=o["max_steps"], scheme=o["scheme"], step=o["step"], box=o["blowup_box"],
        )

    def thresholds(self) -> Thresholds:
        return Thresholds(**{k: self.options[k] for k in THRESHOLD_KEYS})

    def field(self, key: str) -> VectorField:
        return self.fields[self.options[key]]

    def error(self, key: str, message: str) -> ConfigError:
        line, column = self.positions.get(key, (None, None))
        return ConfigError(message, line, column)

    def resolved_thresholds(self) -> dict:
        """Every tolerance in force: centralizer thresholds, orbit tolerances, integrator."""
        out = {k: self.options.get(k, spec.default) for k, spec in THRESHOLD_KEYS.items()}
        for k in ("mult_tol", "eig_tol"):
            if k in self.options:
                out[k] = self.options[k]
        cfg = self.integrator() if "abs_tol" in self.options else IntegratorConfig()
        out["integrator"] = cfg.to_dict()
        return out

    def to_dict(self) -> dict:
        return {"analysis": self.analysis, "sections": self.sections}


# -- lexing -----------------------------------------------------------------------------------


def _strip_comment(text: str) -> str:
    quoted = False
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\\" and quoted:
            i += 2
            continue
        if ch == '"':
            quoted = not quoted
        elif ch == "#" and not quoted:
            return text[:i]
        i += 1
    return text


def _read_string(text: str, i: int, line: int) -> tuple[str, int]:
    """Parse a quoted string starting at text[i] == '"'; return (value, index after)."""
    out = []
    j = i + 1
    while j < len(text):
        ch = text[j]
        if ch == "\\":
            if j + 1 >= len(text) or text[j + 1] not in '"\\':
                raise ConfigError("bad escape in string (use \\\" or \\\\)", line, j + 1)
            out.append(text[j + 1])
            j += 2
            continue
        if ch == '"':
            return "".join(out), j + 1
        out.append(ch)
        j += 1
    raise ConfigError("unterminated string", line, i + 1)


def _split_items(text: str, start: int, line: int) -> list:
    """Comma-separated items of a parenthesised value; text[start] is '('."""
    items = []
    i = start + 1
    n = len(text)
    while True:
        while i < n and text[i] in " \t":
            i += 1
        if i < n and text[i] == ")" and not items:
            i += 1
            break
        if i >= n:
            raise ConfigError("unclosed '('", line, start + 1)
        if text[i] == '"':
            value, j = _read_string(text, i, line)
            items.append(_Item(value, True, i + 1))
            i = j
        else:
            depth = 0
            j = i
            while j < n and not (depth == 0 and text[j] in ",)"):
                if text[j] == "(":
                    depth += 1
                elif text[j] == ")":
                    depth -= 1
                elif text[j] == '"':
                    raise ConfigError("unexpected '\"'", line, j + 1)
                j += 1
            raw = text[i:j].strip()
            if not raw:
                raise ConfigError("empty item", line, i + 1)
            items.append(_Item(raw, False, i + 1))
            i = j
        while i < n and text[i] in " \t":
            i += 1
        if i < n and text[i] == ",":
            i += 1
            continue
        if i < n and text[i] == ")":
            i += 1
            break
        raise ConfigError("expected ',' or ')'", line, i + 1)
    if text[i:].strip():
        raise ConfigError("unexpected text after ')'", line, i + 1)
    return items


def _parse_value(text: str, start: int, line: int) -> tuple[list, bool]:
    rest = text[start:]
    if not rest.strip():
        raise ConfigError("missing value", line, start + 1)
    i = start + (len(rest) - len(rest.lstrip()))
    if text[i] == "(":
        return _split_items(text, i, line), True
    if text[i] == '"':
        value, j = _read_string(text, i, line)
        if text[j:].strip():
            raise ConfigError("unexpected text after string", line, j + 1)
        return [_Item(value, True, i + 1)], False
    return [_Item(text[i:].strip(), False, i + 1)], False


def _lex(source: str) -> list:
    sections: list[_Section] = []
    for lineno, raw in enumerate(source.splitlines(), start=1):
        text = raw.rstrip("\r")
        stripped = text.strip()
        if not stripped or stripped.startswith("#"):
            continue
        indent = len(text) - len(text.lstrip())
        if stripped.startswith("["):
            m = HEADER.match(stripped)
            if not m:
                raise ConfigError("malformed section header", lineno, indent + 1)
            kind, name = m.group(1), m.group(2)
            if kind not in SECTION_KINDS:
                raise ConfigError(
                    f"unknown section kind {kind!r}; expected one of {', '.join(SECTION_KINDS)}",
                    lineno, indent + 2,
                )
            if name is None:
                raise ConfigError(f"[{kind}] needs a name", lineno, indent + 1)
            sections.append(_Section(kind, name, lineno))
            continue
        body = _strip_comment(text)
        m = KEY.match(body, indent)
        if not m:
            raise ConfigError("expected 'key = value'", lineno, indent + 1)
        if not sections:
            raise ConfigError("entry outside of any section", lineno, indent + 1)
        items, is_tuple = _parse_value(body.rstrip(), m.end(), lineno)
        sections[-1].entries.append(_Entry(m.group(1), items, is_tuple, lineno, indent + 1, m.end() + 1))
    return sections


# -- typed values -----------------------------------------------------------------------------


def _real(item: _Item, line: int) -> float:
    if item.quoted:
        raise ConfigError("expected a number, got a string", line, item.column)
    try:
        value = evaluate(parse_expression(item.text, ("pi",)), np.array([math.pi]))
    except CenterlabError:
        if item.text in ("inf", "+inf"):
            return math.inf
        raise ConfigError(f"expected a number, got {item.text!r}", line, item.column) from None
    return float(value)


def _convert(entry: _Entry, spec: Key, names: dict):
    items, line = entry.items, entry.line
    t = spec.type
    if t in ("vec", "words"):
        if not entry.is_tuple:
            raise ConfigError(f"{entry.key} expects a parenthesised list", line, entry.value_column)
        if t == "vec":
            return tuple(_real(it, line) for it in items)
        for it in items:
            if not (it.quoted or WORD.match(it.text)):
                raise ConfigError(f"expected a name, got {it.text!r}", line, it.column)
        return tuple(it.text for it in items)
    if t == "dsl":
        if entry.is_tuple:
            if not all(it.quoted for it in items):
                raise ConfigError("field components must be quoted strings", line, entry.value_column)
            return [it.text for it in items]
        if not items[0].quoted:
            raise ConfigError("field expression must be a quoted string", line, items[0].column)
        return items[0].text
    if entry.is_tuple:
        raise ConfigError(f"{entry.key} expects a single value", line, entry.value_column)
    item = items[0]
    if t == "real":
        return _real(item, line)
    if t == "int":
        value = _real(item, line)
        if value != int(value):
            raise ConfigError(f"expected an integer, got {item.text!r}", line, item.column)
        return int(value)
    if t == "str":
        return item.text
    if t in ("word", "ref"):
        if not (item.quoted or WORD.match(item.text)):
            raise ConfigError(f"expected a name, got {item.text!r}", line, item.column)
        if t == "ref" and item.text not in names:
            raise ConfigError(f"{item.text!r} is not defined above this line", line, item.column)
        return item.text
    raise AssertionError(t)


def _collect(section: _Section, schema: dict, names: dict):
    values, positions = {}, {}
    for e in section.entries:
        spec = schema.get(e.key)
        if spec is None:
            raise ConfigError(
                f"unknown key {e.key!r} in [{section.kind} {section.name}]; "
                f"known keys: {', '.join(sorted(schema))}",
                e.line, e.column,
            )
        value = _convert(e, spec, names)
        if spec.repeat:
            values.setdefault(e.key, []).append(value)
            positions.setdefault(e.key, (e.line, e.value_column))
        else:
            if e.key in values:
                raise ConfigError(f"duplicate key {e.key!r}", e.line, e.column)
            values[e.key] = value
            positions[e.key] = (e.line, e.value_column)
    for key, spec in schema.items():
        if key not in values:
            if spec.required:
                raise ConfigError(f"[{section.kind} {section.name}] is missing {key!r}", section.line, 1)
            values[key] = [] if spec.repeat else spec.default
    return values, positions


def _build_field(sec: _Section, v: dict, pos: dict, fields: dict) -> VectorField:
    sources = [k for k in ("catalog", "expr", "from") if v[k] is not None]
    if len(sources) != 1:
        raise ConfigError(f"[field {sec.name}] needs exactly one of catalog, expr, from", sec.line, 1)
    where = pos[sources[0]]
    try:
        if v["catalog"] is not None:
            if v["catalog"] in HAMILTONIAN_NAMES:
                raise ConfigError(f"{v['catalog']} is a Hamiltonian; declare it in a [hamiltonian] section", *where)
            base = catalog(v["catalog"], v["params"] or ())
        elif v["expr"] is not None:
            variables = v["variables"]
            if isinstance(v["expr"], list):
                base = compile_source(FieldSource(len(v["expr"]), v["expr"], variables or ()), sec.name)
            else:
                base = compile_vector(v["expr"], variables, sec.name)
        else:
            base = fields[v["from"]]
    except ConfigError:
        raise
    except CatalogError as exc:
        raise ConfigError(str(exc), *where) from None
    except CenterlabError as exc:
        raise ConfigError(f"in field {sec.name}: {exc}", *where) from None
    out = base.scaled(v["scale"]) if v["scale"] != 1.0 else base
    if v["add"] is not None:
        other = fields[v["add"]]
        if other.dim != out.dim:
            raise ConfigError("added field has a different dimension", *pos["add"])
        out = out + other.scaled(v["add_scale"])
    return VectorField(out.dim, out.func, out.jac, sec.name)


def _build_hamiltonian(sec: _Section, v: dict, pos: dict) -> HamiltonianSystem:
    if (v["catalog"] is None) == (v["energy"] is None):
        raise ConfigError(f"[hamiltonian {sec.name}] needs exactly one of catalog, energy", sec.line, 1)
    if v["catalog"] is not None:
        if v["catalog"] not in HAMILTONIAN_NAMES:
            raise ConfigError(f"{v['catalog']!r} is not a catalog Hamiltonian", *pos["catalog"])
        return catalog(v["catalog"])
    variables = v["variables"] or ("x", "y")
    if len(variables) % 2:
        raise ConfigError("a Hamiltonian needs an even number of variables", *pos.get("variables", pos["energy"]))
    try:
        energy = compile_scalar(v["energy"], variables, sec.name)
    except CenterlabError as exc:
        raise ConfigError(f"in hamiltonian {sec.name}: {exc}", *pos["energy"]) from None
    return HamiltonianSystem(energy, sec.name)


def _echo(entries) -> dict:
    out = {}
    for k, val in entries.items():
        if isinstance(val, float) and not math.isfinite(val):
            val = str(val)
        elif isinstance(val, tuple):
            val = list(val)
        out[k] = val
    return out


def parse_config(source: str, path: str = "<string>") -> Scenario:
    """Parse scenario text; raises ConfigError with a position on any problem."""
    sections = _lex(source)
    fields: dict = {}
    hams: dict = {}
    analysis = None
    echo = []
    for sec in sections:
        if sec.kind in ("field", "hamiltonian"):
            if sec.name in fields:
                raise ConfigError(f"{sec.name!r} is already defined", sec.line, 1)
            if not WORD.match(sec.name):
                raise ConfigError(f"bad name {sec.name!r}", sec.line, 1)
            schema = FIELD_KEYS if sec.kind == "field" else HAMILTONIAN_KEYS
            values, pos = _collect(sec, schema, fields)
            if sec.kind == "field":
                fields[sec.name] = _build_field(sec, values, pos, fields)
            else:
                hams[sec.name] = _build_hamiltonian(sec, values, pos)
                fields[sec.name] = hams[sec.name].field
            echo.append({"kind": sec.kind, "name": sec.name,
                         "entries": _echo({k: v for k, v in values.items() if k in pos})})
            continue
        if analysis is not None:
            raise ConfigError("only one [analysis] section is allowed", sec.line, 1)
        if sec.name not in ANALYSIS_KEYS:
            raise ConfigError(
                f"unknown analysis {sec.name!r}; expected one of {', '.join(ANALYSIS_KEYS)}", sec.line, 1
            )
        options, positions = _collect(sec, ANALYSIS_KEYS[sec.name], fields)
        analysis = (sec.name, options, positions)
        echo.append({"kind": "analysis", "name": sec.name, "entries": _echo(options)})
    if analysis is None:
        raise ConfigError("no [analysis] section")
    kind, options, positions = analysis
    if "scheme" in options and options["scheme"] not in SCHEMES:
        raise ConfigError(f"scheme must be one of {', '.join(SCHEMES)}", *positions["scheme"])
    scenario = Scenario(fields, hams, kind, options, positions, echo, path)
    if "abs_tol" in options:
        try:
            scenario.integrator()
        except CenterlabError as exc:
            raise ConfigError(str(exc)) from None
    return scenario


def load_config(path) -> Scenario:
    """Read and parse a scenario file (UTF-8)."""
    p = Path(path)
    try:
        data = p.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        line = data[: exc.start].count(b"\n") + 1
        raise ConfigError("file is not valid UTF-8", line) from None
    return parse_config(text, str(path))
