"""Experiment configuration files, value specs and run manifests.

Grammar (one item per line, ``#`` starts a comment)::

    [section]            # optional; one of the SECTIONS below
    key = value          # key must be known (for the section, if one is open)

Keys outside any section are looked up in every section.  Values are raw
strings; typed accessors parse them and report the line on failure.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
import zlib
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import mpmath
import numpy as np

from .errors import ValidationError
from .systems import (
    FiniteSystem,
    Observable,
    SkewProductSystem,
    character,
    make_product_rotation,
    random_bounded,
    random_unimodular,
)

SECTIONS: dict[str, set[str]] = {
    "system": {"system", "q", "d", "shifts", "alpha", "start"},
    "observables": {"f", "f0", "f1", "f2", "f3", "chi", "A", "F"},
    "sequence": {"seq", "p", "Ns", "N", "k", "kmax", "beta", "eps", "eps_grid", "words", "dirs", "v1", "v2"},
    "tolerances": {"tol", "diff", "zero_tol"},
    "output": {"dir", "prefix"},
}
_KEY_SECTION = {k: sec for sec, keys in SECTIONS.items() for k in keys}
_LINE = re.compile(r"^(?P<key>[A-Za-z_][A-Za-z0-9_]*)\s*=\s*(?P<value>.*)$")


@dataclass(frozen=True)
class Entry:
    section: str
    key: str
    value: str
    line: int


@dataclass
class ExperimentConfig:
    entries: dict[str, Entry] = field(default_factory=dict)
    source: str = "<config>"

    def has(self, key: str) -> bool:
        return key in self.entries

    def raw(self, key: str, default: str | None = None) -> str:
        if key in self.entries:
            return self.entries[key].value
        if default is not None:
            return default
        raise ValidationError(f"{self.source}: missing field {key!r}")

    def where(self, key: str) -> str:
        e = self.entries.get(key)
        return f"{self.source}:{e.line} ({key})" if e else f"{self.source} ({key})"

    def get_int(self, key: str, default: int | None = None) -> int:
        if key not in self.entries and default is not None:
            return default
        try:
            return int(self.raw(key))
        except ValueError as exc:
            raise ValidationError(f"{self.where(key)}: expected an integer, got {self.raw(key)!r}") from exc

    def get_float(self, key: str, default: float | None = None) -> float:
        if key not in self.entries and default is not None:
            return default
        try:
            val = float(self.raw(key))
        except ValueError as exc:
            raise ValidationError(f"{self.where(key)}: expected a number, got {self.raw(key)!r}") from exc
        if key in SECTIONS["tolerances"] and not val > 0:
            raise ValidationError(f"{self.where(key)}: tolerance must be positive")
        return val

    def get_int_list(self, key: str) -> list[int]:
        try:
            return parse_int_list(self.raw(key))
        except ValidationError as exc:
            raise ValidationError(f"{self.where(key)}: {exc}") from exc

    def digest(self) -> str:
        return config_digest(self)


def parse_config_text(text: str, source: str = "<config>") -> ExperimentConfig:
    cfg = ExperimentConfig(source=source)
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ValidationError(f"{source}:{lineno}: malformed section header {stripped!r}")
            section = stripped[1:-1].strip()
            if section not in SECTIONS:
                raise ValidationError(f"{source}:{lineno}: unknown section [{section}]")
            continue
        m = _LINE.match(stripped)
        if not m:
            raise ValidationError(f"{source}:{lineno}: expected 'key = value', got {stripped!r}")
        key, value = m.group("key"), m.group("value").strip()
        if key not in _KEY_SECTION:
            raise ValidationError(f"{source}:{lineno}: unknown key {key!r}")
        home = _KEY_SECTION[key]
        if section is not None and home != section:
            raise ValidationError(f"{source}:{lineno}: key {key!r} does not belong in [{section}]")
        if key in cfg.entries:
            raise ValidationError(f"{source}:{lineno}: duplicate key {key!r}")
        if value == "":
            raise ValidationError(f"{source}:{lineno}: empty value for {key!r}")
        cfg.entries[key] = Entry(home, key, value, lineno)
    return cfg


def parse_config(path: str) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path!r}: {exc.strerror}") from exc
    return parse_config_text(text, source=path)


def _normalise(value: str) -> str:
    return re.sub(r"\s+", "", value)


def config_digest(cfg: ExperimentConfig) -> str:
    """SHA-256 of sorted (section, key, value-without-whitespace) triples."""
    items = sorted((e.section, e.key, _normalise(e.value)) for e in cfg.entries.values())
    return hashlib.sha256(json.dumps(items).encode()).hexdigest()


# --------------------------------------------------------------------------
# value specs


def parse_int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in re.split(r"[,\s]+", text.strip().strip("[]")) if t]
    except ValueError as exc:
        raise ValidationError(f"expected a list of integers, got {text!r}") from exc


def parse_matrix(text: str) -> list[list[int]]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"expected a JSON integer matrix, got {text!r}") from exc
    if not isinstance(data, list) or not all(isinstance(r, list) and all(isinstance(v, int) for v in r) for r in data):
        raise ValidationError(f"expected a list of integer vectors, got {text!r}")
    return data


def parse_real(text: str):
    """Exact rational for decimal/fraction literals; mpmath value for sqrt(n)+r forms, pi, e."""
    t = text.strip().replace(" ", "")
    if t == "sqrt2m1":
        t = "sqrt(2)-1"
    try:
        return Fraction(t)
    except ValueError:
        pass
    m = re.fullmatch(r"sqrt\((\d+)\)(?:([+-])(\d+(?:/\d+)?))?", t)
    with mpmath.workdps(60):
        if m:
            v = mpmath.sqrt(int(m.group(1)))
            if m.group(2):
                r = Fraction(m.group(3))
                v = v + (1 if m.group(2) == "+" else -1) * mpmath.mpf(r.numerator) / r.denominator
            return v
        if t == "pi":
            return +mpmath.pi
        if t == "e":
            return +mpmath.e
    raise ValidationError(f"cannot parse real number {text!r}")


def build_system(cfg: ExperimentConfig) -> FiniteSystem:
    kind = cfg.raw("system")
    if kind != "product_rotation":
        raise ValidationError(f"{cfg.where('system')}: unsupported finite system {kind!r}")
    q, d = cfg.get_int("q"), cfg.get_int("d", 1)
    shifts = parse_matrix(cfg.raw("shifts"))
    try:
        return make_product_rotation(q, d, shifts)
    except ValidationError as exc:
        raise ValidationError(f"{cfg.where('shifts')}: {exc}") from exc


def build_skew(cfg: ExperimentConfig) -> SkewProductSystem:
    alpha = parse_real(cfg.raw("alpha"))
    start = tuple(parse_real(v) for v in cfg.raw("start", "0,0").split(","))
    if len(start) != 2:
        raise ValidationError(f"{cfg.where('start')}: start must be a pair")
    return SkewProductSystem(alpha, start)


def derived_seed(seed: int, name: str) -> np.random.SeedSequence:
    """Independent stream per named object, fixed by the global seed."""
    return np.random.SeedSequence([int(seed), zlib.crc32(name.encode())])


def _kv(tokens: list[str]) -> dict[str, str]:
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise ValidationError(f"expected key=value, got {tok!r}")
        k, v = tok.split("=", 1)
        out[k] = v
    return out


def parse_set(sys_size: int, text: str, seed: int = 0, name: str = "A") -> np.ndarray:
    """'all', 'empty', '0,1,5', '0..9' ranges, or 'random density=0.5 [seed=3]' -> boolean mask."""
    t = text.strip()
    mask = np.zeros(sys_size, dtype=bool)
    if t == "all":
        mask[:] = True
        return mask
    if t == "empty":
        return mask
    if t.startswith("random"):
        kv = _kv(t.split()[1:])
        try:
            density = float(kv.get("density", "0.5"))
            rng = np.random.default_rng(int(kv["seed"]) if "seed" in kv else derived_seed(seed, name))
        except ValueError as exc:
            raise ValidationError(f"bad random set spec {text!r}") from exc
        return rng.random(sys_size) < density
    for part in re.split(r"[,\s]+", t):
        if not part:
            continue
        try:
            if ".." in part:
                a, b = (int(v) for v in part.split(".."))
                idx = range(a, b + 1)
            else:
                idx = [int(part)]
        except ValueError as exc:
            raise ValidationError(f"bad set element {part!r}") from exc
        for i in idx:
            if not 0 <= i < sys_size:
                raise ValidationError(f"set element {i} outside [0, {sys_size})")
            mask[i] = True
    return mask


def parse_observable(sys: FiniteSystem, text: str, seed: int = 0, name: str = "f") -> Observable:
    """'char k1 .. kd', 'indicator <set>', 'random-unimodular [seed=7]', 'random-bounded [seed=7]', 'const c'."""
    toks = text.split()
    if not toks:
        raise ValidationError(f"empty observable spec for {name}")
    kind = toks[0]
    if kind == "char":
        return character(sys, parse_int_list(" ".join(toks[1:])))
    if kind == "indicator":
        mask = parse_set(sys.point_count, " ".join(toks[1:]), seed, name)
        return Observable(mask.astype(np.complex128), 1.0)
    if kind in ("random-unimodular", "random-bounded"):
        kv = _kv(toks[1:])
        rng = np.random.default_rng(int(kv["seed"]) if "seed" in kv else derived_seed(seed, name))
        return (random_unimodular if kind == "random-unimodular" else random_bounded)(sys, rng)
    if kind == "const":
        try:
            c = complex(toks[1])
        except (IndexError, ValueError) as exc:
            raise ValidationError(f"bad constant in {text!r}") from exc
        return Observable(np.full(sys.point_count, c))
    raise ValidationError(f"unknown observable kind {kind!r}")


# --------------------------------------------------------------------------
# manifests


@dataclass
class RunManifest:
    command: list[str]
    config_digest: str | None
    seed: int
    versions: dict[str, str]
    wall_clock_ms: float = 0.0
    timings: dict[str, float] = field(default_factory=dict)

    def digest(self) -> str:
        """Deterministic digest of everything except timings."""
        payload = {
            "command": self.command,
            "config_digest": self.config_digest,
            "seed": self.seed,
            "versions": self.versions,
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()

    def to_json(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "config_digest": self.config_digest,
            "seed": self.seed,
            "versions": self.versions,
            "wall_clock_ms": self.wall_clock_ms,
            "timings": self.timings,
            "digest": self.digest(),
        }


def versions() -> dict[str, str]:
    import scipy

    from . import __version__

    return {"boxlab": __version__, "numpy": np.__version__, "scipy": scipy.__version__, "mpmath": mpmath.__version__}


def is_finite_number(x: float) -> bool:
    return isinstance(x, (int, float)) and math.isfinite(x)
