"""Run configuration: INI-style text, scenario presets and initial data.

Example::

    [grid]
    dims = 32, 32
    extent = 1.0, 1.0

    [scenario]
    preset = gaussian
    # optional inline overrides of the preset's data
    v0 = gaussian amplitude=0.5 center=0.5,0.5 width=0.1

    [scheme]
    k = 0.01
    m = 100
    alpha = 0.1
    s = 1

    [run]
    t_final = 1.0
    v_variant = from_z
    output_dir = out

Every key is optional except ``grid.dims``, ``scheme.k``, ``scheme.m`` and
``run.t_final``. Unknown sections or keys are errors.
"""

import configparser
import math
import re
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, ContractViolation
from .grid import FluxScheme, build_grid
from .scheme import SchemeParams
from .truncations import default_alpha
from .v_recovery import VVariant


@dataclass(frozen=True)
class InitialSpec:
    """Closed-form initial field.

    ``constant``: ``base``.
    ``gaussian``: ``base + amplitude * exp(-|x - c|**2 / (2 width**2))`` with
    ``c`` given as fractions of the extent.
    ``cosine``: ``base + amplitude * prod_a cos(pi * modes_a * x_a / L_a)``,
    which has zero normal derivative on the box.
    """

    kind: str
    base: float = 0.0
    amplitude: float = 1.0
    center: tuple = (0.5,)
    width: float = 0.1
    modes: tuple = (1,)

    KINDS = ("constant", "gaussian", "cosine")

    def evaluate(self, g):
        x = g.cell_centers()
        if self.kind == "constant":
            return g.full(self.base)
        if self.kind == "gaussian":
            center = _per_axis(self.center, g.ndim, "center")
            r2 = sum((xa - ca * la) ** 2 for xa, ca, la in zip(x, center, g.extent))
            return self.base + self.amplitude * np.exp(-r2 / (2.0 * self.width**2))
        modes = _per_axis(self.modes, g.ndim, "modes")
        prod = np.ones(g.dims)
        for xa, na, la in zip(x, modes, g.extent):
            prod = prod * np.cos(math.pi * na * xa / la)
        return self.base + self.amplitude * prod

    @property
    def is_constant(self):
        return self.kind == "constant" or self.amplitude == 0.0


def _per_axis(values, ndim, name):
    values = tuple(values)
    if len(values) == 1:
        return values * ndim
    if len(values) != ndim:
        raise ConfigError(f"{name} needs 1 or {ndim} entries, got {len(values)}", name)
    return values


PRESETS = {
    "gaussian": (
        InitialSpec("gaussian", amplitude=1.0, center=(0.4,), width=0.15),
        InitialSpec("gaussian", amplitude=1.0, center=(0.6,), width=0.2),
    ),
    "homogeneous": (InitialSpec("constant", base=2.0), InitialSpec("constant", base=1.0)),
    "no_signal": (
        InitialSpec("gaussian", amplitude=1.0, center=(0.4,), width=0.15),
        InitialSpec("constant", base=0.0),
    ),
    "cosine": (
        InitialSpec("cosine", base=1.0, amplitude=0.5, modes=(1,)),
        InitialSpec("cosine", base=0.5, amplitude=0.5, modes=(2,)),
    ),
}


def parse_initial_spec(text, name="u0"):
    """Parse ``"kind key=value ..."``, e.g. ``"gaussian amplitude=2 center=0.3,0.5"``.

    A bare number is shorthand for a constant.
    """
    parts = text.split()
    if not parts:
        raise ConfigError(f"{name}: empty initial-data spec", name)
    if len(parts) == 1 and parts[0] not in InitialSpec.KINDS:
        try:
            return InitialSpec("constant", base=float(parts[0]))
        except ValueError:
            pass
    return _spec(parts, name)


def _spec(parts, name):
    kind = parts[0]
    if kind not in InitialSpec.KINDS:
        raise ConfigError(f"{name}: unknown initial-data kind {kind!r}", name)
    kw = {}
    for item in parts[1:]:
        key, sep, value = item.partition("=")
        if not sep:
            if kind == "constant" and "base" not in kw:
                key, value = "base", item
            else:
                raise ConfigError(f"{name}: expected key=value, got {item!r}", name)
        try:
            if key in ("base", "amplitude", "width"):
                kw[key] = float(value)
            elif key == "center":
                kw[key] = tuple(float(c) for c in value.split(","))
            elif key == "modes":
                kw[key] = tuple(int(c) for c in value.split(","))
            else:
                raise ConfigError(f"{name}: unknown parameter {key!r}", name)
        except ValueError as exc:
            raise ConfigError(f"{name}: bad value for {key}: {value!r}", name) from exc
    return InitialSpec(kind, **kw)


@dataclass
class RunConfig:
    dims: tuple
    extent: tuple
    u0: InitialSpec
    v0: InitialSpec
    params: SchemeParams
    t_final: float
    preset: str = None
    v_variant: VVariant = VVariant.FROM_Z
    output_dir: str = "out"
    cadence: int = 1
    energy_envelope: float = 100.0
    track_gap: bool = True

    @property
    def n_steps(self):
        return int(round(self.t_final / self.params.k))

    def grid(self):
        return build_grid(self.dims, self.extent)

    def initial_data(self):
        g = self.grid()
        return g, self.u0.evaluate(g), self.v0.evaluate(g)

    def with_params(self, **changes):
        return replace(self, params=replace(self.params, **changes))


def _floats(text):
    return tuple(float(x) for x in text.replace(",", " ").split())


def _ints(text):
    values = _floats(text)
    if any(v != int(v) for v in values):
        raise ValueError("expected integers")
    return tuple(int(v) for v in values)


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


SCHEMA = {
    "grid": {"dims": _ints, "extent": _floats},
    "scenario": {"preset": str, "u0": str, "v0": str},
    "scheme": {
        "k": float, "m": float, "alpha": float, "s": float, "flux": str,
        "picard_tol": float, "picard_maxit": int, "step_halving_max": int,
        "bound_tol": float, "damping": float, "linear_tol": float,
    },
    "run": {
        "t_final": float, "v_variant": str, "output_dir": str, "cadence": int,
        "energy_envelope": float, "track_gap": _bool,
    },
}
KEY_SECTION = {key: sec for sec, keys in SCHEMA.items() for key in keys}


def _line_of(text, section, key):
    current = None
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        m = re.match(r"\[(.+)\]$", stripped)
        if m:
            current = m.group(1).strip()
        elif current == section and re.match(rf"{re.escape(key)}\s*[=:]", stripped, re.I):
            return lineno
    return None


def _read_raw(text):
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"line {exc.lineno}: key outside of any [section]", line=exc.lineno) from exc
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"line {lineno}: cannot parse {line.strip()!r}", line=lineno) from exc
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError(f"line {exc.lineno}: {exc.message}", line=exc.lineno) from exc
    raw = {}
    for section in cp.sections():
        if section not in SCHEMA:
            line = next((i for i, ln in enumerate(text.splitlines(), 1)
                         if ln.strip() == f"[{section}]"), None)
            raise ConfigError(f"line {line}: unknown section [{section}]", section, line)
        for key, value in cp.items(section):
            if key not in SCHEMA[section]:
                line = _line_of(text, section, key)
                raise ConfigError(f"line {line}: unknown key {key!r} in [{section}]", key, line)
            raw[key] = (value, _line_of(text, section, key))
    return raw


def parse_config(text, overrides=None):
    """Parse and validate configuration text into a :class:`RunConfig`.

    ``overrides`` maps bare key names (e.g. ``"k"``) to string values and
    takes precedence over the text.

    Raises
    ------
    ConfigError
        With the offending line number for syntax problems and the field
        name for validation problems.
    """
    raw = _read_raw(text)
    for key, value in (overrides or {}).items():
        if key not in KEY_SECTION:
            raise ConfigError(f"unknown override key {key!r}", key)
        raw[key] = (str(value), None)

    values = {}
    for key, (text_value, line) in raw.items():
        conv = SCHEMA[KEY_SECTION[key]][key]
        try:
            values[key] = conv(text_value.strip())
        except ValueError as exc:
            where = f"line {line}: " if line else ""
            raise ConfigError(f"{where}invalid value for {key!r}: {text_value!r}", key, line) from exc
    return _validate(values)


def _require(values, key):
    if key not in values:
        raise ConfigError(f"missing required key {key!r}", key)
    return values[key]


def _validate(values):
    dims = _require(values, "dims")
    extent = values.get("extent", (1.0,) * len(dims))
    if not 1 <= len(dims) <= 3 or any(n < 1 for n in dims):
        raise ConfigError(f"dims must be 1-3 counts >= 1, got {dims}", "dims")
    if len(extent) != len(dims) or any(not x > 0 for x in extent):
        raise ConfigError(f"extent must have {len(dims)} positive entries", "extent")

    preset = values.get("preset")
    if preset is not None and preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}", "preset")
    u0, v0 = PRESETS[preset] if preset else (None, None)
    if "u0" in values:
        u0 = parse_initial_spec(values["u0"], "u0")
    if "v0" in values:
        v0 = parse_initial_spec(values["v0"], "v0")
    if u0 is None or v0 is None:
        raise ConfigError("scenario needs a preset or both u0 and v0", "preset")

    for key in ("k", "m"):
        if not _require(values, key) > 0:
            raise ConfigError(f"{key} must be > 0, got {values[key]}", key)
    t_final = _require(values, "t_final")
    if not t_final > 0:
        raise ConfigError(f"t_final must be > 0, got {t_final}", "t_final")
    n_steps = round(t_final / values["k"])
    if n_steps < 1 or abs(n_steps * values["k"] - t_final) > 1e-9 * t_final:
        raise ConfigError("t_final must be a positive multiple of k", "t_final")

    g = build_grid(dims, extent)
    v0_field = v0.evaluate(g)
    u0_field = u0.evaluate(g)
    if np.any(u0_field < 0):
        raise ConfigError("u0 must be >= 0 everywhere", "u0")
    if np.any(v0_field < 0):
        raise ConfigError("v0 must be >= 0 everywhere", "v0")

    scheme_kw = {key: values[key] for key in SCHEMA["scheme"] if key in values}
    if "alpha" not in scheme_kw:
        scheme_kw["alpha"] = default_alpha(v0_field)
    if "flux" in scheme_kw and scheme_kw["flux"] not in [f.value for f in FluxScheme]:
        raise ConfigError(f"flux must be central or upwind, got {scheme_kw['flux']!r}", "flux")
    try:
        params = SchemeParams(**scheme_kw)
    except ContractViolation as exc:
        name = str(exc).split()[0]
        raise ConfigError(f"invalid scheme parameter: {exc}", name) from exc

    variant = values.get("v_variant", VVariant.FROM_Z.value)
    if variant not in [v.value for v in VVariant]:
        raise ConfigError(f"v_variant must be from_z or from_u, got {variant!r}", "v_variant")
    cadence = values.get("cadence", 1)
    if cadence < 1:
        raise ConfigError(f"cadence must be >= 1, got {cadence}", "cadence")
    envelope = values.get("energy_envelope", 100.0)
    if not envelope > 0:
        raise ConfigError("energy_envelope must be > 0", "energy_envelope")

    return RunConfig(
        dims=tuple(dims),
        extent=tuple(extent),
        u0=u0,
        v0=v0,
        params=params,
        t_final=t_final,
        preset=preset,
        v_variant=VVariant(variant),
        output_dir=values.get("output_dir", "out"),
        cadence=cadence,
        energy_envelope=envelope,
        track_gap=values.get("track_gap", True),
    )


def format_config(cfg):
    """Render ``cfg`` back into configuration text (inline initial data)."""

    def spec(s):
        parts = [s.kind, f"base={s.base!r}"]
        if s.kind != "constant":
            parts.append(f"amplitude={s.amplitude!r}")
        if s.kind == "gaussian":
            parts += [f"center={','.join(repr(c) for c in s.center)}", f"width={s.width!r}"]
        if s.kind == "cosine":
            parts.append(f"modes={','.join(str(n) for n in s.modes)}")
        return " ".join(parts)

    p = cfg.params
    lines = [
        "[grid]",
        f"dims = {', '.join(str(n) for n in cfg.dims)}",
        f"extent = {', '.join(repr(x) for x in cfg.extent)}",
        "",
        "[scenario]",
        f"u0 = {spec(cfg.u0)}",
        f"v0 = {spec(cfg.v0)}",
        "",
        "[scheme]",
    ]
    for name in SCHEMA["scheme"]:
        value = getattr(p, name)
        lines.append(f"{name} = {value.value if isinstance(value, FluxScheme) else repr(value)}")
    lines += [
        "",
        "[run]",
        f"t_final = {cfg.t_final!r}",
        f"v_variant = {cfg.v_variant.value}",
        f"output_dir = {cfg.output_dir}",
        f"cadence = {cfg.cadence}",
        f"energy_envelope = {cfg.energy_envelope!r}",
        f"track_gap = {str(cfg.track_gap).lower()}",
        "",
    ]
    return "\n".join(lines)
