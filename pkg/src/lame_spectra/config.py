"""INI problem configuration and the named built-in problems.

Sections and keys::

    [domain]        geometry = square | disc | half_disc, n, radius, refine,
                    s = none | all | bottom | left_half | diameter
    [coefficients]  mu, lambda, kappa
    [weight]        rho = none | distance, gamma
    [factorization] kind = D1 | D2 | D3
    [perturbation]  a00, da0_s, da0_c, a1, b1, b00, db0_s, db0_c, d_tau, weight_part

A matrix entry is either one number c (meaning c I) or a comma separated row-major list.
"""
from __future__ import annotations

import configparser
import hashlib
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .mesh import (
    build_disc_mesh,
    build_half_disc_mesh,
    build_unit_square_mesh,
    refine,
    tag_boundary,
)
from .problem import Kind, LameCoefficients, PerturbationSpec, ProblemSpec, unit_weight, weight_distance

_KEYS = {
    "domain": {"geometry", "n", "radius", "refine", "s"},
    "coefficients": {"mu", "lambda", "kappa"},
    "weight": {"rho", "gamma"},
    "factorization": {"kind"},
    "perturbation": {"a00", "da0_s", "da0_c", "a1", "b1", "b00", "db0_s", "db0_c", "d_tau", "weight_part"},
}

# each rule marks the S edges from their midpoints
_S_RULES = {
    "none": lambda p: np.zeros(len(p), bool),
    "all": lambda p: np.ones(len(p), bool),
    "bottom": lambda p: p[:, 1] < 1e-12,
    "left_half": lambda p: p[:, 0] < 0,
    "diameter": lambda p: np.abs(p[:, 1]) < 1e-12,
}

BUILTINS = {
    "ex_d1": """
[domain]
geometry = square
n = 8
s = bottom
[coefficients]
mu = 1
lambda = 1
[factorization]
kind = D1
""",
    "ex_d2": """
[domain]
geometry = square
n = 8
s = bottom
[coefficients]
mu = 1
lambda = 0
[factorization]
kind = D2
[perturbation]
d_tau = 0, 0.1, -0.1, 0
""",
    "ex_d3": """
[domain]
geometry = disc
n = 32
s = left_half
[coefficients]
mu = 1
lambda = 0
[factorization]
kind = D3
[perturbation]
b00 = 1
""",
    "example1": """
[domain]
geometry = disc
n = 32
s = none
[coefficients]
mu = 1
lambda = 0
[factorization]
kind = D3
[perturbation]
a00 = 1
b00 = 1
""",
    "example2": """
[domain]
geometry = half_disc
n = 16
s = diameter
[weight]
rho = distance
gamma = 0
[coefficients]
mu = 1
lambda = 0
[factorization]
kind = D3
""",
}


BUILTIN_DESCRIPTIONS = {
    "ex_d1": "kind=D1, unit square, S = bottom side, Robin part carries the stress traction",
    "ex_d2": "kind=D2, unit square, S = bottom side, tangential perturbation d = h mu J with h = 0.1",
    "ex_d3": "kind=D3, unit disc, S = left half circle, b00 = I on the right half",
    "example1": "kind=D3, unit disc, S empty, a00 = I, b00 = I (harmonic gradients are not compact)",
    "example2": "kind=D3, half disc, S = diameter, distance weight with gamma = 0",
}


def list_builtins() -> list[str]:
    return list(BUILTINS)


def describe_builtins() -> str:
    return "\n".join(f"{name}: {BUILTIN_DESCRIPTIONS[name]}" for name in BUILTINS)


def _matrix(text: str, key: str, shape: tuple):
    try:
        vals = [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad number in {key}: {text!r}") from exc
    if len(vals) == 1:
        return vals[0]
    if len(vals) != shape[0] * shape[1]:
        raise ConfigError(f"{key} needs 1 or {shape[0] * shape[1]} entries, got {len(vals)}")
    return np.array(vals).reshape(shape)


def _get(section, key, conv, default):
    if key not in section:
        return default
    try:
        return conv(section[key])
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {section[key]!r}") from exc


def parse_config(text: str, name: str = "config", refine_extra: int = 0) -> ProblemSpec:
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse configuration: {exc}") from exc
    for sec in cp.sections():
        if sec not in _KEYS:
            raise ConfigError(f"unknown section [{sec}]")
        unknown = set(cp[sec]) - _KEYS[sec]
        if unknown:
            raise ConfigError(f"unknown keys in [{sec}]: {sorted(unknown)}")
    empty = {}
    dom = cp["domain"] if cp.has_section("domain") else empty
    geometry = dom.get("geometry", "square")
    n = _get(dom, "n", int, 8)
    radius = _get(dom, "radius", float, 1.0)
    n_refine = _get(dom, "refine", int, 0) + refine_extra
    if n < 1 or radius <= 0 or n_refine < 0:
        raise ConfigError("n, radius must be positive and refine non-negative")
    if geometry == "square":
        mesh = build_unit_square_mesh(n)
    elif geometry == "disc":
        mesh = build_disc_mesh(max(n, 4), radius)
    elif geometry == "half_disc":
        mesh = build_half_disc_mesh(max(n, 4), radius)
    else:
        raise ConfigError(f"unknown geometry {geometry!r}")
    s_rule = dom.get("s", "diameter" if geometry == "half_disc" else "none")
    if s_rule not in _S_RULES:
        raise ConfigError(f"unknown S rule {s_rule!r}")
    mesh = mesh.with_partition(tag_boundary(mesh, _S_RULES[s_rule]))
    for _ in range(n_refine):
        mesh = refine(mesh)

    co = cp["coefficients"] if cp.has_section("coefficients") else empty
    coeffs = LameCoefficients(_get(co, "mu", float, 1.0), _get(co, "lambda", float, 0.0), _get(co, "kappa", float, 0.5))

    we = cp["weight"] if cp.has_section("weight") else empty
    gamma = _get(we, "gamma", float, 0.0)
    rho = we.get("rho", "none")
    if rho == "none":
        weight = unit_weight(gamma)
    elif rho == "distance":
        weight = weight_distance(mesh, gamma=gamma)
    else:
        raise ConfigError(f"unknown weight {rho!r}")

    fa = cp["factorization"] if cp.has_section("factorization") else empty
    try:
        kind = Kind(fa.get("kind", "D3").upper())
    except ValueError as exc:
        raise ConfigError(f"unknown factorization {fa.get('kind')!r}") from exc

    pe = cp["perturbation"] if cp.has_section("perturbation") else empty
    a1_shape = (2, 2) if kind is Kind.D3 else (2, 4)
    fields = {}
    for key in _KEYS["perturbation"] - {"weight_part"}:
        if key in pe:
            fields[key] = _matrix(pe[key], key, a1_shape if key == "a1" else (2, 2))
    wp = pe.get("weight_part", "true").strip().lower()
    if wp not in ("true", "false", "1", "0", "yes", "no"):
        raise ConfigError(f"bad weight_part {wp!r}")
    pert = PerturbationSpec(**fields, weight_part=wp in ("true", "1", "yes"))
    digest = hashlib.sha256((text + f"\n#refine+{refine_extra}").encode()).hexdigest()
    return ProblemSpec(mesh, kind, coeffs, weight, pert, name=name, config_hash=digest)


def load_config(source: str, refine_extra: int = 0) -> ProblemSpec:
    """Load a problem from an INI file path or a built-in name."""
    if source in BUILTINS:
        return parse_config(BUILTINS[source], name=source, refine_extra=refine_extra)
    path = Path(source)
    if not path.is_file():
        raise ConfigError(f"no such configuration file or built-in: {source!r}")
    return parse_config(path.read_text(), name=path.stem, refine_extra=refine_extra)
