"""Flat ``key = value`` experiment files.

Grammar: one ``key = value`` pair per line; ``#`` starts a comment that
runs to the end of the line; blank lines are ignored. Keys:

================== ======================================================
objective          task name (see ``gpopt.objectives.TASKS``)
objective_seed     int
policy             one kind or a comma-separated list (gpmi, gpucb, ...)
delta              float in (0, 1)
horizon            int
trials             int
init_observations  int
points_per_axis    int (lattice tasks only)
hyper_mode         cv | fixed
kernel             rbf | matern | linear (implies a fixed kernel)
length_scale       float (with ``kernel``)
nu                 float (with ``kernel = matern``)
output_scale       float (with ``kernel``)
noise_var          float, model noise variance
master_seed        int
================== ======================================================

A file with several policies yields one :class:`ExperimentConfig` per
policy, all sharing the remaining fields.
"""
from __future__ import annotations

from pathlib import Path

from .errors import ConfigError
from .harness import ExperimentConfig
from .kernels import Kernel

INT_KEYS = ("objective_seed", "horizon", "trials", "init_observations", "points_per_axis",
            "master_seed")
FLOAT_KEYS = ("delta", "noise_var")
KERNEL_KEYS = ("kernel", "length_scale", "nu", "output_scale")
KEYS = ("objective", "policy", "hyper_mode") + INT_KEYS + FLOAT_KEYS + KERNEL_KEYS


def parse_text(text: str) -> dict:
    """Raw ``{key: value-string}`` mapping; syntax errors name the line."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if not value:
            raise ConfigError(f"line {lineno}: empty value for {key!r}")
        out[key] = value
    return out


def _convert(key, value, kind):
    try:
        return kind(value)
    except ValueError:
        raise ConfigError(f"{key}: expected {kind.__name__}, got {value!r}") from None


def configs_from_dict(raw: dict) -> list:
    fields = {}
    for key in INT_KEYS:
        if key in raw:
            fields[key] = _convert(key, raw[key], int)
    for key in FLOAT_KEYS:
        if key in raw:
            fields[key] = _convert(key, raw[key], float)
    for key in ("objective", "hyper_mode"):
        if key in raw:
            fields[key] = raw[key]
    if "kernel" in raw:
        kw = {k: _convert(k, raw[k], float) for k in ("length_scale", "nu", "output_scale")
              if k in raw}
        fields["kernel"] = Kernel(raw["kernel"], **kw)
    elif any(k in raw for k in KERNEL_KEYS):
        raise ConfigError("length_scale, nu and output_scale need 'kernel'")
    policies = [p.strip() for p in raw.get("policy", "gpmi").split(",") if p.strip()]
    if not policies:
        raise ConfigError("policy list is empty")
    return [ExperimentConfig(policy=p, **fields) for p in policies]


def parse_config(text: str) -> list:
    """Experiment configs described by a config file's contents."""
    return configs_from_dict(parse_text(text))


def load_config(path) -> list:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)
