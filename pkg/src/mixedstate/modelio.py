"""Text formats: the model-config format and flat key-value reports.

A model config has three sections::

    [family]
    kind = positive_gaussian      # or mixed_exponential, truncated_exponential,
    k = 2.0                       # censored_exponential (k required for the last two)

    [lattice]
    rows = 16
    cols = 16
    boundary = free               # or toroidal

    [params]
    a = -5.805                    # named scalars of the family's layout ...
    b = 3.044                     # (suffix 1/2 per direction, unsuffixed = isotropic)
    c1 = 3.057
    c2 = 2.954
    # ... or matrices row-major: alpha = ..., beta1 = ..., beta2 = ...

Parameters serialize through repr(), which round-trips float64 exactly.
Reports are flat ``key = value`` lines (floats, ints, booleans, quoted
strings, or bracketed float lists).
"""

from __future__ import annotations

import configparser
import math
from pathlib import Path

import numpy as np

from .automodel import AutoModel, Lattice
from .errors import FormatError, ParameterError
from .estimation import Parameterization
from .families import family_from_kind

__all__ = [
    "parse_model_config",
    "write_model_config",
    "format_report",
    "write_report",
    "read_report",
]


def _fmt(x: float) -> str:
    return repr(float(x))


def _parse_cfg(text: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str.lower
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise FormatError(f"bad model config: {exc}") from exc
    return cp


def parse_model_config(text: str) -> AutoModel:
    cp = _parse_cfg(text)
    for section in ("family", "lattice", "params"):
        if not cp.has_section(section):
            raise FormatError(f"model config is missing the [{section}] section")

    kind = cp.get("family", "kind", fallback=None)
    if kind is None:
        raise FormatError("[family] needs a kind")
    k_level = cp.getfloat("family", "k", fallback=None)
    family = family_from_kind(kind, k_level)
    if family.kind == "mixed_gamma":
        raise FormatError("mixed_gamma has no auto-model; configs support the other four families")

    try:
        lattice = Lattice(
            rows=cp.getint("lattice", "rows"),
            cols=cp.getint("lattice", "cols"),
            boundary=cp.get("lattice", "boundary", fallback="free"),
        )
    except (ValueError, configparser.NoOptionError) as exc:
        raise FormatError(f"bad [lattice] section: {exc}") from exc

    params = {key: value for key, value in cp.items("params")}
    try:
        if "alpha" in params:
            return _model_from_matrices(family, lattice, params)
        return _model_from_names(family, lattice, params)
    except (ParameterError, ValueError) as exc:
        raise FormatError(f"bad [params] section: {exc}") from exc


def _floats(text: str) -> np.ndarray:
    return np.array([float(tok) for tok in text.replace(",", " ").split()])


def _model_from_matrices(family, lattice, params) -> AutoModel:
    dim = family.dim
    alpha = _floats(params["alpha"])
    missing = {"beta1", "beta2"} - set(params)
    if missing:
        raise FormatError(f"matrix-mode params need {sorted(missing)}")
    beta_h = _floats(params["beta1"]).reshape(dim, dim)
    beta_v = _floats(params["beta2"]).reshape(dim, dim)
    return AutoModel(family, lattice, alpha, beta_h, beta_v)


def _model_from_names(family, lattice, params) -> AutoModel:
    isotropic = not any(key.endswith(("1", "2")) for key in params)
    param = Parameterization(family, isotropic=isotropic)
    phi = np.zeros(param.n_params)
    seen = set()
    for key, value in params.items():
        if key not in param.names:
            raise FormatError(f"unknown parameter {key!r}; expected names {param.names}")
        phi[param.names.index(key)] = float(value)
        seen.add(key)
    for name in param.names[: family.dim]:
        if name not in seen:
            raise FormatError(f"missing required parameter {name!r}")
    return param.model(lattice, phi)


def write_model_config(model: AutoModel) -> str:
    family = model.family
    lines = ["[family]", f"kind = {family.kind}"]
    if hasattr(family, "K"):
        lines.append(f"k = {_fmt(family.K)}")
    lines += [
        "",
        "[lattice]",
        f"rows = {model.lattice.rows}",
        f"cols = {model.lattice.cols}",
        f"boundary = {model.lattice.boundary}",
        "",
        "[params]",
    ]
    try:
        param = Parameterization(family)
        phi = param.pack(model.alpha, model.beta_h, model.beta_v)
        lines += [f"{name} = {_fmt(v)}" for name, v in zip(param.names, phi)]
    except ParameterError:
        lines.append("alpha = " + ", ".join(_fmt(v) for v in model.alpha))
        lines.append("beta1 = " + ", ".join(_fmt(v) for v in model.beta_h.ravel()))
        lines.append("beta2 = " + ", ".join(_fmt(v) for v in model.beta_v.ravel()))
    return "\n".join(lines) + "\n"


# -- flat reports ---------------------------------------------------------------


def format_report(entries: dict) -> str:
    lines = []
    for key, value in entries.items():
        if isinstance(value, bool):
            lines.append(f"{key} = {'true' if value else 'false'}")
        elif isinstance(value, (int, np.integer)):
            lines.append(f"{key} = {int(value)}")
        elif isinstance(value, (float, np.floating)):
            lines.append(f"{key} = {_fmt(value)}")
        elif isinstance(value, str):
            lines.append(f'{key} = "{value}"')
        elif isinstance(value, (list, tuple, np.ndarray)):
            body = ", ".join(_fmt(v) for v in np.asarray(value, dtype=float).ravel())
            lines.append(f"{key} = [{body}]")
        else:
            raise ParameterError(f"cannot serialize report entry {key!r} of type {type(value)}")
    return "\n".join(lines) + "\n"


def write_report(entries: dict, path) -> None:
    Path(path).write_text(format_report(entries))


def read_report(text: str) -> dict:
    out = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FormatError(f"bad report line {line!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if value.startswith("[") and value.endswith("]"):
            inner = value[1:-1].strip()
            out[key] = [float(tok) for tok in inner.replace(",", " ").split()] if inner else []
        elif value.startswith('"') and value.endswith('"'):
            out[key] = value[1:-1]
        elif value in ("true", "false"):
            out[key] = value == "true"
        else:
            try:
                out[key] = int(value)
            except ValueError:
                try:
                    out[key] = float(value)
                except ValueError:
                    raise FormatError(f"bad report value {value!r}") from None
    return out
