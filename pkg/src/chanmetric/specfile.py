"""Channel-spec files (JSON).

Two forms are accepted::

    {"name": "depolarized_phase", "params": {"r": 0.1}, "theta": 0.0}
    {"d_in": 2, "d_out": 2, "choi": [[[re, im], ...], ...], "tangent": [...], "theta": 0.0}

An explicit Choi matrix with its tangent defines the affine family
``Phi + (theta - theta0) Delta`` around ``theta0``. Matrices are written as
rows of ``[re, im]`` pairs; floats are written with ``repr`` precision so
explicit Chois round-trip bit-exactly.
"""
from __future__ import annotations

import json
import os

import numpy as np

from .channels import Channel, ChannelFamily, ChannelTangent, SpecError, _from_pairs, _to_pairs, family_catalog


def explicit_family(phi: Channel, delta: ChannelTangent, theta0: float = 0.0) -> ChannelFamily:
    C, D = phi.choi, delta.choi

    def choi(theta):
        return C if theta == theta0 else C + (theta - theta0) * D

    return ChannelFamily("explicit", phi.d_in, phi.d_out, choi, lambda theta: D, params={"theta0": theta0})


def _int_field(spec: dict, name: str) -> int:
    v = spec.get(name)
    if not isinstance(v, int) or v < 1:
        raise SpecError(name, "expected a positive integer")
    return v


def _theta(spec: dict) -> float:
    t = spec.get("theta", 0.0)
    if isinstance(t, bool) or not isinstance(t, (int, float)):
        raise SpecError("theta", "expected a number")
    return float(t)


def family_from_spec(spec: dict) -> tuple[ChannelFamily, float]:
    """Parse a channel-spec mapping into ``(family, theta)``."""
    if not isinstance(spec, dict):
        raise SpecError("spec", "expected a JSON object")
    theta = _theta(spec)
    if "choi" in spec:
        d_in, d_out = _int_field(spec, "d_in"), _int_field(spec, "d_out")
        if "tangent" not in spec:
            raise SpecError("tangent", "explicit Choi specs need a tangent matrix")
        C = _from_pairs(spec["choi"], "choi")
        D = _from_pairs(spec["tangent"], "tangent")
        try:
            phi = Channel(d_in, d_out, C)
            delta = ChannelTangent(d_in, d_out, D)
        except ValueError as exc:
            raise SpecError("choi" if "CPTP" in str(exc) or "Choi" in str(exc) else "tangent", str(exc)) from None
        return explicit_family(phi, delta, theta), theta
    if "name" not in spec:
        raise SpecError("name", "required (or give an explicit 'choi')")
    params = spec.get("params", {})
    if not isinstance(params, dict):
        raise SpecError("params", "expected a JSON object")
    return family_catalog(spec["name"], params), theta


def explicit_spec(phi: Channel, delta: ChannelTangent, theta: float = 0.0) -> dict:
    return {
        "d_in": phi.d_in,
        "d_out": phi.d_out,
        "choi": _to_pairs(phi.choi),
        "tangent": _to_pairs(delta.choi),
        "theta": float(theta),
    }


def load_spec(path: str | os.PathLike) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise SpecError("spec", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise SpecError("spec", f"invalid JSON: {exc}") from None


def dump_spec(spec: dict, path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        json.dump(spec, fh, indent=1)
        fh.write("\n")


def matrices_equal(a, b) -> bool:
    return np.array_equal(np.asarray(a), np.asarray(b))
