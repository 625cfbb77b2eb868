"""Shared formatting helpers for values, probabilities and JSON output."""

from __future__ import annotations

import math
import numbers
from fractions import Fraction
from typing import Any, Mapping, Sequence

import numpy as np

_RATIONAL_TOLERANCE = 1e-12
_MAX_DENOMINATOR = 10**6


def format_value(x: Any) -> str:
    """Short human-readable rendering of a value; ``inf``/``nan`` are spelled out."""
    if x is None:
        return "-"
    if isinstance(x, numbers.Real) and not isinstance(x, bool):
        v = float(x)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".10g")
    return str(x)


def rational_label(p: Any) -> str:
    """Render a probability as a small rational when it is one (``1/3``), else as a decimal."""
    if isinstance(p, Fraction):
        return str(p)
    try:
        import sympy as sym

        if isinstance(p, sym.Basic):
            return str(sym.nsimplify(p))
        v = float(p)
        if not math.isfinite(v):
            return format_value(v)
        q = sym.nsimplify(v, tolerance=_RATIONAL_TOLERANCE, rational=True)
        if isinstance(q, sym.Rational) and q.q <= _MAX_DENOMINATOR:
            return str(q)
    except (TypeError, ValueError):
        pass
    return format_value(p)


def json_safe(x: Any) -> Any:
    """Recursively convert numpy scalars and non-finite floats into JSON-compatible values.

    ``inf`` becomes the string ``"inf"`` (``"-inf"``, ``"nan"`` likewise).
    """
    if isinstance(x, Mapping):
        return {str(k): json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [json_safe(v) for v in x]
    if isinstance(x, np.ndarray):
        return [json_safe(v) for v in x.tolist()]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (numbers.Integral, np.integer)):
        return int(x)
    if isinstance(x, (numbers.Real, np.floating)):
        v = float(x)
        return v if math.isfinite(v) else format_value(v)
    return x


def format_sets(sets: Sequence[Sequence[int]], labels: Sequence[str]) -> str:
    """``label: {a, b}`` listing used in log lines."""
    parts = []
    for z, options in enumerate(sets):
        if z < len(labels):
            parts.append(f"{labels[z]}: {{{', '.join(str(o) for o in options)}}}")
    return "; ".join(parts)
