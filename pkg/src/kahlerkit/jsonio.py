"""JSON encoding of coefficients and report values.

Exact rationals are written as integer ``num``/``den`` pairs, surds as a
``surd`` list of ``[i_power, radicand, num, den]`` rows, and float-mode
coefficients as decimal strings ``re``/``im`` carrying all 113 bits.
"""
from __future__ import annotations

import json
from fractions import Fraction
from numbers import Rational

from .surd import Surd

SCHEMA_VERSION = "1"
_DIGITS = 36


def coeff_to_json(c) -> dict:
    if isinstance(c, Surd):
        rows = [[e, r, v.numerator, v.denominator] for (e, r), v in sorted(c.terms.items())]
        return {"surd": rows}
    if isinstance(c, Rational):
        c = Fraction(c)
        return {"num": c.numerator, "den": c.denominator}
    from .series import FLOAT_CTX

    return {"re": FLOAT_CTX.nstr(c.real, _DIGITS), "im": FLOAT_CTX.nstr(c.imag, _DIGITS)}


def coeff_from_json(entry: dict):
    if "surd" in entry:
        total = Fraction(0)
        for e, r, num, den in entry["surd"]:
            unit = Surd._raw({(int(e), int(r)): Fraction(1)}) if (e, r) != (0, 1) else Fraction(1)
            total = total + unit * Fraction(int(num), int(den))
        return total
    if "num" in entry:
        return Fraction(int(entry["num"]), int(entry.get("den", 1)))
    if "re" in entry:
        from .series import FLOAT_CTX

        return FLOAT_CTX.mpc(FLOAT_CTX.mpf(entry["re"]), FLOAT_CTX.mpf(entry.get("im", "0")))
    raise ValueError(f"unrecognized coefficient encoding: {sorted(entry)}")


def render_number(x):
    """Render a scalar for a report: exact rationals as ``"num/den"``."""
    if isinstance(x, bool) or x is None:
        return x
    if isinstance(x, Surd):
        return repr(x)
    if isinstance(x, Rational):
        x = Fraction(x)
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, (int, str)):
        return x
    if isinstance(x, float):
        return x
    try:
        from .series import FLOAT_CTX

        if x.imag == 0:
            return float(x.real)
        return [float(x.real), float(x.imag)]
    except AttributeError:
        return str(x)


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
