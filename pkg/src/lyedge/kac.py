"""Exact Kac-weight arithmetic for the minimal models M(2, 2m+1).

Rationals are ``fractions.Fraction`` (always reduced, arbitrary-size
integers).  Floats enter only in the two numerical cross-checks.
"""

import cmath
import csv
import io
import json
import math
from dataclasses import dataclass
from fractions import Fraction

from . import edge


@dataclass(frozen=True)
class KacRow:
    m: int
    h: Fraction
    y_t: Fraction
    sigma: Fraction
    q: int

    def __post_init__(self):
        if not (self.h < 0 and -1 < self.sigma < 0):
            raise ValueError("inconsistent row: need h < 0 and sigma in (-1, 0)")
        if self.y_t != 2 * (1 - self.h):
            raise ValueError("inconsistent row: y_t != 2(1 - h)")
        if self.q != (1 / (1 - self.h)).denominator:
            raise ValueError("inconsistent row: q != denom(1/(1 - h))")

    @property
    def model(self):
        return f"M(2,{2 * self.m + 1})"

    def to_dict(self):
        return {"model": self.model, "m": self.m, "h_phi": str(self.h),
                "y_t": str(self.y_t), "sigma": str(self.sigma), "q": self.q}


def _negative(h):
    h = Fraction(h)
    if not h < 0:
        raise ValueError(f"weight must be negative, got {h}")
    return h


def kac_weight(m):
    """h_{1,2} of M(2, 2m+1)."""
    if int(m) != m or m < 2:
        raise ValueError("m must be an integer >= 2")
    return Fraction(1 - m, 2 * m + 1)


def edge_exponent_from_weight(h):
    h = _negative(h)
    sigma = h / (1 - h)
    assert -1 < sigma < 0
    return sigma


def rg_thermal_exponent(h):
    return 2 * (1 - _negative(h))


def monodromy_order_from_weight(h):
    return (1 / (1 - _negative(h))).denominator


def kac_row(m):
    h = kac_weight(m)
    return KacRow(m=m, h=h, y_t=rg_thermal_exponent(h),
                  sigma=edge_exponent_from_weight(h),
                  q=monodromy_order_from_weight(h))


def kac_table(m_max):
    if int(m_max) != m_max or m_max < 2:
        raise ValueError("m_max must be an integer >= 2")
    return [kac_row(m) for m in range(2, m_max + 1)]


TABLE_HEADER = ("model", "m", "h_phi", "y_t", "sigma", "q")


def _cells(row):
    return (row.model, str(row.m), str(row.h), str(row.y_t), str(row.sigma),
            str(row.q))


def format_table(rows, fmt="markdown"):
    """Render rows as csv, json or a pipe-delimited markdown table."""
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TABLE_HEADER)
        w.writerows(_cells(r) for r in rows)
        return buf.getvalue()
    if fmt == "json":
        return json.dumps([r.to_dict() for r in rows], indent=2) + "\n"
    if fmt == "markdown":
        lines = ["| " + " | ".join(TABLE_HEADER) + " |",
                 "|" + "---|" * len(TABLE_HEADER)]
        lines += ["| " + " | ".join(_cells(r)) + " |" for r in rows]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def rg_scaling_check(C, y_t, ts, lams):
    """max |F_s(lam^y_t t) - lam^2 F_s(t)| for F_s(t) = C t^(2/y_t)."""
    C = complex(C)
    if C == 0:
        raise ValueError("C must be nonzero")
    ts, lams = list(ts), list(lams)
    if not ts or not lams or min(ts) <= 0 or min(lams) <= 0:
        raise ValueError("grids must be nonempty and positive")
    y = float(Fraction(y_t))
    e = 2.0 / y

    def fs(t):
        return C * t ** e
    return max(abs(fs(lam ** y * t) - lam ** 2 * fs(t)) for t in ts for lam in lams)


def crosscheck_with_monodromy(row, *, radius=0.1, samples=256):
    """Exact order from sigma + 1 agrees with the numerically continued germ."""
    alpha = row.sigma + 1
    exact = edge.monodromy_order(alpha)
    res = edge.continue_around(edge.PowerGerm(1.0, float(alpha)), radius, samples)
    expected = cmath.exp(2j * math.pi * float(alpha))
    return (exact == row.q and res.order == row.q
            and abs(res.multiplier - expected) < 1e-6)
