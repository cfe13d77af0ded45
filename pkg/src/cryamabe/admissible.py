"""Admissible orders ``gamma`` and the table of block subgroups per dimension.

``gamma`` is admissible for ``n`` when it lies in ``U_{k=1..n} [k, kQ/(Q-1))``.
Then ``l = floor(gamma)`` satisfies ``gamma (1 - 1/Q) < l <= gamma``, which is
equivalent to ``q_l* = 2(Q-1)/(Q-1-2l) > p = 2Q/(Q-2 gamma)``.

Rational input (``int``, ``Fraction``) is handled exactly. Floats are
converted exactly too, except that a float within ``FLOAT_GUARD`` of an
interval endpoint (but not equal to it) is snapped to that endpoint with a
warning, so ``4/3`` rounded to a double is still rejected.
"""
import csv
import io
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

from .exceptions import DomainError

__all__ = [
    "FLOAT_GUARD",
    "AdmissibilityReport",
    "TableRow",
    "admissibility",
    "admissible_intervals",
    "group_partitions",
    "sequence_count",
    "verify_embedding_chain",
    "render_table",
    "table_csv",
    "table_text",
]

FLOAT_GUARD = 1e-12


def _as_number(gamma):
    if isinstance(gamma, bool):
        raise TypeError("gamma must be numeric")
    if isinstance(gamma, (int, Fraction)):
        return Fraction(gamma), True
    g = float(gamma)
    if not math.isfinite(g):
        raise DomainError("gamma must be finite")
    return Fraction(g), False


def admissible_intervals(n):
    """Half-open intervals ``[k, kQ/(Q-1))`` for ``k = 1..n`` as exact fractions."""
    Q = 2 * n + 2
    return [(Fraction(k), Fraction(k * Q, Q - 1)) for k in range(1, n + 1)]


def group_partitions(n):
    """Block sizes of ``G_i`` for ``i = 1..floor((n+1)/2)``."""
    out = []
    for i in range(1, (n + 1) // 2 + 1):
        out.append((i, i) if n + 1 == 2 * i else (i, n + 1 - 2 * i, i))
    return out


def sequence_count(n):
    return (n + 1) // 2


@dataclass(frozen=True)
class AdmissibilityReport:
    n: int
    gamma: object
    Q: int
    admissible: bool
    l: object
    q_l_star: object
    p_critical: object
    sequence_count: int
    exact: bool

    def as_dict(self):
        def conv(v):
            if isinstance(v, Fraction):
                return str(v) if self.exact else float(v)
            return v

        return {k: conv(getattr(self, k)) for k in self.__dataclass_fields__}


def admissibility(n, gamma):
    """Admissibility of ``gamma`` for ``S^{2n+1}`` with the derived exponents.

    Parameters
    ----------
    n : int
    gamma : int, Fraction or float
        Must lie in ``(0, Q/2)``.

    Returns
    -------
    AdmissibilityReport
        ``l`` and ``q_l_star`` are ``None`` unless admissible. Exponents are
        ``Fraction`` for rational input and ``float`` otherwise.
    """
    if int(n) != n or n < 1:
        raise DomainError("n must be a positive integer")
    n = int(n)
    Q = 2 * n + 2
    g, exact = _as_number(gamma)
    if not (0 < g < Fraction(Q, 2)):
        raise DomainError(f"gamma must lie in (0, {Q // 2}) for n={n}, got {gamma}")
    intervals = admissible_intervals(n)
    if not exact:
        ends = [e for pair in intervals for e in pair]
        near = min(ends, key=lambda e: abs(g - e))
        if g != near and abs(g - near) <= FLOAT_GUARD:
            warnings.warn(
                f"gamma={gamma!r} is within {FLOAT_GUARD} of the endpoint {near}; "
                "treating it as the endpoint (pass a Fraction for an exact decision)",
                RuntimeWarning,
                stacklevel=2,
            )
            g = near
    ok = any(lo <= g < hi for lo, hi in intervals)
    p = Fraction(2 * Q) / (Q - 2 * g)
    l = q = None
    if ok:
        l = math.floor(g)
        q = Fraction(2 * (Q - 1), Q - 1 - 2 * l)
    cast = (lambda v: v) if exact else (lambda v: None if v is None else float(v))
    return AdmissibilityReport(
        n=n,
        gamma=g if exact else float(gamma),
        Q=Q,
        admissible=ok,
        l=l,
        q_l_star=cast(q),
        p_critical=cast(p),
        sequence_count=sequence_count(n),
        exact=exact,
    )


def verify_embedding_chain(report):
    """``l <= gamma`` and ``q_l* > p`` checked in exact arithmetic."""
    if not report.admissible:
        raise DomainError("the embedding chain is only asserted for admissible gamma")
    g = Fraction(report.gamma)
    Q = report.Q
    l = report.l
    q = Fraction(2 * (Q - 1), Q - 1 - 2 * l)
    p = Fraction(2 * Q) / (Q - 2 * g)
    lower = g * (1 - Fraction(1, Q)) < l
    return bool(l <= g and q > p and lower)


@dataclass(frozen=True)
class TableRow:
    n: int
    Q: int
    groups: tuple
    intervals: tuple
    sequence_count: int

    def groups_text(self):
        return ["G_%d = %s" % (i + 1, " x ".join(f"U({m})" for m in parts))
                for i, parts in enumerate(self.groups)]

    def domain_text(self):
        return " u ".join(f"[{lo}, {hi})" for lo, hi in self.intervals)


def render_table(n_max):
    """Rows ``n = 1..n_max`` of block subgroups, admissible union and sequence count."""
    if int(n_max) != n_max or not 1 <= n_max <= 64:
        raise DomainError("n_max must be an integer in [1, 64]")
    return [
        TableRow(n, 2 * n + 2, tuple(group_partitions(n)), tuple(admissible_intervals(n)), sequence_count(n))
        for n in range(1, int(n_max) + 1)
    ]


def table_csv(rows):
    """CSV with one line per row; groups joined by ``;``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "Q", "groups", "admissible", "sequences"])
    for r in rows:
        w.writerow([r.n, r.Q, "; ".join(r.groups_text()), r.domain_text(), r.sequence_count])
    return buf.getvalue()


def table_text(rows):
    """Aligned plain-text table; multi-group rows span several lines."""
    header = ("n", "Q", "G_i", "admissible gamma", "sequences")
    lines = []
    for r in rows:
        groups = r.groups_text()
        for k, g in enumerate(groups):
            first = k == 0
            lines.append((str(r.n) if first else "", str(r.Q) if first else "", g,
                          r.domain_text() if first else "", str(r.sequence_count) if first else ""))
    widths = [max(len(header[c]), *(len(line[c]) for line in lines)) for c in range(5)]
    fmt = lambda row: "  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
    out = [fmt(header), fmt(tuple("-" * w for w in widths))]
    out += [fmt(line) for line in lines]
    return "\n".join(out) + "\n"
