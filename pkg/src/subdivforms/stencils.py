"""Stencil tables for the Loop/Wang k-form subdivision scheme.

Every record is keyed by ``(k, cls, valence)`` and lists ``(role, weight)``
pairs. Roles name coarse simplices relative to a local frame:

``k = 0``
    ``self``, ``u<i>`` (i-th counterclockwise ring neighbour), ``end0``/``end1``
    (endpoints of the parent edge), ``far0``/``far1`` (opposite vertices of
    the two faces on the parent edge), ``prev``/``next`` (boundary neighbours).
``k = 1``, ``k = 2``
    documented in :func:`loop_wang_record`.

Weights are :class:`fractions.Fraction` whenever they are rational and plain
floats otherwise (the Loop ``beta`` is irrational for valences other than
3, 4 and 6). Regular interior stencils are dyadic.
"""

from __future__ import annotations

import math
from fractions import Fraction
from pathlib import Path

from .errors import UnsupportedConfiguration

HALF = Fraction(1, 2)
EIGHTH = Fraction(1, 8)


def loop_beta(n):
    """Loop interior even-vertex neighbour weight for valence ``n``."""
    exact = {3: Fraction(3, 16), 4: Fraction(31, 256), 6: Fraction(1, 16)}
    if n in exact:
        return exact[n]
    return (5 / 8 - (3 / 8 + 0.25 * math.cos(2 * math.pi / n)) ** 2) / n


def _interior_even(n):
    b = loop_beta(n)
    return [("self", 1 - n * b)] + [(f"u{i}", b) for i in range(n)]


def _role_order(role):
    head = role.rstrip("0123456789")
    tail = role[len(head):]
    return (head, int(tail) if tail else -1)


def loop_wang_record(k, cls, valence):
    """Generate the stencil for one configuration from the closed-form rules.

    Classes
    -------
    k=0: ``interior-even`` (valence n), ``boundary-even``, ``corner-even``,
    ``interior-odd``, ``boundary-odd``.
    k=1: vertex potentials, i.e. coarse 1-chains whose boundary is the Loop
    rule minus the midpoint rule of a fine vertex. ``even-potential``
    (valence n, roles ``spoke<i>`` = edge ``v -> u_i``),
    ``boundary-even-potential`` (``prev``/``next`` spokes) and
    ``interior-odd-potential`` (roles ``end<a>-far<b>``: edge from an end of
    the parent edge to an opposite vertex).
    k=2: ``corner-fan`` (roles ``d<j>``: exchange weight between corner
    children at the same vertex that are ``j`` faces apart in its fan) and
    ``center-exchange`` (role ``edge``: exchange weight between center
    children of edge-adjacent faces).
    """
    if k == 0:
        if cls == "interior-even":
            return _interior_even(valence)
        if cls == "boundary-even":
            return [("self", Fraction(3, 4)), ("prev", EIGHTH), ("next", EIGHTH)]
        if cls == "interior-odd":
            t = Fraction(3, 8)
            return [("end0", t), ("end1", t), ("far0", EIGHTH), ("far1", EIGHTH)]
        if cls == "boundary-odd":
            return [("end0", HALF), ("end1", HALF)]
        if cls == "corner-even":
            return [("self", Fraction(1))]
    elif k == 1:
        if cls == "even-potential":
            b = loop_beta(valence)
            return [(f"spoke{i}", b) for i in range(valence)]
        if cls == "boundary-even-potential":
            return [("prev", EIGHTH), ("next", EIGHTH)]
        if cls == "interior-odd-potential":
            q = Fraction(1, 16)
            return [("end0-far0", q), ("end1-far0", q), ("end0-far1", q), ("end1-far1", q)]
    elif k == 2:
        if cls == "corner-fan":
            return [("d1", EIGHTH), ("d2", EIGHTH)]
        if cls == "center-exchange":
            return [("edge", Fraction(1, 4))]
    raise UnsupportedConfiguration(f"no rule for k={k}, class={cls!r}, valence={valence}")


def _fmt(w):
    if isinstance(w, Fraction):
        return f"{w.numerator}/{w.denominator}"
    return repr(float(w))


def _parse(s):
    if "/" in s:
        return Fraction(s)
    return float(s)


class StencilTable:
    """Lookup of stencil records with an optional rule-based fallback.

    Parameters
    ----------
    records : dict, optional
        ``{(k, cls, valence): [(role, weight), ...]}``.
    fallback : bool
        Generate missing records with :func:`loop_wang_record` instead of
        raising :class:`UnsupportedConfiguration`.
    """

    def __init__(self, records=None, fallback=True):
        self.records = dict(records or {})
        self.fallback = fallback

    def get(self, k, cls, valence=0):
        key = (k, cls, valence)
        if key not in self.records:
            if not self.fallback:
                raise UnsupportedConfiguration(
                    f"stencil table has no record for k={k}, class={cls!r}, valence={valence}"
                )
            self.records[key] = loop_wang_record(k, cls, valence)
        return self.records[key]

    def weights(self, k, cls, valence=0):
        return dict(self.get(k, cls, valence))

    def is_dyadic(self):
        for rec in self.records.values():
            for _, w in rec:
                if not isinstance(w, Fraction) or w.denominator & (w.denominator - 1):
                    return False
        return True

    def write(self, path):
        lines = ["# k class valence : role=weight ..."]
        for (k, cls, val), rec in sorted(self.records.items()):
            body = " ".join(f"{r}={_fmt(w)}" for r, w in rec)
            lines.append(f"{k} {cls} {val} : {body}")
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def read(cls, path, fallback=False):
        records = {}
        for line in Path(path).read_text().splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            head, _, body = line.partition(":")
            k, name, val = head.split()
            rec = []
            for item in body.split():
                role, _, w = item.partition("=")
                rec.append((role, _parse(w)))
            records[(int(k), name, int(val))] = rec
        return cls(records, fallback=fallback)


def default_table(max_valence=12):
    """Table covering interior valences 3..max_valence."""
    t = StencilTable()
    for cls in ("boundary-even", "corner-even", "interior-odd", "boundary-odd"):
        t.get(0, cls)
    for n in range(3, max_valence + 1):
        t.get(0, "interior-even", n)
        t.get(1, "even-potential", n)
    for cls in ("boundary-even-potential", "interior-odd-potential"):
        t.get(1, cls)
    t.get(2, "corner-fan")
    t.get(2, "center-exchange")
    return t
