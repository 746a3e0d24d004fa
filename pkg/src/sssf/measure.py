"""Finite positive measures on the real line.

A measure is stored already split into its singular part (finitely many
atoms) and its absolutely continuous part (finitely many disjoint slabs of
constant density), so no numerical Lebesgue decomposition is ever needed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

#: positions closer than this are treated as the same atom
ATOM_MERGE_TOL = 1e-12


class MeasureError(ValueError):
    pass


def _check_finite(*values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise MeasureError(f"non-finite value {v!r}")


@dataclass(frozen=True)
class RealMeasure:
    """Atoms ``(position, mass)`` plus slabs ``(a, b, height)``.

    Direct construction validates the invariants but does not normalize;
    use :func:`make_measure` for raw input.
    """

    atoms: tuple[tuple[float, float], ...] = ()
    slabs: tuple[tuple[float, float, float], ...] = ()

    def __post_init__(self):
        prev = -math.inf
        for p, m in self.atoms:
            _check_finite(p, m)
            if m <= 0:
                raise MeasureError(f"atom at {p} has non-positive mass {m}")
            if p <= prev:
                raise MeasureError("atom positions must be strictly increasing")
            prev = p
        prev_b = -math.inf
        for a, b, c in self.slabs:
            _check_finite(a, b, c)
            if not a < b:
                raise MeasureError(f"slab ({a}, {b}) is empty")
            if c <= 0:
                raise MeasureError(f"slab ({a}, {b}) has non-positive height {c}")
            if a < prev_b:
                raise MeasureError(f"slab ({a}, {b}) overlaps its predecessor")
            prev_b = b

    @property
    def is_atomic(self) -> bool:
        return not self.slabs

    @property
    def is_zero(self) -> bool:
        return not self.atoms and not self.slabs

    # numpy views, cached since the object is immutable
    @cached_property
    def positions(self) -> np.ndarray:
        return np.array([p for p, _ in self.atoms], dtype=float)

    @cached_property
    def masses(self) -> np.ndarray:
        return np.array([m for _, m in self.atoms], dtype=float)

    @cached_property
    def slab_array(self) -> np.ndarray:
        return np.array(self.slabs, dtype=float).reshape(-1, 3)

    def in_closed_support(self, x: float) -> bool:
        if any(p == x for p, _ in self.atoms):
            return True
        return any(a <= x <= b for a, b, _ in self.slabs)

    def in_open_slab(self, x: float) -> bool:
        return any(a < x < b for a, b, _ in self.slabs)


def make_measure(
    atoms: Iterable[Sequence[float]] = (),
    slabs: Iterable[Sequence[float]] = (),
) -> RealMeasure:
    """Normalize raw atoms and slabs into a :class:`RealMeasure`.

    Coincident atoms (within ``ATOM_MERGE_TOL``) are merged by adding their
    masses, zero atoms and zero-height slabs are dropped, everything is sorted.
    Negative masses, overlapping slabs and non-finite numbers are rejected.
    """
    raw_atoms = []
    for item in atoms:
        p, m = (float(t) for t in item)
        _check_finite(p, m)
        if m < 0:
            raise MeasureError(f"atom at {p} has negative mass {m}")
        if m > 0:
            raw_atoms.append((p, m))
    raw_atoms.sort()
    merged: list[list[float]] = []
    for p, m in raw_atoms:
        if merged and abs(p - merged[-1][0]) <= ATOM_MERGE_TOL:
            merged[-1][1] += m
        else:
            merged.append([p, m])

    raw_slabs = []
    for item in slabs:
        a, b, c = (float(t) for t in item)
        _check_finite(a, b, c)
        if c < 0:
            raise MeasureError(f"slab ({a}, {b}) has negative height {c}")
        if b < a:
            raise MeasureError(f"slab ({a}, {b}) has reversed endpoints")
        if c > 0 and b > a:
            raw_slabs.append((a, b, c))
    raw_slabs.sort()
    for (a0, b0, _), (a1, b1, _) in zip(raw_slabs, raw_slabs[1:]):
        if a1 < b0:
            raise MeasureError(f"slabs ({a0}, {b0}) and ({a1}, {b1}) overlap")

    return RealMeasure(
        atoms=tuple((p, m) for p, m in merged),
        slabs=tuple(raw_slabs),
    )


def total_mass(m: RealMeasure) -> float:
    return math.fsum([w for _, w in m.atoms] + [c * (b - a) for a, b, c in m.slabs])


def support_partition(m: RealMeasure) -> list[float]:
    """Sorted breakpoints: every atom position and every slab endpoint.

    Between two consecutive breakpoints (and beyond the outermost ones) the
    associated Herglotz function is either real-analytic and real-valued, or
    the gap lies inside a slab.
    """
    points = {p for p, _ in m.atoms}
    for a, b, _ in m.slabs:
        points.add(a)
        points.add(b)
    return sorted(points)
