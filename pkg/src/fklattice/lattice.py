"""Finite windows of the infinite lattice hZ^2 and scalar fields on them.

A :class:`LatticeWindow` is a rectangular patch of site indices.  The *core*
region ``i1_min..i1_max x i2_min..i2_max`` is what sums and sups are taken
over; ``halo`` extra rings are stored around it so that difference stencils
applied at core sites never run out of data.  Site ``(k1, k2)`` sits at
position ``(h*k1, h*k2)``.

A :class:`ScalarField` stores dense values over core+halo and may carry an
analytic ``closure`` (a rule ``(k1, k2) -> value`` on integer indices) that
supplies values outside the stored range, so stencils and truncated
lattice sums remain evaluable arbitrarily far out.  Fields are immutable
after construction: operations return new fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

Closure = Callable[[np.ndarray, np.ndarray], np.ndarray]


class SamplingError(ValueError):
    """A closure returned a non-finite value at a stored site."""

    def __init__(self, site: "SiteIndex", value: float):
        self.site = site
        self.value = value
        super().__init__(f"closure returned non-finite value {value!r} at site {site}")


class WindowMismatchError(ValueError):
    """Two fields that must share a window do not."""


@dataclass(frozen=True)
class SiteIndex:
    """Integer lattice index; the physical position is ``(h*k1, h*k2)``."""

    k1: int
    k2: int

    def position(self, h: float) -> tuple[float, float]:
        return (h * self.k1, h * self.k2)


@dataclass(frozen=True)
class LatticeWindow:
    """Rectangular index window with halo rings for stencils.

    ``i1_min..i1_max`` (and the axis-2 analogue) bound the core region;
    stored arrays cover the core extended by ``halo`` rings on every side.
    Operations needing second differences of derived fields (e.g. the
    iterated one-axis Laplacian) want ``halo >= 2`` relative to the field
    they act on, or a closure on the underlying field.
    """

    h: float
    i1_min: int
    i1_max: int
    i2_min: int
    i2_max: int
    halo: int = 0

    def __post_init__(self):
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ValueError(f"mesh size h must be a positive finite real, got {self.h}")
        if self.i1_min > self.i1_max or self.i2_min > self.i2_max:
            raise ValueError("empty window: index bounds are inverted")
        if self.halo < 0:
            raise ValueError("halo must be nonnegative")

    # stored-range bounds (core plus halo)
    @property
    def k1_lo(self) -> int:
        return self.i1_min - self.halo

    @property
    def k1_hi(self) -> int:
        return self.i1_max + self.halo

    @property
    def k2_lo(self) -> int:
        return self.i2_min - self.halo

    @property
    def k2_hi(self) -> int:
        return self.i2_max + self.halo

    @property
    def stored_shape(self) -> tuple[int, int]:
        return (self.k1_hi - self.k1_lo + 1, self.k2_hi - self.k2_lo + 1)

    @property
    def core_shape(self) -> tuple[int, int]:
        return (self.i1_max - self.i1_min + 1, self.i2_max - self.i2_min + 1)

    @property
    def n_stored(self) -> int:
        n1, n2 = self.stored_shape
        return n1 * n2

    @property
    def core_slices(self) -> tuple[slice, slice]:
        n1, n2 = self.core_shape
        return (slice(self.halo, self.halo + n1), slice(self.halo, self.halo + n2))

    def index_grids(self) -> tuple[np.ndarray, np.ndarray]:
        """Integer index meshgrids (K1, K2) over the stored range."""
        k1 = np.arange(self.k1_lo, self.k1_hi + 1)
        k2 = np.arange(self.k2_lo, self.k2_hi + 1)
        return np.meshgrid(k1, k2, indexing="ij")

    def position_grids(self) -> tuple[np.ndarray, np.ndarray]:
        K1, K2 = self.index_grids()
        return (self.h * K1, self.h * K2)

    def contains_stored(self, k1: int, k2: int) -> bool:
        return self.k1_lo <= k1 <= self.k1_hi and self.k2_lo <= k2 <= self.k2_hi

    def core(self, arr: np.ndarray) -> np.ndarray:
        """View of a stored-shape array restricted to the core region."""
        s1, s2 = self.core_slices
        return arr[s1, s2]


def make_window(h: float, radius: float, halo: int = 4) -> LatticeWindow:
    """Window covering all sites with max(|i1|, |i2|) <= radius, plus halo rings.

    The default halo of 4 is enough for every diagnostic in this package
    (the deepest stencil chain reaches 4 sites beyond a core site).
    """
    if not (h > 0 and math.isfinite(h)):
        raise ValueError(f"mesh size h must be a positive finite real, got {h}")
    if not (radius >= h and math.isfinite(radius)):
        raise ValueError(f"radius must be finite and >= h, got {radius}")
    # small epsilon absorbs float noise in radius/h for non-dyadic h
    n = int(math.floor(radius / h + 1e-9))
    return LatticeWindow(h=h, i1_min=-n, i1_max=n, i2_min=-n, i2_max=n, halo=halo)


def _evaluate_closure(closure: Closure, K1: np.ndarray, K2: np.ndarray) -> np.ndarray:
    """Evaluate a closure on integer index arrays, vectorized when possible."""
    try:
        out = np.asarray(closure(K1, K2), dtype=float)
        if out.shape == K1.shape:
            return out
    except Exception:
        pass
    # scalar-only closure: fall back to a site loop
    out = np.empty(K1.shape, dtype=float)
    flat_out = out.reshape(-1)
    for idx, (a, b) in enumerate(zip(K1.reshape(-1), K2.reshape(-1))):
        flat_out[idx] = float(closure(int(a), int(b)))
    return out


@dataclass(eq=False)
class ScalarField:
    """Real values over a window's stored range, with optional analytic closure.

    ``values[a, b]`` holds the value at index ``(k1_lo + a, k2_lo + b)``.
    Entries may be NaN, meaning "not evaluable here" (e.g. a stencil ran
    off the stored range of a closure-less parent); downstream sums treat
    NaN sites as invalid and count them instead of silently zero-filling.
    """

    window: LatticeWindow
    values: np.ndarray
    closure: Optional[Closure] = None
    tail_bound: Optional[Callable[[float], float]] = None

    def __post_init__(self):
        self.values = np.array(self.values, dtype=float, copy=True)
        if self.values.shape != self.window.stored_shape:
            raise ValueError(
                f"values shape {self.values.shape} does not match stored window "
                f"shape {self.window.stored_shape}"
            )
        self.values.setflags(write=False)

    @property
    def h(self) -> float:
        return self.window.h

    def value_at(self, k1: int, k2: int) -> float:
        """Value at an arbitrary site, consulting the closure if needed; NaN if unknown."""
        w = self.window
        if w.contains_stored(k1, k2):
            return float(self.values[k1 - w.k1_lo, k2 - w.k2_lo])
        if self.closure is not None:
            return float(self.closure(k1, k2))
        return math.nan

    def shifted(self, d1: int, d2: int) -> np.ndarray:
        """Array of values at ``(k1+d1, k2+d2)`` for every stored site.

        Sites whose shifted partner falls off the stored range are filled
        from the closure when present, NaN otherwise.
        """
        w = self.window
        n1, n2 = w.stored_shape
        out = np.full((n1, n2), np.nan)
        src1 = slice(max(d1, 0), n1 + min(d1, 0))
        dst1 = slice(max(-d1, 0), n1 + min(-d1, 0))
        src2 = slice(max(d2, 0), n2 + min(d2, 0))
        dst2 = slice(max(-d2, 0), n2 + min(-d2, 0))
        out[dst1, dst2] = self.values[src1, src2]
        if self.closure is not None and (d1 != 0 or d2 != 0):
            missing = np.isnan(out)
            if missing.any():
                K1, K2 = w.index_grids()
                mk1 = K1[missing] + d1
                mk2 = K2[missing] + d2
                out[missing] = _evaluate_closure(self.closure, mk1, mk2)
        return out

    def with_values(self, values: np.ndarray, closure: Optional[Closure] = None) -> "ScalarField":
        return ScalarField(self.window, values, closure)

    def core_values(self) -> np.ndarray:
        return self.window.core(self.values)

    def core_max_abs(self) -> float:
        c = self.core_values()
        finite = c[np.isfinite(c)]
        return float(np.max(np.abs(finite))) if finite.size else 0.0


def sample(closure: Closure, window: LatticeWindow) -> ScalarField:
    """Evaluate an analytic site rule on every stored site of a window.

    The closure is retained on the resulting field so later stencil
    operations can reach outside the stored range.  A non-finite value at
    any stored site raises :class:`SamplingError` naming the site.
    """
    K1, K2 = window.index_grids()
    values = _evaluate_closure(closure, K1, K2)
    bad = ~np.isfinite(values)
    if bad.any():
        a, b = np.argwhere(bad)[0]
        site = SiteIndex(int(K1[a, b]), int(K2[a, b]))
        raise SamplingError(site, float(values[a, b]))
    return ScalarField(window, values, closure)


# ---------------------------------------------------------------------------
# CSV serialization: header `k1,k2,value`, mesh and window geometry in a
# sidecar `<path>.meta` key-value block.
# ---------------------------------------------------------------------------


def write_field_csv(fld: ScalarField, path: str) -> None:
    w = fld.window
    K1, K2 = w.index_grids()
    with open(path, "w") as fh:
        fh.write("k1,k2,value\n")
        for a, b, v in zip(K1.reshape(-1), K2.reshape(-1), fld.values.reshape(-1)):
            fh.write(f"{a},{b},{v:.17g}\n")
    with open(path + ".meta", "w") as fh:
        fh.write(f"h {w.h:.17g}\n")
        fh.write(f"i1_min {w.i1_min}\ni1_max {w.i1_max}\n")
        fh.write(f"i2_min {w.i2_min}\ni2_max {w.i2_max}\n")
        fh.write(f"halo {w.halo}\n")


def read_field_csv(path: str) -> ScalarField:
    meta: dict[str, str] = {}
    with open(path + ".meta") as fh:
        for line in fh:
            parts = line.split()
            if len(parts) == 2:
                meta[parts[0]] = parts[1]
    window = LatticeWindow(
        h=float(meta["h"]),
        i1_min=int(meta["i1_min"]),
        i1_max=int(meta["i1_max"]),
        i2_min=int(meta["i2_min"]),
        i2_max=int(meta["i2_max"]),
        halo=int(meta["halo"]),
    )
    values = np.full(window.stored_shape, np.nan)
    with open(path) as fh:
        header = fh.readline()
        if header.strip() != "k1,k2,value":
            raise ValueError(f"unrecognized field CSV header {header.strip()!r} in {path}")
        for line in fh:
            if not line.strip():
                continue
            k1_s, k2_s, v_s = line.split(",")
            values[int(k1_s) - window.k1_lo, int(k2_s) - window.k2_lo] = float(v_s)
    return ScalarField(window, values)
