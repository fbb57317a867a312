"""Discrete increments, one-axis Laplacians and their exact identities.

All operators act on :class:`~fklattice.lattice.ScalarField` and return new
fields on the same window.  When the input carries an analytic closure the
output does too (the stencil composed with the closure), so chains of
operators never lose evaluability at the window edge.  Without a closure,
sites whose stencil runs off the stored range come back NaN.

The forward/backward increments are
``D_j^+ u_i = (u_{i+h e_j} - u_i)/h`` and ``D_j^- u_i = (u_i - u_{i-h e_j})/h``;
the one-axis second difference is ``L_j u_i = (u_{i+h e_j} + u_{i-h e_j} - 2 u_i)/h^2``
and the full operator is ``L = L_1 + L_2``.  The residual checks at the end
of the module verify the identities these operators satisfy exactly in real
arithmetic (discrete product rules, summation by parts); on floats the
residuals are rounding-level and the callers compare them against
``1e-12 * scale``.
"""

from __future__ import annotations

from typing import Callable, NamedTuple, Optional

import numpy as np

from fklattice.lattice import Closure, ScalarField, WindowMismatchError


class Direction(NamedTuple):
    """A lattice axis (1 or 2) together with a forward/backward sign."""

    axis: int
    positive: bool


class SupportViolationError(ValueError):
    """A compactly-supported field is nonzero too close to the window edge."""


def _axis_offsets(axis: int) -> tuple[int, int]:
    if axis == 1:
        return (1, 0)
    if axis == 2:
        return (0, 1)
    raise ValueError(f"axis must be 1 or 2, got {axis}")


def _derived(parent: Optional[Closure], func) -> Optional[Closure]:
    return None if parent is None else func


def dplus(u: ScalarField, axis: int) -> ScalarField:
    """Forward increment quotient along the given axis."""
    d1, d2 = _axis_offsets(axis)
    h = u.h
    vals = (u.shifted(d1, d2) - u.values) / h
    c = u.closure
    clo = _derived(c, lambda k1, k2: (c(k1 + d1, k2 + d2) - c(k1, k2)) / h)
    return u.with_values(vals, clo)


def dminus(u: ScalarField, axis: int) -> ScalarField:
    """Backward increment quotient along the given axis."""
    d1, d2 = _axis_offsets(axis)
    h = u.h
    vals = (u.values - u.shifted(-d1, -d2)) / h
    c = u.closure
    clo = _derived(c, lambda k1, k2: (c(k1, k2) - c(k1 - d1, k2 - d2)) / h)
    return u.with_values(vals, clo)


def increment(u: ScalarField, direction: Direction) -> ScalarField:
    return dplus(u, direction.axis) if direction.positive else dminus(u, direction.axis)


def lap_j(u: ScalarField, axis: int) -> ScalarField:
    """One-axis second difference (u_{+} + u_{-} - 2u)/h^2."""
    d1, d2 = _axis_offsets(axis)
    h2 = u.h * u.h
    vals = (u.shifted(d1, d2) + u.shifted(-d1, -d2) - 2.0 * u.values) / h2
    c = u.closure
    clo = _derived(
        c, lambda k1, k2: (c(k1 + d1, k2 + d2) + c(k1 - d1, k2 - d2) - 2.0 * c(k1, k2)) / h2
    )
    return u.with_values(vals, clo)


def lap(u: ScalarField) -> ScalarField:
    """Five-point discrete Laplacian, exactly lap_1 + lap_2."""
    l1 = lap_j(u, 1)
    l2 = lap_j(u, 2)
    vals = l1.values + l2.values
    c1, c2 = l1.closure, l2.closure
    clo = None if c1 is None else (lambda k1, k2: c1(k1, k2) + c2(k1, k2))
    return u.with_values(vals, clo)


def lap_j_squared(u: ScalarField, axis: int) -> ScalarField:
    """One-axis bilaplacian: 5-point stencil (1, -4, 6, -4, 1)/h^4 along the axis."""
    d1, d2 = _axis_offsets(axis)
    h4 = u.h ** 4
    vals = (
        u.shifted(2 * d1, 2 * d2)
        - 4.0 * u.shifted(d1, d2)
        + 6.0 * u.values
        - 4.0 * u.shifted(-d1, -d2)
        + u.shifted(-2 * d1, -2 * d2)
    ) / h4
    c = u.closure
    clo = _derived(
        c,
        lambda k1, k2: (
            c(k1 + 2 * d1, k2 + 2 * d2)
            - 4.0 * c(k1 + d1, k2 + d2)
            + 6.0 * c(k1, k2)
            - 4.0 * c(k1 - d1, k2 - d2)
            + c(k1 - 2 * d1, k2 - 2 * d2)
        )
        / h4,
    )
    return u.with_values(vals, clo)


def translate(u: ScalarField, d1: int, d2: int) -> ScalarField:
    """Field whose value at i is u at i + (d1, d2) (in index units)."""
    c = u.closure
    clo = _derived(c, lambda k1, k2: c(k1 + d1, k2 + d2))
    return u.with_values(u.shifted(d1, d2), clo)


def multiply(f: ScalarField, g: ScalarField) -> ScalarField:
    if f.window != g.window:
        raise WindowMismatchError("cannot multiply fields on different windows")
    cf, cg = f.closure, g.closure
    clo = None if (cf is None or cg is None) else (lambda k1, k2: cf(k1, k2) * cg(k1, k2))
    return f.with_values(f.values * g.values, clo)


def apply_pointwise(f: ScalarField, func: Callable[[np.ndarray], np.ndarray]) -> ScalarField:
    """Pointwise map through a numpy-compatible function, closure included."""
    c = f.closure
    clo = _derived(c, lambda k1, k2: func(c(k1, k2)))
    return f.with_values(func(f.values), clo)


# ---------------------------------------------------------------------------
# Identity residual checks.  Each returns the maximum absolute deviation of
# the identity over all sites where both sides are finite; callers compare
# against 1e-12 * scale with scale = prod of input max-norms / smallest
# h-power in the identity.
# ---------------------------------------------------------------------------


def _finite_max(arr: np.ndarray) -> float:
    finite = arr[np.isfinite(arr)]
    return float(np.max(np.abs(finite))) if finite.size else 0.0


def check_product_rule(f: ScalarField, g: ScalarField, direction: Direction) -> float:
    """Residual of D(fg) = avg(f) Dg + avg(g) Df with the one-sided average.

    For the forward variant the average pairs the site with its forward
    neighbor, for the backward variant with its backward neighbor.
    """
    if f.window != g.window:
        raise WindowMismatchError("product rule requires fields on the same window")
    d1, d2 = _axis_offsets(direction.axis)
    if not direction.positive:
        d1, d2 = -d1, -d2
    fg = multiply(f, g)
    dfg = dplus(fg, direction.axis) if direction.positive else dminus(fg, direction.axis)
    df = dplus(f, direction.axis) if direction.positive else dminus(f, direction.axis)
    dg = dplus(g, direction.axis) if direction.positive else dminus(g, direction.axis)
    favg = 0.5 * (f.shifted(d1, d2) + f.values)
    gavg = 0.5 * (g.shifted(d1, d2) + g.values)
    resid = dfg.values - (favg * dg.values + gavg * df.values)
    return _finite_max(resid)


def check_product_laplacian(f: ScalarField, g: ScalarField) -> float:
    """Residual of L(fg) = (Lf) g + (Lg) f + sum_j (D_j^+ f D_j^+ g + D_j^- f D_j^- g)."""
    if f.window != g.window:
        raise WindowMismatchError("product Laplacian requires fields on the same window")
    fg = multiply(f, g)
    lhs = lap(fg).values
    rhs = lap(f).values * g.values + lap(g).values * f.values
    for axis in (1, 2):
        rhs = rhs + dplus(f, axis).values * dplus(g, axis).values
        rhs = rhs + dminus(f, axis).values * dminus(g, axis).values
    return _finite_max(lhs - rhs)


def check_iterated_increments(u: ScalarField, axis: int) -> float:
    """Residual of D^+(D^+ u)_i = L_j u_{i+he_j} and D^-(D^- u)_i = L_j u_{i-he_j}."""
    d1, d2 = _axis_offsets(axis)
    lj = lap_j(u, axis)
    rp = dplus(dplus(u, axis), axis).values - lj.shifted(d1, d2)
    rm = dminus(dminus(u, axis), axis).values - lj.shifted(-d1, -d2)
    return max(_finite_max(rp), _finite_max(rm))


def sum_by_parts_residual(
    f: ScalarField, g: ScalarField, axis: int, positive: bool = True
) -> float:
    """Residual of the summation-by-parts identity against a compact g.

    Forward variant: | sum D_j^+ f g  +  sum f D_j^- g |; backward swaps the
    signs.  ``g`` must vanish on the outermost stored ring (so that, padded
    by zero, it is genuinely compactly supported inside the window); a
    nonzero boundary value raises :class:`SupportViolationError`.
    """
    if f.window != g.window:
        raise WindowMismatchError("summation by parts requires fields on the same window")
    gv = g.values
    edge = np.concatenate([gv[0, :], gv[-1, :], gv[:, 0], gv[:, -1]])
    if np.any(edge != 0.0):
        raise SupportViolationError("g must vanish on the window boundary ring")
    if positive:
        df = dplus(f, axis).values
        dg = dminus(g, axis).values
    else:
        df = dminus(f, axis).values
        dg = dplus(g, axis).values
    # all terms with g == 0 and Dg == 0 vanish; NaN rims of f multiply zeros,
    # so mask them out rather than poisoning the finite sums
    t1 = np.where(gv != 0.0, df * gv, 0.0)
    t2 = np.where(dg != 0.0, f.values * dg, 0.0)
    if not (np.all(np.isfinite(t1)) and np.all(np.isfinite(t2))):
        raise SupportViolationError("f is not evaluable on the support of g")
    return abs(float(np.sum(t1) + np.sum(t2)))
