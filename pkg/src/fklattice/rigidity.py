"""One-dimensionality detection and binomial reconstruction from a 1D profile.

A configuration whose angular Dirichlet sum vanishes identically has
increments of constant direction; it is then determined by its values on the
vertical axis through the binomial averaging formula

    u_(hk, hm) = sum_{j=0..|k|} binom(|k|, j) c^j (1-c)^{|k|-j} utilde_{h(m + sigma_k j)},

where sigma_k is the sign of k, c = c_plus for k > 0 and c_minus for k < 0
(c^0 = 1 for k = 0), and c_pm are the constant increment ratios
(u_{i +- h e_1} - u_i) / (u_{i +- h e_2} - u_i).  This module checks the
vanishing condition, extracts the ratios, reconstructs, and provides the
one-dimensional continuum-limit error of the same binomial sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from fklattice.angular import AngularData, decompose
from fklattice.diagnostics import _Family, lhs_form_with_mask
from fklattice.lattice import LatticeWindow, ScalarField, SiteIndex


class HypothesisViolationError(ValueError):
    """A lemma hypothesis fails on the window; carries the offending sites."""

    def __init__(self, message: str, sites: Optional[list] = None):
        self.sites = sites or []
        if self.sites:
            shown = ", ".join(str(s) for s in self.sites[:8])
            message = f"{message} (first sites: {shown})"
        super().__init__(message)


@dataclass
class Profile1D:
    """Values utilde_{hm} on an integer range m_lo..m_lo+len(values)-1."""

    h: float
    m_lo: int
    values: np.ndarray
    c_plus: float
    c_minus: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)

    @property
    def m_hi(self) -> int:
        return self.m_lo + len(self.values) - 1

    def value(self, m: int) -> float:
        if self.m_lo <= m <= self.m_hi:
            return float(self.values[m - self.m_lo])
        return math.nan


@dataclass
class ReconstructionResult:
    reconstructed: ScalarField
    max_abs_error: float
    ratio_constancy_error: float
    sites_compared: int
    sites_skipped: int


def check_vanishing(ang: AngularData) -> tuple[bool, float]:
    """Vanishing of the two-family angular Dirichlet sum over the window.

    Requires both increment families to be valid (nonvanishing) at every
    core site, otherwise raises :class:`HypothesisViolationError`.  The
    zero test is scaled: angles lie in (-pi, pi] so each of the ~8 N
    summands is at most rho_max^2 (2 pi / h)^2.
    """
    w = ang.window
    bad = ~(w.core(ang.valid_plus) & w.core(ang.valid_minus))
    if bad.any():
        sites = [
            SiteIndex(int(w.i1_min + a), int(w.i2_min + b)) for a, b in np.argwhere(bad)[:8]
        ]
        raise HypothesisViolationError(
            "vanishing-increment sites make the angular function undefined", sites
        )
    lhs_p, _ = lhs_form_with_mask(_Family(ang, "+"))
    lhs_m, _ = lhs_form_with_mask(_Family(ang, "-"))
    residual = lhs_p + lhs_m
    rho_max = max(
        float(np.max(w.core(ang.rho_plus.values))), float(np.max(w.core(ang.rho_minus.values)))
    )
    n_core = w.core_shape[0] * w.core_shape[1]
    scale = 8.0 * n_core * rho_max ** 2 * (2.0 * math.pi / ang.h) ** 2
    return residual <= 1e-20 * max(scale, 1.0), residual


def extract_ratios(u: ScalarField) -> tuple[float, float, float]:
    """Increment ratios c_pm and their worst deviation from constancy.

    The reference value is taken at the core site nearest the window
    center; the constancy error quantifies how far the configuration is
    from exactly one-dimensional instead of assuming exactness.
    """
    w = u.window
    ratios = {}
    for sign in (+1, -1):
        num = u.shifted(sign, 0) - u.values
        den = u.shifted(0, sign) - u.values
        den_core = w.core(den)
        zero = np.isfinite(den_core) & (den_core == 0.0)
        if zero.any():
            sites = [
                SiteIndex(int(w.i1_min + a), int(w.i2_min + b))
                for a, b in np.argwhere(zero)[:8]
            ]
            raise HypothesisViolationError("vanishing vertical increment", sites)
        ratios[sign] = w.core(num) / den_core
    a_ref = (w.i1_max - w.i1_min) // 2
    b_ref = (w.i2_max - w.i2_min) // 2
    c_plus = float(ratios[+1][a_ref, b_ref])
    c_minus = float(ratios[-1][a_ref, b_ref])
    err = 0.0
    for sign, ref in ((+1, c_plus), (-1, c_minus)):
        r = ratios[sign]
        finite = r[np.isfinite(r)]
        if finite.size:
            err = max(err, float(np.max(np.abs(finite - ref))))
    return c_plus, c_minus, err


PASCAL_EXACT_LIMIT = 60


def binomial_row(n: int) -> np.ndarray:
    """Row n of Pascal's triangle in float64, built by the additive recurrence."""
    if n < 0:
        raise ValueError("binomial order must be nonnegative")
    if n > PASCAL_EXACT_LIMIT:
        raise ValueError(
            f"Pascal recurrence limited to n <= {PASCAL_EXACT_LIMIT}; "
            "use binomial_weights (log-space) for larger orders"
        )
    row = np.zeros(n + 1)
    row[0] = 1.0
    for _ in range(n):
        row[1:] = row[1:] + row[:-1]
    return row


def binomial_weights(n: int, c: float) -> np.ndarray:
    """Weights binom(n, j) c^j (1-c)^{n-j}, j = 0..n.

    Pascal-recurrence floats up to n = 40; beyond that, log-space assembly
    (requires 0 < c < 1) to avoid overflow of the raw coefficients.
    """
    if n <= 40 or not (0.0 < c < 1.0):
        if n > PASCAL_EXACT_LIMIT:
            raise ValueError(
                f"binomial weights for n > {PASCAL_EXACT_LIMIT} need c in (0, 1)"
            )
        j = np.arange(n + 1)
        return binomial_row(n) * c ** j * (1.0 - c) ** (n - j)
    j = np.arange(n + 1, dtype=float)
    log_comb = (
        math.lgamma(n + 1.0)
        - np.array([math.lgamma(x + 1.0) for x in j])
        - np.array([math.lgamma(n - x + 1.0) for x in j])
    )
    return np.exp(log_comb + j * math.log(c) + (n - j) * math.log1p(-c))


def reconstruct_1d(
    profile: Profile1D, k_range: Sequence[int], m_range: Sequence[int]
) -> ScalarField:
    """Rebuild a two-dimensional field from a 1D profile via binomial averaging."""
    k_lo, k_hi = int(min(k_range)), int(max(k_range))
    m_lo, m_hi = int(min(m_range)), int(max(m_range))
    k_max = max(abs(k_lo), abs(k_hi))
    if profile.m_lo > m_lo - (k_max if k_lo < 0 else 0) or profile.m_hi < m_hi + (
        k_max if k_hi > 0 else 0
    ):
        raise ValueError(
            "profile range does not cover the requested sites extended by max |k1|"
        )
    window = LatticeWindow(
        h=profile.h, i1_min=k_lo, i1_max=k_hi, i2_min=m_lo, i2_max=m_hi, halo=0
    )
    values = np.empty(window.stored_shape)
    ms = np.arange(m_lo, m_hi + 1)
    for a, k in enumerate(range(k_lo, k_hi + 1)):
        if k == 0:
            values[a, :] = [profile.value(m) for m in ms]
            continue
        c = profile.c_plus if k > 0 else profile.c_minus
        sigma = 1 if k > 0 else -1
        w = binomial_weights(abs(k), c)
        acc = np.zeros(len(ms))
        for j, wj in enumerate(w):
            acc += wj * np.array([profile.value(m + sigma * j) for m in ms])
        values[a, :] = acc
    return ScalarField(window, values)


def profile_from_field(u: ScalarField, extend: int) -> Profile1D:
    """The vertical-axis profile utilde_{hm} = u_(0, hm), extended via the closure.

    ``extend`` extra entries beyond the stored column are pulled from the
    closure when present; without a closure the profile is just the stored
    column and reconstruction silently restricts to sites it can cover.
    """
    w = u.window
    lo, hi = w.k2_lo, w.k2_hi
    if u.closure is not None and extend > 0:
        lo, hi = lo - extend, hi + extend
    vals = np.array([u.value_at(0, m) for m in range(lo, hi + 1)])
    return Profile1D(h=w.h, m_lo=lo, values=vals, c_plus=0.0, c_minus=0.0)


def roundtrip_check(u: ScalarField, k_max: Optional[int] = None) -> ReconstructionResult:
    """Extract ratios and the axis profile, reconstruct, and compare to u.

    Requires :func:`check_vanishing` to pass on u's angular data.  The
    comparison covers core sites with |k1| <= k_max whose profile data is
    available (a closure extends the profile as needed).
    """
    ang = decompose(u)
    is_zero, residual = check_vanishing(ang)
    if not is_zero:
        raise HypothesisViolationError(
            f"angular Dirichlet sum {residual:.3e} is not zero; field is not one-dimensional"
        )
    c_plus, c_minus, constancy = extract_ratios(u)
    w = u.window
    if k_max is None:
        k_max = max(abs(w.i1_min), abs(w.i1_max))
    k_lo = max(w.i1_min, -k_max)
    k_hi = min(w.i1_max, k_max)
    profile = profile_from_field(u, extend=k_max)
    profile.c_plus, profile.c_minus = c_plus, c_minus
    ms = np.arange(w.i2_min, w.i2_max + 1)
    n2 = len(ms)
    rec_window = LatticeWindow(
        h=w.h, i1_min=k_lo, i1_max=k_hi, i2_min=w.i2_min, i2_max=w.i2_max, halo=0
    )
    rec_values = np.full(rec_window.stored_shape, np.nan)
    max_err = 0.0
    compared = 0
    skipped = 0
    for a, k in enumerate(range(k_lo, k_hi + 1)):
        if k == 0:
            row = np.array([profile.value(m) for m in ms])
        else:
            c = c_plus if k > 0 else c_minus
            sigma = 1 if k > 0 else -1
            wts = binomial_weights(abs(k), c)
            row = np.zeros(n2)
            for j, wj in enumerate(wts):
                row += wj * np.array([profile.value(m + sigma * j) for m in ms])
        rec_values[a, :] = row
        truth = np.array([u.value_at(k, m) for m in ms])
        ok = np.isfinite(row) & np.isfinite(truth)
        skipped += int(n2 - np.count_nonzero(ok))
        compared += int(np.count_nonzero(ok))
        if ok.any():
            max_err = max(max_err, float(np.max(np.abs(row[ok] - truth[ok]))))
    return ReconstructionResult(
        reconstructed=ScalarField(rec_window, rec_values),
        max_abs_error=max_err,
        ratio_constancy_error=constancy,
        sites_compared=compared,
        sites_skipped=skipped,
    )


def continuum_limit_error(
    utilde: Callable[[float], float], c: float, h_list: Sequence[float]
) -> list[tuple[float, float]]:
    """Error of the binomial average of utilde(h j) against utilde(c), per mesh.

    Each h must have integral 1/h; the binomial weights concentrate at j
    with h j near c, so for smooth profiles the error decays like h.
    """
    if not (0.0 < c < 1.0):
        raise ValueError(f"c must lie in (0, 1), got {c}")
    out = []
    for h in h_list:
        n_real = 1.0 / h
        n = round(n_real)
        if abs(n_real - n) > 1e-9 or n <= 0:
            raise ValueError(f"1/h must be a positive integer, got 1/{h} = {n_real}")
        w = binomial_weights(n, c)
        vals = np.array([utilde(h * j) for j in range(n + 1)])
        out.append((h, abs(float(np.dot(w, vals)) - float(utilde(c)))))
    return out
