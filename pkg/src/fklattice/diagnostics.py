"""Rigidity diagnostics: the kappa constants, the angular Dirichlet bound, and
the linearized-equation remainder check.

Everything here is a truncated version of an infinite-lattice quantity: sums
and sups run over the window core, invalid sites (vanishing increment, or a
stencil that ran out of data) are skipped and counted, and the caller may
attach analytic tail estimates so reports stay honest about truncation.

The central inequality being verified is

    sum_{i,j} (rho_i)^2 (|D_j^+ theta_i|^2 + |D_j^- theta_i|^2)  <=  C h,

with C = 4 (kappa2 + 2 e^{2 pi} kappa3 + 2 e^{2 pi} kappa4 + 2 kappa5
+ kappa6 + kappa7) built from the weighted angular-oscillation sums below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np

from fklattice.angular import AngularData, decompose
from fklattice.calculus import dminus, dplus, lap, lap_j_squared, multiply, translate
from fklattice.lattice import ScalarField, SiteIndex

E2PI = math.exp(2.0 * math.pi)

SiteRule = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


class EvaluationError(ValueError):
    """A source-term rule produced a non-finite value on the window."""


class EquationResidualError(ValueError):
    """The configuration does not solve the discrete equation to tolerance."""


@dataclass
class SourceTerm:
    """Source term f(i, u_i) together with its discrete linearization rule(s).

    All rules take integer index arrays (k1, k2) and the field values u and
    must be numpy-broadcastable.  ``lf_plus`` is the linearization entering
    the forward defect  f(i+he_j, u_{i+he_j}) - f(i, u_i) - lf_plus * du;
    ``lf_minus`` (backward defect) defaults to ``lf_plus`` when omitted.
    """

    f: SiteRule
    lf_plus: SiteRule
    lf_minus: Optional[SiteRule] = None

    def lf_for(self, variant: str) -> SiteRule:
        if variant == "-" and self.lf_minus is not None:
            return self.lf_minus
        return self.lf_plus


def zero_rule(k1, k2, u):
    return np.zeros_like(np.asarray(u, dtype=float))


@dataclass
class KappaReport:
    kappa0_plus: float
    kappa1_plus: float
    kappa2_plus: float
    kappa3_plus: float
    kappa4_plus: float
    kappa5_plus: float
    kappa6_plus: float
    kappa7_plus: float
    theta_inf_plus: float
    kappa0_minus: Optional[float] = None
    kappa1_minus: Optional[float] = None
    kappa2_minus: Optional[float] = None
    kappa3_minus: Optional[float] = None
    kappa4_minus: Optional[float] = None
    kappa5_minus: Optional[float] = None
    kappa6_minus: Optional[float] = None
    kappa7_minus: Optional[float] = None
    theta_inf_minus: Optional[float] = None
    tail_estimates: dict = dc_field(default_factory=dict)
    invalid_site_count: int = 0

    def kappas(self, variant: str) -> tuple[float, float, float, float, float, float]:
        """(kappa2..kappa7) for one variant."""
        if variant == "+":
            return (
                self.kappa2_plus,
                self.kappa3_plus,
                self.kappa4_plus,
                self.kappa5_plus,
                self.kappa6_plus,
                self.kappa7_plus,
            )
        vals = (
            self.kappa2_minus,
            self.kappa3_minus,
            self.kappa4_minus,
            self.kappa5_minus,
            self.kappa6_minus,
            self.kappa7_minus,
        )
        if any(v is None for v in vals):
            raise ValueError("minus-family kappas were not computed")
        return vals  # type: ignore[return-value]


@dataclass
class TheoremReport:
    lhs_form_plus: float
    constant_C: float
    bound_Ch: float
    verdict: str  # holds | violated | inconclusive-truncation
    worst_sites: list
    lhs_tail: float = 0.0
    lhs_form_minus: Optional[float] = None
    lhs_tutta: Optional[float] = None
    mode: str = "form-plus"


@dataclass
class LinearizedReport:
    """Per-site remainder of the linearized angular equation vs its bound."""

    max_excess: float  #  max_i (|eps*_i| - bound_i), <= rounding when the bound holds
    scale: float
    sharp_fraction: float  #  fraction of bound>0 sites with |eps*| >= 0.9 bound
    sites_checked: int
    sites_violating: int
    passed: bool
    eps_star: np.ndarray  # core arrays, NaN at invalid sites
    bound: np.ndarray


def _source_defect(u: ScalarField, src: SourceTerm, variant: str) -> np.ndarray:
    """Stored-shape array of (1/h^2) sum_j |forward (or backward) linearization defect|."""
    w = u.window
    h = w.h
    K1, K2 = w.index_grids()
    U = u.values
    F0 = np.asarray(src.f(K1, K2, U), dtype=float)
    L0 = np.asarray(src.lf_for(variant)(K1, K2, U), dtype=float)
    total = np.zeros_like(F0)
    for d1, d2 in ((1, 0), (0, 1)):
        if variant == "+":
            Un = u.shifted(d1, d2)
            Fn = np.asarray(src.f(K1 + d1, K2 + d2, Un), dtype=float)
            defect = Fn - F0 - L0 * (Un - U)
        else:
            Un = u.shifted(-d1, -d2)
            Fn = np.asarray(src.f(K1 - d1, K2 - d2, Un), dtype=float)
            defect = F0 - Fn - L0 * (U - Un)
        total = total + np.abs(defect)
    return total / (h * h)


def kappa0(u: ScalarField, src: SourceTerm, variant: str = "+") -> float:
    """Smallest kappa0 making the source-linearization assumption hold on the window.

    The assumption reads sum_j |defect_j| / h <= kappa0 * h at every site, so
    the windowed constant is the core sup of (1/h^2) sum_j |defect_j|.
    """
    defect = _source_defect(u, src, variant)
    core = u.window.core(defect)
    finite = core[np.isfinite(core)]
    if finite.size != core.size:
        raise EvaluationError("source term not finite at every window site")
    return float(np.max(finite)) if finite.size else 0.0


def kappa0_autonomous_bound(kappa1: float, fhat_second_sup: float) -> float:
    """Analytic kappa0 for autonomous sources f(i, u) = fhat(u): (kappa1)^2 ||fhat''||."""
    if kappa1 < 0 or fhat_second_sup < 0:
        raise ValueError("kappa1 and ||fhat''|| must be nonnegative")
    return kappa1 * kappa1 * fhat_second_sup


class _Family:
    """Precomputed increment stencils of one angular family (plus or minus)."""

    def __init__(self, ang: AngularData, variant: str):
        if variant == "+":
            rho, theta, valid = ang.rho_plus, ang.theta_plus, ang.valid_plus
        else:
            rho, theta, valid = ang.rho_minus, ang.theta_minus, ang.valid_minus
        self.window = ang.window
        self.h = ang.h
        self.rho = rho.values
        self.valid = valid
        self.rho2_field = multiply(rho, rho)
        self.rho2 = self.rho2_field.values
        self.theta = theta.values
        self.dpt = [dplus(theta, j) for j in (1, 2)]
        self.dmt = [dminus(theta, j) for j in (1, 2)]
        self.dpr = [dplus(rho, j).values for j in (1, 2)]
        self.dmr = [dminus(rho, j).values for j in (1, 2)]
        self.dpr2 = [dplus(self.rho2_field, j).values for j in (1, 2)]
        self.dmr2 = [dminus(self.rho2_field, j).values for j in (1, 2)]
        # D_j^+(D_j^+ theta)_i and its translate at i - h e_j (and the minus mirror)
        self.ddpt = [dplus(self.dpt[j], j + 1).values for j in (0, 1)]
        self.ddmt = [dminus(self.dmt[j], j + 1).values for j in (0, 1)]
        offs = [(1, 0), (0, 1)]
        self.ddpt_back = [
            translate(dplus(self.dpt[j], j + 1), -offs[j][0], -offs[j][1]).values
            for j in (0, 1)
        ]
        self.ddmt_fwd = [
            translate(dminus(self.dmt[j], j + 1), offs[j][0], offs[j][1]).values
            for j in (0, 1)
        ]
        self.lj2t = [lap_j_squared(theta, j).values for j in (1, 2)]
        self.theta_field = theta


def _masked_core_sum(window, term: np.ndarray, valid: np.ndarray) -> tuple[float, np.ndarray]:
    core_term = window.core(term)
    mask = window.core(valid) & np.isfinite(core_term)
    return float(np.sum(np.where(mask, core_term, 0.0))), ~mask


def kappa2(ang: AngularData, variant: str = "+") -> float:
    value, _ = kappa2_with_mask(_Family(ang, variant))
    return value


def kappa2_with_mask(fam: _Family) -> tuple[float, np.ndarray]:
    term = np.zeros_like(fam.rho2)
    for j in (0, 1):
        term = term + fam.rho2 * (
            np.abs(fam.dpt[j].values) * np.abs(fam.ddpt_back[j])
            + np.abs(fam.dmt[j].values) * np.abs(fam.ddmt_fwd[j])
        )
    return _masked_core_sum(fam.window, term, fam.valid)


def kappa3_to_7(
    ang: AngularData,
    theta_inf: float,
    kappa0_value: float,
    variant: str = "+",
) -> tuple[float, float, float, float, float]:
    fam = _Family(ang, variant)
    values, _ = kappa3_to_7_with_mask(fam, theta_inf, kappa0_value)
    return values


def kappa3_to_7_with_mask(fam: _Family, theta_inf: float, kappa0_value: float):
    dev = np.abs(fam.theta - theta_inf)
    h = fam.h
    t3 = np.zeros_like(dev)
    t4 = np.zeros_like(dev)
    t6 = np.zeros_like(dev)
    t7 = np.zeros_like(dev)
    for j in (0, 1):
        adp = np.abs(fam.dpt[j].values)
        adm = np.abs(fam.dmt[j].values)
        t3 += fam.rho2 * (adp ** 3 + adm ** 3)
        t4 += fam.rho * (np.abs(fam.dpr[j]) * adp ** 2 + np.abs(fam.dmr[j]) * adm ** 2)
        t6 += (
            np.abs(fam.dpr2[j]) * np.abs(fam.ddpt[j])
            + np.abs(fam.dmr2[j]) * np.abs(fam.ddmt[j])
            + h * fam.rho2 * np.abs(fam.lj2t[j])
        )
        t7 += np.abs(fam.dpr[j]) ** 2 * adp + np.abs(fam.dmr[j]) ** 2 * adm
    k3, m3 = _masked_core_sum(fam.window, t3 * dev, fam.valid)
    k4, m4 = _masked_core_sum(fam.window, t4 * dev, fam.valid)
    s5, m5 = _masked_core_sum(fam.window, fam.rho * dev, fam.valid)
    k6, m6 = _masked_core_sum(fam.window, t6 * dev, fam.valid)
    k7, m7 = _masked_core_sum(fam.window, t7 * dev, fam.valid)
    excluded = m3 | m4 | m5 | m6 | m7
    return (k3, k4, kappa0_value * s5, k6, k7), excluded


def lhs_form(ang: AngularData, variant: str = "+") -> float:
    value, _ = lhs_form_with_mask(_Family(ang, variant))
    return value


def lhs_form_with_mask(fam: _Family) -> tuple[float, np.ndarray]:
    term = lhs_site_terms(fam)
    return _masked_core_sum(fam.window, term, fam.valid)


def lhs_site_terms(fam: _Family) -> np.ndarray:
    term = np.zeros_like(fam.rho2)
    for j in (0, 1):
        term = term + fam.rho2 * (fam.dpt[j].values ** 2 + fam.dmt[j].values ** 2)
    return term


def default_theta_inf(ang: AngularData, variant: str = "+") -> float:
    """Tool convention for unknown limit angles: theta at the farthest valid corner.

    The corners of the core are probed from (i1_max, i2_max) around; there is
    no canonical estimator for the angle at infinity, so reports flag when
    this heuristic was used.
    """
    w = ang.window
    theta = ang.theta_plus.values if variant == "+" else ang.theta_minus.values
    valid = ang.valid_plus if variant == "+" else ang.valid_minus
    core_t = w.core(theta)
    core_v = w.core(valid)
    n1, n2 = core_t.shape
    for a, b in ((n1 - 1, n2 - 1), (0, n2 - 1), (n1 - 1, 0), (0, 0)):
        if core_v[a, b] and np.isfinite(core_t[a, b]):
            return float(core_t[a, b])
    raise ValueError("no valid corner site to estimate the limit angle from")


def compute_kappa_report(
    u: ScalarField,
    src: SourceTerm,
    theta_inf_plus: Optional[float] = None,
    theta_inf_minus: Optional[float] = None,
    include_minus: bool = True,
    tail_estimates: Optional[dict] = None,
    ang: Optional[AngularData] = None,
) -> tuple[KappaReport, AngularData]:
    """Run the full kappa pipeline on a configuration.

    ``theta_inf_*`` default to the farthest-corner heuristic.  Sites excluded
    from any sum (invalid increment or unevaluable stencil) are counted in
    ``invalid_site_count``.
    """
    if ang is None:
        ang = decompose(u)
    fam_p = _Family(ang, "+")
    ti_p = default_theta_inf(ang, "+") if theta_inf_plus is None else theta_inf_plus
    k0_p = kappa0(u, src, "+")
    k2_p, ex2 = kappa2_with_mask(fam_p)
    (k3_p, k4_p, k5_p, k6_p, k7_p), ex37 = kappa3_to_7_with_mask(fam_p, ti_p, k0_p)
    excluded = ex2 | ex37
    report = KappaReport(
        kappa0_plus=k0_p,
        kappa1_plus=ang.kappa1_plus,
        kappa2_plus=k2_p,
        kappa3_plus=k3_p,
        kappa4_plus=k4_p,
        kappa5_plus=k5_p,
        kappa6_plus=k6_p,
        kappa7_plus=k7_p,
        theta_inf_plus=ti_p,
        tail_estimates=dict(tail_estimates or {}),
    )
    if include_minus:
        fam_m = _Family(ang, "-")
        ti_m = default_theta_inf(ang, "-") if theta_inf_minus is None else theta_inf_minus
        k0_m = kappa0(u, src, "-")
        k2_m, mx2 = kappa2_with_mask(fam_m)
        (k3_m, k4_m, k5_m, k6_m, k7_m), mx37 = kappa3_to_7_with_mask(fam_m, ti_m, k0_m)
        excluded = excluded | mx2 | mx37
        report.kappa0_minus = k0_m
        report.kappa1_minus = ang.kappa1_minus
        report.kappa2_minus = k2_m
        report.kappa3_minus = k3_m
        report.kappa4_minus = k4_m
        report.kappa5_minus = k5_m
        report.kappa6_minus = k6_m
        report.kappa7_minus = k7_m
        report.theta_inf_minus = ti_m
    report.invalid_site_count = int(np.count_nonzero(excluded))
    return report, ang


def theorem_constant(report: KappaReport, mode: str = "form-plus") -> float:
    """C = 4 (kappa2 + 2 e^{2 pi} kappa3 + 2 e^{2 pi} kappa4 + 2 kappa5 + kappa6 + kappa7)."""
    k2, k3, k4, k5, k6, k7 = report.kappas("+")
    if mode == "tutta":
        m2, m3, m4, m5, m6, m7 = report.kappas("-")
        k2, k3, k4, k5, k6, k7 = k2 + m2, k3 + m3, k4 + m4, k5 + m5, k6 + m6, k7 + m7
    elif mode != "form-plus":
        raise ValueError(f"unknown mode {mode!r}")
    return 4.0 * (k2 + 2.0 * E2PI * k3 + 2.0 * E2PI * k4 + 2.0 * k5 + k6 + k7)


def _worst_sites(fam: _Family, count: int = 5) -> list:
    w = fam.window
    term = w.core(lhs_site_terms(fam))
    mask = w.core(fam.valid) & np.isfinite(term)
    flat = np.where(mask, term, -np.inf).reshape(-1)
    order = np.argsort(flat)[::-1][:count]
    n2 = term.shape[1]
    out = []
    for idx in order:
        if flat[idx] <= 0.0 or not np.isfinite(flat[idx]):
            break
        a, b = divmod(int(idx), n2)
        out.append((SiteIndex(w.i1_min + a, w.i2_min + b), float(flat[idx])))
    return out


def verify_theorem(
    report: KappaReport,
    ang: AngularData,
    h: float,
    mode: str = "form-plus",
) -> TheoremReport:
    """Compare the angular Dirichlet sum against C*h, tail-aware.

    verdict 'holds' means lhs + tail <= C h (a rigorous certificate when the
    tail estimate is an upper bound on the out-of-window sum); when only the
    truncated lhs fits under C h the verdict is 'inconclusive-truncation'.
    """
    fam_p = _Family(ang, "+")
    lhs_p, _ = lhs_form_with_mask(fam_p)
    tail = float(report.tail_estimates.get("lhs_plus", 0.0))
    lhs_total = lhs_p
    lhs_m = None
    tutta = None
    if mode == "tutta":
        fam_m = _Family(ang, "-")
        lhs_m, _ = lhs_form_with_mask(fam_m)
        tutta = lhs_p + lhs_m
        lhs_total = tutta
        tail += float(report.tail_estimates.get("lhs_minus", 0.0))
    C = theorem_constant(report, mode)
    bound = C * h
    if lhs_total + tail <= bound:
        verdict = "holds"
    elif lhs_total <= bound:
        verdict = "inconclusive-truncation"
    else:
        verdict = "violated"
    return TheoremReport(
        lhs_form_plus=lhs_p,
        lhs_form_minus=lhs_m,
        lhs_tutta=tutta,
        lhs_tail=tail,
        constant_C=C,
        bound_Ch=bound,
        verdict=verdict,
        worst_sites=_worst_sites(fam_p),
        mode=mode,
    )


def equation_residual(u: ScalarField, src: SourceTerm) -> np.ndarray:
    """Core array of L u_i - f(i, u_i)."""
    w = u.window
    K1, K2 = w.index_grids()
    lap_u = lap(u).values
    f_vals = np.asarray(src.f(K1, K2, u.values), dtype=float)
    return w.core(lap_u - f_vals)


def linearized_residual(
    u: ScalarField,
    src: SourceTerm,
    ang: Optional[AngularData] = None,
    equation_tol: float = 1e-10,
) -> LinearizedReport:
    """Check the per-site remainder of the linearized angular equation.

    The remainder is the exact discrete quantity
        eps*_i = sum_j ( D_j^+ (rho^2 D_j^+ theta)_i + D_j^- (rho^2 D_j^- theta)_i )
    (forward family), and the bound is the four-part expression

        2 e^{2pi} h sum_j rho^2 (|D_j^+ theta|^3 + |D_j^- theta|^3)
      + 2 e^{2pi} h sum_j rho (|D_j^+ rho| |D_j^+ theta|^2 + |D_j^- rho| |D_j^- theta|^2)
      + 2 kappa0 h rho
      + h sum_j (|D_j^+ rho^2| |D_j^+(D_j^+ theta)_i| + |D_j^- rho^2| |D_j^-(D_j^- theta)_i|
                 + h rho^2 |L_j^2 theta_i|)
      + h sum_j (|D_j^+ rho|^2 |D_j^+ theta| + |D_j^- rho|^2 |D_j^- theta|),

    which must dominate |eps*_i| at every valid site whenever u solves the
    discrete equation (that precondition is checked first and violations
    raise :class:`EquationResidualError`).
    """
    res = equation_residual(u, src)
    finite = res[np.isfinite(res)]
    w = u.window
    K1, K2 = w.index_grids()
    f_scale = np.abs(np.asarray(src.f(K1, K2, u.values), dtype=float))
    scale_eq = max(1.0, float(np.nanmax(f_scale)) if f_scale.size else 0.0)
    if finite.size and float(np.max(np.abs(finite))) > equation_tol * scale_eq:
        raise EquationResidualError(
            f"max |L u - f| = {float(np.max(np.abs(finite))):.3e} exceeds "
            f"{equation_tol:.1e} * {scale_eq:.3e}; not an equilibrium"
        )
    if ang is None:
        ang = decompose(u)
    fam = _Family(ang, "+")
    h = fam.h
    # identity side
    eps = np.zeros_like(fam.rho2)
    for j in (0, 1):
        p_plus = multiply(fam.rho2_field, fam.dpt[j])
        p_minus = multiply(fam.rho2_field, fam.dmt[j])
        eps = eps + dplus(p_plus, j + 1).values + dminus(p_minus, j + 1).values
    # bound side
    k0 = kappa0(u, src, "+")
    b = 2.0 * k0 * h * fam.rho
    for j in (0, 1):
        adp = np.abs(fam.dpt[j].values)
        adm = np.abs(fam.dmt[j].values)
        b = b + 2.0 * E2PI * h * fam.rho2 * (adp ** 3 + adm ** 3)
        b = b + 2.0 * E2PI * h * fam.rho * (
            np.abs(fam.dpr[j]) * adp ** 2 + np.abs(fam.dmr[j]) * adm ** 2
        )
        b = b + h * (
            np.abs(fam.dpr2[j]) * np.abs(fam.ddpt[j])
            + np.abs(fam.dmr2[j]) * np.abs(fam.ddmt[j])
            + h * fam.rho2 * np.abs(fam.lj2t[j])
        )
        b = b + h * (np.abs(fam.dpr[j]) ** 2 * adp + np.abs(fam.dmr[j]) ** 2 * adm)
    core_eps = w.core(eps)
    core_b = w.core(b)
    mask = w.core(fam.valid) & np.isfinite(core_eps) & np.isfinite(core_b)
    abs_eps = np.abs(core_eps)
    excess = np.where(mask, abs_eps - core_b, -np.inf)
    scale = float(np.max(np.where(mask, np.maximum(abs_eps, core_b), 0.0), initial=0.0))
    max_excess = float(np.max(excess, initial=-np.inf))
    tol = 1e-10 * max(scale, 1.0)
    violating = int(np.count_nonzero(excess > tol))
    positive = mask & (core_b > 0.0)
    n_pos = int(np.count_nonzero(positive))
    sharp = int(np.count_nonzero(positive & (abs_eps >= 0.9 * core_b)))
    return LinearizedReport(
        max_excess=max_excess if np.isfinite(max_excess) else 0.0,
        scale=scale,
        sharp_fraction=(sharp / n_pos) if n_pos else 0.0,
        sites_checked=int(np.count_nonzero(mask)),
        sites_violating=violating,
        passed=violating == 0,
        eps_star=np.where(mask, core_eps, np.nan),
        bound=np.where(mask, core_b, np.nan),
    )
