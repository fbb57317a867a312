"""Polar decomposition of the discrete gradient and structural assumption checks.

For a field u the complex forward increment is U+ = D_1^+ u + i D_2^+ u; its
modulus rho+ and principal angle theta+ in (-pi, pi] are the quantities all
rigidity diagnostics are built from.  The backward family (rho-, theta-)
uses D_j^- instead.  Sites where the increment vanishes have no angle; they
are flagged invalid and excluded (and counted) downstream rather than
aborting the run.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from fklattice.calculus import dminus, dplus
from fklattice.lattice import ScalarField, SiteIndex, write_field_csv


def principal_angle(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Angle of (x, y) in (-pi, pi]; the branch value -pi is mapped to +pi.

    NaN where the vector vanishes (no angle is defined there).
    """
    ang = np.arctan2(y, x)
    ang = np.where(ang == -np.pi, np.pi, ang)
    r2 = x * x + y * y
    return np.where(r2 > 0.0, ang, np.nan)


@dataclass
class AngularData:
    """Per-site modulus/angle of the forward and backward complex increments."""

    rho_plus: ScalarField
    theta_plus: ScalarField
    rho_minus: ScalarField
    theta_minus: ScalarField
    valid_plus: np.ndarray
    valid_minus: np.ndarray
    kappa1_plus: float
    kappa1_minus: float

    @property
    def window(self):
        return self.rho_plus.window

    @property
    def h(self) -> float:
        return self.rho_plus.h

    def invalid_core_count(self, variant: str = "+") -> int:
        valid = self.valid_plus if variant == "+" else self.valid_minus
        core = self.window.core(valid)
        return int(core.size - np.count_nonzero(core))


def _family(u: ScalarField, sign: str):
    d1 = dplus(u, 1) if sign == "+" else dminus(u, 1)
    d2 = dplus(u, 2) if sign == "+" else dminus(u, 2)
    rho_vals = np.hypot(d1.values, d2.values)
    theta_vals = principal_angle(d1.values, d2.values)
    c1, c2 = d1.closure, d2.closure
    if c1 is not None:
        rho_clo = lambda k1, k2: np.hypot(c1(k1, k2), c2(k1, k2))
        theta_clo = lambda k1, k2: principal_angle(c1(k1, k2), c2(k1, k2))
    else:
        rho_clo = theta_clo = None
    rho = u.with_values(rho_vals, rho_clo)
    theta = u.with_values(theta_vals, theta_clo)
    valid = np.isfinite(d1.values) & np.isfinite(d2.values) & (rho_vals > 0.0)
    core = u.window.core
    finite_incs = np.concatenate(
        [core(np.abs(d1.values)).reshape(-1), core(np.abs(d2.values)).reshape(-1)]
    )
    finite_incs = finite_incs[np.isfinite(finite_incs)]
    kappa1 = float(np.max(finite_incs)) if finite_incs.size else 0.0
    return rho, theta, valid, kappa1


def decompose(u: ScalarField) -> AngularData:
    """Compute (rho, theta) for both increment families plus Lipschitz sups.

    kappa1 is the sup over the window core of max_j |D_j u|; when the field
    was generated by a closure with a known global bound, attach that bound
    at the example level rather than widening this windowed sup.
    """
    rp, tp, vp, k1p = _family(u, "+")
    rm, tm, vm, k1m = _family(u, "-")
    return AngularData(
        rho_plus=rp,
        theta_plus=tp,
        rho_minus=rm,
        theta_minus=tm,
        valid_plus=vp,
        valid_minus=vm,
        kappa1_plus=k1p,
        kappa1_minus=k1m,
    )


@dataclass(frozen=True)
class AssumptionCheck:
    name: str
    passed: bool
    first_violation: Optional[SiteIndex]


@dataclass(frozen=True)
class AssumptionReport:
    gradient_plus: AssumptionCheck
    gradient_minus: AssumptionCheck
    monotone_e2: AssumptionCheck

    @property
    def all_passed(self) -> bool:
        return (
            self.gradient_plus.passed
            and self.gradient_minus.passed
            and self.monotone_e2.passed
        )


def _first_failure(window, core_ok: np.ndarray) -> Optional[SiteIndex]:
    bad = np.argwhere(~core_ok)
    if bad.size == 0:
        return None
    a, b = bad[0]
    return SiteIndex(int(window.i1_min + a), int(window.i2_min + b))


def check_assumptions(u: ScalarField) -> AssumptionReport:
    """Check the structural hypotheses on the window core.

    gradient_plus:  sum_j |u_{i+he_j} - u_i|^2 > 0 at every core site;
    gradient_minus: the backward analogue;
    monotone_e2:    u_{i+he_2} > u_i at every core site (implies gradient_plus).
    """
    w = u.window
    core = w.core

    def grad_ok(sign: int) -> np.ndarray:
        a = u.shifted(sign, 0) - u.values
        b = u.shifted(0, sign) - u.values
        return core(a * a + b * b > 0.0)

    gp = grad_ok(+1)
    gm = grad_ok(-1)
    mono = core(u.shifted(0, 1) > u.values)
    return AssumptionReport(
        gradient_plus=AssumptionCheck("nonvanishing-forward-gradient", bool(gp.all()), _first_failure(w, gp)),
        gradient_minus=AssumptionCheck("nonvanishing-backward-gradient", bool(gm.all()), _first_failure(w, gm)),
        monotone_e2=AssumptionCheck("monotone-in-e2", bool(mono.all()), _first_failure(w, mono)),
    )


def write_angular_csv(ang: AngularData, path: str) -> None:
    """CSV columns k1,k2,rho_plus,theta_plus,rho_minus,theta_minus,valid."""
    w = ang.window
    K1, K2 = w.index_grids()
    valid = ang.valid_plus & ang.valid_minus
    with open(path, "w") as fh:
        fh.write("k1,k2,rho_plus,theta_plus,rho_minus,theta_minus,valid\n")
        rows = zip(
            K1.reshape(-1),
            K2.reshape(-1),
            ang.rho_plus.values.reshape(-1),
            ang.theta_plus.values.reshape(-1),
            ang.rho_minus.values.reshape(-1),
            ang.theta_minus.values.reshape(-1),
            valid.reshape(-1),
        )
        for k1, k2, rp, tp, rm, tm, v in rows:
            fh.write(f"{k1},{k2},{rp:.17g},{tp:.17g},{rm:.17g},{tm:.17g},{int(v)}\n")
    # sidecar with the mesh, mirroring ScalarField serialization
    with open(path + ".meta", "w") as fh:
        fh.write(f"h {w.h:.17g}\n")
        fh.write(f"i1_min {w.i1_min}\ni1_max {w.i1_max}\n")
        fh.write(f"i2_min {w.i2_min}\ni2_max {w.i2_max}\n")
        fh.write(f"halo {w.halo}\n")


__all__ = [
    "AngularData",
    "AssumptionCheck",
    "AssumptionReport",
    "check_assumptions",
    "decompose",
    "principal_angle",
    "write_angular_csv",
    "write_field_csv",
]
