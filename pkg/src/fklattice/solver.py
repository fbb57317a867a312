"""Damped gradient-flow relaxation to equilibria of the spring/substrate energy.

The energy of a configuration u on a finite window is

    F(u) = d/(2 h^2) sum_bonds (u_{i+h e_j} - u_i)^2  +  sum_i V(i, u_i),

with the bond sum over all forward bonds touching the core and the on-site
sum over the core.  Its critical points satisfy  d * L u_i = dV(i, u_i),
so the per-site equilibrium residual is  d * L u - dV  and plain damped
gradient descent (Jacobi-style sweeps with energy backtracking) drives it
to zero.  This is deliberately simple solver engineering: the goal is to
produce plausible equilibria to feed the diagnostics, not solver research.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from fklattice.lattice import ScalarField

_PROBE_VALUES = (-0.7, 0.0, 0.3, 1.1)


class SolverFailure(RuntimeError):
    """The relaxation produced a non-finite energy."""


@dataclass
class Potential:
    """On-site potential V(i, u) with its u-derivative and the spring constant d."""

    V: callable
    dV: callable
    hooke_d: float = 1.0

    def __post_init__(self):
        if not (self.hooke_d > 0):
            raise ValueError("hooke_d must be positive")
        # finite-difference consistency probe of dV against V
        delta = 1e-5
        for val in _PROBE_VALUES:
            v_plus = float(self.V(0, 0, val + delta))
            v_minus = float(self.V(0, 0, val - delta))
            approx = (v_plus - v_minus) / (2.0 * delta)
            exact = float(self.dV(0, 0, val))
            scale = max(1.0, abs(exact), abs(approx))
            if abs(approx - exact) > 1e-6 * scale:
                raise ValueError(
                    f"dV inconsistent with V at u = {val}: finite difference "
                    f"{approx:.8g} vs dV {exact:.8g}"
                )


@dataclass
class SolverConfig:
    step: float
    max_iters: int = 100_000
    residual_tol: float = 1e-10
    boundary: str = "dirichlet-from-closure"  # or "periodic"
    max_halvings: int = 30

    def __post_init__(self):
        if not (self.step > 0 and self.residual_tol > 0 and self.max_iters > 0):
            raise ValueError("step, residual_tol and max_iters must be positive")
        if self.boundary not in ("dirichlet-from-closure", "periodic", "periodic-e1"):
            raise ValueError(f"unknown boundary mode {self.boundary!r}")


@dataclass
class RelaxResult:
    field: ScalarField
    iters: int
    final_residual_max: float
    converged: bool
    energies: np.ndarray


def _neighbor_sum_core(core: np.ndarray, full: np.ndarray, window, mode: str) -> np.ndarray:
    """Sum of the four neighbor values at every core site.

    'periodic' wraps both axes of the core torus; 'periodic-e1' wraps the
    e1 axis and reads the e2 neighbors from the stored boundary rows;
    Dirichlet reads all four from the stored halo.
    """
    s1, s2 = window.core_slices
    if mode == "periodic":
        return (
            np.roll(core, 1, axis=0)
            + np.roll(core, -1, axis=0)
            + np.roll(core, 1, axis=1)
            + np.roll(core, -1, axis=1)
        )
    if mode == "periodic-e1":
        return (
            np.roll(core, 1, axis=0)
            + np.roll(core, -1, axis=0)
            + full[s1, s2.start - 1 : s2.stop - 1]
            + full[s1, s2.start + 1 : s2.stop + 1]
        )
    return (
        full[s1.start - 1 : s1.stop - 1, s2]
        + full[s1.start + 1 : s1.stop + 1, s2]
        + full[s1, s2.start - 1 : s2.stop - 1]
        + full[s1, s2.start + 1 : s2.stop + 1]
    )


def _core_index_grids(window):
    k1 = np.arange(window.i1_min, window.i1_max + 1)
    k2 = np.arange(window.i2_min, window.i2_max + 1)
    return np.meshgrid(k1, k2, indexing="ij")


def energy(u: ScalarField, pot: Potential) -> float:
    """Window energy: forward bonds touching the core, plus core on-site terms."""
    w = u.window
    vals = u.values
    s1, s2 = w.core_slices
    d = pot.hooke_d
    h2 = w.h * w.h
    bond = 0.0
    # forward bonds whose tail or head lies in the core
    a0, a1 = s1.start - 1, s1.stop
    b0, b1 = s2.start - 1, s2.stop
    if a0 < 0 or b0 < 0 or a1 >= vals.shape[0] or b1 >= vals.shape[1]:
        raise ValueError("energy needs halo >= 1 for the boundary bonds")
    diff1 = vals[a0 + 1 : a1 + 1, s2] - vals[a0:a1, s2]
    diff2 = vals[s1, b0 + 1 : b1 + 1] - vals[s1, b0:b1]
    bond = float(np.sum(diff1 * diff1) + np.sum(diff2 * diff2))
    K1, K2 = _core_index_grids(w)
    onsite = float(np.sum(np.asarray(pot.V(K1, K2, w.core(vals)), dtype=float)))
    return d / (2.0 * h2) * bond + onsite


def residual(u: ScalarField, pot: Potential) -> ScalarField:
    """Per-site equilibrium defect d * L u_i - dV(i, u_i); zero at equilibria."""
    w = u.window
    h2 = w.h * w.h
    vals = u.values
    out = np.full(w.stored_shape, np.nan)
    inner1 = slice(1, w.stored_shape[0] - 1)
    inner2 = slice(1, w.stored_shape[1] - 1)
    lap_inner = (
        vals[2:, 1:-1] + vals[:-2, 1:-1] + vals[1:-1, 2:] + vals[1:-1, :-2]
        - 4.0 * vals[1:-1, 1:-1]
    ) / h2
    K1, K2 = w.index_grids()
    dv = np.asarray(pot.dV(K1, K2, vals), dtype=float)
    out[inner1, inner2] = pot.hooke_d * lap_inner - dv[inner1, inner2]
    if u.closure is not None:
        fld = ScalarField(w, vals, u.closure)
        lap_full = (
            fld.shifted(1, 0) + fld.shifted(-1, 0) + fld.shifted(0, 1) + fld.shifted(0, -1)
            - 4.0 * vals
        ) / h2
        out = pot.hooke_d * lap_full - dv
    return ScalarField(w, out)


def relax(u0: ScalarField, pot: Potential, cfg: SolverConfig) -> RelaxResult:
    """Damped gradient descent on the window energy, core sites only.

    Each sweep proposes u <- u + step * (d L u - dV); the step is halved (at
    most ``max_halvings`` times) whenever the energy would increase, so the
    accepted energy sequence is non-increasing.  The energy change of a
    trial step is evaluated in difference form (quadratic expansion of the
    bond part plus per-site potential differences) so descent can still be
    certified when the decrements are far below the rounding noise of the
    total energy.  Returns the best iterate with a convergence flag; a
    non-finite energy raises :class:`SolverFailure`.
    """
    w = u0.window
    mode = cfg.boundary
    if w.halo < 1 and mode != "periodic":
        raise ValueError("dirichlet relaxation needs halo >= 1 for boundary data")
    h2 = w.h * w.h
    d = pot.hooke_d
    vals = u0.values.copy()
    s1, s2 = w.core_slices
    K1, K2 = _core_index_grids(w)
    n1, n2 = w.core_shape

    def core_residual(full: np.ndarray) -> np.ndarray:
        core = full[s1, s2]
        nbr = _neighbor_sum_core(core, full, w, mode)
        dv = np.asarray(pot.dV(K1, K2, core), dtype=float)
        return d * (nbr - 4.0 * core) / h2 - dv

    def bond_diffs(full: np.ndarray, r: np.ndarray):
        """(u-differences, direction-differences) over every bond touching the core."""
        core = full[s1, s2]
        out = []
        if mode == "periodic":
            for axis in (0, 1):
                out.append((np.roll(core, -1, axis=axis) - core, np.roll(r, -1, axis=axis) - r))
            return out
        # direction r padded by one zero ring: Dirichlet sites do not move
        rpad = np.zeros((n1 + 2, n2 + 2))
        rpad[1:-1, 1:-1] = r
        a0, a1 = s1.start - 1, s1.stop
        b0, b1 = s2.start - 1, s2.stop
        if mode == "periodic-e1":
            out.append((np.roll(core, -1, axis=0) - core, np.roll(r, -1, axis=0) - r))
        else:
            out.append(
                (full[a0 + 1 : a1 + 1, s2] - full[a0:a1, s2], rpad[1:, 1:-1] - rpad[:-1, 1:-1])
            )
        out.append(
            (full[s1, b0 + 1 : b1 + 1] - full[s1, b0:b1], rpad[1:-1, 1:] - rpad[1:-1, :-1])
        )
        return out

    def energy_delta(full: np.ndarray, r: np.ndarray, step: float) -> float:
        """F(u + step r) - F(u) without forming either total.

        The bond part expands exactly; the potential part uses per-site
        differences, switching to the midpoint form  delta * dV(u + delta/2)
        once the displacement is tiny (the direct difference of V values
        has absolute rounding noise ~eps |V| per site, while the midpoint
        form's noise scales with the displacement itself; its O(delta^3)
        model error is negligible at that size).
        """
        acc = 0.0
        for du, dr in bond_diffs(full, r):
            acc += 2.0 * step * float(np.sum(du * dr)) + step * step * float(np.sum(dr * dr))
        bond = d / (2.0 * h2) * acc
        core = full[s1, s2]
        delta = step * r
        if float(np.max(np.abs(delta))) > 1e-5:
            v0 = np.asarray(pot.V(K1, K2, core), dtype=float)
            v1 = np.asarray(pot.V(K1, K2, core + delta), dtype=float)
            pot_part = float(np.sum(v1 - v0))
        else:
            mid = np.asarray(pot.dV(K1, K2, core + 0.5 * delta), dtype=float)
            pot_part = float(np.sum(delta * mid))
        return bond + pot_part

    def total_energy(full: np.ndarray) -> float:
        if mode == "dirichlet-from-closure":
            return energy(ScalarField(w, full), pot)
        core = full[s1, s2]
        e_bond = 0.0
        for du, _ in bond_diffs(full, np.zeros_like(core)):
            e_bond += float(np.sum(du * du))
        onsite = float(np.sum(np.asarray(pot.V(K1, K2, core), dtype=float)))
        return d / (2.0 * h2) * e_bond + onsite

    e_cur = total_energy(vals)
    if not math.isfinite(e_cur):
        raise SolverFailure(f"initial energy is not finite: {e_cur}")
    energies = [e_cur]
    res = core_residual(vals)
    res_max = float(np.max(np.abs(res)))
    iters = 0
    converged = res_max <= cfg.residual_tol
    while not converged and iters < cfg.max_iters:
        step = cfg.step
        accepted = False
        for _ in range(cfg.max_halvings + 1):
            delta = energy_delta(vals, res, step)
            if not math.isfinite(delta):
                raise SolverFailure("energy became non-finite during relaxation")
            if delta <= 0.0:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break  # stalled: backtracking exhausted without progress
        vals[s1, s2] += step * res
        e_cur = e_cur + delta
        energies.append(e_cur)
        iters += 1
        res = core_residual(vals)
        res_max = float(np.max(np.abs(res)))
        converged = res_max <= cfg.residual_tol
    return RelaxResult(
        field=ScalarField(w, vals, None),
        iters=iters,
        final_residual_max=res_max,
        converged=converged,
        energies=np.asarray(energies),
    )


def default_step(window, hooke_d: float) -> float:
    """Stable explicit step for the harmonic part: h^2 / (5 d)."""
    return window.h * window.h / (5.0 * hooke_d)
