"""Discrete calculus and angular-rigidity diagnostics on the square lattice hZ^2.

The package works with equilibrium configurations of harmonic-spring /
substrate-potential lattice models (Frenkel-Kontorova type), i.e. fields
u: hZ^2 -> R satisfying a discrete semilinear equation  L u_i = f(i, u_i),
where L is the 5-point discrete Laplacian.  It provides:

* finite lattice windows with analytic closures for controlled truncation
  (:mod:`fklattice.lattice`),
* the discrete increment/Laplacian toolbox and its exact identities
  (:mod:`fklattice.calculus`),
* the polar decomposition of the forward/backward discrete gradient into
  modulus rho and angle theta (:mod:`fklattice.angular`),
* the weighted angular-oscillation constants kappa_0..kappa_7, the rigidity
  inequality  sum rho^2 (|D+ theta|^2 + |D- theta|^2) <= C h  and the
  per-site linearized-equation remainder check
  (:mod:`fklattice.diagnostics`),
* one-dimensional reconstruction via binomial averaging of a 1D profile
  (:mod:`fklattice.rigidity`),
* built-in example configurations with known closed forms and analytic
  bounds (:mod:`fklattice.examples`),
* a damped gradient-flow relaxation solver (:mod:`fklattice.solver`),
* a CSV-reporting command line front end (:mod:`fklattice.cli`).
"""

from fklattice.lattice import LatticeWindow, ScalarField, SiteIndex, make_window, sample

__all__ = [
    "LatticeWindow",
    "ScalarField",
    "SiteIndex",
    "make_window",
    "sample",
]

__version__ = "0.1.0"
