"""Manufactured solutions, exact errors and efficiency indices.

All cases live on the unit square and are built from
``s(x, y) = sin(pi x) sin(pi y)``:

* pressures ``p1 = a1 s``, ``p2 = a2 s``;
* displacement ``u = (c s, c s)``.

Loads are hand-derived from the static system
``-div(k_i grad p_i) + kappa (p_i - p_j) = h_i`` and
``-div(L eps(u)) + alpha1 grad p1 + alpha2 grad p2 = f``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Any

import numpy as np

from .fem import DEGREE4, MaterialParams, QuadratureRule, energy_density, quadrature_points, stress
from .majorant import Loads
from .mesh import Mesh2D

PI = math.pi
CASE_IDS = ("MS1", "MS2", "ME1", "MC1")


def _s(x, y):
    return np.sin(PI * x) * np.sin(PI * y)


def _grad_s(x, y):
    return PI * np.cos(PI * x) * np.sin(PI * y), PI * np.sin(PI * x) * np.cos(PI * y)


def _cc(x, y):
    return np.cos(PI * x) * np.cos(PI * y)


# --------------------------------------------------------------------------
# analytic fields with the same sampling interface as the discrete ones
# --------------------------------------------------------------------------


def _points(m: Mesh2D, rule: QuadratureRule):
    return quadrature_points(m, rule)


@dataclass(frozen=True, eq=False)
class AnalyticPressure:
    mesh: Mesh2D
    amplitudes: tuple[float, float]

    def sample(self, rule: QuadratureRule):
        x, y = _points(self.mesh, rule)
        s = _s(x, y)
        gx, gy = _grad_s(x, y)
        a = np.array(self.amplitudes)
        vals = s[..., None] * a
        grads = np.stack([gx, gy], axis=-1)[..., None, :] * a[:, None]
        return vals, grads


@dataclass(frozen=True, eq=False)
class AnalyticFlux:
    """``y_i = k_i grad p_i`` with divergence ``-2 pi^2 k_i a_i s``."""

    mesh: Mesh2D
    amplitudes: tuple[float, float]
    k: tuple[float, float]

    def sample(self, rule: QuadratureRule):
        x, y = _points(self.mesh, rule)
        s = _s(x, y)
        gx, gy = _grad_s(x, y)
        c = np.array(self.amplitudes) * np.array(self.k)
        vals = np.stack([gx, gy], axis=-1)[..., None, :] * c[:, None]
        div = -2.0 * PI**2 * s[..., None] * c
        return vals, div


@dataclass(frozen=True, eq=False)
class AnalyticDisplacement:
    mesh: Mesh2D
    amplitude: float

    def sample(self, rule: QuadratureRule):
        x, y = _points(self.mesh, rule)
        c = self.amplitude
        s = _s(x, y)
        gx, gy = _grad_s(x, y)
        vals = c * np.stack([s, s], axis=-1)
        # grad u has identical rows (gx, gy); eps = [[gx, (gx+gy)/2], [(gx+gy)/2, gy]]
        off = 0.5 * (gx + gy)
        eps = c * np.stack([np.stack([gx, off], -1), np.stack([off, gy], -1)], -2)
        return vals, eps


@dataclass(frozen=True, eq=False)
class AnalyticStress:
    """``L eps(u)`` with divergence ``alpha1 grad p1 + alpha2 grad p2 - f``."""

    mesh: Mesh2D
    amplitude: float
    params: MaterialParams

    def sample(self, rule: QuadratureRule):
        _, eps = AnalyticDisplacement(self.mesh, self.amplitude).sample(rule)
        x, y = _points(self.mesh, rule)
        fx, fy = _elastic_force(self.params, self.amplitude)(x, y)
        return stress(self.params, eps), -np.stack([fx, fy], axis=-1)


def _elastic_force(params: MaterialParams, c: float):
    """``-div L eps(u)`` for ``u = (c s, c s)``."""
    mu, lam = params.lame_mu, params.lame_lambda

    def f(x, y):
        val = c * PI**2 * ((3 * mu + lam) * _s(x, y) - (mu + lam) * _cc(x, y))
        return val, val.copy()

    return f


# --------------------------------------------------------------------------
# cases
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ManufacturedCase:
    """Analytic solution of the static coupled system on the unit square."""

    identifier: str
    params: MaterialParams
    pressure_amplitudes: tuple[float, float]
    displacement_amplitude: float

    # pressures
    def p(self, x, y):
        s = _s(x, y)
        a1, a2 = self.pressure_amplitudes
        return a1 * s, a2 * s

    def grad_p(self, x, y):
        gx, gy = _grad_s(x, y)
        a1, a2 = self.pressure_amplitudes
        return (a1 * gx, a1 * gy), (a2 * gx, a2 * gy)

    def h1(self, x, y):
        a1, a2 = self.pressure_amplitudes
        k1, kap = self.params.k1, self.params.kappa
        return (2 * PI**2 * k1 * a1 + kap * (a1 - a2)) * _s(x, y)

    def h2(self, x, y):
        a1, a2 = self.pressure_amplitudes
        k2, kap = self.params.k2, self.params.kappa
        return (2 * PI**2 * k2 * a2 + kap * (a2 - a1)) * _s(x, y)

    # displacement
    def u(self, x, y):
        v = self.displacement_amplitude * _s(x, y)
        return v, v.copy()

    def f(self, x, y):
        fx, fy = _elastic_force(self.params, self.displacement_amplitude)(x, y)
        gx, gy = _grad_s(x, y)
        a1, a2 = self.pressure_amplitudes
        coupling = self.params.alpha1 * a1 + self.params.alpha2 * a2
        return fx + coupling * gx, fy + coupling * gy

    @property
    def loads(self) -> Loads:
        return Loads(self.h1, self.h2, self.f)

    @property
    def domain(self) -> tuple[float, float]:
        return (1.0, 1.0)

    # analytic fields on a mesh
    def exact_pressure(self, m: Mesh2D) -> AnalyticPressure:
        return AnalyticPressure(m, self.pressure_amplitudes)

    def exact_flux(self, m: Mesh2D) -> AnalyticFlux:
        return AnalyticFlux(m, self.pressure_amplitudes, self.params.k)

    def exact_displacement(self, m: Mesh2D) -> AnalyticDisplacement:
        return AnalyticDisplacement(m, self.displacement_amplitude)

    def exact_stress(self, m: Mesh2D) -> AnalyticStress:
        return AnalyticStress(m, self.displacement_amplitude, self.params)

    def zero_variant(self) -> "ManufacturedCase":
        """Same material data with all fields (and hence all loads) zero."""
        return replace(self, identifier=self.identifier + "-zero", pressure_amplitudes=(0.0, 0.0), displacement_amplitude=0.0)


def manufactured_case(identifier: str) -> ManufacturedCase:
    """Look up one of ``MS1``, ``MS2``, ``ME1``, ``MC1``."""
    if identifier == "MS1":
        return ManufacturedCase("MS1", MaterialParams(k1=1.0, k2=1.0, kappa=1.0), (1.0, 2.0), 0.0)
    if identifier == "MS2":
        return ManufacturedCase("MS2", MaterialParams(k1=1.0, k2=10.0, kappa=5.0), (1.0, 2.0), 0.0)
    if identifier == "ME1":
        return ManufacturedCase("ME1", MaterialParams(), (0.0, 0.0), 1.0)
    if identifier == "MC1":
        params = MaterialParams(k1=1.0, k2=1.0, kappa=1.0, alpha1=1.0, alpha2=0.5)
        return ManufacturedCase("MC1", params, (1.0, 2.0), 1.0)
    raise KeyError(f"unknown manufactured case {identifier!r}; expected one of {CASE_IDS}")


# --------------------------------------------------------------------------
# exact errors
# --------------------------------------------------------------------------


def _check_params(case: ManufacturedCase, params: MaterialParams | None) -> None:
    if params is not None and params != case.params:
        raise ValueError(f"material parameters do not match case {case.identifier}")


def exact_diffusion_error(q: Any, case: ManufacturedCase, params: MaterialParams | None = None, rule: QuadratureRule = DEGREE4) -> float:
    """``a(p - q, p - q)`` with the analytic ``p`` sampled at the quadrature points."""
    _check_params(case, params)
    prm = case.params
    m = q.mesh
    pv, pg = case.exact_pressure(m).sample(rule)
    qv, qg = q.sample(rule)
    ev, eg = pv - qv, pg - qg
    dens = prm.k1 * np.sum(eg[..., 0, :] ** 2, -1) + prm.k2 * np.sum(eg[..., 1, :] ** 2, -1)
    dens = dens + prm.kappa * (ev[..., 0] - ev[..., 1]) ** 2
    w = m.signed_areas()[:, None] * rule.weights
    return float(np.sum(w * dens))


def exact_elastic_error(v: Any, case: ManufacturedCase, params: MaterialParams | None = None, rule: QuadratureRule = DEGREE4) -> float:
    """``||eps(u - v)||_L^2`` with the analytic ``u``."""
    _check_params(case, params)
    m = v.mesh
    _, eu = case.exact_displacement(m).sample(rule)
    _, ev = v.sample(rule)
    w = m.signed_areas()[:, None] * rule.weights
    return float(np.sum(w * energy_density(case.params, eu - ev)))


class UndefinedIndexError(ZeroDivisionError):
    """The efficiency index needs a strictly positive error."""


def efficiency_index(majorant_value: float, error_value: float, mode: str) -> float:
    """``sqrt(M / (a(e,e)/2))`` in paper mode, ``sqrt(M / a(e,e))`` in tight mode."""
    if not error_value > 0:
        raise UndefinedIndexError("efficiency index is undefined for a zero error")
    if mode == "paper":
        return math.sqrt(majorant_value / (0.5 * error_value))
    if mode == "tight":
        return math.sqrt(majorant_value / error_value)
    raise ValueError(f"unknown mode {mode!r}")
