"""Functional error majorants for the double-diffusion and coupled elasticity problems.

Residuals of a flux pair are ``rho_i = div y_i + h_i``; the exact fluxes
``k_i grad p_i`` give ``rho_1 = kappa (p1 - p2) = -rho_2``.

Pressure-like, flux-like, displacement-like and stress-like arguments only
need a ``mesh`` attribute and a ``sample(rule)`` method, so analytic fields
from :mod:`biot_majorant.verification` can be passed wherever a discrete
field is accepted.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, NamedTuple, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .fem import (
    DEGREE2,
    DEGREE4,
    MaterialParams,
    QuadratureRule,
    ScalarField,
    VectorField,
    compliance,
    energy_density,
    mass_matrix,
    quadrature_points,
    stiffness_matrix,
)
from .mesh import Mesh2D
from .solvers import pcg

MODES = ("paper", "tight")
BETA_CAP = 1e12


class ConstraintViolation(ValueError):
    """The flux pair is not in the equilibration subspace ``rho_1 + rho_2 = 0``."""


class Loads(NamedTuple):
    """Source terms: pressure loads ``h1, h2`` and body force ``f``."""

    h1: ScalarField
    h2: ScalarField
    f: Optional[VectorField] = None


def _zero_force(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return np.zeros_like(x), np.zeros_like(x)


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def _require_kappa(params: MaterialParams) -> None:
    if not params.kappa > 0:
        raise ZeroDivisionError("the estimator requires kappa > 0")


# --------------------------------------------------------------------------
# constants
# --------------------------------------------------------------------------


def friedrichs_constant(a: float, b: float) -> float:
    """Friedrichs constant of the rectangle ``[0, a] x [0, b]``: ``1 / sqrt(lambda_1)``."""
    if not (a > 0 and b > 0):
        raise ValueError("rectangle sides must be positive")
    return 1.0 / (math.pi * math.sqrt(1.0 / a**2 + 1.0 / b**2))


def korn_constant(params: MaterialParams, C_F: float) -> float:
    """``C_F / sqrt(mu)``, valid for ``||w|| <= C ||eps(w)||_L`` on fields vanishing on the boundary.

    Uses ``||grad w||^2 <= 2 ||eps(w)||^2`` and ``||eps||_L^2 >= 2 mu ||eps||^2``.
    """
    if not params.lame_mu > 0:
        raise ValueError("lame_mu must be positive")
    return C_F / math.sqrt(params.lame_mu)


def discrete_dirichlet_eigenvalue(m: Mesh2D, tol: float = 1e-12, max_iter: int = 500) -> float:
    """Smallest eigenvalue of the P1 Dirichlet Laplacian by inverse power iteration."""
    inner = m.interior_vertices
    K = stiffness_matrix(m)[inner][:, inner].tocsc()
    M = mass_matrix(m)[inner][:, inner].tocsc()
    lu = splu(K)
    x = np.ones(len(inner))
    lam = np.inf
    for _ in range(max_iter):
        x = lu.solve(M @ x)
        x /= math.sqrt(x @ (M @ x))
        new = (x @ (K @ x)) / (x @ (M @ x))
        if abs(new - lam) <= tol * new:
            return float(new)
        lam = new
    return float(lam)


# --------------------------------------------------------------------------
# sampled residuals
# --------------------------------------------------------------------------


@dataclass
class _DiffusionSample:
    weights: np.ndarray  # (nc, nq), area times rule weight
    flux_mismatch: np.ndarray  # (nc, nq, 2, 2): k_i grad q_i - y_i
    rho: np.ndarray  # (nc, nq, 2)
    diff: np.ndarray  # (nc, nq): q1 - q2

    def integral(self, vals: np.ndarray) -> float:
        return float(np.sum(self.weights * vals))

    def cells(self, vals: np.ndarray) -> np.ndarray:
        return np.sum(self.weights * vals, axis=1)


def _sample_diffusion(q: Any, y: Any, params: MaterialParams, loads: Sequence, rule: QuadratureRule) -> _DiffusionSample:
    m = q.mesh
    if y.mesh is not m:
        raise ValueError("pressure and flux live on different meshes")
    qv, qg = q.sample(rule)
    yv, ydiv = y.sample(rule)
    x, yy = quadrature_points(m, rule)
    h = np.stack([np.asarray(loads[0](x, yy)) * np.ones_like(x), np.asarray(loads[1](x, yy)) * np.ones_like(x)], axis=2)
    k = np.array(params.k)
    mismatch = k[None, None, :, None] * qg - yv
    w = m.signed_areas()[:, None] * rule.weights[None, :]
    return _DiffusionSample(w, mismatch, ydiv + h, qv[..., 0] - qv[..., 1])


def _flux_energy_density(s: _DiffusionSample, params: MaterialParams) -> np.ndarray:
    """``sum_i k_i^-1 |k_i grad q_i - y_i|^2`` pointwise."""
    kinv = 1.0 / np.array(params.k)
    return np.einsum("cqid,i->cq", s.flux_mismatch**2, kinv)


# --------------------------------------------------------------------------
# compound functionals
# --------------------------------------------------------------------------


def compound_DG(q: Any, y: Any, params: MaterialParams, rule: QuadratureRule = DEGREE4, cellwise: bool = False):
    """``1/2 int A (grad q - A^-1 y) : (grad q - A^-1 y)``."""
    x0 = lambda x, y_: np.zeros_like(x)  # noqa: E731
    s = _sample_diffusion(q, y, params, (x0, x0), rule)
    vals = 0.5 * _flux_energy_density(s, params)
    return s.cells(vals) if cellwise else s.integral(vals)


def _check_constraint(s: _DiffusionSample, tol: float) -> None:
    total = s.rho[..., 0] + s.rho[..., 1]
    scale = max(1.0, math.sqrt(s.integral(s.rho[..., 0] ** 2 + s.rho[..., 1] ** 2)))
    violation = math.sqrt(s.integral(total**2))
    if violation > tol * scale:
        raise ConstraintViolation(f"||rho_1 + rho_2|| = {violation:.3e} exceeds tolerance")


def compound_DF_paper(
    q: Any, y: Any, params: MaterialParams, loads: Sequence, rule: QuadratureRule = DEGREE4, tol: float = 1e-8
) -> float:
    """Closed form ``1/2 int B q.q + 1/(4 kappa) int (rho_1^2 + rho_2^2)`` on the equilibration subspace."""
    _require_kappa(params)
    s = _sample_diffusion(q, y, params, loads, rule)
    _check_constraint(s, tol)
    kap = params.kappa
    return s.integral(0.5 * kap * s.diff**2 + (s.rho[..., 0] ** 2 + s.rho[..., 1] ** 2) / (4.0 * kap))


def compound_DF_fenchel(
    q: Any,
    y: Any,
    params: MaterialParams,
    loads: Sequence,
    rule: QuadratureRule = DEGREE4,
    tol: float = 1e-8,
    cellwise: bool = False,
):
    """Exact compound value ``1/(2 kappa) int (kappa (q1 - q2) - rho_1)^2``.

    Differs from :func:`compound_DF_paper` by the pairing ``int rho_1 (q1 - q2)``.
    """
    _require_kappa(params)
    s = _sample_diffusion(q, y, params, loads, rule)
    _check_constraint(s, tol)
    kap = params.kappa
    vals = (kap * s.diff - s.rho[..., 0]) ** 2 / (2.0 * kap)
    return s.cells(vals) if cellwise else s.integral(vals)


def majorant_constrained(
    q: Any, y: Any, params: MaterialParams, loads: Sequence, mode: str = "fenchel", rule: QuadratureRule = DEGREE4
) -> float:
    """``D_F + D_G`` for a flux in the equilibration subspace.

    ``mode="fenchel"`` (alias ``"tight"``) uses the exact compound and
    bounds ``a(e, e) / 2``; ``"paper"`` uses the closed form.
    """
    if mode not in ("paper", "fenchel", "tight"):
        raise ValueError(f"unknown mode {mode!r}")
    df = compound_DF_paper if mode == "paper" else compound_DF_fenchel
    return compound_DG(q, y, params, rule) + df(q, y, params, loads, rule)


# --------------------------------------------------------------------------
# penalized majorant
# --------------------------------------------------------------------------


def optimal_beta(X: float, Y: float, cap: float = BETA_CAP) -> float:
    """Minimizer of ``(1 + b) X + (1 + 1/b) Y`` over ``b > 0``."""
    if X < 0 or Y < 0:
        raise ValueError("term values must be non-negative")
    if X == 0 and Y == 0:
        return 1.0
    if X == 0:
        return cap
    if Y == 0:
        return 1.0 / cap
    return min(max(math.sqrt(Y / X), 1.0 / cap), cap)


def split_value(beta: float, X: float, Y: float) -> float:
    return (1.0 + beta) * X + (1.0 + 1.0 / beta) * Y


def optimize_betas_diffusion(term_pairs: Sequence[tuple[float, float]]) -> tuple[float, ...]:
    """Closed-form optimum for each ``(X, Y)`` pair; ``beta = sqrt(Y / X)``."""
    return tuple(optimal_beta(X, Y) for X, Y in term_pairs)


def optimal_beta3(params: MaterialParams) -> float:
    """Minimizer of ``max{(1 + b)/k1, (1 + b)/(k2 b)}``."""
    return params.k1 / params.k2


def pressure_split_factor(params: MaterialParams, beta3: float) -> float:
    return max((1.0 + beta3) / params.k1, (1.0 + beta3) / (params.k2 * beta3))


@dataclass
class _PenalizedTerms:
    flux: float  # int sum k_i^-1 |k_i grad q_i - y_i|^2
    rho_sq: tuple[float, float]  # ||rho_i||^2
    rho_sum_sq: float  # ||rho_1 + rho_2||^2
    exchange: float  # int kappa (q1 - q2)^2
    tight_residual: float  # ||(rho_1 - rho_2) - 2 kappa (q1 - q2)||^2


def _penalized_terms(q, y, params, loads, rule) -> _PenalizedTerms:
    s = _sample_diffusion(q, y, params, loads, rule)
    r1, r2 = s.rho[..., 0], s.rho[..., 1]
    return _PenalizedTerms(
        flux=s.integral(_flux_energy_density(s, params)),
        rho_sq=(s.integral(r1**2), s.integral(r2**2)),
        rho_sum_sq=s.integral((r1 + r2) ** 2),
        exchange=s.integral(params.kappa * s.diff**2),
        tight_residual=s.integral(((r1 - r2) - 2.0 * params.kappa * s.diff) ** 2),
    )


def DF_final(
    q: Any,
    yhat: Any,
    params: MaterialParams,
    loads: Sequence,
    beta2: float,
    component: int = 1,
    rule: QuadratureRule = DEGREE4,
) -> float:
    """Penalized ``D_F``; ``component`` selects which residual carries the extra penalty."""
    _require_kappa(params)
    if not beta2 > 0:
        raise ValueError("beta2 must be positive")
    t = _penalized_terms(q, yhat, params, loads, rule)
    return _paper_DF(t, params, beta2, component)


def _paper_DF(t: _PenalizedTerms, params: MaterialParams, beta2: float, component: int) -> float:
    c = 1.0 / (4.0 * params.kappa)
    return 0.5 * t.exchange + (1 + beta2) * c * sum(t.rho_sq) + (1 + 1 / beta2) * c * t.rho_sq[component - 1]


def DG_final(
    q: Any,
    yhat: Any,
    params: MaterialParams,
    loads: Sequence,
    beta1: float,
    C_F: float,
    component: int | None = None,
    rule: QuadratureRule = DEGREE4,
) -> float:
    """Penalized ``D_G``; with ``component=None`` the smaller of the two variants."""
    if not beta1 > 0:
        raise ValueError("beta1 must be positive")
    t = _penalized_terms(q, yhat, params, loads, rule)
    comps = (1, 2) if component is None else (component,)
    return min(_paper_DG(t, params, beta1, C_F, i) for i in comps)


def _paper_DG(t: _PenalizedTerms, params: MaterialParams, beta1: float, C_F: float, component: int) -> float:
    X, Y = _paper_DG_split(t, params, C_F, component)
    return split_value(beta1, X, Y)


def _paper_DG_split(t, params, C_F, component) -> tuple[float, float]:
    k = params.k[component - 1]
    return 0.5 * t.flux, 0.5 * C_F**2 * t.rho_sq[component - 1] / k


def _paper_DF_split(t, params, component) -> tuple[float, float]:
    c = 1.0 / (4.0 * params.kappa)
    return c * sum(t.rho_sq), c * t.rho_sq[component - 1]


def _tight_split(t, params, C_F) -> tuple[float, float, float]:
    pen = C_F**2 / (2.0 * min(params.k)) * t.rho_sum_sq
    return t.flux, pen, t.tight_residual / (4.0 * params.kappa)


@dataclass
class MajorantReport:
    """Itemized majorant.

    paper mode::

        total = DF_B + (1 + beta2) DF_equilibrium + (1 + 1/beta2) DF_div_penalty
                + (1 + beta1) DG_flux + (1 + 1/beta1) DG_div_penalty

    tight mode (``DF_B = DF_div_penalty = 0``, no beta2)::

        total = DF_equilibrium + (1 + beta1) DG_flux + (1 + 1/beta1) DG_div_penalty

    The guaranteed quantity is ``a(e, e) / 2`` in paper mode and ``a(e, e)``
    in tight mode.
    """

    mode: str
    DG_flux: float
    DG_div_penalty: float
    DF_B: float
    DF_equilibrium: float
    DF_div_penalty: float
    beta1: float
    beta2: Optional[float]
    variant: int
    total: float
    C_F: float
    error: Optional[float] = None
    efficiency: Optional[float] = None

    def combine(self) -> float:
        if self.mode == "paper":
            df = self.DF_B + split_value(self.beta2, self.DF_equilibrium, self.DF_div_penalty)
        else:
            df = self.DF_equilibrium
        return df + split_value(self.beta1, self.DG_flux, self.DG_div_penalty)

    @property
    def energy_bound(self) -> float:
        """Upper bound for ``a(e, e)`` implied by this report."""
        return 2.0 * self.total if self.mode == "paper" else self.total

    def to_dict(self) -> dict:
        return asdict(self)


def _resolve_betas(strategy: str, pairs: Sequence[tuple[float, float]], fixed: Sequence[float] | None) -> list[float]:
    if strategy == "closed_form":
        return list(optimize_betas_diffusion(pairs))
    if strategy == "fixed":
        if fixed is None:
            raise ValueError("fixed beta strategy needs explicit betas")
        return [float(b) for b in fixed[: len(pairs)]]
    if strategy == "scan":
        grid = np.logspace(-4, 4, 1001)
        return [float(grid[np.argmin([split_value(b, X, Y) for b in grid])]) for X, Y in pairs]
    raise ValueError(f"unknown beta strategy {strategy!r}")


def majorant_total(
    q: Any,
    yhat: Any,
    params: MaterialParams,
    loads: Sequence,
    C_F: float,
    mode: str = "tight",
    betas: Sequence[float] | None = None,
    beta_strategy: str = "closed_form",
    rule: QuadratureRule = DEGREE4,
) -> MajorantReport:
    """Evaluate the penalized majorant for an arbitrary flux.

    Paper mode takes the smaller of the two symmetric variants (penalty on
    ``rho_1`` or on ``rho_2``). ``betas`` are ``(beta1, beta2)`` and are
    only used with ``beta_strategy="fixed"``.
    """
    _check_mode(mode)
    _require_kappa(params)
    if betas is not None and beta_strategy == "closed_form":
        beta_strategy = "fixed"
    t = _penalized_terms(q, yhat, params, loads, rule)
    if mode == "tight":
        X, Y, Z = _tight_split(t, params, C_F)
        (b1,) = _resolve_betas(beta_strategy, [(X, Y)], betas)
        total = Z + split_value(b1, X, Y)
        return MajorantReport("tight", X, Y, 0.0, Z, 0.0, b1, None, 0, total, C_F)
    best = None
    for i in (1, 2):
        gx, gy = _paper_DG_split(t, params, C_F, i)
        fx, fy = _paper_DF_split(t, params, i)
        b1, b2 = _resolve_betas(beta_strategy, [(gx, gy), (fx, fy)], betas)
        total = 0.5 * t.exchange + split_value(b2, fx, fy) + split_value(b1, gx, gy)
        rep = MajorantReport("paper", gx, gy, 0.5 * t.exchange, fx, fy, b1, b2, i, total, C_F)
        if best is None or rep.total < best.total:
            best = rep
    return best


# --------------------------------------------------------------------------
# quadratic form in the flux coefficients
# --------------------------------------------------------------------------


@dataclass
class FluxQuadraticForm:
    """``Phi(c) = c^T H c + 2 c^T g + const`` over flat flux coefficients."""

    H: sp.csr_matrix
    g: np.ndarray
    const: float

    def value(self, c: np.ndarray) -> float:
        return float(c @ (self.H @ c) + 2.0 * (c @ self.g) + self.const)

    def minimize(self, c0: np.ndarray, iters: int, callback: Callable[[np.ndarray], None] | None = None) -> np.ndarray:
        res = pcg(
            self.H.dot, -self.g, x0=c0, diag=self.H.diagonal(), tol=1e-14,
            max_iter=iters, callback=callback, raise_on_fail=False,
        )
        return res.x


def _flux_operators(m: Mesh2D, rule: QuadratureRule):
    """Sparse maps from flat coefficients (vertex, component, direction) to point data."""
    nc, nq = m.n_cells, len(rule.weights)
    npts = nc * nq
    nv = m.n_vertices
    _, grads = m.geometry()
    rows = np.repeat(np.arange(npts), 3)
    verts = np.repeat(m.cells, nq, axis=0).ravel()
    bary = np.tile(rule.points, (nc, 1)).ravel()
    value_ops = {}
    for i in range(2):
        for d in range(2):
            value_ops[i, d] = sp.csr_matrix((bary, (rows, 4 * verts + 2 * i + d)), shape=(npts, 4 * nv))
    div_ops = []
    for i in range(2):
        cols = np.concatenate([4 * verts + 2 * i, 4 * verts + 2 * i + 1])
        gvals = np.repeat(grads, nq, axis=0)  # (npts, 3, 2)
        data = np.concatenate([gvals[:, :, 0].ravel(), gvals[:, :, 1].ravel()])
        div_ops.append(sp.csr_matrix((data, (np.concatenate([rows, rows]), cols)), shape=(npts, 4 * nv)))
    return value_ops, div_ops


def flux_quadratic_form(
    q: Any,
    start: Any,
    params: MaterialParams,
    loads: Sequence,
    C_F: float,
    mode: str = "tight",
    betas: Sequence[float] | None = None,
    rule: QuadratureRule = DEGREE4,
) -> FluxQuadraticForm:
    """The fixed-beta majorant as a quadratic in the nodal flux coefficients.

    Betas default to the closed-form optimum of ``majorant_total`` at ``start``;
    in paper mode the variant chosen there is kept.
    """
    _check_mode(mode)
    _require_kappa(params)
    rep = majorant_total(q, start, params, loads, C_F, mode, rule=rule)
    b1 = rep.beta1 if betas is None else betas[0]
    b2 = rep.beta2 if betas is None or len(betas) < 2 else betas[1]
    m = q.mesh
    value_ops, div_ops = _flux_operators(m, rule)
    s = _sample_diffusion(q, start, params, loads, rule)
    qv, qg = q.sample(rule)
    k = params.k
    x, y = quadrature_points(m, rule)
    h = [np.asarray(loads[i](x, y)) * np.ones_like(x) for i in range(2)]
    w = s.weights.ravel()
    kap = params.kappa

    # each term: (coefficient, linear operator, constant offset); contributes coef * int (L c + g)^2
    terms = []
    flux_coef = (1 + b1) * (1.0 if mode == "tight" else 0.5)
    for i in range(2):
        for d in range(2):
            terms.append((flux_coef / k[i], -value_ops[i, d], k[i] * qg[..., i, d].ravel()))
    rho = [(div_ops[i], h[i].ravel()) for i in range(2)]
    if mode == "tight":
        pen = (1 + 1 / b1) * C_F**2 / (2.0 * min(k))
        terms.append((pen, rho[0][0] + rho[1][0], rho[0][1] + rho[1][1]))
        diff = (qv[..., 0] - qv[..., 1]).ravel()
        terms.append((1.0 / (4 * kap), rho[0][0] - rho[1][0], rho[0][1] - rho[1][1] - 2 * kap * diff))
        const = 0.0
    else:
        i = rep.variant - 1
        terms.append((0.5 * (1 + 1 / b1) * C_F**2 / k[i], rho[i][0], rho[i][1]))
        for j in range(2):
            terms.append(((1 + b2) / (4 * kap), rho[j][0], rho[j][1]))
        terms.append(((1 + 1 / b2) / (4 * kap), rho[i][0], rho[i][1]))
        const = 0.5 * s.integral(kap * s.diff**2)

    n = 4 * m.n_vertices
    H = sp.csr_matrix((n, n))
    g = np.zeros(n)
    for coef, L, off in terms:
        WL = L.multiply(w[:, None]).tocsr()
        H = H + coef * (L.T @ WL)
        g += coef * (WL.T @ off)
        const += coef * float(off @ (w * off))
    return FluxQuadraticForm(H.tocsr(), g, const)


# --------------------------------------------------------------------------
# elasticity and coupled estimate
# --------------------------------------------------------------------------


@dataclass
class ElasticTerms:
    constitutive: float  # ||eps(v) - L^-1 tau||_L^2
    equilibrium: float  # ||div tau + f - alpha1 grad q1 - alpha2 grad q2||^2


def elastic_terms(v: Any, tau: Any, q: Any, params: MaterialParams, f: VectorField | None, rule: QuadratureRule = DEGREE4) -> ElasticTerms:
    m = v.mesh
    w = m.signed_areas()[:, None] * rule.weights[None, :]
    _, eps = v.sample(rule)
    sig, div = tau.sample(rule)
    d = eps - compliance(params, sig)
    _, qg = q.sample(rule)
    x, y = quadrature_points(m, rule)
    fx, fy = (f or _zero_force)(x, y)
    force = np.stack([np.asarray(fx) * np.ones_like(x), np.asarray(fy) * np.ones_like(x)], axis=2)
    r = div + force - params.alpha1 * qg[..., 0, :] - params.alpha2 * qg[..., 1, :]
    return ElasticTerms(float(np.sum(w * energy_density(params, d))), float(np.sum(w * np.sum(r**2, axis=2))))


def _alpha_factor(params: MaterialParams) -> float:
    # the pressure-gradient split is stated without the alpha weights; rescale when |alpha_i| > 1
    return max(1.0, abs(params.alpha1), abs(params.alpha2)) ** 2


def elastic_majorant(
    v: Any,
    tau: Any,
    q: Any,
    params: MaterialParams,
    f: VectorField | None,
    C_K: float,
    beta3: float,
    pressure_bound: float,
    rule: QuadratureRule = DEGREE4,
) -> float:
    """Squared bound for ``||eps(u - v)||_L`` with approximate pressures.

    ``pressure_bound`` is any upper bound of ``a(p - q, p - q)``.
    """
    if not beta3 > 0:
        raise ValueError("beta3 must be positive")
    t = elastic_terms(v, tau, q, params, f, rule)
    grad_part = math.sqrt(_alpha_factor(params) * pressure_split_factor(params, beta3) * pressure_bound)
    return (math.sqrt(t.constitutive) + C_K * math.sqrt(t.equilibrium) + C_K * grad_part) ** 2


def coupled_constant(params: MaterialParams, C_K: float, beta3: float, beta5: float, beta6: float) -> float:
    """``1 + C_K^2 (1 + 1/beta5 + 1/beta6) max{(1 + beta3)/k1, (1 + beta3)/(k2 beta3)}``."""
    return 1.0 + C_K**2 * (1 + 1 / beta5 + 1 / beta6) * pressure_split_factor(params, beta3) * _alpha_factor(params)


def _coupled_rhs(betas, A, B, bound, params, C_K):
    b3, b4, b5, b6 = betas
    chat = coupled_constant(params, C_K, b3, b5, b6)
    return (1 + b4 + b5) * A + (1 + 1 / b4 + b6) * C_K**2 * B + chat * bound, chat


def optimize_coupled_betas(
    A: float, B: float, bound: float, params: MaterialParams, C_K: float, sweeps: int = 3, points: int = 25
) -> tuple[float, float, float, float]:
    """Coordinate descent for ``beta3..beta6`` on a log grid over ``[1e-3, 1e3]``.

    ``beta3`` starts at its closed-form optimum; the current value is always
    kept as a candidate so the objective never increases.
    """
    grid = np.logspace(-3, 3, points)
    betas = [optimal_beta3(params), 1.0, 1.0, 1.0]
    for _ in range(sweeps):
        for j in range(4):
            candidates = np.insert(grid, 0, betas[j])  # ties keep the current value
            vals = []
            for c in candidates:
                trial = list(betas)
                trial[j] = float(c)
                vals.append(_coupled_rhs(trial, A, B, bound, params, C_K)[0])
            betas[j] = float(candidates[int(np.argmin(vals))])
    return tuple(betas)


@dataclass
class CoupledEstimate:
    rhs_bound: float
    Chat: float
    betas: tuple[float, float, float, float]  # beta3..beta6
    constitutive: float
    equilibrium: float
    diffusion_bound: float  # bound for a(e, e) used in the last term
    lhs_error: Optional[float] = None

    @property
    def holds(self) -> Optional[bool]:
        if self.lhs_error is None:
            return None
        return self.lhs_error <= self.rhs_bound * (1 + 1e-8) + 1e-14

    def to_dict(self) -> dict:
        d = asdict(self)
        d["betas"] = list(self.betas)
        d["holds"] = self.holds
        return d


def coupled_estimate(
    q: Any,
    v: Any,
    tau: Any,
    params: MaterialParams,
    f: VectorField | None,
    diffusion: MajorantReport,
    C_K: float,
    betas: Sequence[float] | None = None,
    lhs_error: float | None = None,
    rule: QuadratureRule = DEGREE4,
) -> CoupledEstimate:
    """Bound for ``a(p - q, p - q) + ||eps(u - v)||_L^2``.

    The last term is ``C_hat`` times the bound on ``a(e, e)`` carried by
    ``diffusion`` (twice the paper-mode majorant, or the tight majorant).
    """
    t = elastic_terms(v, tau, q, params, f, rule)
    bound = diffusion.energy_bound
    if betas is None:
        betas = optimize_coupled_betas(t.constitutive, t.equilibrium, bound, params, C_K)
    betas = tuple(float(b) for b in betas)
    if any(b <= 0 for b in betas):
        raise ValueError("betas must be positive")
    rhs, chat = _coupled_rhs(betas, t.constitutive, t.equilibrium, bound, params, C_K)
    return CoupledEstimate(rhs, chat, betas, t.constitutive, t.equilibrium, bound, lhs_error)
