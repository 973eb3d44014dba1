"""Configuration-driven experiments: solve, reconstruct, estimate, verify, serialize."""
from __future__ import annotations

import configparser
import csv
import io
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

from .majorant import (
    coupled_estimate,
    friedrichs_constant,
    korn_constant,
    majorant_total,
)
from .mesh import refine_uniform, unit_rectangle_mesh
from .reconstruction import flux_nodal_average, minimize_majorant_flux, stress_nodal_average
from .solvers import solve_double_diffusion, solve_elasticity
from .verification import (
    CASE_IDS,
    efficiency_index,
    exact_diffusion_error,
    exact_elastic_error,
    manufactured_case,
)

log = logging.getLogger(__name__)

FLUX_STRATEGIES = ("average", "minimize")
BETA_STRATEGIES = ("closed_form", "fixed", "scan")
MODES = ("paper", "tight")
CSV_COLUMNS = (
    "n",
    "h",
    "cells",
    "error_diffusion",
    "majorant",
    "efficiency",
    "error_elastic",
    "coupled_lhs",
    "coupled_rhs",
)
GUARANTEE_SLACK = 1e-8


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    case: str = "MS1"
    n: int = 4
    refinements: int = 1
    flux_strategy: str = "average"
    flux_iterations: int = 50
    beta_strategy: str = "closed_form"
    betas: tuple[float, float] = (1.0, 1.0)
    mode: str = "tight"
    solver_tol: float = 1e-10
    output_dir: str = "results"
    record_timing: bool = False

    def __post_init__(self) -> None:
        if self.case not in CASE_IDS:
            raise ConfigError(f"unknown case {self.case!r}; expected one of {CASE_IDS}")
        if self.n < 2:
            raise ConfigError("n must be at least 2")
        if self.refinements < 0:
            raise ConfigError("refinements must be non-negative")
        if self.flux_strategy not in FLUX_STRATEGIES:
            raise ConfigError(f"flux_strategy must be one of {FLUX_STRATEGIES}")
        if self.flux_iterations < 0:
            raise ConfigError("flux_iterations must be non-negative")
        if self.beta_strategy not in BETA_STRATEGIES:
            raise ConfigError(f"beta_strategy must be one of {BETA_STRATEGIES}")
        if any(not b > 0 for b in self.betas):
            raise ConfigError("betas must be positive")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if not self.solver_tol > 0:
            raise ConfigError("solver_tol must be positive")

    @classmethod
    def from_file(cls, path: str | Path, **overrides) -> "ExperimentConfig":
        """Read the ``[experiment]`` section of an INI file."""
        parser = configparser.ConfigParser()
        if not parser.read(path):
            raise ConfigError(f"cannot read config file {path}")
        if "experiment" not in parser:
            raise ConfigError("config file needs an [experiment] section")
        sec = parser["experiment"]
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(sec) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kw: dict = {}
        try:
            for key in ("case", "flux_strategy", "beta_strategy", "mode", "output_dir"):
                if key in sec:
                    kw[key] = sec[key].strip()
            for key in ("n", "refinements", "flux_iterations"):
                if key in sec:
                    kw[key] = sec.getint(key)
            if "solver_tol" in sec:
                kw["solver_tol"] = sec.getfloat("solver_tol")
            if "record_timing" in sec:
                kw["record_timing"] = sec.getboolean("record_timing")
            if "betas" in sec:
                kw["betas"] = tuple(float(b) for b in sec["betas"].split(","))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["betas"] = list(self.betas)
        return d


def _levels(config: ExperimentConfig):
    m = unit_rectangle_mesh(1.0, 1.0, config.n)
    n = config.n
    for level in range(config.refinements + 1):
        yield level, n, m
        if level < config.refinements:
            m = refine_uniform(m)
            n *= 2


def _guarantee(bound: float, error: float) -> bool:
    return error <= bound + GUARANTEE_SLACK * max(abs(bound), abs(error)) + 1e-300


def run_mesh(config: ExperimentConfig, m, n: int) -> dict:
    """Full pipeline on one mesh; returns a JSON-ready record."""
    start = time.perf_counter()
    case = manufactured_case(config.case)
    params = case.params
    C_F = friedrichs_constant(*case.domain)
    C_K = korn_constant(params, C_F)

    q = solve_double_diffusion(m, params, case.loads, tol=config.solver_tol)
    v = solve_elasticity(m, params, case.f, q, tol=config.solver_tol)
    y = flux_nodal_average(q, params)
    if config.flux_strategy == "minimize":
        betas = config.betas if config.beta_strategy == "fixed" else None
        y = minimize_majorant_flux(q, y, params, case.loads, C_F, betas, config.flux_iterations, config.mode)
    tau = stress_nodal_average(v, params)

    betas = config.betas if config.beta_strategy == "fixed" else None
    report = majorant_total(q, y, params, case.loads, C_F, config.mode, betas, config.beta_strategy)
    err_d = exact_diffusion_error(q, case)
    err_e = exact_elastic_error(v, case)
    measure = 0.5 * err_d if config.mode == "paper" else err_d
    report.error = err_d
    report.efficiency = efficiency_index(report.total, err_d, config.mode) if err_d > 0 else None
    coupled = coupled_estimate(q, v, tau, params, case.f, report, C_K, lhs_error=err_d + err_e)

    flags = {
        "diffusion": _guarantee(report.total, measure),
        "coupled": _guarantee(coupled.rhs_bound, coupled.lhs_error),
    }
    interior = len(m.interior_vertices)
    record = {
        "n": n,
        "h": m.h,
        "cells": m.n_cells,
        "unknowns": {"diffusion": 2 * interior, "elasticity": 2 * interior},
        "errors": {"diffusion": err_d, "elastic": err_e},
        "majorant": report.to_dict(),
        "coupled": coupled.to_dict(),
        "constants": {"C_F": C_F, "C_K": C_K},
        "guarantees": flags,
    }
    if config.record_timing:
        record["wall_time"] = time.perf_counter() - start
    return record


def build_report(config: ExperimentConfig) -> dict:
    meshes = []
    for level, n, m in _levels(config):
        log.info("case %s level %d (n=%d, %d cells)", config.case, level, n, m.n_cells)
        meshes.append(run_mesh(config, m, n))
    ok = all(all(r["guarantees"].values()) for r in meshes)
    return {"config": config.to_dict(), "meshes": meshes, "summary": {"all_guarantees_hold": ok}}


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


def run_experiment(config: ExperimentConfig, out_dir: str | Path | None = None) -> dict:
    """Run every mesh level and write ``report.json`` into the output directory."""
    report = build_report(config)
    out = Path(out_dir or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(dumps_report(report))
    return report


def _rate(prev: float | None, cur: float | None, h_prev: float, h_cur: float) -> str:
    if prev is None or cur is None or prev <= 0 or cur <= 0:
        return ""
    return repr(math.log(prev / cur) / math.log(h_prev / h_cur))


def convergence_table(report: dict) -> str:
    """CSV with one row per mesh and a final row of observed rates (last two levels)."""
    rows = []
    for r in report["meshes"]:
        rows.append(
            {
                "n": r["n"],
                "h": r["h"],
                "cells": r["cells"],
                "error_diffusion": r["errors"]["diffusion"],
                "majorant": r["majorant"]["total"],
                "efficiency": r["majorant"]["efficiency"],
                "error_elastic": r["errors"]["elastic"],
                "coupled_lhs": r["coupled"]["lhs_error"],
                "coupled_rhs": r["coupled"]["rhs_bound"],
            }
        )
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(["" if row[c] is None else repr(row[c]) if isinstance(row[c], float) else row[c] for c in CSV_COLUMNS])
    a, b = rows[-2], rows[-1]
    rates = ["rate", "", ""] + [_rate(a[c], b[c], a["h"], b["h"]) for c in CSV_COLUMNS[3:]]
    writer.writerow(rates)
    return buf.getvalue()


def convergence_study(config: ExperimentConfig, out_dir: str | Path | None = None) -> tuple[dict, str]:
    """Run at least three mesh levels; write ``report.json`` and ``convergence.csv``."""
    if config.refinements < 2:
        raise ConfigError("a convergence study needs at least 3 mesh levels (refinements >= 2)")
    report = run_experiment(config, out_dir)
    table = convergence_table(report)
    out = Path(out_dir or config.output_dir)
    (out / "convergence.csv").write_text(table)
    return report, table
