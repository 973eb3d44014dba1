"""Coupled pressure-displacement bound on MC1 for both estimator modes."""
import argparse

from biot_majorant import (
    flux_nodal_average,
    friedrichs_constant,
    korn_constant,
    majorant_total,
    manufactured_case,
    solve_double_diffusion,
    solve_elasticity,
    stress_nodal_average,
    unit_rectangle_mesh,
)
from biot_majorant.majorant import coupled_estimate
from biot_majorant.verification import exact_diffusion_error, exact_elastic_error


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--meshes", type=int, nargs="+", default=[4, 8, 16, 32])
    args = p.parse_args()
    case = manufactured_case("MC1")
    C_F = friedrichs_constant(*case.domain)
    C_K = korn_constant(case.params, C_F)
    print(f"{'n':>3} {'mode':5} {'lhs':>11} {'rhs':>11} {'C_hat':>7} {'ratio':>7}")
    for n in args.meshes:
        m = unit_rectangle_mesh(1.0, 1.0, n)
        q = solve_double_diffusion(m, case.params, case.loads)
        v = solve_elasticity(m, case.params, case.f, q)
        tau = stress_nodal_average(v, case.params)
        lhs = exact_diffusion_error(q, case) + exact_elastic_error(v, case)
        for mode in ("paper", "tight"):
            rep = majorant_total(q, flux_nodal_average(q, case.params), case.params, case.loads, C_F, mode)
            est = coupled_estimate(q, v, tau, case.params, case.f, rep, C_K, lhs_error=lhs)
            print(f"{n:3d} {mode:5} {lhs:11.4e} {est.rhs_bound:11.4e} {est.Chat:7.3f} {est.rhs_bound / lhs:7.2f}")


if __name__ == "__main__":
    main()
