"""
ValidationStage - Independent oracles run against the analysis and synthesis results.
"""

from typing import Any, Dict

import numpy as np

from rfde_unfold.matalg import build_kerTstar_basis, build_rangeT_basis
from rfde_unfold.numerics import max_abs
from rfde_unfold.oracles import (
    DENSE_ORACLE_LIMIT,
    bilinear_form_quadrature,
    first_order_spectrum_check,
    principal_angles,
    sylvester_spaces,
)

from .base_stage import BaseStage, StageInput

ANGLE_TOL = 1e-8
PAIRING_TOL = 1e-8


class ValidationStage(BaseStage):
    """
    Stage responsible for cross-checking results with brute-force oracles.

    Checks:
    - combinatorial range/kernel bases against the dense Sylvester spaces
    - the closed-form bilinear form against quadrature
    - first-order root motion of the synthesized family
    """

    required_inputs = ["problem", "bases", "family"]
    output_keys = ["passed", "summary"]

    def _execute_stage(self, input_data: StageInput) -> Dict[str, Any]:
        problem = input_data.data["problem"]
        bases = input_data.data["bases"]
        family = input_data.data.get("real_family") or input_data.data["family"]
        settings = self.settings_for(input_data)
        trials = int(input_data.data.get("trials") or 3)
        eps = float(input_data.data.get("eps") or 1e-3)
        seed = int(input_data.data.get("seed") or 0)

        summary: Dict[str, Any] = {}
        checks = []

        spec = bases.spec
        if spec.c <= DENSE_ORACLE_LIMIT:
            range_dense, kernel_dense = sylvester_spaces(bases.B, settings.rank_tol)
            range_basis = build_rangeT_basis(spec).as_columns()
            kernel_basis = build_kerTstar_basis(spec).as_columns()
            dims_ok = range_dense.shape[1] == range_basis.shape[1] and kernel_dense.shape[1] == kernel_basis.shape[1]
            range_angle = float(np.max(principal_angles(range_basis, range_dense), initial=0.0)) if dims_ok and range_basis.size else 0.0
            kernel_angle = float(np.max(principal_angles(kernel_basis, kernel_dense), initial=0.0)) if dims_ok else float("inf")
            sylvester_ok = dims_ok and range_angle < ANGLE_TOL and kernel_angle < ANGLE_TOL
            summary["sylvester"] = {
                "range_dim": int(range_dense.shape[1]),
                "kernel_dim": int(kernel_dense.shape[1]),
                "delta": spec.delta,
                "max_range_angle": range_angle,
                "max_kernel_angle": kernel_angle,
                "passed": sylvester_ok,
            }
            checks.append(sylvester_ok)
            self.log_step("sylvester", "Sylvester oracle compared", **summary["sylvester"])

        form = bilinear_form_quadrature(bases.psi0, bases.phi0, problem.rfde, bases.B)
        deviation = max_abs(form - np.eye(spec.c))
        summary["pairing"] = {"max_deviation": deviation, "passed": deviation < PAIRING_TOL}
        checks.append(deviation < PAIRING_TOL)
        self.log_step("pairing", "Quadrature pairing compared", deviation=deviation)

        spectrum = first_order_spectrum_check(problem.rfde, family, eps=eps, trials=trials, seed=seed, settings=settings)
        summary["spectrum"] = spectrum.model_dump()
        checks.append(spectrum.passed)

        passed = all(checks)
        summary["passed"] = passed
        return {"passed": passed, "spectrum": spectrum, "summary": summary}
