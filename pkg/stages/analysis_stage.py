"""
AnalysisStage - Jordan structure and normalized spectral bases at Λ.
"""

from typing import Any, Dict

from rfde_unfold.problem_io import encode_bases, encode_spec
from rfde_unfold.spectral import jordan_structure, left_basis, normalize, right_basis

from .base_stage import BaseStage, StageInput


class AnalysisStage(BaseStage):
    """
    Stage responsible for the spectral reduction of the problem's equation.

    Recovers block sizes from the chain matrices, builds the right and left
    chains and normalizes them against the adjoint bilinear form.
    """

    required_inputs = ["problem"]
    output_keys = ["spec", "bases", "summary"]

    def _execute_stage(self, input_data: StageInput) -> Dict[str, Any]:
        problem = input_data.data["problem"]
        settings = self.settings_for(input_data)
        if not problem.lambdas:
            raise ValueError("problem has an empty lambda_set")

        spec = jordan_structure(problem.rfde, problem.lambdas, settings=settings)
        self.log_step("jordan", "Jordan structure recovered", c=spec.c, delta=spec.delta)

        phi0 = right_basis(problem.rfde, spec, settings)
        psi_star0 = left_basis(problem.rfde, spec, settings)
        bases = normalize(psi_star0, phi0, problem.rfde, spec, settings)
        self.log_step("bases", "Bases normalized", pairing_condition=bases.pairing_condition)

        return {
            "spec": spec,
            "bases": bases,
            "summary": {"spec": encode_spec(spec), "bases": encode_bases(bases)},
        }
