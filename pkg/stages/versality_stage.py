"""
VersalityStage - Rank test of S for the problem's parametrized family.
"""

from typing import Any, Dict

from rfde_unfold.model import ParametrizedFamily
from rfde_unfold.versality import build_S_and_check, direction_matrices

from .base_stage import BaseStage, StageInput


class VersalityStage(BaseStage):
    """
    Stage responsible for checking a family against the versality criterion.

    A problem without a family section is treated as the family with no
    parameters, which the criterion can never show versal.
    """

    required_inputs = ["problem", "bases"]
    output_keys = ["report", "summary"]

    def _execute_stage(self, input_data: StageInput) -> Dict[str, Any]:
        problem = input_data.data["problem"]
        bases = input_data.data["bases"]
        settings = self.settings_for(input_data)

        family = problem.family or ParametrizedFamily(problem.rfde)
        directions = direction_matrices(family, bases)
        report = build_S_and_check(bases.B, directions, settings.rank_tol, settings.ambiguity_factor)

        if report.codim != bases.spec.delta:
            self.logger.warning(
                "Orbit codimension differs from the Jordan count",
                stage_id=self.stage_id,
                codim=report.codim,
                delta=bases.spec.delta,
            )

        return {"report": report, "summary": report.model_dump()}
