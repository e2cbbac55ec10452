"""
SynthesisStage - Build a mini-versal unfolding, optionally simplified or made real.
"""

from typing import Any, Dict

from rfde_unfold.problem_io import encode_family, encode_matrix, encode_problem, encode_real_family
from rfde_unfold.synthesis import decomplexify, simplify_scalar, synthesize

from .base_stage import BaseStage, StageInput


class SynthesisStage(BaseStage):
    """
    Stage responsible for unfolding synthesis.

    Besides the family itself the stage emits a problem-file dictionary whose
    family section is the synthesized one, so the result can be checked again.
    """

    required_inputs = ["problem", "spec", "bases"]
    output_keys = ["family", "summary", "problem_out"]

    def _execute_stage(self, input_data: StageInput) -> Dict[str, Any]:
        problem = input_data.data["problem"]
        spec = input_data.data["spec"]
        bases = input_data.data["bases"]
        settings = self.settings_for(input_data)
        real = bool(input_data.data.get("real"))
        scalar_simplify = bool(input_data.data.get("scalar_simplify"))

        family = synthesize(problem.rfde, spec, settings, bases=bases)
        self.log_step("synthesize", "Unfolding synthesized", delta=family.delta, delays=list(family.delays))
        summary: Dict[str, Any] = {"family": encode_family(family)}
        output_family = family.to_parametrized_family()

        simplified, change_matrix = None, None
        if scalar_simplify:
            simplified, change_matrix = simplify_scalar(family, settings)
            summary["simplified"] = encode_family(simplified)
            summary["change_matrix"] = encode_matrix(change_matrix)
            output_family = simplified.to_parametrized_family()

        real_family = None
        if real:
            real_family = decomplexify(family, spec, settings)
            summary["real_family"] = encode_real_family(real_family)
            output_family = real_family.to_parametrized_family()

        problem_out = encode_problem(
            problem.rfde,
            problem.lambdas,
            output_family,
            name=problem.name,
            tolerances=problem.tolerances,
        )
        return {
            "family": family,
            "simplified": simplified,
            "change_matrix": change_matrix,
            "real_family": real_family,
            "summary": summary,
            "problem_out": problem_out,
        }
