#!/usr/bin/env python3
"""
Demo script for the unfolding pipeline.

Walks through the two fixture problems:
- pipeline configuration summary
- spectral analysis and versality check of the given families
- synthesis, scalar simplification and decomplexification
- a double Hopf point of the two-delay scalar equation
"""

import os
import sys

import numpy as np

# Add current directory to path for imports
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from pipeline_builder import PipelineBuilder
from rfde_unfold.oracles import find_double_hopf
from rfde_unfold.problem_io import parse_problem
from rfde_unfold.settings import configure_logging
from rfde_unfold.spectral import compute_bases
from rfde_unfold.synthesis import synthesize

FIXTURES = os.path.join(os.path.dirname(os.path.abspath(__file__)), "fixtures")


def print_section(title):
    """Print a formatted section header."""
    print(f"\n{'='*60}")
    print(f"🎯 {title}")
    print('='*60)


def print_step(step, description):
    """Print a formatted step."""
    print(f"\n📋 Step {step}: {description}")
    print("-" * 40)


def demo_pipeline_summary():
    print_section("Pipeline Configuration Summary")
    summary = PipelineBuilder().get_pipeline_summary()
    print(f"Pipeline Name: {summary['pipeline_name']}")
    print(f"Description: {summary['description']}")
    for command, chain in summary["commands"].items():
        print(f"  {command:<11} → {' → '.join(chain)}")
    return True


def demo_example1():
    print_section("ẋ = x(t) − x(t−1) at the double zero root")
    problem = parse_problem(os.path.join(FIXTURES, "example1.json"))
    builder = PipelineBuilder()

    print_step(1, "Analysis and versality check of α₁x(t) + α₂x(t−1)")
    state = builder.execute("check", problem)
    if state["errors"]:
        print(f"❌ {state['errors'][0]['error']}")
        return False
    bases = state["results"]["analysis"]["bases"]
    report = state["results"]["versality"]["report"]
    print(f"Block sizes: {bases.spec.block_sizes}  c = {bases.spec.c}  δ = {bases.spec.delta}")
    print(f"Φ(0) = {np.round(bases.phi0.real, 6).tolist()}")
    print(f"Ψ(0) = {np.round(bases.psi0.real, 6).tolist()}")
    print(f"rank S = {report.rank_S}, verdict: {report.verdict}")

    print_step(2, "Synthesis with scalar simplification")
    state = builder.execute("synthesize", problem, {"scalar_simplify": True})
    if state["errors"]:
        print(f"❌ {state['errors'][0]['error']}")
        return False
    synthesis = state["results"]["synthesis"]
    print(f"Delays: {list(synthesis['family'].delays)}")
    print(f"Change matrix K (β = Kα):\n{np.round(synthesis['change_matrix'].real, 6)}")
    return True


def demo_example3():
    print_section("Pupil light reflex linearization at the 1:2 double Hopf point")
    problem = parse_problem(os.path.join(FIXTURES, "example3.json"))
    builder = PipelineBuilder()

    print_step(1, "Versality of the (α, β, τ, A) family")
    state = builder.execute("check", problem)
    if state["errors"]:
        print(f"❌ {state['errors'][0]['error']}")
        return False
    report = state["results"]["versality"]["report"]
    print(f"S is {report.c ** 2 + report.p}×{report.c ** 2}, rank {report.rank_S}: {report.verdict}")

    print_step(2, "Real mini-versal unfolding")
    state = builder.execute("synthesize", problem, {"real": True})
    if state["errors"]:
        print(f"❌ {state['errors'][0]['error']}")
        return False
    real_family = state["results"]["synthesis"]["real_family"]
    print(f"Delays: {list(real_family.delays)}")
    print(f"Parameters: {', '.join(real_family.param_names)}")
    for name, matrices in zip(real_family.param_names, real_family.real_operators):
        print(f"  {name}: " + "  ".join(str(np.round(A, 4).tolist()) for A in matrices))
    return True


def demo_double_hopf():
    print_section("Double Hopf point of ẋ = A₁x(t−1) + A₂x(t−2)")
    point = find_double_hopf(1.0, 2.0)
    print(f"A₁ = {point.A1:.8f}, A₂ = {point.A2:.8f}")
    print(f"ω₁ = {point.omega1:.8f}, ω₂ = {point.omega2:.8f}, residual {point.residual:.2e}")

    rfde = point.to_rfde()
    bases = compute_bases(rfde, point.lambdas())
    family = synthesize(rfde, bases.spec, bases=bases)
    print(f"c = {bases.c}, δ = {family.delta}, delays {np.round(family.delays, 4).tolist()}")
    print(f"Verdict: {family.report.verdict}")
    return True


def main():
    configure_logging("WARNING")
    print("🚀 Unfolding Pipeline Demo")

    demos = [demo_pipeline_summary, demo_example1, demo_example3, demo_double_hopf]
    passed = 0
    for demo in demos:
        try:
            if demo():
                passed += 1
        except Exception as e:
            print(f"❌ Error: {e}")

    print_section("Demo Summary")
    print(f"Completed {passed}/{len(demos)} demos")
    return 0 if passed == len(demos) else 1


if __name__ == "__main__":
    sys.exit(main())
