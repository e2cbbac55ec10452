#!/usr/bin/env python3
"""
Tests for reading and writing problem files.
"""

import json
import os
import sys

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from rfde_unfold.errors import ProblemFormatError
from rfde_unfold.problem_io import (
    dumps,
    encode_complex,
    encode_float,
    encode_problem,
    locate,
    parse_problem,
    parse_problem_text,
    write_problem,
)
from rfde_unfold.spectral import compute_bases
from rfde_unfold.synthesis import synthesize

FIXTURES = os.path.join(os.path.dirname(os.path.abspath(__file__)), "fixtures")


def test_parse_fixtures():
    print("🧪 Testing the bundled problem files...")
    first = parse_problem(os.path.join(FIXTURES, "example1.json"))
    assert first.rfde.n == 1
    assert first.rfde.tau_max == 1.0
    assert first.lambdas == [0j]
    assert first.family.p == 2 and first.family.real_flag
    assert first.tolerances == {"rank_tol": 1e-8, "grid_size": 64}

    third = parse_problem(os.path.join(FIXTURES, "example3.json"))
    assert third.rfde.n == 2
    assert third.rfde.tau_max == pytest.approx(np.pi)
    assert third.lambdas == [1j, 2j, -1j, -2j]
    assert third.family.p == 4
    assert any(direction.derivative_atoms for direction in third.family.directions)
    print("✅ Fixtures parsed")


def test_schema_errors():
    print("🧪 Testing schema violations...")
    with pytest.raises(ProblemFormatError, match="atoms"):
        parse_problem_text('{"n": 1, "atoms": []}')
    with pytest.raises(ProblemFormatError, match="not square"):
        parse_problem_text('{"n": 2, "atoms": [{"tau": 0, "A": [[1, 2], [3]]}]}')
    with pytest.raises(ProblemFormatError, match="format"):
        parse_problem_text('{"format": 2, "n": 1, "atoms": [{"tau": 0, "A": [[1]]}]}')
    with pytest.raises(ProblemFormatError, match="tau"):
        parse_problem_text('{"n": 1, "atoms": [{"tau": -1, "A": [[1]]}]}')
    with pytest.raises(ProblemFormatError, match="tau_max"):
        parse_problem_text('{"n": 1, "atoms": [{"tau": 0, "A": [[1]]}]}')
    with pytest.raises(ProblemFormatError):
        parse_problem_text('{"n": 2, "atoms": [{"tau": 1, "A": [[1]]}]}')
    print("✅ Violations reported with their JSON path")


def test_malformed_json():
    print("🧪 Testing malformed JSON...")
    text = '{\n  "n": 1,\n  "atoms": [\n}'
    with pytest.raises(ProblemFormatError) as info:
        parse_problem_text(text, "broken.json")
    assert str(info.value).startswith("broken.json:4:1:")

    with pytest.raises(ProblemFormatError):
        parse_problem(os.path.join(FIXTURES, "missing.json"))
    print("✅ Line and column reported")


def test_tau_max_default():
    print("🧪 Testing the default horizon...")
    problem = parse_problem_text('{"n": 1, "atoms": [{"tau": 0.5, "A": [[1]]}, {"tau": 2, "A": [[-1]]}]}')
    assert problem.rfde.tau_max == 2.0
    assert problem.family is None
    assert problem.lambdas == []
    print("✅ tau_max defaults to the largest delay")


def test_encode_complex():
    print("🧪 Testing complex encoding...")
    assert encode_complex(1.5) == 1.5
    assert encode_complex(-0.0) == 0.0
    assert str(encode_complex(-0.0)) == "0.0"
    assert encode_complex(1 - 2j) == {"re": 1.0, "im": -2.0}
    print("✅ Real values stay plain numbers")


def test_synthesized_family_reloads(tmp_path):
    print("🧪 Testing a synthesized family written and read back...")
    problem = parse_problem(os.path.join(FIXTURES, "example3.json"))
    bases = compute_bases(problem.rfde, problem.lambdas)
    family = synthesize(problem.rfde, bases.spec, bases=bases)
    payload = encode_problem(problem.rfde, problem.lambdas, family.to_parametrized_family(), name="out")
    path = write_problem(tmp_path / "out.json", payload)

    reloaded = parse_problem(path)
    assert reloaded.name == "out"
    assert reloaded.family.p == family.delta
    for original, loaded in zip(family.operators, reloaded.family.directions):
        for a, b in zip(original.atoms, loaded.atoms):
            assert a.tau == b.tau
            np.testing.assert_allclose(a.A, b.A, atol=1e-15)
    print("✅ Family survives the file format")


def test_dumps_deterministic():
    print("🧪 Testing deterministic output...")
    payload = {"b": [encode_complex(1j)], "a": 1.0}
    text = dumps(payload)
    assert text == dumps(json.loads(text))
    assert text.index('"a"') < text.index('"b"')
    assert text.endswith("\n")
    print("✅ Sorted keys and trailing newline")


def test_schema_error_positions():
    print("🧪 Testing line and column of schema violations...")
    text = '{\n  "n": 1,\n  "atoms": [\n    {"tau": -1, "A": [[1]]}\n  ]\n}'
    with pytest.raises(ProblemFormatError) as info:
        parse_problem_text(text, "negative.json")
    message = str(info.value)
    assert message.startswith("negative.json:4:13:"), message
    assert "atoms.0.tau" in message

    nested = '{\n  "n": 1,\n  "atoms": [{"tau": 0, "A": [[1]]}],\n  "tolerances": {\n    "grid_size": 1\n  }\n}'
    with pytest.raises(ProblemFormatError) as info:
        parse_problem_text(nested, "grid.json")
    assert str(info.value).startswith("grid.json:5:18:")

    assert locate('{"n": 1}', ["missing"]) == (1, 1)
    assert locate('{"a": [1, {"b": 2}]}', ["a", 1, "b"]) == (1, 17)
    assert locate('{"a": [[1, 2]]}', ["a", 0, 1, "float"]) == (1, 12)
    print("✅ Schema violations point at the offending value")


def test_dumps_strict_json():
    print("🧪 Testing that non-finite floats stay strict JSON...")

    def reject(constant):
        raise ValueError(f"non-standard JSON constant {constant}")

    payload = {"gap": float("inf"), "low": -np.inf, "missing": float("nan"), "values": [np.float64(2.5), np.int64(3)]}
    text = dumps(payload)
    decoded = json.loads(text, parse_constant=reject)
    assert decoded == {"gap": "inf", "low": "-inf", "missing": "nan", "values": [2.5, 3]}
    assert encode_float(1e308) == 1e308
    print("✅ inf and nan written as strings")


def main():
    """Run all tests."""
    import tempfile
    from pathlib import Path

    print("🚀 Starting problem file tests")
    print("=" * 60)
    tests = [
        test_parse_fixtures,
        test_schema_errors,
        test_malformed_json,
        test_tau_max_default,
        test_encode_complex,
        test_synthesized_family_reloads,
        test_dumps_deterministic,
        test_schema_error_positions,
        test_dumps_strict_json,
    ]
    passed = 0
    for test in tests:
        try:
            if test is test_synthesized_family_reloads:
                with tempfile.TemporaryDirectory() as tmp:
                    test(Path(tmp))
            else:
                test()
            passed += 1
        except Exception as e:
            print(f"❌ {test.__name__} failed: {e}")
    print(f"\n📊 Test Results: {passed}/{len(tests)} tests passed")
    return 0 if passed == len(tests) else 1


if __name__ == "__main__":
    sys.exit(main())
