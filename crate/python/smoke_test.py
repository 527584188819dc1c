"""Smoke test for the hesseflat extension module.

Build and install first:
    pip install --no-build-isolation ./crates/python
"""
import json
import math
import sys
import tempfile

import hesseflat as hf


def main():
    canon = hf.parse("x^2 + 1")
    assert hf.parse(canon) == canon and hf.evaluate(canon, x=3.0) == 10.0
    assert hf.evaluate(hf.differentiate("x^3*y", "x"), x=2.0, y=1.0) == 12.0

    k = hf.curvature("x^2 + y^2 + x^2*y^2", 0.5, 0.5)
    assert abs(k - 16 / 110.25) < 1e-12, k
    kb = hf.brioschi("x^2 + y^2 + x^2*y^2", 0.5, 0.5)
    assert abs(kb - k) < 1e-6 * k, kb

    s = hf.check("x^2/(2*y) + y*log(y)/4", (-1.0, 1.0), (0.5, 2.0), 51)
    assert s["curvature_max"] < 1e-8 and s["positive_definite"], s

    assert hf.characteristic_velocities("1/2", 0.0) == (1.0, -1.0)
    try:
        hf.admissible_interval("u^2")
    except hf.HesseflatError as e:
        payload = json.loads(e.args[0])
        assert payload["error"]["kind"] == "EmptyAdmissibleInterval", payload
        assert payload["exit_code"] == 1
    else:
        raise AssertionError("u^2 profile accepted")

    assert "example-4.2" in hf.catalog()
    assert hf.verify_fixture("radial-Cr2", 41)["passed"]

    with tempfile.TemporaryDirectory() as out:
        rep = hf.run_pipeline("1/2", [(1.0, 0.0, 1.0)], out, grid="65x65")
        assert rep["passed"], rep
        assert rep["curvature_max"] < 1e-5, rep
        assert hf.run(["check", "--catalog", "nonflat-x2y2", "--out", out]) == 1

    print("smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
