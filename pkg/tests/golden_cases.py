"""CLI invocations whose outputs are frozen under tests/golden/.

Regenerate with ``python tests/golden_cases.py`` after an intended change.
"""

import os
import sys

HERE = os.path.dirname(os.path.abspath(__file__))
GOLDEN = os.path.join(HERE, "golden")

CASES = {
    "pressure_circle": ["pressure", "system=circle", "--n", "10"],
    "pressure_bernoulli": ["pressure", "system=shift", "potential=first-symbol", "beta=1"],
    "pressure_golden_mean": ["pressure", "system=sft", "adjacency=11;10"],
    "constants_cosine": ["constants", "system=circle", "potential=cosine"],
    "eigenfunction_cosine": ["eigenfunction", "system=circle", "potential=cosine", "--mode", "empirical"],
    "jacobian_shift": ["jacobian", "system=shift", "potential=first-symbol", "beta=0.5"],
    "measure_bernoulli": ["measure", "system=shift", "potential=first-symbol", "beta=1", "--n", "6"],
    "julia_net_z2": ["julia-net", "system=quadratic", "potential=geometric", "eps=0.05", "--mode", "empirical"],
    "dimension_z2": ["dimension", "system=quadratic", "potential=geometric", "--mode", "empirical"],
    "verify_cosine": ["verify", "system=circle", "potential=cosine"],
    "verify_sft": ["verify", "system=sft", "potential=first-symbol", "beta=0.5"],
}


def run_case(name, out_dir, threads):
    """Run one case in-process; returns the bytes of every file it wrote."""
    from thermocert.cli import run
    out = os.path.join(out_dir, "%s.jsonl" % name)
    code = run(CASES[name] + ["--threads", str(threads), "--out", out])
    blobs = {}
    for fn in sorted(os.listdir(out_dir)):
        if fn.startswith(name + "."):
            with open(os.path.join(out_dir, fn), "rb") as fh:
                blobs[fn] = fh.read()
    return code, blobs


if __name__ == "__main__":
    sys.path.insert(0, HERE)
    os.makedirs(GOLDEN, exist_ok=True)
    for name in CASES:
        code, _ = run_case(name, GOLDEN, 1)
        print(name, code)
