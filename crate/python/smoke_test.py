"""Smoke test for the `persona` extension module.

Build first with `cargo build -p persona-py` (or `maturin develop` inside
crates/python), then run `python3 python/smoke_test.py`. Set PERSONA_LIB to
point at a specific shared library.
"""

import csv
import importlib.machinery
import importlib.util
import io
import os
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load_module():
    try:
        import persona  # installed wheel
        return persona
    except ImportError:
        pass
    candidates = [os.environ.get("PERSONA_LIB")] if os.environ.get("PERSONA_LIB") else []
    for profile in ("release", "debug"):
        for name in ("libpersona.so", "libpersona.dylib", "persona.dll"):
            candidates.append(str(ROOT / "target" / profile / name))
    for path in candidates:
        if path and Path(path).exists():
            loader = importlib.machinery.ExtensionFileLoader("persona", path)
            spec = importlib.util.spec_from_file_location("persona", path, loader=loader)
            module = importlib.util.module_from_spec(spec)
            loader.exec_module(module)
            return module
    sys.exit("persona extension not found; run `cargo build -p persona-py` first")


def close(a, b, tol=1e-12):
    return all(abs(x - y) <= tol for x, y in zip(a, b)) and len(a) == len(b)


def main():
    p = load_module()

    # One-hot carried and outside, no current weight: mass splits 0.5/0.5.
    delta = p.transition_probs(3, 0, 0.01, (0.0, 0.0, 0.5, 0.5), 0, [0, 1, 0], [0, 0, 1])
    assert close(delta, [0.0, 0.5, 0.5]), delta
    carried = p.updated_carried_probs(3, 0, 0.01, (0.0, 0.0, 0.5, 0.5), 0, [0, 1, 0], [0, 0, 1])
    assert close(carried, [0.0, 0.5, 0.5]), carried
    assert p.mirror([0.7, 0.2, 0.1]) == [0.1, 0.2, 0.7]

    assert p.parse_score("Score: 8.6/10") == 9
    assert p.parse_score("very dominant") is None
    assert p.parse_score("12") == 10
    assert [p.score_to_state(s, 5) for s in range(11)] == [0, 0, 0, 1, 1, 2, 2, 3, 3, 4, 4]
    assert p.lexicon_score("agency", "No, you do it like this!") == 10

    m = p.compute_metrics([(5, 5), (6, 5), (9, 5), (None, 5)])
    assert m["n_parseable"] == 3 and abs(m["error_rate"] - 0.25) < 1e-12, m

    rows = list(csv.reader(open(ROOT / "fixtures" / "icc_shrout_fleiss.csv")))[1:]
    value = p.icc([[float(x) for x in r] for r in rows])
    assert abs(value - 184 / 635) < 1e-12, value

    scenario = p.Scenario.load(str(ROOT / "scenarios" / "herr_schneider.json"))
    assert scenario.scenario_id == "herr_schneider"
    session = p.Session(scenario, seed=7)
    assert session.state("assistant", "agency") == 4
    assert session.state("assistant", "communion") == 0
    script = [l for l in open(ROOT / "fixtures" / "scripts" / "communal.txt").read().splitlines() if l.strip()]
    for line in script:
        trace = session.send(line)
    assert session.turns == len(script)
    assert trace["assistant_reply"].startswith("[echo]")
    golden = open(ROOT / "fixtures" / "golden" / "communal_seed7.csv").read()
    assert session.trajectory_csv() == golden
    assert p.simulate(scenario, script, 7) == golden
    header = next(csv.reader(io.StringIO(golden)))
    assert header == ["turn", "model", "axis", "state", "prob_0", "prob_1", "prob_2", "prob_3", "prob_4"]

    try:
        session.send("   ")
    except RuntimeError:
        pass
    else:
        raise AssertionError("empty message accepted")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
