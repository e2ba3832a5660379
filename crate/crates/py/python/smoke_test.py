"""Smoke test for the evcomp_py extension.

Build and run from the workspace root:

    cargo build --release -p evcomp-py --features extension-module
    cp target/release/libevcomp_py.so crates/py/python/evcomp_py.so
    python3 crates/py/python/smoke_test.py
"""

import json
import math
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import evcomp_py  # noqa: E402


def main():
    lines = evcomp_py.toy_world("selectional", scripts=40, seed=1)
    assert len(lines) == 40
    assert lines == evcomp_py.toy_world("selectional", scripts=40, seed=1)

    doc = json.loads(lines[0])
    assert evcomp_py.parse_document(lines[0]) == lines[0]
    sentence = evcomp_py.pseudo_sentence(lines[0])
    assert sentence[0].endswith("-pred"), sentence
    assert len(sentence) >= len(doc["events"])

    try:
        evcomp_py.parse_document('{"doc_id": "x", "events": [{"verb": ""}]}')
    except ValueError as e:
        print("rejected malformed line:", e)
    else:
        raise AssertionError("malformed line accepted")

    assert abs(evcomp_py.triple_loss(0.5, 0.5) - 2 * math.log(2)) < 1e-12

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "corpus.jsonl")
        with open(path, "w") as f:
            f.write("\n".join(lines) + "\n")
        report = json.loads(evcomp_py.evaluate_baseline(path, "mostfreq", seed=2))
        assert report["model_tag"] == "mostfreq"
        assert report["n_instances"] > 0
        print("mostfreq accuracy on 40 toy scripts: %.2f" % (100 * report["accuracy"]))
        try:
            evcomp_py.evaluate_baseline(os.path.join(tmp, "missing.jsonl"))
        except OSError:
            pass
        else:
            raise AssertionError("missing corpus accepted")

    print("evcomp_py", evcomp_py.__version__, "ok")


if __name__ == "__main__":
    main()
