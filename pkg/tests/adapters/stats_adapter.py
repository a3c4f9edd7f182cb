#!/usr/bin/env python3
"""Windowed fixture with a divisibility constraint.

Declares window_len (WINDOW, 16), d_model (WIDTH, 14), n_heads
(HEADS, 7) with n_heads dividing d_model. Scores are a constant
encoding the params actually received, so the host's scaling and
repair decisions are visible in the score digest.
"""

import json
import sys

VERSION = 1


def send(obj):
    obj.setdefault("protocol_version", VERSION)
    sys.stdout.write(json.dumps(obj) + "\n")
    sys.stdout.flush()


def read():
    line = sys.stdin.readline()
    if not line:
        sys.exit(0)
    return json.loads(line)


def main():
    hello = read()
    assert hello["type"] == "HELLO", hello
    send({
        "type": "HELLO_OK",
        "method_id": "stats",
        "params": [
            {"name": "window_len", "default": 16, "role": "window"},
            {"name": "d_model", "default": 14, "role": "width"},
            {"name": "n_heads", "default": 7, "role": "heads"},
        ],
        "constraints": [{"dim_param": "d_model", "divisor_param": "n_heads"}],
        "windowing": {"windowed": True, "w": 16},
        "capabilities": {},
    })
    params = None
    while True:
        msg = read()
        kind = msg["type"]
        if kind == "FIT":
            params = msg["params"]
            send({"type": "FIT_OK", "fit_time_s": 0.0})
        elif kind == "SCORE":
            with open(msg["test_path"], encoding="utf-8") as fh:
                n_rows = sum(1 for line in fh if line.strip())
            w = params["window_len"]
            value = params["n_heads"] * 1000 + params["d_model"] * 10 + w
            send({"type": "SCORE_OK", "scores": [float(value)] * (n_rows - w + 1)})
        elif kind == "BYE":
            return


if __name__ == "__main__":
    main()
