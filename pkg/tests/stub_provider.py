"""Echo-style line-protocol provider used by transport tests.

Scores toxicity as len(text) % 10 / 10, labels topic "stub", and
errors on any record whose id contains "boom".  Invoked as a
subprocess by the test suite; also importable for the HTTP stub.
"""

from __future__ import annotations

import json
import sys

HEADER = json.dumps({"daf_protocol": 1})


def respond(line: str) -> str:
    request = json.loads(line)
    rid = request["id"]
    if "boom" in rid:
        return json.dumps({"id": rid, "error": "stub refuses this record"})
    text = request.get("text") or ""
    values = []
    for signal in request["signals"]:
        if signal == "toxicity":
            values.append({"signal": "toxicity", "kind": "scalar01", "score": (len(text) % 10) / 10})
        elif signal == "topic":
            values.append({"signal": "topic", "kind": "categorical", "label": "stub"})
        elif signal == "face_count":
            values.append({"signal": "face_count", "kind": "count", "count": len(rid)})
        else:
            return json.dumps({"id": rid, "error": f"unknown signal {signal}"})
    return json.dumps({"id": rid, "values": values})


def main() -> None:
    first = sys.stdin.readline()
    if json.loads(first).get("daf_protocol") != 1:
        sys.exit(2)
    sys.stdout.write(HEADER + "\n")
    sys.stdout.flush()
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        sys.stdout.write(respond(line) + "\n")
        sys.stdout.flush()


if __name__ == "__main__":
    main()
