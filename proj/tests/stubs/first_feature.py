#!/usr/bin/env python3
# Logistic of the first feature, so explanations have some signal.
import json
import math
import sys

sys.stdin.readline()
print(json.dumps({"ok": True}), flush=True)
for line in sys.stdin:
    req = json.loads(line)
    proba = [1.0 / (1.0 + math.exp(-2.0 * r[0])) for r in req["rows"]]
    print(json.dumps({"id": req["id"], "proba": proba}), flush=True)
