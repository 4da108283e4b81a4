#!/usr/bin/env python3
# Completes the handshake, then dies on the first request without replying.
import json
import sys

sys.stdin.readline()
print(json.dumps({"ok": True}), flush=True)
sys.stdin.readline()
sys.exit(0)
