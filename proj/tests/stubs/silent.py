#!/usr/bin/env python3
import json
import sys
import time

sys.stdin.readline()
print(json.dumps({"ok": True}), flush=True)
sys.stdin.readline()
time.sleep(30)
