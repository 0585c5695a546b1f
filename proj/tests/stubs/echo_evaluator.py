#!/usr/bin/env python3
# Answers every request with a fixed error (default 0.5).
import json
import sys

error = float(sys.argv[1]) if len(sys.argv) > 1 else 0.5
for line in sys.stdin:
    req = json.loads(line)
    print(json.dumps({"v": 1, "id": req["id"], "status": "ok", "error": error}), flush=True)
