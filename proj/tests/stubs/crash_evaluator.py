#!/usr/bin/env python3
# Answers the first N requests, then exits without answering the next one.
import json
import sys

limit = int(sys.argv[1])
seen = 0
for line in sys.stdin:
    req = json.loads(line)
    if seen == limit:
        sys.exit(3)
    seen += 1
    print(json.dumps({"v": 1, "id": req["id"], "status": "ok", "error": 0.4}), flush=True)
