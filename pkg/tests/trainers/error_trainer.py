"""Stub trainer that always reports a failure."""
import json
import sys

sys.stdin.readline()
print(json.dumps({"error": "synthetic trainer failure"}), flush=True)
