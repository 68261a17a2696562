"""Stub trainer with a deterministic accuracy surface over the request."""
import json
import sys

request = json.loads(sys.stdin.readline())
hp = request["hyperparameters"]
fraction = request["train_fraction"]
x = float(hp.get("x", 0.5))
accuracy = max(0.0, min(1.0, 0.3 + 0.4 * x + 0.25 * fraction))
print(json.dumps({"accuracy": accuracy, "train_seconds": 0.1 + 2.0 * fraction}), flush=True)
