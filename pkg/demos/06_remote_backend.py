"""Talking to a model over HTTP.

The stub server exposes any local model through the logprobs protocol, and can
fail its first few requests on purpose to show the client's retry loop.  A real
deployment would point --model remote:URL at a GPU-backed server instead.

Run: python3 demos/06_remote_backend.py
"""

from pxs.model import RuleModel
from pxs.pipeline import PipelineConfig, run_batch
from pxs.remote import RemoteModel, StubServer
from pxs.synthetic import synthetic_suite

tasks = synthetic_suite(4, seed=3)
local = RuleModel("auto", eps=0.05, slip=0.05)

with StubServer(local, fail_first=2) as server:
    remote = RemoteModel(server.url, backoff=0.01)
    remote.handshake()
    print(f"handshake succeeded after {server.served} requests (two were refused)")
    results, m = run_batch(remote, tasks, PipelineConfig(4, 4))
    print(f"remote run: accuracy {m.accuracy:.2f}, {server.served} requests in total")

local_results, _ = run_batch(local, tasks, PipelineConfig(4, 4))
print("identical to the local run:", [r.outcome() for r in results] == [r.outcome() for r in local_results])
