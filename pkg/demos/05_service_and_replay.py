"""Drive the HTTP service in-process and show crash-safe replay.

Every mutation is appended to a JSONL event log before it is applied, so a
restarted store replays to the identical state (same sha256 state hash) and
exports byte-identical records.
"""

import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from annochain import ApiConfig, MockGateway, SessionStore
from annochain.service import create_app

data_dir = Path(tempfile.mkdtemp()) / "annochain-data"
config = ApiConfig(data_dir=str(data_dir))
store = SessionStore(config.data_dir, MockGateway())
client = TestClient(create_app(config, store))


def timing(k, start, gap=0.0):
    return [
        {"round_index": k, "kind": "observe_start", "t": start},
        {"round_index": k, "kind": "observe_end", "t": start + 20.0},
        {"round_index": k, "kind": "output_start", "t": start + 20.0 + gap},
        {"round_index": k, "kind": "output_end", "t": start + 30.0 + gap},
    ]


sid = client.post("/sessions", json={"image_ref": "images/harbour.jpg",
                                     "mode": "chain"}).json()["session_id"]
client.post(f"/sessions/{sid}/rounds", json={
    "annotator_id": "a1", "payload_kind": "typed_text",
    "text": "a red boat. the water is blue.", "events": timing(1, 0.0)})

prior = client.get(f"/sessions/{sid}/prior",
                   params={"annotator_id": "a2", "t": 80.0}).json()
print("annotator 2 reads:", prior["merged_caption"])

client.post(f"/sessions/{sid}/rounds", json={
    "annotator_id": "a2", "payload_kind": "typed_text",
    "text": "two seagulls.", "events": timing(2, 60.0, gap=6.0)})
client.post(f"/sessions/{sid}/finalize", json={"annotator_id": "a2"})

print("metrics:", client.get(f"/sessions/{sid}/metrics").json())
print("export: ", client.get("/export", params={"format": "jsonl"}).text.strip())

# simulate a restart: a fresh store replays the log
replayed = SessionStore(config.data_dir, MockGateway())
replayed.load()
print("\nstate hash (live):    ", store.hash())
print("state hash (replayed):", replayed.hash())
assert store.hash() == replayed.hash()
print("replay is bit-exact")
