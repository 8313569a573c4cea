import base64

import pytest
from fastapi.testclient import TestClient

from annochain.config import ApiConfig
from annochain.gateway import TRANSCRIPT_HEADER, MockGateway
from annochain.persistence import SessionStore
from annochain.service import create_app


@pytest.fixture
def client(tmp_path):
    config = ApiConfig(data_dir=str(tmp_path / "data"))
    store = SessionStore(config.data_dir, MockGateway())
    return TestClient(create_app(config, store))


def events(round_index, start=0.0, gap=0.0):
    t = start
    out = [{"round_index": round_index, "kind": "observe_start", "t": t},
           {"round_index": round_index, "kind": "observe_end", "t": t + 20.0}]
    out.append({"round_index": round_index, "kind": "output_start", "t": t + 20.0 + gap})
    out.append({"round_index": round_index, "kind": "output_end", "t": t + 30.0 + gap})
    return out


def create_chain(client):
    reply = client.post("/sessions", json={"image_ref": "img/1.jpg", "mode": "chain"})
    assert reply.status_code == 201
    return reply.json()["session_id"]


def submit(client, sid, round_index, text, annotator=None, start=None, gap=0.0):
    start = (round_index - 1) * 100.0 if start is None else start
    body = {"annotator_id": annotator or f"a{round_index}",
            "payload_kind": "typed_text", "text": text,
            "events": events(round_index, start=start, gap=gap)}
    return client.post(f"/sessions/{sid}/rounds", json=body)


class TestEndToEnd:
    def test_two_round_chain_with_metrics(self, client):
        sid = create_chain(client)
        assert submit(client, sid, 1, "a red car.").status_code == 200

        prior = client.get(f"/sessions/{sid}/prior",
                           params={"annotator_id": "a2", "t": 120.0})
        assert prior.status_code == 200
        assert "red car" in prior.json()["merged_caption"]

        reply = submit(client, sid, 2, "two trees.", gap=10.0)
        assert reply.status_code == 200
        assert reply.json()["round_count"] == 2

        assert client.post(f"/sessions/{sid}/finalize",
                           json={"annotator_id": "a2"}).status_code == 200
        report = client.get(f"/sessions/{sid}/metrics").json()
        assert report["unit_count"] > 0
        assert report["speed_units_per_s"] > 0

    def test_round_out_of_order_409(self, client):
        sid = create_chain(client)
        reply = submit(client, sid, 2, "two trees.")
        assert reply.status_code == 409
        assert reply.json()["code"] == "OutOfOrderRound"

    def test_unknown_session_404(self, client):
        assert client.get("/sessions/nope").status_code == 404

    def test_non_monotone_events_400(self, client):
        sid = create_chain(client)
        bad = [{"round_index": 1, "kind": "observe_start", "t": 10.0},
               {"round_index": 1, "kind": "observe_end", "t": 5.0},
               {"round_index": 1, "kind": "output_start", "t": 6.0},
               {"round_index": 1, "kind": "output_end", "t": 7.0}]
        reply = client.post(f"/sessions/{sid}/rounds",
                            json={"annotator_id": "a1", "payload_kind": "typed_text",
                                  "text": "a car.", "events": bad})
        assert reply.status_code == 400
        assert reply.json()["code"] == "ValidationError"

    def test_prior_on_round_one_404(self, client):
        sid = create_chain(client)
        reply = client.get(f"/sessions/{sid}/prior",
                           params={"annotator_id": "a1", "t": 0.0})
        assert reply.status_code == 404

    def test_audio_round_transcribed_server_side(self, client):
        sid = create_chain(client)
        blob = TRANSCRIPT_HEADER + b" a red car."
        reply = client.post(f"/sessions/{sid}/rounds", json={
            "annotator_id": "a1", "payload_kind": "speech_transcript",
            "audio_b64": base64.b64encode(blob).decode(),
            "audio_format": "fixture", "events": events(1)})
        assert reply.status_code == 200
        assert "red car" in reply.json()["merged_caption"]

    def test_unsupported_audio_format_415(self, client):
        sid = create_chain(client)
        reply = client.post(f"/sessions/{sid}/rounds", json={
            "annotator_id": "a1", "payload_kind": "speech_transcript",
            "audio_b64": base64.b64encode(b"x").decode(),
            "audio_format": "flac", "events": events(1)})
        assert reply.status_code == 415

    def test_metrics_before_finalize_409(self, client):
        sid = create_chain(client)
        submit(client, sid, 1, "a car.")
        assert client.get(f"/sessions/{sid}/metrics").status_code == 409


class TestExportAndHealth:
    def test_healthz(self, client):
        reply = client.get("/healthz")
        assert reply.status_code == 200
        assert reply.json()["status"] == "ok"

    def test_empty_export(self, client):
        reply = client.get("/export", params={"format": "jsonl"})
        assert reply.status_code == 200
        assert reply.text == ""

    def test_export_streams_finalized_sessions(self, client):
        sid = create_chain(client)
        submit(client, sid, 1, "a red car.")
        client.post(f"/sessions/{sid}/finalize", json={"annotator_id": "a1"})
        reply = client.get("/export", params={"format": "jsonl", "mode": "chain"})
        assert reply.status_code == 200
        assert reply.text.count("\n") == 1
        assert client.get("/export", params={"mode": "single"}).text == ""

    def test_unknown_format_400(self, client):
        assert client.get("/export", params={"format": "xml"}).status_code == 400


class TestParallelFlow:
    def test_deferred_merge_and_finalize(self, client):
        reply = client.post("/sessions", json={"image_ref": "img/2.jpg",
                                               "mode": "parallel", "annotators": 2})
        sid = reply.json()["session_id"]
        submit(client, sid, 1, "a red car.")
        view = submit(client, sid, 2, "two trees.").json()
        assert view["merged_caption"] is not None
        assert client.post(f"/sessions/{sid}/finalize",
                           json={"annotator_id": "a2"}).status_code == 200

    def test_parallel_without_annotators_400(self, client):
        reply = client.post("/sessions", json={"image_ref": "x", "mode": "parallel"})
        assert reply.status_code == 400


class TestAuth:
    def test_bearer_token_enforced(self, tmp_path):
        config = ApiConfig(data_dir=str(tmp_path / "data"), bearer_token="sesame")
        store = SessionStore(config.data_dir, MockGateway())
        client = TestClient(create_app(config, store))
        assert client.post("/sessions", json={"image_ref": "x"}).status_code == 401
        ok = client.post("/sessions", json={"image_ref": "x"},
                         headers={"Authorization": "Bearer sesame"})
        assert ok.status_code == 201
        # liveness stays open
        assert client.get("/healthz").status_code == 200


def test_restart_reconstructs_sessions(tmp_path):
    config = ApiConfig(data_dir=str(tmp_path / "data"))
    store = SessionStore(config.data_dir, MockGateway())
    client = TestClient(create_app(config, store))
    sid = create_chain(client)
    submit(client, sid, 1, "a red car.")

    store2 = SessionStore(config.data_dir, MockGateway())
    store2.load()
    client2 = TestClient(create_app(config, store2))
    view = client2.get(f"/sessions/{sid}").json()
    assert view["round_count"] == 1
    assert "red car" in view["merged_caption"]
