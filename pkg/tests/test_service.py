import pytest
from fastapi.testclient import TestClient

from colabel.service import create_app

from conftest import tiny_record


def record_payload(**kw):
    return {k: (float(v) if k == "experience" else v)
            for k, v in tiny_record(**kw).items()}


@pytest.fixture
def client(tmp_path):
    app = create_app(str(tmp_path / "sessions"))
    return TestClient(app)


def demo_request(**config):
    return {
        "dataset": {"generator": "adult-like", "seed": 3},
        "config": {"target": 40, "k": 20, **config},
        "pretrain": False,
        "feed": "client",
    }


def test_create_and_label_flow(client):
    created = client.post("/sessions", json=demo_request()).json()
    assert created["status"] == "awaiting_label"
    session_id = created["id"]

    state = client.get(f"/sessions/{session_id}").json()
    assert state["labeled"] == 0

    ds_record = {"age": 30.0, "education_num": 10.0, "hours_per_week": 40.0,
                 "capital_gain": 0.0, "occupation": "service",
                 "workclass": "private", "marital_status": "single", "sex": "Male"}
    outcome = client.post(f"/sessions/{session_id}/labels",
                          json={"record": ds_record, "label": "<=50K"}).json()
    assert outcome["finalized"]["provenance"] == "USER"
    assert outcome["status"] == "awaiting_label"


def test_unknown_session_404(client):
    assert client.get("/sessions/nope").status_code == 404
    assert client.post("/sessions/nope/labels",
                       json={"label": "+"}).status_code == 404


def test_unknown_generator_404(client):
    response = client.post("/sessions", json={
        "dataset": {"generator": "mystery"}, "feed": "client"})
    assert response.status_code == 404


def test_rules_touching_sensitive_attribute_rejected(client):
    request = demo_request()
    request["rules"] = {"rules": [{
        "conditions": [{"attribute": "sex", "operator": "=", "value": "Female"}],
        "label": "+",
    }]}
    response = client.post("/sessions", json=request)
    assert response.status_code == 422
    assert "sensitive" in str(response.json())


def ifc_conflict_session(client):
    session_id = client.post("/sessions", json=demo_request()).json()["id"]
    base = {"age": 30.0, "education_num": 10.0, "hours_per_week": 40.0,
            "capital_gain": 0.0, "occupation": "service",
            "workclass": "private", "marital_status": "single", "sex": "Male"}
    client.post(f"/sessions/{session_id}/labels", json={"record": base, "label": "<=50K"})
    twin = dict(base, sex="Female")
    outcome = client.post(f"/sessions/{session_id}/labels",
                          json={"record": twin, "label": ">50K"}).json()
    return session_id, outcome


def test_prompt_blocks_next_label_with_409(client):
    session_id, outcome = ifc_conflict_session(client)
    assert outcome["prompt"]["kind"] == "ifc_conflict"
    blocked = client.post(f"/sessions/{session_id}/labels", json={
        "record": {"age": 1.0, "education_num": 3.0, "hours_per_week": 20.0,
                   "capital_gain": 0.0, "occupation": "craft",
                   "workclass": "private", "marital_status": "single",
                   "sex": "Male"},
        "label": "<=50K"})
    assert blocked.status_code == 409

    mismatched = client.post(f"/sessions/{session_id}/responses",
                             json={"response": {"kind": "slc_suggestion", "accept": True}})
    assert mismatched.status_code == 409

    resolved = client.post(f"/sessions/{session_id}/responses", json={
        "response": {"kind": "ifc_conflict", "choice": "change_current"}}).json()
    assert resolved["finalized"]["provenance"] == "IFC"


def test_streaming_feed_and_duplicate_index(client):
    request = {
        "dataset": {"generator": "adult-like", "seed": 3},
        "config": {"target": 5, "k": 50},
        "pretrain": True,
        "feed": "dataset",
    }
    created = client.post("/sessions", json=request).json()
    session_id = created["id"]
    assert created["next"]["stream_index"] == 0
    record = created["next"]["record"]

    first = client.post(f"/sessions/{session_id}/labels",
                        json={"stream_index": 0, "label": "<=50K"}).json()
    assert first["finalized"]["index"] == 0

    dup = client.post(f"/sessions/{session_id}/labels",
                      json={"stream_index": 0, "label": "<=50K"}).json()
    assert dup["duplicate"] is True
    assert dup["finalized"]["index"] == 0

    state = client.get(f"/sessions/{session_id}").json()
    assert state["labeled"] == 1  # the retry did not finalize twice
    assert state["next"]["stream_index"] == 1
    assert state["next"]["record"] != record

    out_of_order = client.post(f"/sessions/{session_id}/labels",
                               json={"stream_index": 3, "label": "<=50K"})
    assert out_of_order.status_code == 409


def test_idempotency_key_replays_outcome(client):
    session_id = client.post("/sessions", json=demo_request()).json()["id"]
    payload = {
        "record": {"age": 30.0, "education_num": 10.0, "hours_per_week": 40.0,
                   "capital_gain": 0.0, "occupation": "service",
                   "workclass": "private", "marital_status": "single",
                   "sex": "Male"},
        "label": "<=50K",
        "idempotency_key": "try-1",
    }
    first = client.post(f"/sessions/{session_id}/labels", json=payload).json()
    retry = client.post(f"/sessions/{session_id}/labels", json=payload).json()
    assert retry == first
    assert client.get(f"/sessions/{session_id}").json()["labeled"] == 1


def test_events_pagination(client):
    session_id, _ = ifc_conflict_session(client)
    page = client.get(f"/sessions/{session_id}/events").json()
    assert page["events"][0]["type"] == "session_started"
    cursor = page["next"]
    empty = client.get(f"/sessions/{session_id}/events", params={"since": cursor}).json()
    assert empty["events"] == []


def test_metrics_endpoint(client):
    session_id, _ = ifc_conflict_session(client)
    client.post(f"/sessions/{session_id}/responses", json={
        "response": {"kind": "ifc_conflict", "choice": "change_current"}})
    metrics = client.get(f"/sessions/{session_id}/metrics").json()
    assert metrics["labeled"] == 2
    assert metrics["unfair_couples"] == 0


def test_restart_restores_session(tmp_path):
    sessions_dir = str(tmp_path / "sessions")
    with TestClient(create_app(sessions_dir)) as client:
        session_id, _ = ifc_conflict_session(client)
        before = client.get(f"/sessions/{session_id}").json()

    with TestClient(create_app(sessions_dir)) as reborn:
        after = reborn.get(f"/sessions/{session_id}").json()
        assert after["labeled"] == before["labeled"]
        assert after["pending"] == before["pending"]
        resolved = reborn.post(f"/sessions/{session_id}/responses", json={
            "response": {"kind": "ifc_conflict", "choice": "change_current"}}).json()
        assert resolved["finalized"]["provenance"] == "IFC"


def test_gfc_review_enrichment_and_preview(client):
    session_id = client.post("/sessions", json=demo_request(k=4, ifc=False, slc=False)).json()["id"]
    base = {"age": 30.0, "education_num": 10.0, "hours_per_week": 40.0,
            "capital_gain": 0.0, "occupation": "service",
            "workclass": "private", "marital_status": "single", "sex": "Male"}
    for i, (sex, label) in enumerate(
            [("Male", ">50K"), ("Male", ">50K"), ("Female", "<=50K")]):
        record = dict(base, age=30.0 + i, sex=sex)
        client.post(f"/sessions/{session_id}/labels",
                    json={"record": record, "label": label})
    preview_missing = client.post(f"/sessions/{session_id}/gfc-preview",
                                  json={"accept_dn": [], "accept_pp": []})
    assert preview_missing.status_code == 409

    outcome = client.post(f"/sessions/{session_id}/labels", json={
        "record": dict(base, age=40.0, sex="Female"), "label": "<=50K"}).json()
    prompt = outcome["prompt"]
    assert prompt["kind"] == "gfc_review"
    assert prompt["candidates"]["dn"], "candidate details attached"
    detail = prompt["candidates"]["dn"][0]
    assert {"index", "record", "current_label", "flip_to", "probability"} <= set(detail)

    plan = prompt["plan"]
    preview = client.post(f"/sessions/{session_id}/gfc-preview", json={
        "accept_dn": plan["dn_candidates"], "accept_pp": plan["pp_candidates"]}).json()
    assert preview["disc_before"] == plan["disc_before"]
    assert abs(preview["disc_after"]) <= abs(preview["disc_before"])
    # previewing did not apply anything
    assert client.get(f"/sessions/{session_id}/metrics").json()["labeled"] == 4

    bad = client.post(f"/sessions/{session_id}/gfc-preview",
                      json={"accept_dn": [999], "accept_pp": []})
    assert bad.status_code == 422


def test_explanations_endpoint_404_before_any(client):
    session_id = client.post("/sessions", json=demo_request()).json()["id"]
    assert client.get(f"/sessions/{session_id}/explanations/latest").status_code == 404
