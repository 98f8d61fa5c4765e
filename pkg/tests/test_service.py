from __future__ import annotations

import time

import pytest
from fastapi.testclient import TestClient

from euphkit.cli import main
from euphkit.service import ReviewStore, create_app
from euphkit.synth import SynthSpec, write_synth


@pytest.fixture(scope="module")
def served_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("serve")
    files = write_synth(SynthSpec(seed=7), root / "data")
    runs_root = root / "runs"
    code = main(
        [
            "detect",
            "--corpus", str(files["corpus"]),
            "--keywords", str(files["keywords"]),
            "--runs-root", str(runs_root),
            "--run-id", "r1",
            "--seed", "0",
        ]
    )
    assert code == 0
    code = main(
        [
            "identify",
            "--corpus", str(files["corpus"]),
            "--keywords", str(files["keywords"]),
            "--runs-root", str(runs_root),
            "--run-id", "r1",
            "--seed", "0",
            "--words", "from-detection:15",
        ]
    )
    assert code == 0
    return runs_root, files


@pytest.fixture()
def client(served_run):
    runs_root, _files = served_run
    app = create_app(runs_root)
    with TestClient(app) as test_client:
        yield test_client


@pytest.fixture(autouse=True)
def clean_review_state(served_run):
    """Each test starts from a pristine ledger and promotion chain."""
    runs_root, _ = served_run
    run_dir = runs_root / "r1"
    ledger = run_dir / "reviews" / "ledger.jsonl"
    if ledger.exists():
        ledger.unlink()
    for extra in sorted((run_dir / "promotions").glob("keywords_v*.tsv"))[1:]:
        extra.unlink()
    yield


def test_list_runs(client):
    payload = client.get("/runs").json()
    ids = [r["run_id"] for r in payload["runs"]]
    assert "r1" in ids
    run = next(r for r in payload["runs"] if r["run_id"] == "r1")
    assert run["stages"]["detect"] == "complete"


def test_candidates_pagination_and_order(client):
    page1 = client.get("/runs/r1/candidates", params={"page": 1, "page_size": 5}).json()
    assert [item["rank"] for item in page1["items"]] == [1, 2, 3, 4, 5]
    weights = [item["weight"] for item in page1["items"]]
    assert weights == sorted(weights, reverse=True)
    assert page1["items"][0]["status"] == "pending"
    assert page1["items"][0]["contexts"]  # review contexts precomputed

    page2 = client.get("/runs/r1/candidates", params={"page": 2, "page_size": 5}).json()
    assert [item["rank"] for item in page2["items"]] == [6, 7, 8, 9, 10]

    far = client.get("/runs/r1/candidates", params={"page": 999, "page_size": 5}).json()
    assert far["items"] == []  # out of range is empty, not an error


def test_unknown_run_is_404(client):
    assert client.get("/runs/ghost/candidates").status_code == 404


def test_candidate_detail_includes_distribution(client):
    first = client.get("/runs/r1/candidates", params={"page_size": 1}).json()["items"][0]
    detail = client.get(f"/runs/r1/candidates/{first['word']}").json()
    assert detail["word"] == first["word"]
    assert detail["distribution"] is not None
    assert detail["distribution"]["n_kept"] >= 0
    assert client.get("/runs/r1/candidates/notaword").status_code == 404


def test_verdict_lifecycle(client, served_run):
    _runs_root, files = served_run
    truth = dict(line.split("\t") for line in files["truth"].read_text().splitlines())
    word = client.get("/runs/r1/candidates").json()["items"][0]["word"]
    keyword = truth[word]

    # confirm requires a mapping
    response = client.post("/runs/r1/verdicts", json={"word": word, "verdict": "confirmed"})
    assert response.status_code == 422

    response = client.post(
        "/runs/r1/verdicts",
        json={"word": word, "verdict": "confirmed", "mapped_keyword": keyword},
    )
    assert response.status_code == 200
    assert response.json()["status"] == "confirmed"
    assert response.json()["mapped_keyword"] == keyword

    # confirmed is terminal
    response = client.post(
        "/runs/r1/verdicts", json={"word": word, "verdict": "rejected"}
    )
    assert response.status_code == 409

    # unsure -> confirmed is allowed
    other = client.get("/runs/r1/candidates").json()["items"][1]["word"]
    assert (
        client.post("/runs/r1/verdicts", json={"word": other, "verdict": "unsure"}).status_code
        == 200
    )
    response = client.post(
        "/runs/r1/verdicts",
        json={"word": other, "verdict": "confirmed", "mapped_keyword": truth[other]},
    )
    assert response.json()["status"] == "confirmed"

    # unknown word and invalid verdict
    assert (
        client.post("/runs/r1/verdicts", json={"word": "nope", "verdict": "rejected"}).status_code
        == 404
    )
    assert (
        client.post("/runs/r1/verdicts", json={"word": word, "verdict": "maybe"}).status_code
        == 422
    )


def test_ledger_replay_reconstructs_state(client, served_run):
    runs_root, files = served_run
    truth = dict(line.split("\t") for line in files["truth"].read_text().splitlines())
    items = client.get("/runs/r1/candidates").json()["items"]
    confirmed_word = items[0]["word"]
    rejected_word = items[1]["word"]
    client.post(
        "/runs/r1/verdicts",
        json={"word": confirmed_word, "verdict": "confirmed", "mapped_keyword": truth[confirmed_word]},
    )
    client.post("/runs/r1/verdicts", json={"word": rejected_word, "verdict": "rejected"})

    store = ReviewStore(runs_root / "r1")
    statuses, _promoted = store.replay()
    assert statuses[confirmed_word]["status"] == "confirmed"
    assert statuses[rejected_word]["status"] == "rejected"

    # a fresh app over the same files sees identical statuses
    fresh = TestClient(create_app(runs_root))
    items = fresh.get("/runs/r1/candidates").json()["items"]
    by_word = {i["word"]: i["status"] for i in items}
    assert by_word[confirmed_word] == "confirmed"
    assert by_word[rejected_word] == "rejected"


def test_promotion_flow(client, served_run):
    runs_root, files = served_run
    truth = dict(line.split("\t") for line in files["truth"].read_text().splitlines())
    items = client.get("/runs/r1/candidates").json()["items"]
    words = [items[0]["word"], items[1]["word"]]
    for word in words:
        client.post(
            "/runs/r1/verdicts",
            json={"word": word, "verdict": "confirmed", "mapped_keyword": truth[word]},
        )

    response = client.post("/runs/r1/promote")
    assert response.status_code == 200
    payload = response.json()
    assert sorted(payload["promoted"]) == sorted(words)
    new_list = (runs_root / "r1" / "promotions" / "keywords_v002.tsv").read_text()
    for word in words:
        assert f"{word}\tdrug" in new_list

    # idempotence: nothing new to promote
    assert client.post("/runs/r1/promote").status_code == 409

    # promoting a word equal to an existing keyword is deduplicated
    extra = items[2]["word"]
    client.post(
        "/runs/r1/verdicts",
        json={"word": extra, "verdict": "confirmed", "mapped_keyword": truth[extra]},
    )
    payload = client.post("/runs/r1/promote").json()
    assert payload["added"] == [extra]


def test_promote_without_confirmations_is_error(client):
    assert client.post("/runs/r1/promote").status_code == 409


def test_rerun_requires_promotion(client):
    response = client.post("/runs/r1/rerun", json={})
    assert response.status_code == 409


def test_rerun_after_promotion_includes_promoted_word(client, served_run):
    runs_root, files = served_run
    truth = dict(line.split("\t") for line in files["truth"].read_text().splitlines())
    word = client.get("/runs/r1/candidates").json()["items"][0]["word"]
    client.post(
        "/runs/r1/verdicts",
        json={"word": word, "verdict": "confirmed", "mapped_keyword": truth[word]},
    )
    client.post("/runs/r1/promote")

    response = client.post("/runs/r1/rerun", json={"t": 8, "run_id": "r1-loop"})
    assert response.status_code == 200
    new_run_id = response.json()["new_run_id"]
    assert new_run_id == "r1-loop"

    for _ in range(200):
        status = client.get("/runs/r1/status").json()
        if status["rerun"]["status"] != "running":
            break
        time.sleep(0.1)
    assert status["rerun"]["status"] == "complete", status

    new_manifest = client.get(f"/runs/{new_run_id}/status").json()
    assert new_manifest["stages"]["detect"] == "complete"

    # the expanded keyword list drove the rerun and recorded t=8
    from euphkit.runs import RunManifest

    manifest = RunManifest.load(runs_root / new_run_id)
    assert manifest.payload["config"]["t"] == 8
    keywords_used = (runs_root / new_run_id / "promotions" / "keywords_v001.tsv").read_text()
    assert word in keywords_used
