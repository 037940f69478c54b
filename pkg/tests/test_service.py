"""HTTP service contract tests."""

import json

import pytest
from fastapi.testclient import TestClient

from bridgecraft.explain import word_stats_from_csv, EmbeddingIndex
from bridgecraft.models.artifact import Predictor
from bridgecraft.corpus import read_corpus_jsonl
from bridgecraft.service import ServiceState, create_app, load_config, load_state


@pytest.fixture(scope="module")
def client(demo):
    state = ServiceState(
        diversity=Predictor.load(demo.neural_model),
        alignment=Predictor.load(demo.alignment_model),
        word_stats=word_stats_from_csv(demo.word_stats.read_text()),
        index=EmbeddingIndex.load(demo.index),
        records={r.tweet_id: r for r in read_corpus_jsonl(demo.corpus)},
    )
    return TestClient(create_app(state))


@pytest.fixture()
def bare_client():
    return TestClient(create_app(ServiceState()))


class TestScore:
    def test_identical_lines_identical_scores(self, client):
        body = client.post("/score", json={"texts": ["health care story", "health care story"]}).json()
        assert len(body["scores"]) == 2
        assert body["scores"][0]["bridginess"] == body["scores"][1]["bridginess"]
        assert body["scores"][0]["alignment"] == body["scores"][1]["alignment"]

    def test_empty_line_list_dropped(self, client):
        response = client.post("/score", json={"texts": [""]})
        assert response.status_code == 200
        assert response.json() == {"scores": []}

    def test_scores_clamped(self, client):
        body = client.post(
            "/score", json={"texts": ["health care climate union equity watch"]}
        ).json()
        for row in body["scores"]:
            assert 0.0 <= row["bridginess"] <= 1.0
            assert -2.0 <= row["alignment"] <= 2.0
            assert row["model_hash"]

    def test_empty_body_400(self, client):
        assert client.post("/score", json={"texts": []}).status_code == 400
        assert client.post("/score", json={}).status_code == 400

    def test_over_100_lines_413(self, client):
        response = client.post("/score", json={"texts": ["x"] * 101})
        assert response.status_code == 413

    def test_unloaded_503(self, bare_client):
        assert bare_client.post("/score", json={"texts": ["x"]}).status_code == 503

    def test_byte_identical_responses(self, client):
        payload = {"texts": ["health care", "border wall today"]}
        first = client.post("/score", json=payload).content
        second = client.post("/score", json=payload).content
        assert first == second

    def test_order_preserved(self, client):
        body = client.post(
            "/score", json={"texts": ["health care", "", "border wall"]}
        ).json()
        assert [row["text"] for row in body["scores"]] == ["health care", "border wall"]


class TestExplain:
    def test_unseen_word_neutral_zero(self, client):
        body = client.post("/explain", json={"text": "zzzunknown"}).json()
        assert body["words"][0]["side"] == "neutral"
        assert body["words"][0]["intensity"] == 0.0
        assert body["words"][0]["stats"] is None

    def test_word_order_matches_input(self, client):
        body = client.post("/explain", json={"text": "watch health border"}).json()
        assert [w["word"] for w in body["words"]] == ["watch", "health", "border"]

    def test_partisan_word_side_matches_ratio(self, client):
        body = client.post("/explain", json={"text": "health border"}).json()
        by_word = {w["word"]: w for w in body["words"]}
        for word, record in by_word.items():
            stats = record["stats"]
            assert stats is not None
            if stats["ratio"] > 1:
                assert record["side"] == "left"
            elif stats["ratio"] < 1:
                assert record["side"] == "right"

    def test_unloaded_503(self, bare_client):
        assert bare_client.post("/explain", json={"text": "x"}).status_code == 503


class TestSimilarAndTranscript:
    def test_k_defaults_to_ten(self, client):
        body = client.post("/similar", json={"text": "health care story"}).json()
        assert len(body["neighbors"]) == 10
        sims = [n["similarity"] for n in body["neighbors"]]
        assert sims == sorted(sims, reverse=True)

    def test_neighbor_metadata_fields(self, client):
        body = client.post("/similar", json={"text": "health care", "k": 3}).json()
        assert len(body["neighbors"]) == 3
        assert set(body["neighbors"][0]) >= {
            "text", "outlet", "timestamp", "retweets", "bridginess", "similarity",
        }

    def test_transcript_empty_ok(self, client):
        response = client.post("/transcript", json={"segments": []})
        assert response.status_code == 200
        assert response.json()["segments"] == []

    def test_transcript_scores_segments(self, client):
        segments = [
            {"speaker": "narrator", "text": "health care today"},
            {"speaker": "guest", "text": "border wall report"},
        ]
        body = client.post("/transcript", json={"segments": segments}).json()
        assert [s["index"] for s in body["segments"]] == [0, 1]
        for seg in body["segments"]:
            assert 0.0 <= seg["bridginess"] <= 1.0
            assert -2.0 <= seg["alignment"] <= 2.0

    def test_malformed_400(self, client):
        assert client.post("/similar", json={"k": 5}).status_code == 400
        assert client.post("/transcript", json={"segments": "no"}).status_code == 400
        assert client.post("/similar", content=b"not json").status_code == 400

    def test_unloaded_503(self, bare_client):
        assert bare_client.post("/similar", json={"text": "x"}).status_code == 503
        assert bare_client.post("/transcript", json={"segments": []}).status_code == 503


class TestHealth:
    def test_loading_before_models(self, bare_client):
        body = bare_client.get("/health").json()
        assert body["status"] == "loading"

    def test_ready_with_hashes(self, client):
        body = client.get("/health").json()
        assert body["status"] == "ready"
        assert set(body["model_hashes"]) >= {"diversity", "alignment"}


class TestConfig:
    def test_toml_and_env_override(self, demo, tmp_path, monkeypatch):
        config_path = tmp_path / "svc.toml"
        config_path.write_text(
            f'workdir = "{demo.root}"\n'
            'diversity_model = "diversity.model.json"\n'
            'alignment_model = "alignment.model.json"\n'
            'word_stats = "word_stats.csv"\n'
            'bind_addr = "127.0.0.1:9000"\n'
        )
        config = load_config(config_path)
        assert config["bind_addr"] == "127.0.0.1:9000"
        state = load_state(config)
        assert state.ready and state.word_stats is not None

        other = tmp_path / "other.toml"
        other.write_text('bind_addr = "0.0.0.0:1234"\n')
        monkeypatch.setenv("BRIDGECRAFT_CONFIG", str(other))
        assert load_config(config_path)["bind_addr"] == "0.0.0.0:1234"

    def test_target_mismatch_rejected(self, demo, tmp_path):
        config = {
            "workdir": str(demo.root),
            "diversity_model": "alignment.model.json",  # wrong target
        }
        with pytest.raises(ValueError, match="wrong quantity"):
            load_state(config)
