import threading
from concurrent.futures import ThreadPoolExecutor

import pytest
from fastapi.testclient import TestClient

from calkit.journal import JudgmentJournal
from calkit.learner import LearnerConfig
from calkit.service import AssessorService, create_app, load_service_config
from calkit.session import Judgment, StoppingConfig, build_sessions

from test_session import filler_corpus
from calkit.corpus import Topic

FAST = LearnerConfig(lambda_=1e-4, loop_type="roc-pair", iterations=800, seed=11)

TOPICS = [
    Topic(1, "filler0 item1", "which documents mention filler0", "noise reports"),
    Topic(2, "blob2 noise3", "which documents mention blob2", "other reports"),
]


class FakeClock:
    def __init__(self, start=1000.0):
        self.now = start

    def __call__(self):
        return self.now


def make_service(tmp_path, n_docs=40, lease_ttl=600.0, clock=None, stopping=None,
                 journal_name="journal.jsonl"):
    corpus = filler_corpus(n_docs)
    _, sessions = build_sessions(
        corpus, TOPICS, learner_config=FAST,
        stopping=stopping or StoppingConfig(a=1, b=50),
    )
    journal = JudgmentJournal(tmp_path / journal_name)
    return AssessorService(
        sessions, journal, lease_ttl=lease_ttl, clock=clock or FakeClock()
    )


@pytest.fixture
def service(tmp_path):
    return make_service(tmp_path)


@pytest.fixture
def client(service):
    return TestClient(create_app(service), raise_server_exceptions=False)


class TestHttpNext:
    def test_payload_fields(self, client):
        response = client.get("/topics/1/next", params={"assessor": "alice"})
        assert response.status_code == 200
        payload = response.json()
        for key in ("doc_id", "title", "abstract", "authors", "year", "publisher",
                    "highlight_terms", "m", "n", "assessed_count",
                    "budget_remaining", "stop_recommended"):
            assert key in payload
        assert len(payload["highlight_terms"]) <= 5

    def test_concurrent_assessors_get_different_docs(self, client):
        a = client.get("/topics/1/next", params={"assessor": "alice"}).json()
        b = client.get("/topics/1/next", params={"assessor": "bob"}).json()
        assert a["doc_id"] != b["doc_id"]

    def test_unknown_topic_404(self, client):
        assert client.get("/topics/99/next", params={"assessor": "a"}).status_code == 404

    def test_exhausted_topic_204(self, tmp_path):
        service = make_service(tmp_path, n_docs=2)
        client = TestClient(create_app(service))
        for _ in range(2):
            doc = client.get("/topics/1/next", params={"assessor": "a"}).json()["doc_id"]
            client.post("/topics/1/judgments",
                        json={"doc_id": doc, "assessor_id": "a", "label": 0})
        assert client.get("/topics/1/next", params={"assessor": "a"}).status_code == 204

    def test_stop_recommended_is_advisory(self, tmp_path):
        service = make_service(tmp_path, stopping=StoppingConfig(a=1, b=0))
        client = TestClient(create_app(service))
        response = client.get("/topics/1/next", params={"assessor": "a"})
        assert response.status_code == 200
        assert response.json()["stop_recommended"] is True

    def test_expired_lease_reoffers_document(self, tmp_path):
        clock = FakeClock()
        service = make_service(tmp_path, lease_ttl=10.0, clock=clock)
        first = service.next_document(1, "alice")["doc_id"]
        second = service.next_document(1, "bob")["doc_id"]
        assert first != second
        clock.now += 11.0
        reoffered = service.next_document(1, "carol")["doc_id"]
        assert reoffered == first


class TestHttpJudge:
    def test_ack_counters(self, client):
        doc = client.get("/topics/1/next", params={"assessor": "a"}).json()["doc_id"]
        ack = client.post("/topics/1/judgments",
                          json={"doc_id": doc, "assessor_id": "a", "label": 2}).json()
        assert ack["m"] == 1 and ack["n"] == 0

    def test_invalid_label_400(self, client):
        doc = client.get("/topics/1/next", params={"assessor": "a"}).json()["doc_id"]
        response = client.post("/topics/1/judgments",
                               json={"doc_id": doc, "assessor_id": "a", "label": 7})
        assert response.status_code == 400

    def test_foreign_lease_conflict_409(self, client):
        doc = client.get("/topics/1/next", params={"assessor": "a"}).json()["doc_id"]
        response = client.post("/topics/1/judgments",
                               json={"doc_id": doc, "assessor_id": "b", "label": 1})
        assert response.status_code == 409

    def test_unleased_first_time_conflict(self, client):
        response = client.post("/topics/1/judgments",
                               json={"doc_id": "f0005", "assessor_id": "a", "label": 1})
        assert response.status_code == 409

    def test_rejudgment_needs_no_lease(self, client):
        doc = client.get("/topics/1/next", params={"assessor": "a"}).json()["doc_id"]
        client.post("/topics/1/judgments",
                    json={"doc_id": doc, "assessor_id": "a", "label": 0})
        ack = client.post("/topics/1/judgments",
                          json={"doc_id": doc, "assessor_id": "b", "label": 2}).json()
        assert ack["m"] == 1 and ack["n"] == 0

    def test_expired_lease_conflicts_after_relest(self, tmp_path):
        clock = FakeClock()
        service = make_service(tmp_path, lease_ttl=10.0, clock=clock)
        doc = service.next_document(1, "alice")["doc_id"]
        clock.now += 11.0
        assert service.next_document(1, "bob")["doc_id"] == doc
        from calkit.errors import LeaseConflictError
        with pytest.raises(LeaseConflictError):
            service.submit_judgment(1, doc, "alice", 1)

    def test_retrain_follows_batch_cadence(self, service):
        # batch sizes 1, 2, 3...: retrain after judgments 1, 3, 6
        retrained_at = []
        for i in range(1, 7):
            doc = service.next_document(1, "a")["doc_id"]
            ack = service.submit_judgment(1, doc, "a", 0)
            if ack["retrained"]:
                retrained_at.append(i)
        assert retrained_at == [1, 3, 6]


class TestStatusAndRun:
    def test_status_counts_by_assessor(self, client):
        for assessor in ("a", "a", "b"):
            doc = client.get("/topics/1/next", params={"assessor": assessor}).json()["doc_id"]
            client.post("/topics/1/judgments",
                        json={"doc_id": doc, "assessor_id": assessor, "label": 1})
        status = client.get("/topics/1/status").json()
        assert status["m"] == 3
        assert status["assessments_by_assessor"] == {"a": 2, "b": 1}
        assert status["batch_index"] >= 1

    def test_fresh_status(self, client):
        status = client.get("/topics/2/status").json()
        assert status["m"] == 0 and status["n"] == 0

    def test_run_export_method_iii_leads_with_relevant(self, client):
        labels = [2, 0, 1]
        judged = []
        for label in labels:
            doc = client.get("/topics/1/next", params={"assessor": "a"}).json()["doc_id"]
            client.post("/topics/1/judgments",
                        json={"doc_id": doc, "assessor_id": "a", "label": label})
            judged.append((doc, label))
        body = client.get("/topics/1/run", params={"method": "iii"}).text
        lines = [line.split() for line in body.strip().splitlines()]
        by_label = {label: doc for doc, label in judged}
        assert lines[0][2] == by_label[2]
        assert lines[1][2] == by_label[1]
        assert lines[2][2] == by_label[0]

    def test_export_untrained_model_is_error(self, client):
        assert client.get("/topics/1/run", params={"method": "i"}).status_code == 409

    def test_bad_method_400(self, client):
        assert client.get("/topics/1/run", params={"method": "iv"}).status_code == 400


class TestDurability:
    def test_kill_and_replay_reconstructs_state(self, tmp_path):
        service = make_service(tmp_path)
        for label in (2, 0, 1, 0, 0, 2, 1, 0):
            doc = service.next_document(1, "a")["doc_id"]
            service.submit_judgment(1, doc, "a", label)
        live = service.sessions[1]

        reborn = make_service(tmp_path)  # same journal path, fresh sessions
        session = reborn.sessions[1]
        assert session.judgments == live.judgments
        assert (session.m, session.n) == (live.m, live.n)
        assert session.batch_index == live.batch_index
        assert session.batch_size == live.batch_size
        assert reborn._since_retrain[1] == service._since_retrain[1]

    def test_journal_append_before_ack_semantics(self, tmp_path):
        # A judgment that reached the journal but crashed before being
        # applied in memory must reappear after replay.
        service = make_service(tmp_path)
        doc = service.next_document(1, "a")["doc_id"]
        service.journal.append(Judgment(1, doc, 2, "a", timestamp=1234.5))
        reborn = make_service(tmp_path)
        assert reborn.sessions[1].judgments[doc].label == 2

    def test_replayed_judgment_set_is_byte_identical(self, tmp_path):
        service = make_service(tmp_path)
        for label in (1, 0, 2):
            doc = service.next_document(1, "a")["doc_id"]
            service.submit_judgment(1, doc, "a", label)
        raw_before = (tmp_path / "journal.jsonl").read_bytes()
        reborn = make_service(tmp_path)
        for judgment in reborn.sessions[1].judgments.values():
            reborn.journal.append(judgment)
        raw_after = (tmp_path / "journal.jsonl").read_bytes()
        assert raw_after[: len(raw_before)] == raw_before
        assert raw_after[len(raw_before):] == raw_before  # identical re-emission


class TestConcurrency:
    def test_five_writers_hundred_judgments_no_lost_updates(self, tmp_path):
        service = make_service(tmp_path, n_docs=600)
        per_writer = 100
        labels = {"w0": 0, "w1": 1, "w2": 2, "w3": 0, "w4": 1}

        def writer(name):
            done = 0
            while done < per_writer:
                payload = service.next_document(1, name)
                if payload is None:
                    break
                service.submit_judgment(1, payload["doc_id"], name, labels[name])
                done += 1
            return done

        with ThreadPoolExecutor(max_workers=5) as pool:
            counts = list(pool.map(writer, labels))
        assert sum(counts) == 500
        session = service.sessions[1]
        assert session.assessed_count == 500
        assert (session.m, session.n) == session.recount()
        expected_m = sum(
            per_writer for w, label in labels.items() if label >= 1
        )
        assert session.m == expected_m

    def test_http_level_concurrent_smoke(self, tmp_path):
        service = make_service(tmp_path, n_docs=80)
        client = TestClient(create_app(service))

        def hammer(assessor):
            for _ in range(10):
                response = client.get("/topics/1/next", params={"assessor": assessor})
                if response.status_code == 204:
                    return
                doc = response.json()["doc_id"]
                ack = client.post(
                    "/topics/1/judgments",
                    json={"doc_id": doc, "assessor_id": assessor, "label": 0},
                )
                assert ack.status_code == 200

        threads = [threading.Thread(target=hammer, args=(f"a{i}",)) for i in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        session = service.sessions[1]
        assert session.assessed_count == 40
        assert (session.m, session.n) == session.recount()


class TestStaticUi:
    def test_ui_mounted_when_dir_exists(self, service, tmp_path):
        ui = tmp_path / "ui"
        ui.mkdir()
        (ui / "index.html").write_text("<html><body>assessor ui</body></html>")
        client = TestClient(create_app(service, ui_dir=ui))
        response = client.get("/ui/")
        assert response.status_code == 200
        assert "assessor ui" in response.text


class TestServiceConfig:
    def test_ini_file_and_env_overrides(self, tmp_path, monkeypatch):
        ini = tmp_path / "calkit.ini"
        ini.write_text(
            "[service]\nport = 9999\ndata_dir = /tmp/x\n"
            "[learner]\nlambda = 0.01\nloop_type = uniform\n"
            "[stopping]\na = 2\nb = 7\n[session]\nmode = scal\nbudget = 120\n"
        )
        cfg = load_service_config(ini, env={})
        assert cfg.port == 9999
        assert cfg.learner.lambda_ == 0.01
        assert cfg.learner.loop_type == "uniform"
        assert cfg.stopping.b == 7
        assert cfg.mode == "scal" and cfg.budget == 120

        cfg2 = load_service_config(ini, env={"CALKIT_PORT": "1234", "CALKIT_STOP_B": "3"})
        assert cfg2.port == 1234
        assert cfg2.stopping.b == 3

    def test_defaults_without_file(self):
        cfg = load_service_config(None, env={})
        assert cfg.port == 8000
        assert cfg.mode == "cal"
