import json

import pytest
from fastapi.testclient import TestClient

from slimraft.config import PipelineConfig
from slimraft.service import create_app


@pytest.fixture
def client():
    return TestClient(create_app(PipelineConfig()))


def test_health(client):
    body = client.get("/health").json()
    assert body["status"] == "ok"


class TestNomenclatureValidate:
    def test_clean_file(self, client, wine_dir):
        response = client.post(
            "/nomenclature/validate", json={"path": str(wine_dir / "nomenclature.csv")}
        )
        body = response.json()
        assert response.status_code == 200
        assert body["entry_count"] == 4
        assert body["strict_clean"] is True

    def test_missing_file(self, client, tmp_path):
        response = client.post(
            "/nomenclature/validate", json={"path": str(tmp_path / "nope.csv")}
        )
        assert response.status_code == 422

    def test_violations_reported(self, client, tmp_path):
        path = tmp_path / "orphan.csv"
        path.write_text("code,description\n080810,- Apples\n", encoding="utf-8")
        body = client.post("/nomenclature/validate", json={"path": str(path)}).json()
        assert body["strict_clean"] is False
        assert len(body["violations"]) == 2


class TestCorpusGenerate:
    def test_wine_golden(self, client, wine_dir, golden_path, tmp_path):
        response = client.post(
            "/corpus/generate",
            json={
                "nomenclature_path": str(wine_dir / "nomenclature.csv"),
                "templates_path": str(wine_dir / "templates.json"),
                "records_path": str(wine_dir / "records.csv"),
                "output_dir": str(tmp_path),
            },
        )
        assert response.status_code == 200
        body = response.json()
        assert body["plan"] == {"q": 1, "v": 1, "n": 1, "N": 1}
        with open(body["corpus_path"], encoding="utf-8") as fh:
            assert fh.read() == golden_path.read_text(encoding="utf-8")
        manifest = json.loads(open(body["manifest_path"], encoding="utf-8").read())
        assert manifest["N"] == 1
        assert set(manifest["source_checksums"]) == {"nomenclature", "templates", "records"}

    def test_unknown_record_code_is_domain_error(self, client, wine_dir, tmp_path):
        records = tmp_path / "records.csv"
        records.write_text("id,description,ncm_code\nbad-1,PRODUTO,97069999\n", encoding="utf-8")
        response = client.post(
            "/corpus/generate",
            json={
                "nomenclature_path": str(wine_dir / "nomenclature.csv"),
                "templates_path": str(wine_dir / "templates.json"),
                "records_path": str(records),
                "output_dir": str(tmp_path),
            },
        )
        assert response.status_code == 400
        assert "bad-1" in response.json()["detail"]


class TestIndexAndRag:
    def test_build_then_ask(self, client, wine_dir, tmp_path):
        snapshot = tmp_path / "index.json"
        response = client.post(
            "/index/build",
            json={
                "nomenclature_path": str(wine_dir / "nomenclature.csv"),
                "output_path": str(snapshot),
            },
        )
        assert response.status_code == 200
        assert response.json()["doc_count"] == 4

        body = client.post(
            "/rag/ask",
            json={"index_path": str(snapshot), "question": "22041010", "k": 3},
        ).json()
        assert body["contexts"][0]["code"] == "22041010"
        assert "Tipo champanha (champagne)" in body["prompt"]
        assert body["answer"] is None

    def test_missing_index_is_domain_error(self, client, tmp_path):
        response = client.post(
            "/rag/ask", json={"index_path": str(tmp_path / "missing.json"), "question": "q"}
        )
        assert response.status_code == 400

    def test_mock_answer(self, client, wine_dir, tmp_path):
        snapshot = tmp_path / "index.json"
        client.post(
            "/index/build",
            json={
                "nomenclature_path": str(wine_dir / "nomenclature.csv"),
                "output_path": str(snapshot),
            },
        )
        body = client.post(
            "/rag/ask",
            json={
                "index_path": str(snapshot),
                "question": "vinho espumante",
                "k": 1,
                "mock_responses": ["resposta simulada"],
            },
        ).json()
        assert body["answer"] == "resposta simulada"

    def test_reformulate_without_client_is_input_error(self, client, wine_dir, tmp_path):
        snapshot = tmp_path / "index.json"
        client.post(
            "/index/build",
            json={
                "nomenclature_path": str(wine_dir / "nomenclature.csv"),
                "output_path": str(snapshot),
            },
        )
        response = client.post(
            "/rag/ask",
            json={"index_path": str(snapshot), "question": "q", "reformulate": True},
        )
        assert response.status_code == 422


class TestEvalRun:
    def _items_file(self, tmp_path, count=3):
        path = tmp_path / "items.jsonl"
        with path.open("w", encoding="utf-8") as fh:
            for i in range(count):
                fh.write(
                    json.dumps(
                        {
                            "id": f"i{i}",
                            "question": "Qual a categoria NCM correta para o produto: vinho?",
                            "expected_answer": "vinhos de uvas frescas",
                            "model_answer": "vinhos de uvas frescas",
                            "model_tag": "demo-model",
                        },
                        ensure_ascii=False,
                    )
                    + "\n"
                )
        return path

    def test_mock_judge_full_coverage(self, client, tmp_path):
        response = client.post(
            "/eval/run",
            json={
                "items_path": str(self._items_file(tmp_path)),
                "output_dir": str(tmp_path / "out"),
                "mock_judge": True,
            },
        )
        assert response.status_code == 200
        body = response.json()
        assert body["coverage"] == {"judged": 3, "total": 3}
        assert body["average"] == 10.0
        assert "St. Dev." in body["table"]

    def test_empty_items_file(self, client, tmp_path):
        path = tmp_path / "items.jsonl"
        path.write_text("", encoding="utf-8")
        response = client.post(
            "/eval/run",
            json={"items_path": str(path), "output_dir": str(tmp_path), "mock_judge": True},
        )
        assert response.status_code == 422

    def test_no_client_configured(self, client, tmp_path):
        response = client.post(
            "/eval/run",
            json={"items_path": str(self._items_file(tmp_path)), "output_dir": str(tmp_path)},
        )
        assert response.status_code == 422


def test_request_validation_maps_to_422(client):
    response = client.post("/corpus/split", json={"records_path": "x"})
    assert response.status_code == 422
