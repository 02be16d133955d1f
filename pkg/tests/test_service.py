import hashlib
import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from chi2atom import __version__
from chi2atom.service.app import app


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


class TestBasics:
    def test_health(self, client):
        body = client.get("/health").json()
        assert body == {"status": "ok", "version": __version__}

    def test_preset_listing(self, client):
        names = client.get("/presets").json()["presets"]
        assert names == ["fig1b", "fig1c", "fig2", "fig3", "ln-today", "ln-ultimate"]

    def test_preset_materializes_defaults(self, client):
        body = client.get("/presets/ln-today").json()
        assert body["experiment"] == "levels"
        assert body["params"]["g"] == 0.25
        assert "n_max" in body["params"]

    def test_unknown_preset_404(self, client):
        assert client.get("/presets/fig99").status_code == 404


class TestValidation:
    def test_unknown_key_rejected_and_named(self, client):
        r = client.post("/run", json={"experiment": "spectroscopy", "params": {"kapa0": 1.0}})
        assert r.status_code == 422
        assert "kapa0" in json.dumps(r.json())

    def test_unknown_experiment_rejected(self, client):
        r = client.post("/run", json={"experiment": "teleport", "params": {}})
        assert r.status_code == 422

    def test_negative_rate_rejected(self, client):
        r = client.post("/run", json={"experiment": "scatter2", "params": {"kappa_a0": -1.0}})
        assert r.status_code == 422
        assert "kappa_a0" in json.dumps(r.json())

    def test_numerical_failure_maps_to_500(self, client):
        # undamped second-harmonic sector: the steady state is not unique
        r = client.post("/run", json={"experiment": "spectroscopy",
                                      "params": {"g_values": [0.0], "kappa_c": 0.0, "n_delta": 16}})
        assert r.status_code == 500
        assert r.json()["detail"]["type"] == "numerical"


class TestRunLevels:
    def test_degenerate_eigenvalues_in_csv(self, client):
        r = client.post("/run", json={"experiment": "levels",
                                      "params": {"kind": "degenerate", "g": 4.0}})
        body = r.json()
        csv_text = body["artifacts"][0]["content"]
        rows = [line.split(",") for line in csv_text.strip().split("\n")[1:]]
        n2 = sorted(float(row[2]) for row in rows if row[0] == "2")
        assert n2 == pytest.approx([-np.sqrt(2) * 4.0, np.sqrt(2) * 4.0], rel=1e-10)
        assert body["manifest"]["summary"]["two_excitation_gap"] == pytest.approx(8 * np.sqrt(2))

    def test_manifest_checksums_match(self, client):
        r = client.post("/run", json={"experiment": "levels", "params": {"g": 2.0}})
        body = r.json()
        contents = {a["name"]: a["content"] for a in body["artifacts"]}
        for record in body["manifest"]["files"]:
            digest = hashlib.sha256(contents[record["name"]].encode()).hexdigest()
            assert record["sha256"] == digest
            assert record["bytes"] == len(contents[record["name"]].encode())

    def test_config_echo_resolves_defaults(self, client):
        r = client.post("/run", json={"experiment": "levels", "params": {"g": 2.0}})
        conf = r.json()["manifest"]["config"]
        assert conf["kind"] == "degenerate"
        assert conf["n_max"] == 2


class TestRunStore:
    def test_store_preset_efficiency(self, client):
        r = client.post("/run", json={"experiment": "store",
                                      "params": {"n_samples": 2001}})
        body = r.json()
        assert r.status_code == 200
        eta = body["manifest"]["summary"]["eta_s"]
        assert eta == pytest.approx(0.999, abs=1e-3)
        names = {a["name"] for a in body["artifacts"]}
        assert {"input.csv", "drive.csv", "leak.csv", "store_result.json"} <= names


class TestJsonFormat:
    def test_tables_become_json_records(self, client):
        r = client.post("/run", json={"experiment": "levels", "params": {"g": 1.0},
                                      "format": "json"})
        body = r.json()
        names = [a["name"] for a in body["artifacts"]]
        assert "levels.json" in names
        records = json.loads(body["artifacts"][0]["content"])
        assert isinstance(records, list) and "re" in records[0]
