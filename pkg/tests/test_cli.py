"""CLI behavior: golden generate runs, eval and stats reports, layered
settings (flag > file > env), and exit-code conventions."""

import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from chartpipe.backend import dump_script
from chartpipe.cli import build_parser, main
from chartpipe.config import (
    as_bool,
    as_int,
    load_config_file,
    parse_config_text,
    resolve_setting,
)
from chartpipe.errors import ChartPipeError
from chartpipe.evaluation import load_triplets, slots_from_spec
from tests.helpers import script_of

FIXTURES = Path(__file__).parent / "fixtures"
CARS_CSV = str(FIXTURES / "cars_mini.csv")

UTT = "average horsepower by origin"

BY_STEP = {
    1: [("Origin, Horsepower", -0.1)],
    2: [("none", -0.2)],
    3: [("average Horsepower", -0.3)],
    4: [("bar", -0.1), ("pie", -2.0)],
    5: [("x: Origin, y: average(Horsepower), color: none", -0.4)],
    6: [("none", -0.1), ("y desc", -0.5)],
}


@pytest.fixture()
def script_path(tmp_path):
    path = tmp_path / "script.json"
    path.write_text(json.dumps(dump_script(script_of(UTT, BY_STEP))), encoding="utf-8")
    return str(path)


def generate_args(script_path, out_dir, *extra):
    return [
        "generate",
        "--table",
        CARS_CSV,
        "--utterance",
        UTT,
        "--script",
        script_path,
        "--out",
        str(out_dir),
        *extra,
    ]


class TestConfigPrimitives:
    def test_parse_config_text(self):
        values = parse_config_text(
            "# comment\n\nbackend_url = http://host/v1?a=b\n k = 3 \n"
        )
        assert values == {"backend_url": "http://host/v1?a=b", "k": "3"}

    def test_parse_config_text_rejects_bare_words(self):
        with pytest.raises(ChartPipeError, match=r"settings\.cfg:2"):
            parse_config_text("a = 1\njust text\n", origin="settings.cfg")

    def test_load_config_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("k = 2\n", encoding="utf-8")
        assert load_config_file(path) == {"k": "2"}

    def test_resolve_setting_precedence(self):
        env = {"CHARTPIPE_K": "9"}
        assert resolve_setting("k", 1, {"k": "5"}, env=env) == 1
        assert resolve_setting("k", None, {"k": "5"}, env=env) == "5"
        assert resolve_setting("k", None, {}, env=env) == "9"
        assert resolve_setting("k", None, {}, env={}) is None

    def test_casts(self):
        assert as_int("4", "k") == 4
        assert as_bool("Yes", "strict") is True
        assert as_bool("off", "strict") is False
        assert as_bool(True, "strict") is True
        with pytest.raises(ChartPipeError, match="must be an integer"):
            as_int("three", "k")
        with pytest.raises(ChartPipeError, match="must be a boolean"):
            as_bool("maybe", "strict")


class TestGenerateCommand:
    def test_writes_charts_and_transcript(self, tmp_path, script_path, capsys):
        out = tmp_path / "out"
        assert main(generate_args(script_path, out)) == 0
        assert "wrote 3 chart(s)" in capsys.readouterr().out

        names = sorted(p.name for p in out.iterdir())
        assert names == ["rank1.vl.json", "rank2.vl.json", "rank3.vl.json", "steps.json"]

        rank1 = json.loads((out / "rank1.vl.json").read_text(encoding="utf-8"))
        assert rank1["mark"] == "bar"
        assert rank1["encoding"]["y"]["aggregate"] == "mean"

        transcript = json.loads((out / "steps.json").read_text(encoding="utf-8"))
        assert transcript["table"] == CARS_CSV
        assert transcript["utterance"] == UTT
        assert [r["rank"] for r in transcript["results"]] == [1, 2, 3]
        top = transcript["results"][0]
        assert top["score"] == pytest.approx(-1.2)
        assert top["steps"]["1 Select Columns"] == "Origin, Horsepower"
        assert top["steps"]["4 Choose Mark"] == "bar"
        assert top["spec"]["x"] == "Origin"

    def test_k_flag_limits_output(self, tmp_path, script_path):
        out = tmp_path / "out"
        assert main(generate_args(script_path, out, "--k", "1")) == 0
        assert sorted(p.name for p in out.iterdir()) == ["rank1.vl.json", "steps.json"]

    def test_data_ref_replaces_inline_rows(self, tmp_path, script_path):
        out = tmp_path / "out"
        url = "https://example.com/cars.csv"
        assert main(generate_args(script_path, out, "--data-ref", url)) == 0
        rank1 = json.loads((out / "rank1.vl.json").read_text(encoding="utf-8"))
        assert rank1["data"] == {"url": url}

    def test_missing_required_flag_is_a_usage_error(self, script_path, capsys):
        with pytest.raises(SystemExit) as exc_info:
            main(["generate", "--utterance", UTT, "--script", script_path])
        assert exc_info.value.code == 2
        assert "missing --table" in capsys.readouterr().err

    def test_missing_command_is_a_usage_error(self):
        with pytest.raises(SystemExit) as exc_info:
            main([])
        assert exc_info.value.code == 2

    def test_unreadable_table_reports_json_error(self, tmp_path, script_path, capsys):
        args = generate_args(script_path, tmp_path / "out")
        args[2] = str(tmp_path / "missing.csv")
        assert main(args) == 1
        error = json.loads(capsys.readouterr().err)
        assert error["error"] == "FileNotFoundError"

    def test_script_miss_reports_json_error(self, tmp_path, capsys):
        path = tmp_path / "script.json"
        other = dump_script(script_of("another question", BY_STEP))
        path.write_text(json.dumps(other), encoding="utf-8")
        assert main(generate_args(str(path), tmp_path / "out")) == 1
        error = json.loads(capsys.readouterr().err)
        assert error["error"] == "ScriptMissError"

    def test_flag_beats_file_beats_env(self, tmp_path, script_path, monkeypatch):
        config = tmp_path / "run.cfg"
        config.write_text("k = 1\n", encoding="utf-8")
        monkeypatch.setenv("CHARTPIPE_K", "3")

        file_out = tmp_path / "from_file"
        args = ["--config", str(config), *generate_args(script_path, file_out)]
        assert main(args) == 0
        assert not (file_out / "rank2.vl.json").exists()

        flag_out = tmp_path / "from_flag"
        args = [
            "--config",
            str(config),
            *generate_args(script_path, flag_out, "--k", "2"),
        ]
        assert main(args) == 0
        assert (flag_out / "rank2.vl.json").exists()
        assert not (flag_out / "rank3.vl.json").exists()

    def test_environment_fallback(self, tmp_path, script_path, monkeypatch):
        # Both the script and k come from the environment.
        monkeypatch.setenv("CHARTPIPE_SCRIPT", script_path)
        monkeypatch.setenv("CHARTPIPE_K", "1")
        out = tmp_path / "out"
        args = ["generate", "--table", CARS_CSV, "--utterance", UTT, "--out", str(out)]
        assert main(args) == 0
        assert sorted(p.name for p in out.iterdir()) == ["rank1.vl.json", "steps.json"]

    def test_bad_config_value_reports_json_error(self, tmp_path, script_path, capsys):
        config = tmp_path / "run.cfg"
        config.write_text("k = three\n", encoding="utf-8")
        args = ["--config", str(config), *generate_args(script_path, tmp_path / "out")]
        assert main(args) == 1
        error = json.loads(capsys.readouterr().err)
        assert error["error"] == "ChartPipeError"
        assert "must be an integer" in error["message"]

    def test_missing_config_file_reports_json_error(
        self, tmp_path, script_path, capsys
    ):
        args = [
            "--config",
            str(tmp_path / "absent.cfg"),
            *generate_args(script_path, tmp_path / "out"),
        ]
        assert main(args) == 1
        assert json.loads(capsys.readouterr().err)["error"] == "FileNotFoundError"


class TestEvalCommand:
    @pytest.fixture()
    def dataset(self):
        return str(FIXTURES / "triplets.jsonl")

    @pytest.fixture()
    def predictions_path(self, tmp_path, dataset):
        triplets = load_triplets(dataset)
        path = tmp_path / "preds.jsonl"
        lines = [
            json.dumps({"id": t.id, "topk": [slots_from_spec(t.truth)]})
            for t in triplets
        ]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    def test_perfect_predictions(self, tmp_path, dataset, predictions_path, capsys):
        report_path = tmp_path / "report.json"
        rc = main(
            [
                "eval",
                "--dataset",
                dataset,
                "--predictions",
                str(predictions_path),
                "--report",
                str(report_path),
            ]
        )
        assert rc == 0
        out = capsys.readouterr().out
        assert "examples: 20" in out
        assert "consistent_at_1" in out and "1.0000" in out

        report = json.loads(report_path.read_text(encoding="utf-8"))
        assert report["n_examples"] == 20
        assert report["aggregates"]["consistent_at_1"] == 1.0
        assert report["aggregates"]["consistent_at_3"] == 1.0
        assert report["aggregates"]["rouge_l_at_1"] == 1.0
        assert report["aggregates"]["bleu_at_1"] == pytest.approx(1.0)
        assert report["aggregates"]["valid_rate"] == 1.0
        assert len(report["examples"]) == 20

    def test_strict_filter_order_flag(self, tmp_path, dataset, predictions_path):
        report_path = tmp_path / "report.json"
        rc = main(
            [
                "eval",
                "--dataset",
                dataset,
                "--predictions",
                str(predictions_path),
                "--report",
                str(report_path),
                "--strict-filter-order",
            ]
        )
        assert rc == 0
        report = json.loads(report_path.read_text(encoding="utf-8"))
        assert report["config"]["strict_filter_order"] is True
        assert report["aggregates"]["consistent_at_1"] == 1.0

    def test_misaligned_predictions_fail(
        self, tmp_path, dataset, predictions_path, capsys
    ):
        lines = predictions_path.read_text(encoding="utf-8").splitlines()
        short = tmp_path / "short.jsonl"
        short.write_text("\n".join(lines[1:]) + "\n", encoding="utf-8")
        rc = main(["eval", "--dataset", dataset, "--predictions", str(short)])
        assert rc == 1
        assert json.loads(capsys.readouterr().err)["error"] == "AlignmentError"

    def test_missing_flags_are_usage_errors(self, dataset):
        with pytest.raises(SystemExit) as exc_info:
            main(["eval", "--dataset", dataset])
        assert exc_info.value.code == 2


class TestStatsCommand:
    def test_reports_aggregates(self, tmp_path, capsys):
        report_path = tmp_path / "stats.json"
        rc = main(
            [
                "stats",
                "--dataset",
                str(FIXTURES / "stats_triplets.jsonl"),
                "--report",
                str(report_path),
            ]
        )
        assert rc == 0
        out = capsys.readouterr().out
        assert "examples: 10" in out
        assert "column_ratio" in out and "0.6667" in out

        report = json.loads(report_path.read_text(encoding="utf-8"))
        assert report["n_examples"] == 10
        assert report["aggregates"]["column_ratio"] == pytest.approx(2 / 3)
        assert report["aggregates"]["explicit_chart_type"] == pytest.approx(0.4)
        assert report["aggregates"]["explicit_aggregation"] == pytest.approx(0.4)
        assert len(report["records"]) == 10

    def test_missing_dataset_is_a_usage_error(self):
        with pytest.raises(SystemExit) as exc_info:
            main(["stats"])
        assert exc_info.value.code == 2


class TestServeCommand:
    def test_parser_wiring(self):
        args = build_parser().parse_args(
            ["serve", "--port", "9001", "--host", "0.0.0.0"]
        )
        assert args.command == "serve"
        assert args.port == 9001
        assert args.host == "0.0.0.0"

    def test_builds_app_and_hands_it_to_uvicorn(self, script_path, monkeypatch):
        captured = {}

        def fake_run(app, host, port):
            captured.update(app=app, host=host, port=port)

        monkeypatch.setattr("uvicorn.run", fake_run)
        rc = main(["serve", "--script", script_path, "--port", "9100"])
        assert rc == 0
        assert captured["host"] == "127.0.0.1"
        assert captured["port"] == 9100

        # The constructed app is live and wired to the scripted backend.
        client = TestClient(captured["app"])
        assert client.get("/api/health").json()["status"] == "ok"
