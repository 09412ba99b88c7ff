import json

import pytest

from mccs_grpo.cli import main
from mccs_grpo.labels import NO_FINDING, OBSERVATIONS

SHORT_CONFIG = """\
steps = 5
batch_size = 4
n_train = 20
n_eval = 10
seed = 2
out_dir = "out"
"""


@pytest.fixture
def run_dir(tmp_path):
    (tmp_path / "run.toml").write_text(SHORT_CONFIG)
    return tmp_path


def stderr_error(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_generate_data(tmp_path):
    out = tmp_path / "c.jsonl"
    assert main(["generate-data", "--n", "3", "--seed", "1", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 4


def test_train_and_evaluate(run_dir, capsys):
    assert main(["train", "--config", str(run_dir / "run.toml")]) == 0
    out = run_dir / "out"
    assert {p.name for p in out.iterdir()} == {"params.json", "history.csv", "manifest.json"}
    rows = (out / "history.csv").read_text().splitlines()
    assert rows[0] == "step,mean_reward,mean_mccs,format_rate,kl" and len(rows) == 6
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 2 and manifest["config"]["steps"] == 5

    corpus = run_dir / "eval.jsonl"
    main(["generate-data", "--n", "10", "--out", str(corpus)])
    report = run_dir / "report.json"
    args = ["evaluate", "--params", str(out / "params.json"), "--corpus", str(corpus), "--out", str(report)]
    assert main(args + ["--config", str(run_dir / "run.toml")]) == 0
    doc = json.loads(report.read_text())
    assert doc["n_studies"] == 10 and 0 <= doc["f1"] <= 1


def test_score(tmp_path, capsys):
    gen, ref = tmp_path / "g.txt", tmp_path / "r.txt"
    gen.write_text("<think>looked</think>\n<report>There is cardiomegaly. No edema.</report>")
    ref.write_text("There is cardiomegaly. No edema.")
    assert main(["score", "--gen", str(gen), "--ref", str(ref)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert set(doc) == {"ccs", "mccs", "format", "ce_f1", "nlg", "total"}
    assert doc["format"] == 1.0 and doc["mccs"] == pytest.approx(1.0, abs=1e-6)
    assert doc["total"] == pytest.approx(1.0, abs=1e-6)


def test_label(tmp_path, capsys):
    f = tmp_path / "r.txt"
    f.write_text("Possible pneumonia. No pneumothorax.")
    assert main(["label", str(f)]) == 0
    states = json.loads(capsys.readouterr().out)
    assert len(states) == len(OBSERVATIONS)
    assert states[OBSERVATIONS.index("Pneumonia")] == "uncertain"
    assert states[OBSERVATIONS.index("Pneumothorax")] == "negative"
    assert states[NO_FINDING] == "blank"


def test_ablate(run_dir):
    out = run_dir / "table.csv"
    assert main(["ablate", "--config", str(run_dir / "run.toml"), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "arm,precision,recall,f1,mean_mccs,format_rate"
    assert [l.split(",")[0] for l in lines[1:]] == [
        "untrained", "mccs", "mccs+format", "ce_f1", "ce_f1+format", "format_only", "nlg"
    ]


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("epochs = 3\n")
    assert main(["train", "--config", str(cfg)]) == 2
    assert stderr_error(capsys)["error"] == "ConfigurationError"


def test_malformed_toml(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("steps = = 3\n")
    assert main(["train", "--config", str(cfg)]) == 2


def test_missing_file(tmp_path, capsys):
    assert main(["label", str(tmp_path / "nope.txt")]) == 6
    assert stderr_error(capsys)["error"] == "FileNotFoundError"


def test_bad_corpus(tmp_path, capsys):
    params = tmp_path / "p.json"
    from mccs_grpo.policy import PolicyParams

    PolicyParams.zeros().save(params)
    corpus = tmp_path / "c.jsonl"
    corpus.write_text('{"id": "x"}\n')
    assert main(["evaluate", "--params", str(params), "--corpus", str(corpus)]) == 3
    assert stderr_error(capsys)["error"] == "StructuralError"


def test_bad_margin(tmp_path, capsys):
    f = tmp_path / "r.txt"
    f.write_text("No edema.")
    assert main(["score", "--gen", str(f), "--ref", str(f), "--margin", "1.5"]) == 2
