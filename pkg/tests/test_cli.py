import json
from pathlib import Path

import pytest

from openxor.cli import main
from openxor.core import Instance, write_instances
from openxor.grading import MANIFEST_NAME


def run(*argv: str | Path) -> int:
    return main([str(a) for a in argv])


def generate(out: Path, jobs: int = 1) -> int:
    return run(
        *("generate", "--n", "8", "--density", "0.125", "--count", "10"),
        *("--seed", "1", "--out", out, "--jobs", str(jobs), "--quiet"),
    )


def solve(method: str, data: Path, out: Path, *extra: str | Path) -> int:
    return run(
        *("solve", "--method", method, "--in", data, "--out", out),
        *("--jobs", "1", "--quiet", *extra),
    )


@pytest.fixture
def dataset(tmp_path: Path) -> Path:
    path = tmp_path / "d.jsonl"
    assert generate(path) == 0
    return path


def test_generate_writes_requested_count(dataset: Path) -> None:
    assert len(dataset.read_text().splitlines()) == 10


def test_generate_is_reproducible(tmp_path: Path, dataset: Path) -> None:
    again = tmp_path / "again.jsonl"
    assert generate(again, jobs=2) == 0
    assert again.read_bytes() == dataset.read_bytes()


def test_solve_then_eval(tmp_path: Path, dataset: Path) -> None:
    results = tmp_path / "r.jsonl"
    assert solve("backtrack", dataset, results) == 0
    csv, md = tmp_path / "report.csv", tmp_path / "report.md"
    code = run(
        *("eval", "--data", dataset, "--results", results),
        *("--out", csv, "--out", md, "--quiet"),
    )
    assert code == 0
    row = csv.read_text().splitlines()[1].split(",")
    assert row[:4] == ["backtrack", "10", "1.000000", "1.000000"]
    assert "| backtrack" in md.read_text()


def test_solve_output_is_repeatable_without_timing(
    tmp_path: Path, dataset: Path
) -> None:
    outputs = []
    for name in ("a.jsonl", "b.jsonl"):
        out = tmp_path / name
        assert solve("random", dataset, out, "--seed", "3", "--no-timing") == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]


def test_exact_solver_failure_exits_one(tmp_path: Path) -> None:
    data = tmp_path / "unsat.jsonl"
    write_instances(data, [Instance("zeros", (0, 0, 0), 1)])
    assert solve("segments", data, tmp_path / "r.jsonl") == 1


def test_dominance_violation_exits_one(tmp_path: Path) -> None:
    data = tmp_path / "one.jsonl"
    write_instances(data, [Instance("one", (1, 0, 1), 1)])
    exact, random = tmp_path / "exact.jsonl", tmp_path / "random.jsonl"
    claimed = {"id": "one", "method": "backtrack", "status": "Exhausted", "ops": None}
    exact.write_text(json.dumps(claimed) + "\n")
    ops = ["XOR", "NOP", "NOP"]
    lucky = {"id": "one", "method": "random", "status": "Solved", "ops": ops}
    random.write_text(json.dumps(lucky) + "\n")
    code = run(
        *("eval", "--data", data, "--results", exact, "--results", random),
        *("--out", tmp_path / "r.csv", "--quiet"),
    )
    assert code == 1
    assert (tmp_path / "r.csv").exists()


def test_train_and_infer(tmp_path: Path, dataset: Path) -> None:
    model, results = tmp_path / "m.olm", tmp_path / "r.jsonl"
    code = run("train", "--data", dataset, "--out", model, "--epochs", "1", "--quiet")
    assert code == 0
    assert model.read_bytes().startswith(b"OLM1")
    code = run(
        *("infer", "--model", model, "--in", dataset, "--out", results),
        *("--jobs", "1", "--quiet"),
    )
    assert code == 0
    lines = results.read_text().splitlines()
    assert len(lines) == 10
    assert all(json.loads(line)["method"] == "openlm" for line in lines)


def test_beam_with_policy_scoring(tmp_path: Path, dataset: Path) -> None:
    model, out = tmp_path / "m.olm", tmp_path / "r.jsonl"
    run("train", "--data", dataset, "--out", model, "--epochs", "1", "--quiet")
    logprob = ("--scoring", "logprob")
    assert solve("beam", dataset, out, *logprob, "--model", model) == 0
    assert solve("beam", dataset, out, *logprob) == 1


def test_prompt_and_grade(tmp_path: Path, dataset: Path) -> None:
    prompts, transcripts = tmp_path / "prompts", tmp_path / "transcripts"
    assert run("prompt", "--in", dataset, "--out", prompts, "--quiet") == 0
    files = sorted(prompts.iterdir())
    assert len(files) == 10
    assert files[0].read_text().endswith("Operations:\n")
    transcripts.mkdir()
    for f in files:
        (transcripts / f.name).write_text("I apologize, but I cannot provide it.")
    report = tmp_path / "grade.md"
    code = run(
        *("grade", "--in", dataset, "--transcripts", transcripts),
        *("--out", report, "--quiet"),
    )
    assert code == 0
    assert "| Refusal" in report.read_text()


def test_validate_prints_verdict(capsys: pytest.CaptureFixture[str]) -> None:
    assert run("validate", "--law", "density", "--n", "12", "--k", "2", "--quiet") == 0
    assert "preconditions hold" in capsys.readouterr().out
    code = run("validate", "--law", "random", "--k", "1", "--trials", "500", "--quiet")
    assert code == 0
    assert "pass" in capsys.readouterr().out


def test_fixpoint_demos(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    assert run("fixpoint", "--demo", "stairs", "--n", "10", "--quiet") == 0
    assert capsys.readouterr().out.strip() == "89"
    graph = tmp_path / "g.txt"
    graph.write_text("a b 2\nb c 3\nd a 1\n")
    assert run("fixpoint", "--demo", "bellman", "--graph", graph, "--quiet") == 0
    assert capsys.readouterr().out.splitlines() == ["a 0", "b 2", "c 5", "d inf"]
    code = run("fixpoint", "--demo", "bfs", "--graph", graph, "--source", "b")
    assert code == 0
    assert capsys.readouterr().out.split() == ["b", "c"]
    assert run("fixpoint", "--demo", "bfs", "--quiet") == 1


def test_submit_without_credentials_fails(
    tmp_path: Path, dataset: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("OPENXOR_API_KEY", raising=False)
    code = run(
        *("submit", "--in", dataset, "--out", tmp_path / "t"),
        *("--endpoint", "http://localhost:9", "--model", "m", "--quiet"),
    )
    assert code == 1


def test_usage_errors_exit_two(capsys: pytest.CaptureFixture[str]) -> None:
    assert run("generate", "--n", "8", "--bogus") == 2
    assert "usage" in capsys.readouterr().err
    assert run() == 2
    assert run("fixpoint", "--demo", "stairs", "--jobs", "0") == 2


def test_missing_input_exits_one(tmp_path: Path) -> None:
    assert solve("backtrack", tmp_path / "none.jsonl", tmp_path / "r.jsonl") == 1


def test_version(capsys: pytest.CaptureFixture[str]) -> None:
    assert run("--version") == 0
    assert "dataset format 1.0.0" in capsys.readouterr().out


def test_quiet_run_keeps_reproducibility_header(
    tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    assert generate(tmp_path / "d.jsonl") == 0
    err = capsys.readouterr().err
    assert "dataset format 1.0.0" in err
    assert "seed=1, jobs=1" in err
    assert "Wrote" not in err


@pytest.mark.parametrize(
    "argv",
    [
        ["generate", "--n", "8", "--density", "0", "--out", "d.jsonl"],
        ["generate", "--n", "8", "--density", "1.5", "--out", "d.jsonl"],
        ["generate", "--n", "0", "--density", "0.5", "--out", "d.jsonl"],
        ["generate", "--n", "8", "--density", "nan", "--out", "d.jsonl"],
        ["solve", "--method", "beam", "--beam-size", "0", "--in", "d", "--out", "r"],
        ["train", "--data", "d", "--out", "m", "--lr", "0"],
        ["validate", "--law", "random", "--k", "-1"],
        ["fixpoint", "--demo", "stairs", "--seed", "-3"],
    ],
)
def test_out_of_range_flags_are_usage_errors(
    argv: list[str], capsys: pytest.CaptureFixture[str]
) -> None:
    assert run(*argv) == 2
    assert "is outside" in capsys.readouterr().err


def test_corrupt_manifest_exits_one(
    tmp_path: Path, dataset: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    prompts = tmp_path / "transcripts"
    assert run("prompt", "--in", dataset, "--out", prompts, "--quiet") == 0
    (prompts / MANIFEST_NAME).write_text("{not json\n")
    code = run(
        *("grade", "--in", dataset, "--transcripts", prompts),
        *("--out", tmp_path / "grade.md", "--quiet"),
    )
    assert code == 1
    assert f"{MANIFEST_NAME}:1" in capsys.readouterr().err
