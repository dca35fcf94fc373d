import argparse
from fractions import Fraction
from pathlib import Path

import pytest
from assertpy import assert_that
from bs4 import BeautifulSoup

from hytccp import cli
from hytccp import trace_io
from hytccp.exceptions import HytccpError
from hytccp.exceptions import HytSyntaxError

CORPUS = Path(__file__).parent.parent / "corpus"
COOLER = [
    "--entry",
    "cooler(St, T)",
    "--store",
    "St = [off|_] /\\ T >= 26 /\\ T <= 30",
    "--cont",
    "T=29:2",
    "--max-time",
    "20",
]


def corpus(name):
    return str(CORPUS / f"{name}.hyt")


def run(capsys, *args):
    status = cli.main(list(args))
    out, err = capsys.readouterr()
    return status, out, err


@pytest.fixture
def write_program(tmp_path):
    def write(source, name="program.hyt"):
        path = tmp_path / name
        path.write_text(source, encoding="utf-8")
        return str(path)

    return write


class TestArguments:
    def test_continuous_entry(self):
        assert_that(cli.continuous_entry("T=29:2")).is_equal_to(
            ("T", (Fraction(29), Fraction(2)))
        )
        assert_that(cli.continuous_entry("V = 0:-1/2")).is_equal_to(
            ("V", (Fraction(0), Fraction(-1, 2)))
        )

    @pytest.mark.parametrize("text", ["T=29", "t=1:2", "T=a:2"])
    def test_bad_continuous_entry(self, text):
        with pytest.raises(argparse.ArgumentTypeError):
            cli.continuous_entry(text)

    def test_rational(self):
        assert_that(cli.rational("1/2")).is_equal_to(Fraction(1, 2))
        assert_that(cli.rational("0.25")).is_equal_to(Fraction(1, 4))
        with pytest.raises(argparse.ArgumentTypeError, match="not a rational"):
            cli.rational("1/0")

    @pytest.mark.parametrize("parse", [cli.positive_rational, cli.positive_int])
    def test_positive(self, parse):
        assert_that(parse("3")).is_equal_to(3)
        with pytest.raises(argparse.ArgumentTypeError, match="must be positive"):
            parse("0")

    def test_seed_precedence(self):
        assert_that(cli.resolve_seed(3, {cli.SEED_VARIABLE: "9"})).is_equal_to(3)
        assert_that(cli.resolve_seed(None, {cli.SEED_VARIABLE: "9"})).is_equal_to(9)
        assert_that(cli.resolve_seed(None, {})).is_equal_to(0)
        with pytest.raises(HytccpError, match="is not an integer"):
            cli.resolve_seed(None, {cli.SEED_VARIABLE: "nine"})

    def test_seed_from_environment(self, monkeypatch):
        monkeypatch.setenv(cli.SEED_VARIABLE, "42")
        options = cli.build_parser().parse_args(
            ["run", corpus("gear"), "--policy", "random"]
        )
        assert_that(cli.make_policy(options).seed).is_equal_to(42)

    def test_initial_store(self):
        options = cli.build_parser().parse_args(["run", corpus("cooler"), *COOLER])
        store = cli.initial_store(options)
        assert_that(store.continuous.render()).is_equal_to("T↦(29,2)")
        assert_that(store.discrete.render(hide_anonymous=True)).is_equal_to(
            "St = [off|_] /\\ T <= 30 /\\ T >= 26"
        )

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            cli.main(["--version"])
        assert_that(excinfo.value.code).is_equal_to(0)

    def test_invalid_limit(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            cli.main(["run", corpus("cooler"), "--max-steps", "0"])
        assert_that(excinfo.value.code).is_equal_to(2)


class TestParse:
    def test_gear(self, capsys):
        status, out, _ = run(capsys, "parse", corpus("gear"))
        assert_that(status).is_equal_to(0)
        assert_that(out.splitlines()[-1]).is_equal_to(
            "% declarations: init/0, gearbox/3, watcher/1"
        )

    def test_output_parses_again(self, capsys, write_program):
        _, out, _ = run(capsys, "parse", corpus("cooler"))
        status, again, _ = run(capsys, "parse", write_program(out))
        assert_that(status).is_equal_to(0)
        assert_that(again).is_equal_to(out)


class TestRun:
    def test_jsonl(self, capsys):
        status, out, _ = run(capsys, "run", corpus("cooler"), *COOLER)
        assert_that(status).is_equal_to(0)
        document = trace_io.loads(out)
        assert_that(document.header["program"]).is_equal_to("cooler")
        assert_that(document.footer["terminal"]).is_equal_to("limit-reached")
        assert_that(document.footer["time"]["exact"]).is_equal_to("20")

    def test_output_file(self, capsys, tmp_path):
        path = tmp_path / "cooler.jsonl"
        status, out, _ = run(capsys, "run", corpus("cooler"), *COOLER, "-o", str(path))
        assert_that(status).is_equal_to(0)
        assert_that(out).is_empty()
        assert_that(trace_io.loads(path.read_text()).steps).is_length(19)

    def test_text(self, capsys):
        _, out, _ = run(capsys, "run", corpus("cooler"), *COOLER, "--format", "text")
        lines = out.splitlines()
        assert_that(lines[0]).is_equal_to("cooler")
        assert_that(lines[-1]).is_equal_to("terminal: limit-reached at t=20")

    def test_html(self, capsys):
        _, out, _ = run(capsys, "run", corpus("cooler"), *COOLER, "--format", "html")
        page = BeautifulSoup(out, "html.parser")
        assert_that(page.find_all("section", class_="trace")).is_length(1)
        assert_that(page.find("style")).is_not_none()

    def test_raw_keeps_steps_apart(self, capsys, write_program):
        path = write_program("init :- cask(X < 10).")
        args = ["--cont", "X=0:1", "--policy", "lazy", "--max-steps", "4"]
        _, coalesced, _ = run(capsys, "run", path, *args)
        _, raw, _ = run(capsys, "run", path, *args, "--raw")
        assert_that(trace_io.loads(coalesced).steps).is_length(2)
        assert_that(trace_io.loads(raw).steps).is_length(4)

    def test_random_is_seeded(self, capsys):
        args = ["run", corpus("catmouse"), "--policy", "random", "--seed", "5"]
        _, first, _ = run(capsys, *args)
        _, second, _ = run(capsys, *args)
        assert_that(first).is_equal_to(second)


class TestExplore:
    def test_two_outcomes(self, capsys, write_program):
        path = write_program("init :- ask(a) -> tell(b) + ask(c) -> tell(d).")
        status, out, _ = run(capsys, "explore", path, "--store", "a /\\ c")
        assert_that(status).is_equal_to(0)
        lines = out.splitlines()
        assert_that(lines[:3]).is_equal_to(
            ["traces: 2", "  success: 2", "outcome classes: 2"]
        )
        assert_that(lines[3]).contains("[1]", "a /\\ b /\\ c")
        assert_that(lines[4]).contains("[1]", "a /\\ c /\\ d")

    @pytest.mark.slow
    def test_catmouse(self, capsys):
        status, out, _ = run(capsys, "explore", corpus("catmouse"), "--max-depth", "40")
        assert_that(status).is_equal_to(0)
        assert_that(out).contains("outcome classes: 2\n")


class TestSample:
    def test_cooler(self, capsys):
        status, out, _ = run(capsys, "sample", corpus("cooler"), *COOLER, "--step", "1/2")
        assert_that(status).is_equal_to(0)
        lines = out.splitlines()
        assert_that(lines[0]).is_equal_to(",".join(trace_io.SAMPLES_HEADER))
        assert_that(lines).contains("0,T,29,0,29", "1/2,T,30,0.5,30", "9/2,T,28,4.5,28")

    def test_step_is_required(self, capsys):
        with pytest.raises(SystemExit):
            cli.main(["sample", corpus("cooler")])


class TestErrors:
    def test_syntax_error(self, capsys, write_program):
        path = write_program("init :-\n    tell(X = ).\n", "bad.hyt")
        status, out, err = run(capsys, "parse", path)
        assert_that(status).is_equal_to(1)
        assert_that(out).is_empty()
        assert_that(err).starts_with(f"{path}:2:").contains(": error: ")

    def test_unbound_process(self, capsys, write_program):
        status, _, err = run(capsys, "run", write_program("init :- nowhere."))
        assert_that(status).is_equal_to(1)
        assert_that(err).contains("no declaration for nowhere/0")

    def test_no_current_value(self, capsys, write_program):
        status, _, err = run(capsys, "run", write_program("init :- change(X, _, 1)."))
        assert_that(status).is_equal_to(2)
        assert_that(err).contains("error: change(X, _, ...) needs a current value")

    def test_inconsistent_store(self, capsys):
        status, _, err = run(
            capsys, "run", corpus("cooler"), "--store", "T <= 30", "--cont", "T=31:0"
        )
        assert_that(status).is_equal_to(2)
        assert_that(err).contains("is inconsistent")

    def test_missing_file(self, capsys, tmp_path):
        status, _, err = run(capsys, "parse", str(tmp_path / "missing.hyt"))
        assert_that(status).is_equal_to(2)
        assert_that(err).starts_with("hytccp: error:")

    def test_bad_seed(self, capsys, monkeypatch):
        monkeypatch.setenv(cli.SEED_VARIABLE, "x")
        status, _, err = run(capsys, "run", corpus("cooler"), *COOLER)
        assert_that(status).is_equal_to(2)
        assert_that(err).contains("HYTCCP_SEED is not an integer")


def test_diagnostic():
    error = HytSyntaxError("expected ')'", 3, 7)
    assert_that(cli.diagnostic(error, "p.hyt")).is_equal_to(
        "p.hyt:3:7: error: expected ')'"
    )
    assert_that(cli.diagnostic(HytccpError("boom"), "p.hyt")).is_equal_to(
        "p.hyt: error: boom"
    )
    assert_that(cli.diagnostic(HytccpError("boom"))).is_equal_to("error: boom")
