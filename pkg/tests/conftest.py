"""Shared fixtures: questionnaire files and small hand-built graphs."""

from __future__ import annotations

from pathlib import Path

import pytest

from phonesurvey import questionnaire as qn

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"


@pytest.fixture(scope="session")
def q19() -> qn.Questionnaire:
    return qn.load(FIXTURES / "questionnaire_19q.json")


@pytest.fixture(scope="session")
def q_es5() -> qn.Questionnaire:
    return qn.load(FIXTURES / "questionnaire_es_5q.json")


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


def build_branchy_8() -> qn.Questionnaire:
    """Eight-node graph exercising every branch predicate kind."""
    N = qn.QuestionNode
    B = qn.Branch
    P = qn.Predicate
    PK = qn.PredicateKind
    nodes = (
        N("a", qn.Kind.YES_NO, "First one, yes or no?",
          (B(P(PK.EQUALS_YES), "b"), B(P(PK.EQUALS_NO), "c")), "c"),
        N("b", qn.Kind.NPS, "Rate from zero to ten?",
          (B(P(PK.RATING_IN_RANGE, 0, 6), "d"), B(P(PK.RATING_IN_RANGE, 7, 10), "e")), "e"),
        N("c", qn.Kind.LIKERT, "Rate from one to three?",
          (B(P(PK.RATING_IN_RANGE, 1, 1), "d"),), "e", point_count=3),
        N("d", qn.Kind.OPEN_ENDED, "Tell me more?", (), "f"),
        N("e", qn.Kind.YES_NO, "Another yes or no?",
          (B(P(PK.ALWAYS), "f"),), "f"),
        N("f", qn.Kind.STATEMENT, "Almost done.", (), "g", counts_toward_progress=False),
        N("g", qn.Kind.LIKERT, "Final rating one to five?", (), "h", point_count=5),
        N("h", qn.Kind.OPEN_ENDED, "Anything else?", (), qn.END),
    )
    return qn.Questionnaire(
        id="branchy-8",
        language="en-US",
        title="Branchy test survey",
        client_name="TestCo",
        service_name="the test service",
        expected_duration_min=5,
        entry_node="a",
        nodes=nodes,
    )


@pytest.fixture(scope="session")
def q_branchy8() -> qn.Questionnaire:
    return build_branchy_8()


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion at the end of the run."""
    try:
        from . import test_acceptance
    except ImportError:
        return
    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
