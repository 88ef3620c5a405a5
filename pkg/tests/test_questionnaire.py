"""Questionnaire graph validation, navigation, parsing, and serialization."""

from __future__ import annotations

import json

import pytest
from hypothesis import given, settings, strategies as st

from phonesurvey import questionnaire as qn
from phonesurvey.questionnaire import (
    Answer,
    Branch,
    ContractViolation,
    Kind,
    ParseStatus,
    Predicate,
    PredicateKind,
    QuestionNode,
    Questionnaire,
    QuestionnaireFormatError,
    END,
)

from . import oracle


def _mini(nodes, entry="a", **overrides) -> Questionnaire:
    base = dict(
        id="mini",
        language="en-US",
        title="Mini",
        client_name="TestCo",
        service_name="svc",
        expected_duration_min=5,
        entry_node=entry,
        nodes=tuple(nodes),
    )
    base.update(overrides)
    return Questionnaire(**base)


# ---------------------------------------------------------------------------
# Validation


def test_fixture_questionnaires_validate_clean(q19, q_es5, q_branchy8):
    for q in (q19, q_es5, q_branchy8):
        assert qn.validate(q) == []


def test_duplicate_node_ids_flagged():
    q = _mini([
        QuestionNode("a", Kind.OPEN_ENDED, "One?", (), END),
        QuestionNode("a", Kind.OPEN_ENDED, "Two?", (), END),
    ])
    assert any(v.reason == "duplicate node id" for v in qn.validate(q))


def test_dangling_target_flagged():
    q = _mini([QuestionNode("a", Kind.OPEN_ENDED, "One?", (), "ghost")])
    report = qn.validate(q)
    assert any("dangling branch target" in v.reason for v in report)


def test_missing_entry_node_flagged():
    q = _mini([QuestionNode("a", Kind.OPEN_ENDED, "One?", (), END)], entry="zzz")
    assert any("entry_node" in v.reason for v in qn.validate(q))


def test_cycle_detected():
    q = _mini([
        QuestionNode("a", Kind.OPEN_ENDED, "One?", (), "b"),
        QuestionNode("b", Kind.OPEN_ENDED, "Two?", (), "a"),
    ])
    assert any(v.reason == "cycle detected" for v in qn.validate(q))


def test_self_loop_detected():
    q = _mini([QuestionNode("a", Kind.OPEN_ENDED, "One?", (), "a")])
    assert any(v.reason == "cycle detected" for v in qn.validate(q))


def test_statement_constraints():
    q = _mini([
        QuestionNode(
            "a",
            Kind.STATEMENT,
            "Hello.",
            (Branch(Predicate(PredicateKind.ALWAYS), END),),
            END,
            counts_toward_progress=True,
        )
    ])
    reasons = {v.reason for v in qn.validate(q)}
    assert "statement nodes may not branch" in reasons
    assert "statement nodes must not count toward progress" in reasons


def test_likert_point_count_required():
    q = _mini([QuestionNode("a", Kind.LIKERT, "Rate?", (), END, point_count=None)])
    assert any("point_count" in v.reason for v in qn.validate(q))


def test_point_count_rejected_off_likert():
    q = _mini([QuestionNode("a", Kind.NPS, "Rate?", (), END, point_count=5)])
    assert any("point_count only valid" in v.reason for v in qn.validate(q))


def test_incompatible_predicate_flagged():
    q = _mini([
        QuestionNode(
            "a",
            Kind.NPS,
            "Rate?",
            (Branch(Predicate(PredicateKind.EQUALS_YES), END),),
            END,
        )
    ])
    assert any("incompatible" in v.reason for v in qn.validate(q))


def test_rating_branch_outside_node_range_flagged():
    q = _mini([
        QuestionNode(
            "a",
            Kind.LIKERT,
            "Rate?",
            (Branch(Predicate(PredicateKind.RATING_IN_RANGE, 1, 9), END),),
            END,
            point_count=5,
        )
    ])
    assert any("incompatible" in v.reason for v in qn.validate(q))


# ---------------------------------------------------------------------------
# Navigation


def test_next_node_picks_first_matching_branch(q_branchy8):
    assert qn.next_node(q_branchy8, "a", Answer.yes_no(True)) == "b"
    assert qn.next_node(q_branchy8, "a", Answer.yes_no(False)) == "c"
    assert qn.next_node(q_branchy8, "b", Answer.rating(6)) == "d"
    assert qn.next_node(q_branchy8, "b", Answer.rating(7)) == "e"
    assert qn.next_node(q_branchy8, "c", Answer.likert(1)) == "d"
    assert qn.next_node(q_branchy8, "c", Answer.likert(2)) == "e"


def test_next_node_free_text_falls_to_default(q_branchy8):
    # An unparseable fallback answer matches no predicate.
    assert qn.next_node(q_branchy8, "a", Answer.free_text("mumble")) == "c"


def test_next_node_requires_answer(q_branchy8):
    with pytest.raises(ContractViolation):
        qn.next_node(q_branchy8, "a", None)


def test_next_node_rejects_incompatible_answer(q_branchy8):
    with pytest.raises(ContractViolation):
        qn.next_node(q_branchy8, "b", Answer.yes_no(True))


def test_statement_ignores_answer(q_branchy8):
    assert qn.next_node(q_branchy8, "f", None) == "g"


def test_unknown_node_raises(q_branchy8):
    with pytest.raises(ContractViolation):
        q_branchy8.node("nope")


def _domain_answer(node: QuestionNode, raw):
    if node.kind is Kind.YES_NO:
        return Answer.yes_no(raw)
    if node.kind is Kind.NPS:
        return Answer.rating(raw)
    if node.kind is Kind.LIKERT:
        return Answer.likert(raw)
    return Answer.free_text(raw)


def engine_walk(q: Questionnaire, assignment: dict) -> list[str]:
    """Path through the package's navigation for a complete assignment."""
    path, node_id, guard = [], q.entry_node, len(q.nodes) + 1
    while node_id != END:
        assert guard > 0
        guard -= 1
        path.append(node_id)
        node = q.node(node_id)
        if node.kind is Kind.STATEMENT:
            node_id = qn.next_node(q, node_id, None)
        else:
            node_id = qn.next_node(q, node_id, _domain_answer(node, assignment[node_id]))
    return path


@pytest.mark.parametrize("fixture_name", ["q_es5", "q_branchy8"])
def test_exhaustive_paths_match_reference(fixture_name, request):
    q = request.getfixturevalue(fixture_name)
    doc = qn.to_dict(q)
    checked = 0
    for assignment in oracle.all_assignments(doc):
        assert engine_walk(q, assignment) == oracle.reference_walk(doc, assignment)
        checked += 1
    assert checked > 1


# ---------------------------------------------------------------------------
# Progress


def test_progress_counts_realized_path_only(q_branchy8):
    # yes -> b; statement f never counts.
    answers = {"a": Answer.yes_no(True)}
    # Path a b e/d... forward chain from b follows default_next: b e f g h.
    assert qn.progress(q_branchy8, answers, "b") == pytest.approx(1 / 5)
    answers["b"] = Answer.rating(9)  # -> e
    assert qn.progress(q_branchy8, answers, "e") == pytest.approx(2 / 5)


def test_progress_complete_is_one(q_branchy8):
    answers = {
        "a": Answer.yes_no(False),
        "c": Answer.likert(2),
        "e": Answer.yes_no(True),
        "g": Answer.likert(3),
        "h": Answer.free_text("done"),
    }
    assert qn.progress(q_branchy8, answers, END) == 1.0


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(min_value=0, max_value=10 ** 9))
def test_progress_monotone_under_answering(seed, q19):
    """Answering questions in order never decreases progress."""
    import random

    rng = random.Random(seed)
    answers: dict[str, Answer] = {}
    node_id = q19.entry_node
    last = qn.progress(q19, answers, node_id)
    while node_id != END:
        node = q19.node(node_id)
        if node.kind is Kind.STATEMENT:
            node_id = node.default_next
        else:
            raw = {
                Kind.YES_NO: lambda: rng.random() < 0.5,
                Kind.NPS: lambda: rng.randint(0, 10),
                Kind.LIKERT: lambda: rng.randint(1, node.point_count),
                Kind.OPEN_ENDED: lambda: "some words here",
            }[node.kind]()
            answers[node_id] = _domain_answer(node, raw)
            node_id = qn.next_node(q19, node_id, answers[node_id])
        current = qn.progress(q19, answers, node_id)
        assert current >= last - 1e-12
        last = current
    assert last == pytest.approx(1.0)


# ---------------------------------------------------------------------------
# Utterance interpretation


@pytest.mark.parametrize(
    "text,lang,expected",
    [
        ("yes", "en-US", True),
        ("Yeah sure", "en-US", True),
        ("of course", "en-US", True),
        ("no", "en-US", False),
        ("not really", "en-US", False),
        ("negative", "en-US", False),
        # "i do" (yes phrase) sits inside "i don't" (no phrase): unclear.
        ("I don't think I want to", "en-US", None),
        ("purple", "en-US", None),
        ("well yes and no", "en-US", None),
        ("Sí", "es-PE", True),
        ("si claro", "es-PE", True),
        ("por supuesto", "es-PE", True),
        ("no gracias", "es-PE", False),
        ("jamás", "es-PE", False),
        ("mmm", "es-PE", None),
    ],
)
def test_classify_yes_no(text, lang, expected):
    assert qn.classify_yes_no(text, lang) is expected


@pytest.mark.parametrize(
    "text,lang,expected",
    [
        ("I'd say 7", "en-US", [7]),
        ("seven", "en-US", [7]),
        ("maybe 8 or 9", "en-US", [8, 9]),
        ("eleven", "en-US", [11]),
        ("once", "es-PE", [11]),
        ("un ocho", "es-PE", [8]),
        ("ninguno", "es-PE", []),
        ("no numbers here", "en-US", []),
    ],
)
def test_extract_numbers(text, lang, expected):
    assert qn.extract_numbers(text, lang) == expected


def test_parse_answer_nps_paths(q_branchy8):
    node = q_branchy8.node("b")
    ok = qn.parse_answer(node, "I would say 9", "en-US")
    assert ok.status is ParseStatus.PARSED
    assert ok.answer == Answer.rating(9)

    oob = qn.parse_answer(node, "eleven", "en-US")
    assert oob.status is ParseStatus.OUT_OF_RANGE

    multi = qn.parse_answer(node, "8 or 9", "en-US")
    assert multi.status is ParseStatus.AMBIGUOUS

    none = qn.parse_answer(node, "pretty likely", "en-US")
    assert none.status is ParseStatus.AMBIGUOUS


def test_parse_answer_likert_range(q_branchy8):
    node = q_branchy8.node("c")  # 3-point scale
    assert qn.parse_answer(node, "two", "en").answer == Answer.likert(2)
    assert qn.parse_answer(node, "4", "en").status is ParseStatus.OUT_OF_RANGE
    assert qn.parse_answer(node, "0", "en").status is ParseStatus.OUT_OF_RANGE


def test_parse_answer_repeated_number_is_single(q_branchy8):
    # "9, yes 9" mentions one distinct value; not ambiguous.
    result = qn.parse_answer(q_branchy8.node("b"), "9, definitely 9", "en")
    assert result.status is ParseStatus.PARSED
    assert result.answer == Answer.rating(9)


def test_parse_answer_open_ended_verbatim(q_branchy8):
    node = q_branchy8.node("d")
    result = qn.parse_answer(node, "  It was fine.  ", "en")
    assert result.answer == Answer.free_text("It was fine.")


def test_parse_answer_empty_is_ambiguous(q_branchy8):
    assert qn.parse_answer(q_branchy8.node("d"), "   ", "en").status is ParseStatus.AMBIGUOUS


def test_free_text_answer_requires_content():
    with pytest.raises(ContractViolation):
        Answer.free_text("   ")


@settings(max_examples=300, deadline=None)
@given(st.text(max_size=80))
def test_classify_yes_no_total(text):
    """Any input maps to exactly one of {True, False, None} without raising."""
    assert qn.classify_yes_no(text, "en") in (True, False, None)
    assert qn.classify_yes_no(text, "es") in (True, False, None)


# ---------------------------------------------------------------------------
# Serialization


def test_round_trip_preserves_structure(q19, q_branchy8):
    for q in (q19, q_branchy8):
        assert qn.from_dict(qn.to_dict(q)) == q


def test_load_dump_round_trip(tmp_path, q_branchy8):
    path = tmp_path / "q.json"
    qn.dump(q_branchy8, path)
    assert qn.load(path) == q_branchy8


def test_unknown_version_rejected(q_branchy8):
    doc = qn.to_dict(q_branchy8)
    doc["version"] = "v999"
    with pytest.raises(QuestionnaireFormatError):
        qn.from_dict(doc)


def test_malformed_document_rejected(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(QuestionnaireFormatError):
        qn.load(path)
    path.write_text(json.dumps([1, 2, 3]), encoding="utf-8")
    with pytest.raises(QuestionnaireFormatError):
        qn.load(path)
    path.write_text(json.dumps({"version": "v1", "nodes": []}), encoding="utf-8")
    with pytest.raises(QuestionnaireFormatError):
        qn.load(path)
