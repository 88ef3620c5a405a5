"""Regenerates the fixture files under fixtures/.

The main fixture is a 19-question customer-feedback script with balanced
branches: every realized path asks exactly 19 questions, so per-interview
question counts are stable across branch outcomes.
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from phonesurvey.questionnaire import (  # noqa: E402
    Branch,
    Kind,
    Predicate,
    PredicateKind,
    QuestionNode,
    Questionnaire,
    dump,
    validate,
    END,
)

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures"


def yes_no(node_id, prompt, yes_target=None, no_target=None, nxt=END):
    branches = []
    if yes_target:
        branches.append(Branch(Predicate(PredicateKind.EQUALS_YES), yes_target))
    if no_target:
        branches.append(Branch(Predicate(PredicateKind.EQUALS_NO), no_target))
    return QuestionNode(node_id, Kind.YES_NO, prompt, tuple(branches), nxt)


def nps(node_id, prompt, splits=None, nxt=END):
    branches = tuple(
        Branch(Predicate(PredicateKind.RATING_IN_RANGE, lo, hi), target)
        for lo, hi, target in (splits or [])
    )
    return QuestionNode(node_id, Kind.NPS, prompt, branches, nxt)


def likert(node_id, prompt, points=5, nxt=END):
    return QuestionNode(node_id, Kind.LIKERT, prompt, (), nxt, point_count=points)


def open_q(node_id, prompt, nxt=END):
    return QuestionNode(node_id, Kind.OPEN_ENDED, prompt, (), nxt)


def statement(node_id, prompt, nxt=END):
    return QuestionNode(node_id, Kind.STATEMENT, prompt, (), nxt, counts_toward_progress=False)


def build_19q() -> Questionnaire:
    nodes = [
        statement(
            "s_intro",
            "I will ask you a few questions about {service_name}; there are no "
            "right or wrong answers.",
            "q01",
        ),
        yes_no(
            "q01",
            "Have you used the {service_name} mobile app in the last month?",
            yes_target="q02a",
            no_target="q02b",
            nxt="q02b",
        ),
        open_q("q02a", "Could you briefly describe your experience with it?", "q03"),
        open_q("q02b", "What has kept you from using it?", "q03"),
        nps(
            "q03",
            "On a scale from zero to ten, how likely are you to recommend "
            "{service_name} to a friend?",
            splits=[(0, 6, "q04d"), (7, 8, "q04p"), (9, 10, "q04m")],
            nxt="q04p",
        ),
        open_q("q04d", "What would need to improve for you to rate it higher?", "q05"),
        open_q("q04p", "What is one thing we could do better?", "q05"),
        open_q("q04m", "What do you value most about the service?", "q05"),
        likert(
            "q05",
            "From one to five, how satisfied are you with the sign-up process?",
            5,
            "q06",
        ),
        yes_no(
            "q06",
            "Did you contact customer support in the last three months?",
            yes_target="q07a",
            no_target="q07b",
            nxt="q07b",
        ),
        open_q("q07a", "How was that support experience?", "s_mid"),
        open_q("q07b", "Where do you usually look for help instead?", "s_mid"),
        statement("s_mid", "Thank you, we are making good progress.", "q08"),
        likert(
            "q08",
            "From one to five, how easy is it to find what you need in the app?",
            5,
            "q09",
        ),
        yes_no(
            "q09",
            "Have you recommended {service_name} to anyone already?",
            yes_target="q10a",
            no_target="q10b",
            nxt="q10b",
        ),
        open_q("q10a", "What did you tell them about it?", "q11"),
        open_q("q10b", "What would make you comfortable recommending it?", "q11"),
        open_q("q11", "Which feature do you use most often, and why?", "q12"),
        likert(
            "q12",
            "From one to seven, how much do you trust {client_name} with your data?",
            7,
            "q13",
        ),
        yes_no("q13", "Do the fees feel fair to you?", nxt="q14"),
        open_q("q14", "Is there a service you wish {client_name} offered?", "q15"),
        likert(
            "q15",
            "From one to five, how reliable has the app been for you?",
            5,
            "q16",
        ),
        open_q("q16", "Can you tell me about the last time the app saved you a trip?", "q17"),
        yes_no("q17", "Would you attend a free online workshop about the app?", nxt="q18"),
        likert(
            "q18",
            "From one to five, how clear are the notifications you receive?",
            5,
            "q19",
        ),
        open_q("q19", "Is there anything else you would like to share?", END),
    ]
    return Questionnaire(
        id="svc-feedback-19q",
        language="en-US",
        title="Customer feedback survey",
        client_name="Acme Bank",
        service_name="mobile banking",
        expected_duration_min=15,
        entry_node="s_intro",
        nodes=tuple(nodes),
    )


def build_es_5q() -> Questionnaire:
    nodes = [
        yes_no(
            "p01",
            "Usaste el servicio de {service_name} este mes?",
            yes_target="p02",
            nxt="p03",
        ),
        open_q("p02", "Podrías describir brevemente tu experiencia?", "p03"),
        nps(
            "p03",
            "Del cero al diez, qué tan probable es que recomiendes {service_name}?",
            nxt="p04",
        ),
        likert("p04", "Del uno al cinco, qué tan satisfecho estás con la atención?", 5, "p05"),
        open_q("p05", "Hay algo más que quieras contarnos?", END),
    ]
    return Questionnaire(
        id="feedback-es-5q",
        language="es-PE",
        title="Encuesta de satisfacción",
        client_name="Banco Sol",
        service_name="banca móvil",
        expected_duration_min=10,
        entry_node="p01",
        nodes=tuple(nodes),
    )


def main():
    FIXTURES.mkdir(exist_ok=True)

    for builder, name in [(build_19q, "questionnaire_19q.json"), (build_es_5q, "questionnaire_es_5q.json")]:
        q = builder()
        problems = validate(q)
        assert not problems, problems
        dump(q, FIXTURES / name)
        print(f"wrote {name} ({len(q.nodes)} nodes)")

    with open(FIXTURES / "reference_rate_counts.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "attempts", "fully_completed", "partial_76_plus"])
        writer.writerow(["us_webcall", 75, 3, 5])
        writer.writerow(["peru_webcall", 200, 11, 17])
        writer.writerow(["peru_direct", 2539, 131, 144])
    print("wrote reference_rate_counts.csv")

    personas = [
        {"weight": 0.57, "name": "unreachable", "answer_prob": 0.0, "callback_prob": 0.002},
        {
            "weight": 0.37,
            "name": "reluctant",
            "answer_prob": 0.55,
            "ai_reveal_hangup_prob": 0.55,
            "refusal_prob": 0.30,
            "per_question_dropout_hazard": 0.10,
            "verbosity": 6,
        },
        {
            "weight": 0.06,
            "name": "engaged",
            "answer_prob": 0.75,
            "ai_reveal_hangup_prob": 0.08,
            "refusal_prob": 0.06,
            "per_question_dropout_hazard": 0.006,
            "invalid_answer_prob": 0.05,
            "verbosity": 18,
            "silence_prob": 0.04,
            "callback_prob": 0.02,
        },
    ]
    with open(FIXTURES / "personas_default.json", "w", encoding="utf-8") as fh:
        json.dump(personas, fh, indent=2)
        fh.write("\n")
    print("wrote personas_default.json")

    with open(FIXTURES / "contacts_sample.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["first_name", "phone", "timezone"])
        writer.writerow(["Ana", "+51 9 1234 5678", "America/Lima"])
        writer.writerow(["Luis", "+51 9 8765 4321", "America/Lima"])
        writer.writerow(["Maya", "+1 415 555 0100", "America/New_York"])
    print("wrote contacts_sample.csv")


if __name__ == "__main__":
    main()
