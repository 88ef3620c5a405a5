#!/usr/bin/env python3
"""End-to-end walkthrough of the survey stack, entirely offline.

Validates the bundled questionnaires, replays one scripted web-call session
through the session server, runs a seeded field-scale simulation, and prints
the response-rate, funnel, and conversation-summary reports from its output.

Usage: python3 scripts/run_demo.py [--out demo_out] [--seed 42]
"""

from __future__ import annotations

import argparse
import json
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent

from phonesurvey import analytics, outreach, questionnaire as qn, sim as simmod
from phonesurvey.server import SessionServer
from phonesurvey.turntaking import TurnTakingConfig


def banner(title: str) -> None:
    print(f"\n=== {title} " + "=" * max(0, 70 - len(title)))


def validate_fixtures() -> qn.Questionnaire:
    banner("questionnaire validation")
    q19 = None
    for path in sorted((ROOT / "fixtures").glob("questionnaire_*.json")):
        q = qn.load(path)
        violations = qn.validate(q)
        status = "valid" if not violations else "; ".join(v.reason for v in violations)
        print(f"  {path.name}: {q.id} ({len(q.nodes)} nodes) -> {status}")
        if violations:
            sys.exit(1)
        if q.id == "svc-feedback-19q":
            q19 = q
    assert q19 is not None, "19-question fixture missing"
    return q19


def scripted_web_session(q19: qn.Questionnaire) -> None:
    banner("scripted web-call session (server frames)")
    open_replies = [
        "I mostly check my balance and pay the electricity bill",
        "The app is quick and I never have to queue at the branch",
        "it saves me the trip across town",
        "I told them signing up takes five minutes",
        "transfers, because my rent goes out every month",
        "maybe a way to talk to a person inside the app",
        "that covers everything, thank you",
    ]

    def answer_for(node: qn.QuestionNode, turn: int) -> str:
        if node.kind is qn.Kind.YES_NO:
            return "yes" if turn % 3 else "no"
        if node.kind is qn.Kind.NPS:
            return "9"
        if node.kind is qn.Kind.LIKERT:
            return str(min(4, node.point_count))
        return open_replies[turn % len(open_replies)]

    with tempfile.TemporaryDirectory() as tmp:
        server = SessionServer(tmp, virtual_time=True)
        server.create_campaign(
            {
                "campaign_id": "demo",
                "questionnaire": qn.to_dict(q19),
                "contacts_csv": "first_name,phone,timezone\nAna,+51911111111,America/Lima\n",
            }
        )
        token = server.store.load_campaign("demo")["contacts"][0]["link_token"]
        boot = server.open_web_session(token)
        frames = list(boot["frames"])
        turn = 0
        while not any(f["type"] == "end" for f in frames):
            for frame in frames:
                text = frame["payload"].get("text", json.dumps(frame["payload"]))
                print(f"  <- {frame['type']:13s} {text}")
            questions = [
                f for f in frames
                if f["type"] == "agent_say" and f["payload"].get("kind") == "question"
            ]
            if questions:
                turn += 1
                reply = answer_for(q19.node(questions[-1]["payload"]["node"]), turn)
            else:
                reply = "yes"  # consent
            print(f"  -> user_text      {reply}")
            frames = server.route_frames(
                boot["session_id"], [{"type": "user_text", "payload": {"text": reply}}]
            )
        for frame in frames:
            text = frame["payload"].get("text", json.dumps(frame["payload"]))
            print(f"  <- {frame['type']:13s} {text}")


def run_field_simulation(q19: qn.Questionnaire, out_dir: Path, seed: int) -> None:
    banner(f"seeded direct-call simulation (2539 attempts, seed {seed})")
    campaign = outreach.Campaign(
        campaign_id="demo",
        questionnaire_id=q19.id,
        contacts=simmod.make_contacts(2539, "demo"),
        callback_number="+51900000000",
    )
    run = simmod.run_simulation(
        campaign,
        q19,
        simmod.DEFAULT_PERU_MIX,
        TurnTakingConfig(),
        seed,
        method=outreach.Method.DIRECT_CALL,
        out_dir=out_dir,
    )
    for outcome, count in run.tally().items():
        print(f"  {outcome}: {count}")

    banner("response rates (reference table + this run)")
    for row in (ROOT / "fixtures" / "reference_rate_counts.csv").read_text().strip().splitlines()[1:]:
        method, attempts, fully, partial = row.split(",")
        rates = analytics.response_rates(int(attempts), int(fully), int(partial))
        print(f"  {method}: RR1 {rates.rr1_display()} RR2 {rates.rr2_display()}")
    rates = analytics.rates_from_outcomes(run.outcomes())
    print(f"  this run: RR1 {rates.rr1_display()} RR2 {rates.rr2_display()}")

    banner("attempt funnel")
    for node in run.funnel.to_json()["nodes"]:
        print(f"  {node['id']}: {node['count']}")

    banner("conversation summary over completed interviews")
    open_ids = {n.id for n in q19.nodes if n.kind is qn.Kind.OPEN_ENDED}
    metrics = [
        analytics.conversation_metrics(run.transcripts[a.session_id], open_ids)
        for a in run.attempts
        if a.outcome is analytics.CallOutcome.FULLY_COMPLETED and a.session_id
    ]
    print(analytics.format_summary_table(analytics.summary_table(metrics)))
    print(f"\nartifacts written to {out_dir}/")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("demo_out"))
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    q19 = validate_fixtures()
    scripted_web_session(q19)
    run_field_simulation(q19, args.out, args.seed)


if __name__ == "__main__":
    main()
