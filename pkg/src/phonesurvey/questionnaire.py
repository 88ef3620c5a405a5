"""Branching survey scripts: validation, navigation, and answer interpretation.

A questionnaire is an acyclic graph of question nodes. Navigation follows
branch predicates evaluated against typed answers; every path ends at the
``END`` sentinel. All functions here are pure; a loaded questionnaire is
immutable and safe to share across concurrent sessions.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field
from enum import Enum

END = "END"

SCHEMA_VERSION = "v1"


class QuestionnaireFormatError(Exception):
    """Raised when a questionnaire document cannot be read at all.

    Distinct from validation failure: a file that parses but breaks
    invariants yields a non-empty ValidationReport instead.
    """


class ContractViolation(Exception):
    """Caller bug: a precondition of a pure operation was not met."""


class Kind(str, Enum):
    YES_NO = "yes_no"
    NPS = "nps"
    LIKERT = "likert"
    OPEN_ENDED = "open_ended"
    STATEMENT = "statement"


# ---------------------------------------------------------------------------
# Answers and predicates


class AnswerKind(str, Enum):
    YES_NO = "yes_no"
    RATING = "rating"
    LIKERT = "likert"
    FREE_TEXT = "free_text"


@dataclass(frozen=True)
class Answer:
    kind: AnswerKind
    value: bool | int | str

    @staticmethod
    def yes_no(value: bool) -> "Answer":
        return Answer(AnswerKind.YES_NO, bool(value))

    @staticmethod
    def rating(value: int) -> "Answer":
        return Answer(AnswerKind.RATING, int(value))

    @staticmethod
    def likert(value: int) -> "Answer":
        return Answer(AnswerKind.LIKERT, int(value))

    @staticmethod
    def free_text(value: str) -> "Answer":
        text = value.strip()
        if not text:
            raise ContractViolation("free-text answer must be non-empty")
        return Answer(AnswerKind.FREE_TEXT, text)

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "value": self.value}

    @staticmethod
    def from_json(obj: dict) -> "Answer":
        return Answer(AnswerKind(obj["kind"]), obj["value"])


class PredicateKind(str, Enum):
    EQUALS_YES = "equals_yes"
    EQUALS_NO = "equals_no"
    RATING_IN_RANGE = "rating_in_range"
    ALWAYS = "always"


@dataclass(frozen=True)
class Predicate:
    kind: PredicateKind
    lo: int | None = None
    hi: int | None = None

    def matches(self, answer: Answer) -> bool:
        if self.kind is PredicateKind.ALWAYS:
            return True
        if self.kind is PredicateKind.EQUALS_YES:
            return answer.kind is AnswerKind.YES_NO and answer.value is True
        if self.kind is PredicateKind.EQUALS_NO:
            return answer.kind is AnswerKind.YES_NO and answer.value is False
        # rating_in_range covers both NPS ratings and Likert indices
        if answer.kind in (AnswerKind.RATING, AnswerKind.LIKERT):
            return self.lo <= answer.value <= self.hi
        return False

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind.value}
        if self.kind is PredicateKind.RATING_IN_RANGE:
            out["lo"] = self.lo
            out["hi"] = self.hi
        return out

    @staticmethod
    def from_json(obj: dict) -> "Predicate":
        kind = PredicateKind(obj["kind"])
        if kind is PredicateKind.RATING_IN_RANGE:
            return Predicate(kind, int(obj["lo"]), int(obj["hi"]))
        return Predicate(kind)


@dataclass(frozen=True)
class Branch:
    predicate: Predicate
    target: str  # node id or END


# ---------------------------------------------------------------------------
# Nodes and questionnaires


@dataclass(frozen=True)
class QuestionNode:
    id: str
    kind: Kind
    prompt: str
    branches: tuple[Branch, ...] = ()
    default_next: str = END
    counts_toward_progress: bool = True
    point_count: int | None = None  # Likert only

    def valid_range(self) -> tuple[int, int] | None:
        if self.kind is Kind.NPS:
            return (0, 10)
        if self.kind is Kind.LIKERT:
            return (1, self.point_count or 0)
        return None


@dataclass(frozen=True)
class Questionnaire:
    id: str
    language: str
    title: str
    client_name: str
    service_name: str
    expected_duration_min: int
    entry_node: str
    nodes: tuple[QuestionNode, ...]
    node_map: dict[str, QuestionNode] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "node_map", {n.id: n for n in self.nodes})

    def node(self, node_id: str) -> QuestionNode:
        try:
            return self.node_map[node_id]
        except KeyError:
            raise ContractViolation(f"unknown node id {node_id!r}") from None


@dataclass(frozen=True)
class Violation:
    node_id: str | None
    reason: str


ValidationReport = list[Violation]


def validate(questionnaire: Questionnaire) -> ValidationReport:
    """Return every invariant violation; an empty report means valid."""
    report: ValidationReport = []
    q = questionnaire

    if not q.nodes:
        report.append(Violation(None, "questionnaire has no nodes"))
        return report
    if q.expected_duration_min <= 0:
        report.append(Violation(None, "expected_duration_min must be positive"))

    seen: set[str] = set()
    for node in q.nodes:
        if node.id in seen:
            report.append(Violation(node.id, "duplicate node id"))
        seen.add(node.id)

    if q.entry_node not in seen:
        report.append(Violation(None, f"entry_node {q.entry_node!r} does not exist"))

    for node in q.nodes:
        targets = [b.target for b in node.branches] + [node.default_next]
        for t in targets:
            if t != END and t not in seen:
                report.append(Violation(node.id, f"dangling branch target {t!r}"))
        if node.kind is Kind.STATEMENT:
            if node.branches:
                report.append(Violation(node.id, "statement nodes may not branch"))
            if node.counts_toward_progress:
                report.append(
                    Violation(node.id, "statement nodes must not count toward progress")
                )
        if node.kind is Kind.LIKERT:
            if node.point_count is None or node.point_count < 2:
                report.append(Violation(node.id, "likert point_count must be >= 2"))
        elif node.point_count is not None:
            report.append(Violation(node.id, "point_count only valid on likert nodes"))
        for branch in node.branches:
            if not _predicate_compatible(node, branch.predicate):
                report.append(
                    Violation(
                        node.id,
                        f"branch predicate {branch.predicate.kind.value} incompatible "
                        f"with node kind {node.kind.value}",
                    )
                )

    report.extend(_find_cycles(q))
    return report


def _predicate_compatible(node: QuestionNode, predicate: Predicate) -> bool:
    if predicate.kind is PredicateKind.ALWAYS:
        return True
    if predicate.kind in (PredicateKind.EQUALS_YES, PredicateKind.EQUALS_NO):
        return node.kind is Kind.YES_NO
    if predicate.kind is PredicateKind.RATING_IN_RANGE:
        rng = node.valid_range()
        if rng is None:
            return False
        lo, hi = rng
        if predicate.lo is None or predicate.hi is None:
            return False
        return lo <= predicate.lo <= predicate.hi <= hi
    return False


def _find_cycles(q: Questionnaire) -> ValidationReport:
    # Iterative three-color DFS over the branch graph.
    report: ValidationReport = []
    color: dict[str, int] = {}  # 0 unseen, 1 in progress, 2 done
    flagged: set[str] = set()

    def successors(node_id: str) -> list[str]:
        node = q.node_map.get(node_id)
        if node is None:
            return []
        out = [b.target for b in node.branches if b.target != END]
        if node.default_next != END:
            out.append(node.default_next)
        return out

    for start in q.node_map:
        if color.get(start):
            continue
        stack: list[tuple[str, int]] = [(start, 0)]
        color[start] = 1
        while stack:
            node_id, idx = stack[-1]
            succ = successors(node_id)
            if idx < len(succ):
                stack[-1] = (node_id, idx + 1)
                nxt = succ[idx]
                c = color.get(nxt, 0)
                if c == 1:
                    if nxt not in flagged:
                        flagged.add(nxt)
                        report.append(Violation(nxt, "cycle detected"))
                elif c == 0:
                    color[nxt] = 1
                    stack.append((nxt, 0))
            else:
                color[node_id] = 2
                stack.pop()
    return report


# ---------------------------------------------------------------------------
# Navigation


def next_node(questionnaire: Questionnaire, current: str, answer: Answer | None) -> str:
    """Target of the first matching branch, otherwise default_next.

    Statements ignore the answer entirely. Returns END at the terminal.
    """
    node = questionnaire.node(current)
    if node.kind is Kind.STATEMENT:
        return node.default_next
    if answer is None:
        raise ContractViolation(f"node {current!r} requires an answer")
    if not _answer_compatible(node, answer):
        raise ContractViolation(
            f"answer kind {answer.kind.value} incompatible with node {current!r} "
            f"({node.kind.value})"
        )
    for branch in node.branches:
        if branch.predicate.matches(answer):
            return branch.target
    return node.default_next


def _answer_compatible(node: QuestionNode, answer: Answer) -> bool:
    if node.kind is Kind.YES_NO:
        return answer.kind in (AnswerKind.YES_NO, AnswerKind.FREE_TEXT)
    if node.kind is Kind.NPS:
        return answer.kind in (AnswerKind.RATING, AnswerKind.FREE_TEXT)
    if node.kind is Kind.LIKERT:
        return answer.kind in (AnswerKind.LIKERT, AnswerKind.FREE_TEXT)
    if node.kind is Kind.OPEN_ENDED:
        return answer.kind is AnswerKind.FREE_TEXT
    return False


def realized_path(
    questionnaire: Questionnaire, answers: dict[str, Answer], current: str
) -> list[str]:
    """Node ids on the session's path: answered prefix plus the forward
    default-next chain from ``current``. ``current`` may be END."""
    q = questionnaire
    path: list[str] = []
    node_id = q.entry_node
    guard = len(q.nodes) + 1
    while node_id != END and node_id != current:
        if guard == 0:
            raise ContractViolation("path exceeds node count (cycle?)")
        guard -= 1
        node = q.node(node_id)
        path.append(node_id)
        if node.kind is Kind.STATEMENT:
            node_id = node.default_next
        elif node_id in answers:
            node_id = next_node(q, node_id, answers[node_id])
        else:
            raise ContractViolation(
                f"node {node_id!r} on path is unanswered before current"
            )
    if current != END and node_id != current:
        raise ContractViolation(f"current node {current!r} not reachable via answers")
    # Forward chain from current, branches unresolved -> default_next.
    while node_id != END:
        if guard == 0:
            raise ContractViolation("path exceeds node count (cycle?)")
        guard -= 1
        node = q.node(node_id)
        path.append(node_id)
        if node_id in answers and node.kind is not Kind.STATEMENT:
            node_id = next_node(q, node_id, answers[node_id])
        else:
            node_id = node.default_next
    return path


def progress(
    questionnaire: Questionnaire, answers: dict[str, Answer], current: str
) -> float:
    """Completion fraction over the realized path's progress-counting nodes."""
    path = realized_path(questionnaire, answers, current)
    counting = [n for n in path if questionnaire.node(n).counts_toward_progress]
    if not counting:
        return 1.0 if current == END else 0.0
    answered = sum(1 for n in counting if n in answers)
    return answered / len(counting)


# ---------------------------------------------------------------------------
# Utterance interpretation

_YES_WORDS = {
    "en": {"yes", "yeah", "yep", "yup", "sure", "ok", "okay", "definitely",
           "absolutely", "correct", "right"},
    "es": {"si", "claro", "vale", "dale", "bueno", "correcto", "afirmativo",
           "seguro"},
}
_YES_PHRASES = {
    "en": {"of course", "i do", "i have", "go ahead"},
    "es": {"por supuesto", "de acuerdo", "esta bien", "como no"},
}
_NO_WORDS = {
    "en": {"no", "nope", "nah", "never", "negative"},
    "es": {"no", "nunca", "negativo", "jamas"},
}
_NO_PHRASES = {
    "en": {"not really", "i don't", "i do not", "no thanks", "no thank you"},
    "es": {"para nada", "no gracias"},
}

# 0..15 so out-of-range spoken numbers ("eleven") are detected as such
# rather than falling through to Ambiguous.
_NUMBER_WORDS = {
    "en": {
        "zero": 0, "one": 1, "two": 2, "three": 3, "four": 4, "five": 5,
        "six": 6, "seven": 7, "eight": 8, "nine": 9, "ten": 10,
        "eleven": 11, "twelve": 12, "thirteen": 13, "fourteen": 14,
        "fifteen": 15,
    },
    "es": {
        "cero": 0, "uno": 1, "una": 1, "dos": 2, "tres": 3, "cuatro": 4,
        "cinco": 5, "seis": 6, "siete": 7, "ocho": 8, "nueve": 9,
        "diez": 10, "once": 11, "doce": 12, "trece": 13, "catorce": 14,
        "quince": 15,
    },
}


def _lang_key(language: str) -> str:
    base = language.split("-")[0].lower()
    return base if base in ("en", "es") else "en"


def _fold(text: str) -> str:
    # Case-fold and strip accents so "Sí" matches "si".
    nfkd = unicodedata.normalize("NFKD", text.lower())
    return "".join(c for c in nfkd if not unicodedata.combining(c))


def _tokens(text: str) -> list[str]:
    return re.findall(r"[a-z0-9]+", _fold(text))


class ParseStatus(str, Enum):
    PARSED = "parsed"
    OUT_OF_RANGE = "out_of_range"
    AMBIGUOUS = "ambiguous"


@dataclass(frozen=True)
class ParseResult:
    status: ParseStatus
    answer: Answer | None = None
    detail: str = ""

    @staticmethod
    def parsed(answer: Answer) -> "ParseResult":
        return ParseResult(ParseStatus.PARSED, answer)

    @staticmethod
    def out_of_range(detail: str) -> "ParseResult":
        return ParseResult(ParseStatus.OUT_OF_RANGE, None, detail)

    @staticmethod
    def ambiguous(detail: str) -> "ParseResult":
        return ParseResult(ParseStatus.AMBIGUOUS, None, detail)


def classify_yes_no(utterance: str, language: str) -> bool | None:
    """True/False for a recognized affirmation/negation, None otherwise."""
    lang = _lang_key(language)
    folded = _fold(utterance)
    tokens = set(_tokens(utterance))
    yes = bool(tokens & _YES_WORDS[lang]) or any(
        p in folded for p in _YES_PHRASES[lang]
    )
    no = bool(tokens & _NO_WORDS[lang]) or any(p in folded for p in _NO_PHRASES[lang])
    # English negation phrases contain bare "no"/"not" handled above; a
    # simultaneous yes+no match is treated as unclear.
    if yes and no:
        return None
    if yes:
        return True
    if no:
        return False
    return None


def extract_numbers(utterance: str, language: str) -> list[int]:
    """All integers present as digits or number-words, in order."""
    lang = _lang_key(language)
    table = _NUMBER_WORDS[lang]
    values = []
    for tok in _tokens(utterance):
        if tok.isdigit():
            values.append(int(tok))
        elif tok in table:
            values.append(table[tok])
    return values


def parse_answer(node: QuestionNode, utterance: str, language: str) -> ParseResult:
    """Interpret one finalized participant turn as a typed answer."""
    text = utterance.strip()
    if not text:
        return ParseResult.ambiguous("empty")

    if node.kind is Kind.OPEN_ENDED:
        return ParseResult.parsed(Answer.free_text(text))

    if node.kind is Kind.YES_NO:
        verdict = classify_yes_no(text, language)
        if verdict is None:
            return ParseResult.ambiguous("no yes/no keyword recognized")
        return ParseResult.parsed(Answer.yes_no(verdict))

    if node.kind in (Kind.NPS, Kind.LIKERT):
        numbers = extract_numbers(text, language)
        distinct = sorted(set(numbers))
        if not distinct:
            return ParseResult.ambiguous("no number recognized")
        if len(distinct) > 1:
            return ParseResult.ambiguous(f"multiple numbers: {distinct}")
        value = distinct[0]
        lo, hi = node.valid_range()
        if not lo <= value <= hi:
            return ParseResult.out_of_range(f"{value} outside [{lo}, {hi}]")
        if node.kind is Kind.NPS:
            return ParseResult.parsed(Answer.rating(value))
        return ParseResult.parsed(Answer.likert(value))

    # Statements take no answer; anything said is kept verbatim.
    return ParseResult.parsed(Answer.free_text(text))


# ---------------------------------------------------------------------------
# Serialization (schema "v1")


def to_dict(q: Questionnaire) -> dict:
    return {
        "version": SCHEMA_VERSION,
        "id": q.id,
        "language": q.language,
        "title": q.title,
        "client_name": q.client_name,
        "service_name": q.service_name,
        "expected_duration_min": q.expected_duration_min,
        "entry_node": q.entry_node,
        "nodes": [
            {
                "id": n.id,
                "kind": n.kind.value,
                "prompt": n.prompt,
                **({"point_count": n.point_count} if n.point_count is not None else {}),
                "branches": [
                    {"predicate": b.predicate.to_json(), "target": b.target}
                    for b in n.branches
                ],
                "default_next": n.default_next,
                "counts_toward_progress": n.counts_toward_progress,
            }
            for n in q.nodes
        ],
    }


def from_dict(doc: dict) -> Questionnaire:
    try:
        if doc.get("version") != SCHEMA_VERSION:
            raise QuestionnaireFormatError(
                f"unsupported questionnaire version {doc.get('version')!r}"
            )
        nodes = tuple(
            QuestionNode(
                id=nd["id"],
                kind=Kind(nd["kind"]),
                prompt=nd["prompt"],
                branches=tuple(
                    Branch(Predicate.from_json(b["predicate"]), b["target"])
                    for b in nd.get("branches", [])
                ),
                default_next=nd.get("default_next", END),
                counts_toward_progress=nd.get("counts_toward_progress", True),
                point_count=nd.get("point_count"),
            )
            for nd in doc["nodes"]
        )
        return Questionnaire(
            id=doc["id"],
            language=doc["language"],
            title=doc["title"],
            client_name=doc["client_name"],
            service_name=doc["service_name"],
            expected_duration_min=int(doc["expected_duration_min"]),
            entry_node=doc["entry_node"],
            nodes=nodes,
        )
    except QuestionnaireFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise QuestionnaireFormatError(f"malformed questionnaire document: {exc}") from exc


def load(path) -> Questionnaire:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise QuestionnaireFormatError(f"cannot read questionnaire: {exc}") from exc
    if not isinstance(doc, dict):
        raise QuestionnaireFormatError("questionnaire document must be an object")
    return from_dict(doc)


def dump(q: Questionnaire, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_dict(q), fh, ensure_ascii=False, indent=2)
        fh.write("\n")
