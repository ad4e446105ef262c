"""Grounded multi-turn Q&A over completed analyses.

When a chat-completion backend is configured the full history is forwarded
to it; otherwise (or on failure with the ``rule`` fallback policy) questions
are answered deterministically from the bound analysis via a synonym table.
"""

from __future__ import annotations

import os
import re
import threading
import time
import uuid
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import httpx

from .analysis import CaseAnalysis
from .report import (
    FORMAT_TEXT,
    LANG_EN,
    build_prompt,
    format_value,
    render_report,
    report_summary,
)
from .steiner import MEASUREMENT_IDS, MEASUREMENTS

ROLE_SYSTEM = "system"
ROLE_USER = "user"
ROLE_ASSISTANT = "assistant"

FALLBACK_RULE = "rule"
FALLBACK_ERROR = "error"


class UnknownAnalysis(KeyError):
    pass


class UnknownSession(KeyError):
    pass


class EmptyMessage(ValueError):
    pass


class BackendUnreachable(RuntimeError):
    pass


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str
    timestamp: float

    def __post_init__(self) -> None:
        if self.role not in (ROLE_SYSTEM, ROLE_USER, ROLE_ASSISTANT):
            raise ValueError(f"invalid role {self.role!r}")
        if not self.content:
            raise ValueError("message content must be non-empty")


@dataclass(frozen=True)
class CompletionBackendConfig:
    endpoint: str = ""
    model: str = ""
    api_key: str = field(default="", repr=False)  # never logged or serialized
    timeout_s: float = 30.0
    enabled: bool = False
    fallback: str = FALLBACK_RULE

    def __post_init__(self) -> None:
        if self.enabled and not (self.endpoint and self.model):
            raise ValueError("an enabled backend needs both endpoint and model")
        if self.fallback not in (FALLBACK_RULE, FALLBACK_ERROR):
            raise ValueError(f"invalid fallback policy {self.fallback!r}")

    @classmethod
    def from_env(cls, env=os.environ) -> "CompletionBackendConfig":
        endpoint = env.get("CEPH_LLM_ENDPOINT", "")
        return cls(
            endpoint=endpoint,
            model=env.get("CEPH_LLM_MODEL", "default") if endpoint else "",
            api_key=env.get("CEPH_LLM_API_KEY", ""),
            timeout_s=float(env.get("CEPH_LLM_TIMEOUT_S", "30")),
            enabled=bool(endpoint),
            fallback=env.get("CEPH_LLM_FALLBACK", FALLBACK_RULE),
        )


class Session:
    """One dialogue bound to one analysis; operations are serialized per session."""

    def __init__(self, session_id: str, analysis_id: str, language: str, grounding: str):
        self.session_id = session_id
        self.analysis_id = analysis_id
        self.language = language
        self.created_at = time.time()
        self.history: list[ChatMessage] = [
            ChatMessage(ROLE_SYSTEM, grounding, self.created_at)
        ]
        self.lock = threading.Lock()

    def to_record(self) -> dict:
        return {
            "session_id": self.session_id,
            "analysis_id": self.analysis_id,
            "language": self.language,
            "messages": [
                {"role": m.role, "content": m.content, "timestamp": m.timestamp}
                for m in self.history
            ],
        }


@lru_cache(maxsize=1)
def default_synonyms() -> tuple[tuple[str, str], ...]:
    text = resources.files("cephkit.data").joinpath("synonyms.tsv").read_text(encoding="utf-8")
    out: list[tuple[str, str]] = []
    for line in text.splitlines():
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        mid, _, synonym = line.partition("\t")
        out.append((mid.strip(), synonym.strip()))
    return tuple(out)


def _is_ascii(text: str) -> bool:
    return all(ord(ch) < 128 for ch in text)


def match_measurement(question: str, synonyms=None) -> str | None:
    """Longest-synonym match; ties break by measurement declaration order."""
    table = synonyms if synonyms is not None else default_synonyms()
    lowered = question.lower()
    best: tuple[int, int, str] | None = None  # (-len, decl_index, id)
    for mid, synonym in table:
        syn = synonym.lower()
        if _is_ascii(syn):
            hit = re.search(rf"(?<![a-z0-9]){re.escape(syn)}(?![a-z0-9])", lowered) is not None
        else:
            hit = syn in lowered
        if not hit:
            continue
        key = (-len(syn), MEASUREMENT_IDS.index(mid), mid)
        if best is None or key < best:
            best = key
    return best[2] if best else None


def grounding_text(analysis: CaseAnalysis, language: str) -> str:
    """Deterministic system message: rendered report plus the raw measurement list."""
    report = render_report(
        list(analysis.findings), language, FORMAT_TEXT, results=list(analysis.results)
    )
    raw = "\n".join(f"{r.id} {r.value!r} {r.unit}" for r in analysis.results)
    return report + "\nRaw measurements:\n" + raw


class DialogueGateway:
    """Session store + answer routing. ``get_analysis`` resolves bound analyses."""

    def __init__(
        self,
        get_analysis,
        config: CompletionBackendConfig | None = None,
        synonyms=None,
        transport: httpx.BaseTransport | None = None,
        journal_path: str | None = None,
    ):
        self._get_analysis = get_analysis
        self.config = config or CompletionBackendConfig()
        self._synonyms = synonyms
        self._transport = transport
        self._journal_path = journal_path
        self._journal_lock = threading.Lock()
        self._sessions: dict[str, Session] = {}
        self._store_lock = threading.Lock()

    def _journal(self, event: dict) -> None:
        # append-only; holds session text only, never backend credentials
        if self._journal_path is None:
            return
        import json as _json

        with self._journal_lock:
            with open(self._journal_path, "a", encoding="utf-8") as fh:
                fh.write(_json.dumps(event, ensure_ascii=False) + "\n")

    # -- sessions ----------------------------------------------------------
    def open_session(self, analysis_id: str, language: str = LANG_EN) -> Session:
        analysis = self._get_analysis(analysis_id)
        if analysis is None:
            raise UnknownAnalysis(analysis_id)
        session = Session(
            session_id=uuid.uuid4().hex,
            analysis_id=analysis_id,
            language=language,
            grounding=grounding_text(analysis, language),
        )
        with self._store_lock:
            self._sessions[session.session_id] = session
        self._journal(
            {
                "event": "open",
                "session_id": session.session_id,
                "analysis_id": analysis_id,
                "language": language,
            }
        )
        return session

    def get_session(self, session_id: str) -> Session:
        with self._store_lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise UnknownSession(session_id)
        return session

    # -- answering ---------------------------------------------------------
    def ask(self, session_id: str, text: str) -> ChatMessage:
        session = self.get_session(session_id)
        if not text or not text.strip():
            raise EmptyMessage("user message must be non-empty")
        with session.lock:
            user = ChatMessage(ROLE_USER, text, time.time())
            reply_text: str | None = None
            if self.config.enabled:
                try:
                    reply_text = self._call_backend(session.history + [user])
                except Exception as exc:
                    if self.config.fallback == FALLBACK_ERROR:
                        raise BackendUnreachable(str(exc)) from exc
                    reply_text = None
            if reply_text is None:
                reply_text = self._rule_answer(session, text)
            reply = ChatMessage(ROLE_ASSISTANT, reply_text, time.time())
            session.history.append(user)
            session.history.append(reply)
        self._journal(
            {
                "event": "exchange",
                "session_id": session.session_id,
                "user": user.content,
                "assistant": reply.content,
            }
        )
        return reply

    def _call_backend(self, messages: list[ChatMessage]) -> str:
        headers = {}
        if self.config.api_key:
            headers["Authorization"] = f"Bearer {self.config.api_key}"
        payload = {
            "model": self.config.model,
            "messages": [{"role": m.role, "content": m.content} for m in messages],
        }
        with httpx.Client(transport=self._transport, timeout=self.config.timeout_s) as client:
            response = client.post(self.config.endpoint, json=payload, headers=headers)
            response.raise_for_status()
            body = response.json()
        content = body["choices"][0]["message"]["content"]
        if not isinstance(content, str) or not content:
            raise ValueError("backend returned no assistant content")
        return content

    def _rule_answer(self, session: Session, question: str) -> str:
        analysis = self._get_analysis(session.analysis_id)
        if analysis is None:  # pragma: no cover - analyses are immutable
            raise UnknownAnalysis(session.analysis_id)
        lang = session.language
        mid = match_measurement(question, self._synonyms)
        if mid is None:
            return report_summary(list(analysis.findings), lang)

        by_id = {r.id: r for r in analysis.results}
        result = by_id.get(mid)
        definition = MEASUREMENTS[mid]
        display = definition.display_en if lang == LANG_EN else definition.display_zh
        if result is None:
            skipped = {sk.id: sk for sk in analysis.skipped}
            reason = skipped[mid].detail if mid in skipped else "not computed"
            if lang == LANG_EN:
                return f"{display} is not available for this analysis ({reason})."
            return f"{display}不可用（{reason}）。"

        grades = {d.id: d for d in analysis.deviations}
        parts = [f"{display}: {format_value(result.value)} {result.unit}"]
        if mid in grades:
            dev = grades[mid]
            label = {"LOW": "below", "HIGH": "above", "NORMAL": "within"}[dev.grade]
            if lang == LANG_EN:
                parts.append(f"({label} the reference range, grade {dev.grade})")
            else:
                zh_label = {"LOW": "低于参考范围", "HIGH": "高于参考范围", "NORMAL": "在参考范围内"}
                parts.append(f"（{zh_label[dev.grade]}，分级 {dev.grade}）")
        sentence = " ".join(parts) + ("." if lang == LANG_EN else "。")
        related = [f for f in analysis.findings if mid in f.sources]
        if related:
            from .report import default_templates

            t = default_templates()
            joiner = " " if lang == LANG_EN else ""
            sentence += joiner + joiner.join(t.get(f.key, lang) for f in related)
        return sentence

    # -- training export ----------------------------------------------------
    def export_training_pairs(
        self, analyses: list[CaseAnalysis], seed: int, language: str = LANG_EN
    ) -> list[tuple[str, str]]:
        """(prompt, rendered report) pairs; per-item seed derives from the base seed."""
        pairs: list[tuple[str, str]] = []
        for index, analysis in enumerate(analyses):
            prompt = build_prompt(
                list(analysis.results), language, seed=(seed + index) & 0xFFFFFFFFFFFFFFFF
            )
            response = render_report(
                list(analysis.findings), language, FORMAT_TEXT, results=list(analysis.results)
            )
            pairs.append((prompt.text, response))
        return pairs


def _escape_field(text: str) -> str:
    return (
        text.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n").replace("\r", "\\r")
    )


def serialize_training_pairs(pairs: list[tuple[str, str]]) -> bytes:
    """One record per line: tab-separated prompt and response, newlines escaped."""
    lines = [f"{_escape_field(p)}\t{_escape_field(r)}" for p, r in pairs]
    return ("\n".join(lines) + "\n").encode("utf-8") if lines else b""
