"""Chat-model and speech-to-text gateway.

Two backends share one interface: a deterministic offline mock (the default
in tests, backed by a small rule grammar) and an HTTP client speaking the
chat-completions protocol. Both honour idempotency keys and report token
counts so merge throughput can be audited.
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from typing import Protocol, Sequence

from .errors import MalformedResponse, ProviderTimeout, UnsupportedFormat
from .prompts import PromptTemplate, get_template
from .semantic import (
    EXISTENCE_VALUE,
    AttributeKind,
    SemanticUnit,
    normalize_object_name,
)

TRANSCRIPT_HEADER = b"TRANSCRIPT:"
SUPPORTED_AUDIO_FORMATS = {"wav", "webm", "ogg", "mp3", "fixture"}


@dataclass(frozen=True)
class GatewayRequest:
    template_id: str
    slots: tuple[tuple[str, str], ...]
    temperature: float = 0.0
    max_output_tokens: int = 1024
    idempotency_key: str | None = None

    @classmethod
    def make(cls, template_id: str, idempotency_key: str | None = None, **slots: str):
        return cls(template_id, tuple(sorted(slots.items())), idempotency_key=idempotency_key)


@dataclass(frozen=True)
class GatewayResponse:
    text: str
    input_token_count: int
    output_token_count: int
    latency_ms: float


def token_count(text: str) -> int:
    return len(text.split())


class Gateway(Protocol):
    """Operations the annotation engine needs from the language-model side."""

    def merge_captions(self, mode: str, captions: Sequence[str]) -> str: ...
    def extract_units(self, caption: str) -> list[SemanticUnit]: ...
    def denoise(self, caption: str) -> str: ...
    def transcribe(self, audio: bytes, format_tag: str) -> str: ...
    def generate_questions(self, caption: str) -> list[str]: ...


# --------------------------------------------------------------------------
# Deterministic mock backend
# --------------------------------------------------------------------------

_COLOURS = {
    "black", "white", "red", "green", "blue", "grey", "gray", "brown",
    "yellow", "orange", "purple", "pink", "dark", "light",
}
_AMOUNTS = {
    "one", "two", "three", "four", "five", "six", "seven", "eight", "nine",
    "ten", "some", "several", "many", "few", "numerous",
}
_SIZES = {"big", "small", "large", "tiny", "huge", "little", "tall", "short", "wide", "narrow"}
_SHAPES = {"round", "square", "rectangular", "circular", "triangular", "oval", "curved"}
_MATERIALS = {"wooden", "metal", "concrete", "brick", "glass", "stone", "plastic", "steel"}
_LOCATION_WORDS = {
    "top", "bottom", "left", "right", "upper", "lower", "center", "centre",
    "middle", "corner", "side", "area", "edge", "image", "picture", "part",
}
_RELATIVE_PREPS = {"under", "above", "beside", "near", "behind", "below", "over"}
_SPLIT_PREPS = {"on", "in", "at", "under", "above", "beside", "near", "behind", "below", "over", "with"}
_ARTICLES = {"a", "an", "the"}
_CONNECTIVES = ("and then", "then", "furthermore", "next")

_SENT_SPLIT = re.compile(r"[.!?]+")
_WORD = re.compile(r"[a-z0-9']+")


def _sentences(text: str) -> list[str]:
    return [s.strip() for s in _SENT_SPLIT.split(text) if s.strip()]


def _words(text: str) -> list[str]:
    return _WORD.findall(text.lower())


def _classify_value(word: str) -> AttributeKind | None:
    if word in _COLOURS:
        return AttributeKind.COLOUR
    if word in _AMOUNTS:
        return AttributeKind.AMOUNT
    if word in _SIZES:
        return AttributeKind.SIZE
    if word in _SHAPES:
        return AttributeKind.SHAPE
    if word in _MATERIALS:
        return AttributeKind.MATERIAL
    return None


def _parse_noun_phrase(tokens: list[str], source_round: int) -> list[SemanticUnit]:
    """One noun phrase -> units for its head noun; bare nouns become existence."""
    attrs: list[tuple[AttributeKind, str]] = []
    rest: list[str] = []
    for tok in tokens:
        if tok in _ARTICLES:
            continue
        kind = _classify_value(tok)
        if kind is not None:
            attrs.append((kind, tok))
        else:
            rest.append(tok)
    if not rest:
        return []
    name = normalize_object_name(" ".join(rest))
    if not name:
        return []
    if not attrs:
        return [SemanticUnit.existence(name, source_round)]
    return [SemanticUnit.make(name, kind, value, source_round) for kind, value in attrs]


def parse_caption(caption: str, source_round: int = 0) -> list[SemanticUnit]:
    """Rule-grammar fallback extraction used by the mock backend.

    Handles copula sentences ("the car is black"), quantified noun phrases
    ("two trees"), spatial phrases built from location vocabulary ("in the
    top left corner"), and relative placements ("X left of Y").
    """
    units: list[SemanticUnit] = []
    for sentence in _sentences(caption):
        tokens = _words(sentence)
        if not tokens:
            continue
        units.extend(_parse_sentence(tokens, source_round))
    # preserve first-seen order, drop duplicate identities
    seen: set[tuple[str, str, str]] = set()
    out = []
    for u in units:
        if u.identity not in seen:
            seen.add(u.identity)
            out.append(u)
    return out


def _parse_sentence(tokens: list[str], source_round: int) -> list[SemanticUnit]:
    # copula pattern: <np> is/are <predicate...>
    for cop in ("is", "are"):
        if cop in tokens:
            idx = tokens.index(cop)
            subject = _parse_noun_phrase(tokens[:idx], source_round)
            if subject:
                name = subject[0].object_name
                units = list(subject)
                units.extend(_parse_predicate(name, tokens[idx + 1:], source_round))
                # the copula subject itself is a real mention, not just existence
                if len(units) > 1:
                    units = [u for u in units if not u.is_existence or u.object_name != name]
                return units
    # "left of" / "right of" relative placement
    for marker in ("left", "right"):
        if marker in tokens:
            idx = tokens.index(marker)
            if idx + 1 < len(tokens) and tokens[idx + 1] == "of":
                head = _parse_noun_phrase(tokens[:idx], source_round)
                tail = _parse_noun_phrase(tokens[idx + 2:], source_round)
                units = list(head)
                if head and tail:
                    target = tail[0].object_name
                    units.append(SemanticUnit.make(
                        head[0].object_name, AttributeKind.RELATIVE_LOCATION,
                        f"{marker} of {target}", source_round))
                    units = [u for u in units if not (u.is_existence and u.object_name == head[0].object_name)]
                units.extend(tail)
                return units
    # split on prepositions into noun-phrase segments
    segments: list[list[str]] = [[]]
    seg_preps: list[str | None] = [None]
    for tok in tokens:
        if tok in _SPLIT_PREPS:
            segments.append([])
            seg_preps.append(tok)
        else:
            segments[-1].append(tok)
    units: list[SemanticUnit] = []
    anchor: str | None = None
    for seg, prep in zip(segments, seg_preps):
        content = [t for t in seg if t not in _ARTICLES]
        if not content:
            continue
        if anchor is not None and prep is not None and all(t in _LOCATION_WORDS for t in content):
            kind = (AttributeKind.RELATIVE_LOCATION if prep in _RELATIVE_PREPS
                    else AttributeKind.ABSOLUTE_LOCATION)
            units.append(SemanticUnit.make(anchor, kind, " ".join(content), source_round))
            continue
        parsed = _parse_noun_phrase(seg, source_round)
        if parsed:
            units.extend(parsed)
            anchor = parsed[0].object_name
    return units


def _parse_predicate(name: str, tokens: list[str], source_round: int) -> list[SemanticUnit]:
    units: list[SemanticUnit] = []
    content = [t for t in tokens if t not in _ARTICLES]
    if not content:
        return units
    if all(t in _LOCATION_WORDS or t in _SPLIT_PREPS for t in content):
        value = " ".join(t for t in content if t not in _SPLIT_PREPS)
        if value:
            units.append(SemanticUnit.make(name, AttributeKind.ABSOLUTE_LOCATION, value, source_round))
        return units
    leftovers: list[str] = []
    for tok in content:
        if tok in _SPLIT_PREPS:
            continue
        kind = _classify_value(tok)
        if kind is not None:
            units.append(SemanticUnit.make(name, kind, tok, source_round))
        else:
            leftovers.append(tok)
    if leftovers:
        units.append(SemanticUnit.make(
            name, AttributeKind.OBJECT_DESCRIPTION, " ".join(leftovers), source_round))
    return units


def render_units(units: Sequence[SemanticUnit]) -> str:
    """Deterministic caption text for a unit list; re-parseable by the grammar."""
    sentences = []
    for u in units:
        if u.is_existence:
            sentences.append(f"a {u.object_name}.")
        elif u.kind is AttributeKind.AMOUNT:
            sentences.append(f"{u.value} {u.object_name}.")
        elif u.kind is AttributeKind.ABSOLUTE_LOCATION:
            sentences.append(f"the {u.object_name} in the {u.value}.")
        elif u.kind is AttributeKind.RELATIVE_LOCATION:
            sentences.append(f"the {u.object_name} {u.value}.")
        else:
            sentences.append(f"the {u.object_name} is {u.value}.")
    return " ".join(sentences)


def _normalize_sentence(sentence: str) -> str:
    return " ".join(_words(sentence))


class MockGateway:
    """Hermetic deterministic backend.

    Merging is a sentence-level union with later-caption override on
    conflicting (object, kind) statements; extraction is the rule grammar;
    transcription is a fixture passthrough.
    """

    def __init__(self):
        self._idempotency: dict[str, GatewayResponse] = {}
        self._lock = threading.Lock()
        self.call_log: list[GatewayResponse] = []

    # -- low-level completion with idempotency + token accounting ----------

    def complete(self, request: GatewayRequest) -> GatewayResponse:
        if request.idempotency_key is not None:
            with self._lock:
                cached = self._idempotency.get(request.idempotency_key)
            if cached is not None:
                return cached
        slots = dict(request.slots)
        started = time.perf_counter()
        text = self._dispatch(request.template_id, slots)
        latency = (time.perf_counter() - started) * 1000.0
        response = GatewayResponse(
            text=text,
            input_token_count=sum(token_count(v) for v in slots.values()),
            output_token_count=token_count(text),
            latency_ms=latency,
        )
        with self._lock:
            if request.idempotency_key is not None:
                self._idempotency[request.idempotency_key] = response
            self.call_log.append(response)
        return response

    def _dispatch(self, template_id: str, slots: dict[str, str]) -> str:
        get_template(template_id)  # unknown ids fail loudly
        if template_id == "merge_sequential":
            return self._merge_pair(slots["caption1"], slots["caption2"])
        if template_id == "merge_parallel":
            return self._merge_pair(slots["caption1"], slots["caption2"])
        if template_id == "denoise":
            return self._denoise(slots["caption"])
        if template_id == "extract_units":
            from .semantic import build_tree, tree_to_json
            units = parse_caption(slots["caption"])
            return json.dumps(tree_to_json(build_tree(units)))
        if template_id == "generate_questions":
            return "\n".join(self._questions(slots["caption"]))
        raise MalformedResponse(f"mock cannot serve template {template_id!r}")

    # -- high-level operations ---------------------------------------------

    def merge_captions(self, mode: str, captions: Sequence[str]) -> str:
        if mode == "sequential":
            if len(captions) != 2:
                raise ValueError("sequential merge takes exactly (accumulated, new)")
        elif mode == "parallel":
            if len(captions) < 2:
                raise ValueError("parallel merge needs at least two captions")
        else:
            raise ValueError(f"unknown merge mode: {mode!r}")
        merged = captions[0]
        for nxt in captions[1:]:
            template = "merge_sequential" if mode == "sequential" else "merge_parallel"
            merged = self.complete(GatewayRequest.make(template, caption1=merged, caption2=nxt)).text
        return merged

    def _merge_pair(self, accumulated: str, new: str) -> str:
        if not new.strip():
            return accumulated
        if not accumulated.strip():
            return new
        new_sentences = _sentences(new)
        new_claims: dict[tuple[str, str], set[str]] = {}
        for u in parse_caption(new):
            if u.is_existence:
                continue  # a bare mention never overrides a description
            new_claims.setdefault((u.object_name, u.kind.value), set()).add(u.value)
        kept: list[str] = []
        for sentence in _sentences(accumulated):
            conflict = False
            for u in parse_caption(sentence):
                values = new_claims.get((u.object_name, u.kind.value))
                if values is not None and u.value not in values and not u.is_existence:
                    conflict = True
                    break
            if not conflict:
                kept.append(sentence)
        seen = {_normalize_sentence(s) for s in kept}
        for sentence in new_sentences:
            key = _normalize_sentence(sentence)
            if key not in seen:
                seen.add(key)
                kept.append(sentence)
        return " ".join(s if s.endswith(".") else s + "." for s in kept)

    def extract_units(self, caption: str) -> list[SemanticUnit]:
        if not caption.strip():
            raise ValueError("caption must be non-empty")
        return parse_caption(caption)

    def denoise(self, caption: str) -> str:
        return self._denoise(caption)

    @staticmethod
    def _denoise(caption: str) -> str:
        text = caption
        for connective in _CONNECTIVES:
            text = re.sub(rf"\b{connective}\b", " ", text, flags=re.IGNORECASE)
        return re.sub(r"\s+", " ", text).strip()

    def transcribe(self, audio: bytes, format_tag: str) -> str:
        if format_tag not in SUPPORTED_AUDIO_FORMATS:
            raise UnsupportedFormat(f"unsupported audio format: {format_tag!r}")
        if audio.startswith(TRANSCRIPT_HEADER):
            return audio[len(TRANSCRIPT_HEADER):].decode("utf-8").strip()
        return ""

    def generate_questions(self, caption: str) -> list[str]:
        return self._questions(caption)

    def _questions(self, caption: str) -> list[str]:
        templates = {
            AttributeKind.COLOUR: "What colour is the {name}?",
            AttributeKind.AMOUNT: "How many {name} are there?",
            AttributeKind.ABSOLUTE_LOCATION: "Where is the {name} located in the picture?",
            AttributeKind.RELATIVE_LOCATION: "What is the {name} next to?",
            AttributeKind.SIZE: "How large is the {name}?",
            AttributeKind.SHAPE: "What shape is the {name}?",
            AttributeKind.MATERIAL: "What is the {name} made of?",
        }
        questions = ["Q1: What kind of image is this describing?"]
        for u in parse_caption(caption):
            if len(questions) == 5:
                break
            template = templates.get(u.kind, "What can be said about the {name}?")
            questions.append(f"Q{len(questions) + 1}: " + template.format(name=u.object_name))
        while len(questions) < 5:
            questions.append(f"Q{len(questions) + 1}: What else can be seen in the picture?")
        return questions


# --------------------------------------------------------------------------
# HTTP chat-completions backend
# --------------------------------------------------------------------------

@dataclass
class HttpGatewayConfig:
    endpoint_env: str = "ANNOCHAIN_GATEWAY_ENDPOINT"
    model_env: str = "ANNOCHAIN_GATEWAY_MODEL"
    key_env: str = "ANNOCHAIN_GATEWAY_KEY"
    retries: int = 3
    backoff_s: float = 0.5
    timeout_s: float = 60.0
    audit_log_path: str | None = None
    max_concurrency: int = 8


class HttpGateway:
    """Chat-completions client with retries, idempotency, and an audit log."""

    def __init__(self, config: HttpGatewayConfig | None = None, transport=None):
        import httpx

        self.config = config or HttpGatewayConfig()
        self.endpoint = os.environ.get(self.config.endpoint_env, "")
        self.model = os.environ.get(self.config.model_env, "")
        self.api_key = os.environ.get(self.config.key_env, "")
        if not self.endpoint:
            raise ValueError(f"gateway endpoint missing; set ${self.config.endpoint_env}")
        self._client = httpx.Client(timeout=self.config.timeout_s, transport=transport)
        self._idempotency: dict[str, GatewayResponse] = {}
        self._lock = threading.Lock()
        self._inflight = threading.Semaphore(self.config.max_concurrency)

    def complete(self, request: GatewayRequest) -> GatewayResponse:
        if request.idempotency_key is not None:
            with self._lock:
                cached = self._idempotency.get(request.idempotency_key)
            if cached is not None:
                return cached
        template = get_template(request.template_id)
        slots = dict(request.slots)
        messages = [{"role": "system", "content": template.system_text}]
        user = template.render_user(**slots)
        if user:
            messages.append({"role": "user", "content": user})
        if template.assistant_prefix:
            messages.append({"role": "assistant", "content": template.assistant_prefix})
        payload = {
            "model": self.model,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        started = time.perf_counter()
        last_error: Exception | None = None
        with self._inflight:
            for attempt in range(self.config.retries):
                try:
                    reply = self._client.post(self.endpoint, json=payload, headers=headers)
                    reply.raise_for_status()
                    body = reply.json()
                    text = body["choices"][0]["message"]["content"]
                    usage = body.get("usage", {})
                    response = GatewayResponse(
                        text=text,
                        input_token_count=usage.get(
                            "prompt_tokens", sum(token_count(v) for v in slots.values())),
                        output_token_count=usage.get("completion_tokens", token_count(text)),
                        latency_ms=(time.perf_counter() - started) * 1000.0,
                    )
                    break
                except Exception as exc:
                    last_error = exc
                    time.sleep(self.config.backoff_s * (2 ** attempt))
            else:
                raise ProviderTimeout(
                    f"gateway failed after {self.config.retries} attempts") from last_error
        with self._lock:
            if request.idempotency_key is not None:
                self._idempotency[request.idempotency_key] = response
        self._audit(request.template_id, response)
        return response

    def _audit(self, template_id: str, response: GatewayResponse) -> None:
        if not self.config.audit_log_path:
            return
        record = {
            "template_id": template_id,
            "input_token_count": response.input_token_count,
            "output_token_count": response.output_token_count,
            "latency_ms": response.latency_ms,
        }
        with self._lock, open(self.config.audit_log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")

    # -- high-level operations ---------------------------------------------

    def merge_captions(self, mode: str, captions: Sequence[str]) -> str:
        if mode == "sequential" and len(captions) != 2:
            raise ValueError("sequential merge takes exactly (accumulated, new)")
        if mode == "parallel" and len(captions) < 2:
            raise ValueError("parallel merge needs at least two captions")
        template = "merge_sequential" if mode == "sequential" else "merge_parallel"
        merged = captions[0]
        for nxt in captions[1:]:
            merged = self.complete(GatewayRequest.make(template, caption1=merged, caption2=nxt)).text
        return merged

    def extract_units(self, caption: str) -> list[SemanticUnit]:
        if not caption.strip():
            raise ValueError("caption must be non-empty")
        reply = self.complete(GatewayRequest.make("extract_units", caption=caption))
        try:
            return self._parse_extraction(reply.text)
        except (json.JSONDecodeError, KeyError, TypeError) as first_error:
            repair = self.complete(GatewayRequest.make(
                "extract_units",
                caption=f"{caption}\n\nThe previous reply failed to parse "
                        f"({first_error}); respond with valid JSON only."))
            try:
                return self._parse_extraction(repair.text)
            except (json.JSONDecodeError, KeyError, TypeError) as second_error:
                raise MalformedResponse(str(second_error)) from second_error

    @staticmethod
    def _parse_extraction(text: str) -> list[SemanticUnit]:
        from .semantic import tree_from_json, tree_units

        start = text.find("[")
        end = text.rfind("]")
        if start < 0 or end < start:
            raise json.JSONDecodeError("no JSON array in reply", text, 0)
        doc = json.loads(text[start:end + 1])
        return tree_units(tree_from_json(doc))

    def denoise(self, caption: str) -> str:
        return self.complete(GatewayRequest.make("denoise", caption=caption)).text.strip()

    def transcribe(self, audio: bytes, format_tag: str) -> str:
        if format_tag not in SUPPORTED_AUDIO_FORMATS:
            raise UnsupportedFormat(f"unsupported audio format: {format_tag!r}")
        raise NotImplementedError("speech-to-text requires a configured provider")

    def generate_questions(self, caption: str) -> list[str]:
        reply = self.complete(GatewayRequest.make("generate_questions", caption=caption))
        questions = [line.strip() for line in reply.text.splitlines() if line.strip()]
        if len(questions) < 5:
            raise MalformedResponse(f"expected 5 questions, got {len(questions)}")
        return questions[:5]
