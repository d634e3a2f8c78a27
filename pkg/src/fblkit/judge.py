"""LLM-as-a-judge harness for pair relationship labeling.

Builds deterministic prompts under either label system, queries a
chat-completion endpoint N times per pair (default 7), parses a label
out of each response, and reduces the samples by majority vote. All
network traffic goes through an injectable transport, so the whole
harness runs offline against scripted transports, and a stored run file
can be re-reduced to identical metrics at any time.
"""

from __future__ import annotations

import json
import logging
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Callable, Optional, Protocol, Sequence

import requests

from .datastore import annotation_from_dict, annotation_to_dict, read_jsonl
from .items import AnnotationRecord, Item, ItemPair, Scheme
from .labels import COARSE_DEFINITIONS, LABEL_DEFINITIONS, CoarseLabel, FunctionLabel
from .metrics import VoteResult, majority_vote

logger = logging.getLogger(__name__)

DEFAULT_TOKEN_ENV = "FBL_JUDGE_TOKEN"

SYSTEM_PROMPT = (
    "You are a meticulous e-commerce catalog annotator. "
    "You judge the relationship between two products from their catalog "
    "fields and answer with exactly one label code."
)


@dataclass
class JudgeConfig:
    endpoint_url: str = ""
    model_id: str = ""
    scheme: Scheme = Scheme.NINE_CLASS
    samples_per_pair: int = 7
    temperature: float = 0.6
    extra_options: dict = field(default_factory=dict)
    max_concurrency: int = 4
    retry_limit: int = 3
    credential_header: str = "Authorization"
    credential_env: str = DEFAULT_TOKEN_ENV

    def __post_init__(self) -> None:
        if self.samples_per_pair < 1:
            raise ValueError("samples_per_pair must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if isinstance(self.scheme, str):
            self.scheme = Scheme(self.scheme)

    def snapshot(self) -> dict:
        return {
            "endpoint_url": self.endpoint_url,
            "model_id": self.model_id,
            "scheme": self.scheme.value,
            "samples_per_pair": self.samples_per_pair,
            "temperature": self.temperature,
            "extra_options": dict(self.extra_options),
            "max_concurrency": self.max_concurrency,
            "retry_limit": self.retry_limit,
        }


# ---------------------------------------------------------------------------
# Prompts


def _render_item(name: str, item: Item) -> str:
    def show(value: str) -> str:
        return value if value else "unknown"

    category = " / ".join(v for v in (item.major_category, item.sub_category) if v)
    return "\n".join(
        [
            f"Item {name}:",
            f"  title: {show(item.title)}",
            f"  description: {show(item.description)}",
            f"  category: {show(category)}",
            f"  maker: {show(item.maker)}",
            f"  brand: {show(item.brand)}",
        ]
    )


def build_prompt(pair: ItemPair, scheme: Scheme) -> str:
    """Deterministic user prompt: label definitions, both items, answer format."""
    if scheme is Scheme.NINE_CLASS:
        definitions = "\n".join(
            f"{label.value}: {text}" for label, text in LABEL_DEFINITIONS.items()
        )
        codes = ", ".join(label.value for label in FunctionLabel)
        instruction = (
            f"Answer with exactly one label code ({codes}) and nothing else."
        )
        header = (
            "Decide which one of the following relationship labels fits the "
            "item pair (x, y). Consider each label in the order listed and "
            "pick the first that clearly applies."
        )
    else:
        definitions = "\n".join(
            f"{label.value}: {text}" for label, text in COARSE_DEFINITIONS.items()
        )
        names = ", ".join(label.value for label in CoarseLabel)
        instruction = f"Answer with exactly one word ({names}) and nothing else."
        header = (
            "Decide which one of the following relationship classes fits the "
            "item pair (x, y)."
        )
    return "\n\n".join(
        [
            header,
            definitions,
            _render_item("x", pair.x),
            _render_item("y", pair.y),
            instruction,
        ]
    )


# ---------------------------------------------------------------------------
# Response parsing


class ParseFailure(ValueError):
    pass


# Uppercase letter optionally followed by a digit ("C-2", "C2"); bounded so
# the lowercase article "a" and letters inside words never match.
_NINE_CLASS_TOKEN = re.compile(r"(?<![A-Za-z0-9])([ABCDE])(?:\s*-\s*|\s*)?([1-4])?(?![A-Za-z0-9])")
_THREE_CLASS_TOKEN = re.compile(r"complementary|substitute|unrelated", re.IGNORECASE)

_VALID_DIGITS = {"A": {None}, "B": {"1", "2"}, "C": {"1", "2", "3", "4"}, "D": {None}, "E": {None}}


def parse_label(response: str, scheme: Scheme):
    """Extract the first valid label token from free-form response text."""
    if scheme is Scheme.NINE_CLASS:
        for match in _NINE_CLASS_TOKEN.finditer(response):
            letter, digit = match.group(1), match.group(2)
            if digit in _VALID_DIGITS[letter]:
                code = letter if digit is None else f"{letter}-{digit}"
                return FunctionLabel.parse(code)
        raise ParseFailure(f"no nine-class label code in response: {response[:120]!r}")
    match = _THREE_CLASS_TOKEN.search(response)
    if match is None:
        raise ParseFailure(f"no coarse label name in response: {response[:120]!r}")
    return CoarseLabel.parse(match.group(0))


# ---------------------------------------------------------------------------
# Transports


@dataclass(frozen=True)
class JudgeRequest:
    pair_id: str
    sample_index: int
    messages: tuple
    options: dict


class TransportError(RuntimeError):
    pass


class Transport(Protocol):
    def complete(self, request: JudgeRequest) -> str: ...


class HttpTransport:
    """JSON-over-HTTP chat-completion client with throttling backoff.

    Sends ``{model, messages, temperature, **extra_options}`` and reads
    the reply at ``choices[0].message.content``. The credential value
    comes from the configured environment variable; absent means
    anonymous access.
    """

    def __init__(self, config: JudgeConfig, session: Optional[requests.Session] = None):
        self.config = config
        self.session = session or requests.Session()

    def complete(self, request: JudgeRequest) -> str:
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.config.credential_env, "")
        if token:
            headers[self.config.credential_header] = f"Bearer {token}"
        payload = {
            "model": self.config.model_id,
            "messages": list(request.messages),
            **request.options,
        }
        last_error: Exception | None = None
        for attempt in range(4):
            try:
                response = self.session.post(
                    self.config.endpoint_url, json=payload, headers=headers, timeout=120
                )
                if response.status_code == 429 or response.status_code >= 500:
                    last_error = TransportError(f"HTTP {response.status_code}")
                    time.sleep(min(2**attempt, 30))
                    continue
                response.raise_for_status()
                data = response.json()
                return data["choices"][0]["message"]["content"]
            except (requests.RequestException, KeyError, ValueError) as exc:
                raise TransportError(f"chat completion failed: {exc}") from exc
        raise TransportError(f"throttled after retries: {last_error}")


class ScriptedTransport:
    """Offline transport replaying a fixed per-sample response script.

    Sample i of every pair receives ``script[i % len(script)]``, so runs
    are deterministic regardless of request interleaving. An entry may
    be a callable ``(JudgeRequest) -> str`` to script failures.
    """

    def __init__(self, script: Sequence):
        if not script:
            raise ValueError("script must be non-empty")
        self.script = list(script)
        self.calls = 0
        self._lock = threading.Lock()

    def complete(self, request: JudgeRequest) -> str:
        with self._lock:
            self.calls += 1
        entry = self.script[request.sample_index % len(self.script)]
        if callable(entry):
            return entry(request)
        return str(entry)


# ---------------------------------------------------------------------------
# Annotation runs


@dataclass
class JudgeRun:
    config: dict
    records: dict[str, list[AnnotationRecord]]
    votes: dict[str, VoteResult]
    failures: dict[str, list[str]]


def annotate_pairs(
    pairs: Sequence[ItemPair],
    config: JudgeConfig,
    transport: Transport,
    run_path: Optional[str | Path] = None,
    clock: Callable[[], datetime] = datetime.utcnow,
) -> JudgeRun:
    """Collect ``samples_per_pair`` parsed labels per pair and vote.

    Parse failures and transport errors consume per-sample retries
    (``retry_limit`` additional attempts); a sample that exhausts its
    budget puts the pair into ``failures`` instead of silently dropping
    it. When ``run_path`` exists, previously stored records are reused
    and only missing samples are requested, which makes interrupted runs
    resumable. Distinct pairs run concurrently; appends to the run file
    are serialized.
    """
    if not pairs:
        raise ValueError("no pairs to annotate")

    existing: dict[str, dict[int, AnnotationRecord]] = {}
    run_path = Path(run_path) if run_path is not None else None
    if run_path is not None and run_path.exists():
        for _, obj in read_jsonl(run_path):
            record = annotation_from_dict(obj)
            sample_index = int(record.annotator.rsplit("#", 1)[1])
            existing.setdefault(record.pair_id, {})[sample_index] = record

    write_lock = threading.Lock()
    run_file = run_path.open("a", encoding="utf-8") if run_path is not None else None

    def persist(record: AnnotationRecord) -> None:
        if run_file is None:
            return
        with write_lock:
            run_file.write(json.dumps(annotation_to_dict(record), sort_keys=True) + "\n")
            run_file.flush()
            os.fsync(run_file.fileno())

    def collect(pair: ItemPair) -> tuple[str, list[AnnotationRecord], list[str]]:
        prompt = build_prompt(pair, config.scheme)
        messages = (
            {"role": "system", "content": SYSTEM_PROMPT},
            {"role": "user", "content": prompt},
        )
        options = {"temperature": config.temperature, **config.extra_options}
        records: list[AnnotationRecord] = []
        errors: list[str] = []
        done = existing.get(pair.pair_id, {})
        for sample_index in range(config.samples_per_pair):
            if sample_index in done:
                records.append(done[sample_index])
                continue
            request = JudgeRequest(
                pair_id=pair.pair_id,
                sample_index=sample_index,
                messages=messages,
                options=options,
            )
            attempts = 1 + config.retry_limit
            for attempt in range(attempts):
                try:
                    text = transport.complete(request)
                    label = parse_label(text, config.scheme)
                except (TransportError, ParseFailure) as exc:
                    if attempt == attempts - 1:
                        errors.append(f"sample {sample_index}: {exc}")
                    continue
                record = AnnotationRecord(
                    pair_id=pair.pair_id,
                    annotator=f"{config.model_id}#{sample_index}",
                    scheme=config.scheme,
                    label=label,
                    timestamp=clock(),
                    raw_response=text,
                )
                persist(record)
                records.append(record)
                break
        return pair.pair_id, records, errors

    try:
        with ThreadPoolExecutor(max_workers=max(1, config.max_concurrency)) as pool:
            results = list(pool.map(collect, pairs))
    finally:
        if run_file is not None:
            run_file.close()

    records: dict[str, list[AnnotationRecord]] = {}
    failures: dict[str, list[str]] = {}
    for pair_id, pair_records, errors in results:
        if errors:
            failures[pair_id] = errors
            logger.warning("pair %s failed: %s", pair_id, "; ".join(errors))
        else:
            records[pair_id] = pair_records

    return JudgeRun(
        config=config.snapshot(),
        records=records,
        votes=reduce_votes(records),
        failures=failures,
    )


def reduce_votes(
    records: dict[str, list[AnnotationRecord]]
) -> dict[str, VoteResult]:
    """Pure vote reduction; re-running it on stored records is idempotent."""
    return {
        pair_id: majority_vote([r.label for r in pair_records])
        for pair_id, pair_records in records.items()
    }


def load_run_records(
    run_path: str | Path, samples_per_pair: int
) -> dict[str, list[AnnotationRecord]]:
    """Read a stored run, keeping only pairs with a complete sample set."""
    by_pair: dict[str, dict[int, AnnotationRecord]] = {}
    for _, obj in read_jsonl(run_path):
        record = annotation_from_dict(obj)
        sample_index = int(record.annotator.rsplit("#", 1)[1])
        by_pair.setdefault(record.pair_id, {})[sample_index] = record
    return {
        pair_id: [samples[i] for i in sorted(samples)[:samples_per_pair]]
        for pair_id, samples in by_pair.items()
        if len(samples) >= samples_per_pair
    }
