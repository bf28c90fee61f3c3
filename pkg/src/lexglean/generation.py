"""Batch chat-completion calls with retries, rate limiting and resumability.

Each (model, language, prompt) triple gets a stable output id
``<model_id>/<iso_code>/<task_type>/<prompt_id>`` and one JSON record file
``<out_dir>/<model_id>/<iso_code>/<task_type>/<prompt_id>.json``.  Record
files are written atomically (temp file + rename) and never partially;
re-running a batch skips every triple whose record file already exists, so
an interrupted run can simply be restarted.

Two backends implement the same small protocol: ``HttpBackend`` posts
OpenAI-style chat-completion requests, ``MockBackend`` serves canned
responses keyed by output id from a fixtures file and is the workhorse for
offline runs and tests.
"""
from __future__ import annotations

import json
import logging
import os
import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Protocol, Sequence

import requests

from .taxonomy import (
    ConfigError,
    LanguageConfig,
    ModelConfig,
    PromptInstance,
    PromptTemplate,
    render_prompt,
    render_text,
)

log = logging.getLogger(__name__)

MANIFEST_FILENAME = "manifest.json"

# Timestamp used by the mock backend so record files are byte-reproducible.
MOCK_TIMESTAMP = "1970-01-01T00:00:00+00:00"


class BackendUnavailable(RuntimeError):
    """Transport-level failure (timeout, connection error); retryable."""


class PermanentCallError(RuntimeError):
    """Non-retryable API failure (4xx other than 429)."""

    def __init__(self, output_id: str, status: int):
        super().__init__(f"{output_id}: permanent failure, HTTP {status}")
        self.output_id = output_id
        self.status = status


class TransientCallError(RuntimeError):
    """Retries exhausted on a retryable failure."""

    def __init__(self, output_id: str, message: str):
        super().__init__(f"{output_id}: {message}")
        self.output_id = output_id


CALL_ERRORS = (PermanentCallError, TransientCallError)


@dataclass(frozen=True)
class SamplingParams:
    temperature: float
    top_p: float
    max_output_tokens: int

    @classmethod
    def from_model(cls, model: ModelConfig) -> "SamplingParams":
        return cls(model.temperature, model.top_p, model.max_output_tokens)


@dataclass(frozen=True)
class ChatRequest:
    """One fully rendered chat-completion request plus identifying metadata."""

    output_id: str
    endpoint_url: str
    model_id: str
    api_key: str | None
    system_prompt: str
    user_prompt: str
    sampling: SamplingParams
    prompt_id: str
    language: str
    task_type: str

    def body(self) -> dict:
        """OpenAI-style chat-completions request body."""
        return {
            "model": self.model_id,
            "messages": [
                {"role": "system", "content": self.system_prompt},
                {"role": "user", "content": self.user_prompt},
            ],
            "temperature": self.sampling.temperature,
            "top_p": self.sampling.top_p,
            "max_tokens": self.sampling.max_output_tokens,
        }


@dataclass(frozen=True)
class BackendResponse:
    status: int
    text: str = ""
    finish_reason: str = ""
    latency: float | None = None


class Backend(Protocol):
    requires_api_key: bool

    def complete(self, request: ChatRequest) -> BackendResponse:
        ...

    def timestamp(self) -> str:
        ...


@dataclass(frozen=True)
class GenerationRecord:
    """One persisted API response with enough context to re-evaluate it."""

    output_id: str
    prompt_id: str
    model_id: str
    language: str
    task_type: str
    rendered_prompt: str
    system_prompt: str
    sampling: SamplingParams
    response_text: str
    finish_reason: str
    request_timestamp: str
    latency: float
    attempt_count: int

    def to_json_dict(self) -> dict:
        return {
            "output_id": self.output_id,
            "prompt_id": self.prompt_id,
            "model_id": self.model_id,
            "language": self.language,
            "task_type": self.task_type,
            "rendered_prompt": self.rendered_prompt,
            "system_prompt": self.system_prompt,
            "sampling": {
                "temperature": self.sampling.temperature,
                "top_p": self.sampling.top_p,
                "max_output_tokens": self.sampling.max_output_tokens,
            },
            "response_text": self.response_text,
            "finish_reason": self.finish_reason,
            "request_timestamp": self.request_timestamp,
            "latency": self.latency,
            "attempt_count": self.attempt_count,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "GenerationRecord":
        sampling = data["sampling"]
        return cls(
            output_id=data["output_id"],
            prompt_id=data["prompt_id"],
            model_id=data["model_id"],
            language=data["language"],
            task_type=data["task_type"],
            rendered_prompt=data["rendered_prompt"],
            system_prompt=data["system_prompt"],
            sampling=SamplingParams(
                float(sampling["temperature"]),
                float(sampling["top_p"]),
                int(sampling["max_output_tokens"]),
            ),
            response_text=data["response_text"],
            finish_reason=data["finish_reason"],
            request_timestamp=data["request_timestamp"],
            latency=float(data["latency"]),
            attempt_count=int(data["attempt_count"]),
        )


@dataclass
class RetryPolicy:
    """Exponential backoff with full jitter for retryable failures.

    ``max_retries`` counts retries after the first attempt; the default of
    5 retries with base delay 1s and factor 2 caps the per-call wall time at
    roughly a minute.
    """

    max_retries: int = 5
    base_delay: float = 1.0
    factor: float = 2.0
    max_delay: float = 60.0
    rng: random.Random = field(default_factory=random.Random, repr=False)
    sleep: Callable[[float], None] = field(default=time.sleep, repr=False)

    def backoff(self, attempt: int) -> float:
        cap = min(self.max_delay, self.base_delay * self.factor ** (attempt - 1))
        return self.rng.uniform(0.0, cap)


@dataclass
class RunManifest:
    """Progress summary for one batch run."""

    models: list[str]
    languages: list[str]
    expected_calls: int
    completed: set[str] = field(default_factory=set)
    failures: list[tuple[str, str]] = field(default_factory=list)
    new_requests: int = 0

    def to_json_dict(self) -> dict:
        return {
            "models": list(self.models),
            "languages": list(self.languages),
            "expected_calls": self.expected_calls,
            "completed": sorted(self.completed),
            "failures": [list(f) for f in sorted(self.failures)],
        }


def output_id_for(model_id: str, iso_code: str, task_type: str, prompt_id: str) -> str:
    return f"{model_id}/{iso_code}/{task_type}/{prompt_id}"


def record_path(out_dir: str | Path, output_id: str) -> Path:
    return Path(out_dir).joinpath(*output_id.split("/")).with_suffix(".json")


def build_request(
    instance: PromptInstance,
    model: ModelConfig,
    lang: LanguageConfig,
    *,
    require_api_key: bool = True,
) -> ChatRequest:
    """Assemble the wire request for one rendered prompt.

    The API key is read from the environment variable named by the model
    config and never persisted anywhere; a missing variable is a
    ConfigError unless ``require_api_key`` is off (mock runs).
    """
    api_key = None
    if require_api_key:
        api_key = os.environ.get(model.api_key_env_var)
        if not api_key:
            raise ConfigError(
                f"environment variable '{model.api_key_env_var}' is not set "
                f"(required for model '{model.model_id}')"
            )
    system_prompt = render_text(
        model.system_prompt_template, lang, context=f"system prompt for '{model.model_id}'"
    )
    return ChatRequest(
        output_id=output_id_for(model.model_id, lang.iso_code, instance.task_type, instance.template_id),
        endpoint_url=model.endpoint_url,
        model_id=model.model_id,
        api_key=api_key,
        system_prompt=system_prompt,
        user_prompt=instance.rendered_text,
        sampling=SamplingParams.from_model(model),
        prompt_id=instance.template_id,
        language=instance.iso_code,
        task_type=instance.task_type,
    )


def _is_retryable_status(status: int) -> bool:
    return status == 429 or 500 <= status < 600


def execute(request: ChatRequest, policy: RetryPolicy, backend: Backend) -> GenerationRecord:
    """Run one request to completion, retrying 429/5xx/transport failures.

    Returns a GenerationRecord on success.  Raises PermanentCallError for
    non-retryable HTTP statuses and TransientCallError once retries are
    exhausted; neither leaves any partial state behind.
    """
    attempt = 0
    while True:
        attempt += 1
        timestamp = backend.timestamp()
        started = time.perf_counter()
        failure: str
        try:
            response = backend.complete(request)
        except BackendUnavailable as exc:
            failure = str(exc)
        else:
            if 200 <= response.status < 300:
                latency = response.latency
                if latency is None:
                    latency = time.perf_counter() - started
                return GenerationRecord(
                    output_id=request.output_id,
                    prompt_id=request.prompt_id,
                    model_id=request.model_id,
                    language=request.language,
                    task_type=request.task_type,
                    rendered_prompt=request.user_prompt,
                    system_prompt=request.system_prompt,
                    sampling=request.sampling,
                    response_text=response.text,
                    finish_reason=response.finish_reason,
                    request_timestamp=timestamp,
                    latency=latency,
                    attempt_count=attempt,
                )
            if not _is_retryable_status(response.status):
                raise PermanentCallError(request.output_id, response.status)
            failure = f"HTTP {response.status}"
        if attempt > policy.max_retries:
            raise TransientCallError(
                request.output_id, f"retries exhausted after {attempt} attempts ({failure})"
            )
        delay = policy.backoff(attempt)
        log.debug("retrying %s after %s (sleep %.2fs)", request.output_id, failure, delay)
        policy.sleep(delay)


class HttpBackend:
    """OpenAI-style chat-completions over HTTP."""

    requires_api_key = True

    def __init__(self, timeout: tuple[float, float] = (10.0, 120.0)):
        self._timeout = timeout
        self._session = requests.Session()

    def timestamp(self) -> str:
        return datetime.now(timezone.utc).isoformat()

    def complete(self, request: ChatRequest) -> BackendResponse:
        headers = {}
        if request.api_key:
            headers["Authorization"] = f"Bearer {request.api_key}"
        try:
            response = self._session.post(
                request.endpoint_url,
                json=request.body(),
                headers=headers,
                timeout=self._timeout,
            )
        except requests.RequestException as exc:
            raise BackendUnavailable(str(exc)) from exc
        if not 200 <= response.status_code < 300:
            return BackendResponse(response.status_code)
        try:
            payload = response.json()
            choice = payload["choices"][0]
            text = choice["message"]["content"] or ""
            finish_reason = choice.get("finish_reason") or ""
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendUnavailable(f"unparseable completion payload: {exc}") from exc
        return BackendResponse(response.status_code, text, finish_reason)


class MockAborted(RuntimeError):
    """Raised by MockBackend to simulate the process dying mid-batch."""


@dataclass(frozen=True)
class MockFixture:
    response_text: str
    status_schedule: tuple[int, ...] = (200,)
    finish_reason: str = "stop"


def load_mock_fixtures(path: str | Path) -> dict[str, MockFixture]:
    """Load a fixtures file: a JSON map of output_id -> canned response."""
    path = Path(path)
    data = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise ValueError(f"{path}: fixtures file must be a JSON object keyed by output_id")
    fixtures: dict[str, MockFixture] = {}
    for output_id, entry in data.items():
        schedule = tuple(int(s) for s in entry.get("status_schedule", [200])) or (200,)
        fixtures[output_id] = MockFixture(
            response_text=str(entry.get("response_text", "")),
            status_schedule=schedule,
            finish_reason=str(entry.get("finish_reason", "stop")),
        )
    return fixtures


class MockBackend:
    """Deterministic in-process backend serving canned responses.

    Per output id, the nth call returns the nth status in the fixture's
    ``status_schedule`` (the last entry repeats).  Every call is appended to
    ``call_log`` before it runs, which makes duplicate-request and
    concurrency assertions straightforward in tests.  Setting ``fail_after``
    raises MockAborted instead of serving call N+1, simulating a kill at
    record granularity.
    """

    requires_api_key = False

    def __init__(
        self,
        fixtures: dict[str, MockFixture],
        *,
        delay: float = 0.0,
        fail_after: int | None = None,
    ):
        self.fixtures = fixtures
        self.delay = delay
        self.fail_after = fail_after
        self.call_log: list[str] = []
        self.call_times: list[float] = []
        self.max_in_flight = 0
        self._in_flight = 0
        self._attempts: dict[str, int] = {}
        self._lock = threading.Lock()

    def timestamp(self) -> str:
        return MOCK_TIMESTAMP

    def complete(self, request: ChatRequest) -> BackendResponse:
        with self._lock:
            if self.fail_after is not None and len(self.call_log) >= self.fail_after:
                raise MockAborted(f"simulated death after {self.fail_after} calls")
            self.call_log.append(request.output_id)
            self.call_times.append(time.monotonic())
            attempt = self._attempts.get(request.output_id, 0)
            self._attempts[request.output_id] = attempt + 1
            self._in_flight += 1
            self.max_in_flight = max(self.max_in_flight, self._in_flight)
        try:
            if self.delay:
                time.sleep(self.delay)
            fixture = self.fixtures.get(request.output_id)
            if fixture is None:
                return BackendResponse(404, latency=0.0)
            status = fixture.status_schedule[min(attempt, len(fixture.status_schedule) - 1)]
            if 200 <= status < 300:
                return BackendResponse(
                    status, fixture.response_text, fixture.finish_reason, latency=0.0
                )
            return BackendResponse(status, latency=0.0)
        finally:
            with self._lock:
                self._in_flight -= 1


class _RateGate:
    """Serialises request starts per endpoint with a minimum interval."""

    def __init__(self, interval: float):
        self.interval = float(interval)
        self._lock = threading.Lock()
        self._next = 0.0

    def wait(self) -> None:
        if self.interval <= 0:
            return
        with self._lock:
            now = time.monotonic()
            delay = self._next - now
            self._next = max(now, self._next) + self.interval
        if delay > 0:
            time.sleep(delay)


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def dumps_record(record: GenerationRecord) -> str:
    return json.dumps(record.to_json_dict(), ensure_ascii=False, indent=2, sort_keys=True) + "\n"


def run_batch(
    templates: Sequence[PromptTemplate],
    languages: Sequence[LanguageConfig],
    models: Sequence[ModelConfig],
    out_dir: str | Path,
    backend: Backend,
    *,
    parallelism: int = 1,
    policy: RetryPolicy | None = None,
) -> RunManifest:
    """Run the (templates x languages x models) batch into ``out_dir``.

    Already-present record files are skipped, so a partially completed
    directory resumes where it left off and never re-requests a finished
    triple.  Per-call failures are recorded in the manifest; anything else
    (config errors, interrupts) aborts the batch after letting in-flight
    calls finish persisting.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    policy = policy or RetryPolicy()

    jobs: list[tuple[str, PromptTemplate, LanguageConfig, ModelConfig, Path]] = []
    completed: set[str] = set()
    for model in models:
        for lang in languages:
            for template in sorted(templates, key=lambda t: t.id):
                output_id = output_id_for(model.model_id, lang.iso_code, template.task_type, template.id)
                path = record_path(out_dir, output_id)
                if path.exists():
                    completed.add(output_id)
                else:
                    jobs.append((output_id, template, lang, model, path))

    manifest = RunManifest(
        models=[m.model_id for m in models],
        languages=[l.iso_code for l in languages],
        expected_calls=len(templates) * len(languages) * len(models),
        completed=completed,
        new_requests=len(jobs),
    )

    gates = {model.model_id: _RateGate(model.min_request_interval) for model in models}

    def run_one(job: tuple[str, PromptTemplate, LanguageConfig, ModelConfig, Path]) -> str:
        output_id, template, lang, model, path = job
        gates[model.model_id].wait()
        instance = render_prompt(template, lang)
        request = build_request(instance, model, lang, require_api_key=backend.requires_api_key)
        record = execute(request, replace(policy, max_retries=model.max_retries), backend)
        _write_atomic(path, dumps_record(record))
        return output_id

    if jobs:
        executor = ThreadPoolExecutor(max_workers=max(1, parallelism))
        try:
            futures = {executor.submit(run_one, job): job[0] for job in jobs}
            for future in as_completed(futures):
                output_id = futures[future]
                try:
                    manifest.completed.add(future.result())
                except CALL_ERRORS as exc:
                    log.warning("call failed: %s", exc)
                    manifest.failures.append((output_id, str(exc)))
        except BaseException:
            # Let running calls finish persisting, drop the queued ones,
            # then surface the abort; the directory stays resumable.
            executor.shutdown(wait=True, cancel_futures=True)
            raise
        executor.shutdown(wait=True)

    manifest.failures.sort()
    _write_atomic(
        out_dir / MANIFEST_FILENAME,
        json.dumps(manifest.to_json_dict(), ensure_ascii=False, indent=2, sort_keys=True) + "\n",
    )
    return manifest


def read_records(out_dir: str | Path) -> list[GenerationRecord]:
    """Load every record file under a run directory, sorted by output id.

    Duplicate output ids mean a corrupted run directory and raise ValueError.
    """
    out_dir = Path(out_dir)
    records: list[GenerationRecord] = []
    seen: dict[str, Path] = {}
    for path in sorted(out_dir.rglob("*.json")):
        if path.name == MANIFEST_FILENAME:
            continue
        record = GenerationRecord.from_json_dict(json.loads(path.read_text(encoding="utf-8")))
        if record.output_id in seen:
            raise ValueError(
                f"duplicate output_id '{record.output_id}' in {seen[record.output_id]} "
                f"and {path} (corrupted run directory)"
            )
        seen[record.output_id] = path
        records.append(record)
    records.sort(key=lambda r: r.output_id)
    return records
