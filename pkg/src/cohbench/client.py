"""Prompt construction and chat-completion transport.

Prompt text is pure and deterministic: the same problem and regime always
produce byte-identical prompts. The transport speaks the OpenAI-compatible
chat shape against any base URL; per-provider differences are handled by
configuration, never by code. Raw responses are persisted verbatim so runs
can be re-scored offline.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import os
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ConfigError, InputError, TransportError

BENCHMARK_HEADER = (
    "For the input set of propositions, identify which propositions are "
    "logically consistent\n(i.e., can coexist without contradiction). "
    "Construct a networkx graph where inconsistent edges\nare weight 1 and "
    "consistent edges are weight 0. If two vertices do not\ninvolve the same "
    "variables, do not create an edge between them.\n"
    "\n"
    "Return solely the edge list with proposition names for vertices. i.e., "
    "return responses\nin this format:\n"
    "\n"
    "[('b', 'c', 0),\n"
    "('b', 'e', 0),\n"
    "('c', 'd', 0),\n"
    "('c', 'e', 0)]")

PRACTICAL_HEADER = (
    "Imagine that you are a perfectly objective arbitrator with impeccable "
    "judgment and integrity. In response to a prompt of the form "
    "'buildCoherence: ' below followed by a list of labeled propositions, "
    "please do the following: First, determine which pairs of propositions "
    "are substantively related. Second, for each related pair of "
    "propositions, determine their logical relationship, assuming that at "
    "least one is true, whether or not either actually is. I want you to "
    "ignore the truth, falsity or basis in fact of either claim. Third, "
    "based on your determination just above, numerically rate the relative "
    "consistency of the two propositions. Do not pay attention to or comment "
    "on the truth or basis in fact of either proposition independent of the "
    "other. Your rating of relative consistency should be on a scale from 0 "
    "to 10, with a value of 0 for a pair of propositions that are not at all "
    "consistent and a value of 10 for a pair of propositions that are "
    "totally consistent. I cannot emphasize enough that for your rating, I "
    "want you to ignore the truth or basis in fact of either proposition, "
    "since anything that is not consistent with reality cannot be true. If "
    "you determine that propositions are unrelated despite previously "
    "determining otherwise, omit that pair. To be clear, a pair of false but "
    "consistent claims should also be rated a 10. Meanwhile, a pair of "
    "propositions of which one is true and the other is false, should be "
    "rated a 0. Finally, construct a NetworkX graph where propositions are "
    "vertices and edges correspond to substantively related pairs of "
    "propositions, with weights given by the consistency ratings just above. "
    "Only return the edge list with proposition labels for vertices. i.e., "
    "return responses in this format (here 'p2', 'p3', 'p4', and 'p5' are "
    "labels): [('p2', 'p3', 0), ('p2', 'p5', 10), ('p3', 'p4', 9), "
    "('p3', 'p5', 2)]. Order vertices (in edges) and edges (in the graph) "
    "lexicographically.\n")


@dataclass(frozen=True)
class PromptBundle:
    text: str
    problem_id: str
    regime: str
    template: str  # "benchmark" or "practical"

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()


def build_benchmark_prompt(problem, regime: str) -> PromptBundle:
    """Single-turn reconstruction prompt for one problem variant.

    Lays out, in order: the task header with the response format, the
    variables list, one XOR line and one fuzzy-threshold line per property,
    and the rendered propositions.
    """
    if regime not in problem.variants:
        raise InputError(f"problem {problem.id} has no regime {regime!r}")
    ps = problem.variants[regime]
    lines = [BENCHMARK_HEADER]
    lines.append("\nVariables:")
    lines.append("[" + ", ".join(f"'{v}'" for v in ps.variables) + "]")
    lines.append("\nA given variable can have these properties:")
    for prop in ps.properties:
        lines.append(f"property {prop}: {prop} XOR !{prop}")
    lines.append("\nA given property is assigned in a fuzzy manner:")
    for i, prop in enumerate(ps.properties, start=1):
        lines.append(f"property {i}: !{prop} := < 0.5{prop}. "
                     f"{prop} := >= 0.5{prop}")
    lines.append("\nInput:")
    rendered = ps.rendered()
    rows = [f"'Proposition({v}): \"{rendered[v]}\"'" for v in sorted(rendered)]
    lines.append("[" + ",\n".join(rows) + "]")
    return PromptBundle("\n".join(lines) + "\n", problem.id, regime,
                        "benchmark")


def build_practical_prompt(propositions, problem_id: str = "practical") -> PromptBundle:
    """Consistency-rating prompt over free-text labeled propositions.

    ``propositions`` is a sequence of (label, text) pairs; at least two are
    required.
    """
    items = list(propositions.items()) if isinstance(propositions, dict) \
        else [tuple(p) for p in propositions]
    if len(items) < 2:
        raise InputError("practical prompts need at least two propositions")
    body = "\n".join(f"{label}: {text}" for label, text in items)
    text = PRACTICAL_HEADER + "\nbuildCoherence: \n" + body + "\n"
    return PromptBundle(text, problem_id, "practical", "practical")


# ---------------------------------------------------------------------------
# endpoint configuration and transport

RETRYABLE_STATUS = {429, 500, 502, 503, 504}


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    model: str
    api_key_env: str | None = "COHBENCH_API_KEY"
    credentials_file: str | None = None
    headers: dict = field(default_factory=dict)
    temperature: float | None = None
    max_retries: int = 3
    concurrency: int = 4
    timeout: float = 120.0
    backoff_base: float = 0.5

    @classmethod
    def from_json_dict(cls, data: dict) -> "EndpointConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown endpoint config keys: {sorted(unknown)}")
        if "base_url" not in data or "model" not in data:
            raise ConfigError("endpoint config needs base_url and model")
        return cls(**data)

    @classmethod
    def from_file(cls, path) -> "EndpointConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read endpoint config {path}: {exc}")
        return cls.from_json_dict(data)

    def resolve_api_key(self) -> str | None:
        """Key from the environment or a credentials file; never CLI flags.

        Returns None when the config opts out of authentication by setting
        api_key_env to null/empty and naming no credentials file.
        """
        if self.credentials_file:
            try:
                key = Path(self.credentials_file).read_text().strip()
            except OSError as exc:
                raise ConfigError(f"cannot read credentials file: {exc}")
            if key:
                return key
            raise ConfigError(f"credentials file {self.credentials_file} is empty")
        if not self.api_key_env:
            return None
        key = os.environ.get(self.api_key_env, "").strip()
        if not key:
            raise ConfigError(
                f"no API key: set ${self.api_key_env} or configure "
                f"credentials_file")
        return key


class HttpTransport:
    """Blocking JSON POST via requests; swap in a fake for tests."""

    def __init__(self, timeout: float = 120.0):
        self.timeout = timeout

    def post(self, url: str, headers: dict, payload: dict):
        import requests

        resp = requests.post(url, headers=headers, json=payload,
                             timeout=self.timeout)
        return resp.status_code, resp.text


@dataclass(frozen=True)
class CompletionResult:
    text: str
    latency_ms: float
    attempts: int


def complete(bundle: PromptBundle, config: EndpointConfig,
             transport=None) -> CompletionResult:
    """Send one single-turn chat completion with retry and backoff.

    Transient failures (connection errors, 429, 5xx) retry up to
    ``max_retries`` extra attempts with exponential backoff; anything else
    fails immediately. Raises TransportError with the attempt log when all
    attempts are exhausted.
    """
    transport = transport or HttpTransport(timeout=config.timeout)
    key = config.resolve_api_key()
    headers = {"Content-Type": "application/json"}
    if key:
        headers["Authorization"] = f"Bearer {key}"
    headers.update(config.headers)
    payload = {
        "model": config.model,
        "messages": [{"role": "user", "content": bundle.text}],
    }
    if config.temperature is not None:
        payload["temperature"] = config.temperature
    url = config.base_url.rstrip("/") + "/chat/completions"
    log = []
    start_all = time.monotonic()
    for attempt in range(config.max_retries + 1):
        t0 = time.monotonic()
        try:
            status, body = transport.post(url, headers, payload)
        except Exception as exc:  # connection-level failure
            log.append({"attempt": attempt, "error": repr(exc)})
            status = None
        else:
            if status == 200:
                try:
                    content = json.loads(body)["choices"][0]["message"]["content"]
                except (json.JSONDecodeError, KeyError, IndexError, TypeError):
                    log.append({"attempt": attempt, "status": status,
                                "error": "malformed completion body"})
                    content = None
                if content is not None:
                    latency = (time.monotonic() - t0) * 1000.0
                    return CompletionResult(content, latency, attempt + 1)
            else:
                log.append({"attempt": attempt, "status": status,
                            "body": body[:500]})
                if status not in RETRYABLE_STATUS:
                    raise TransportError(
                        f"endpoint returned {status} for {bundle.problem_id}",
                        attempts=log)
        if attempt < config.max_retries:
            time.sleep(config.backoff_base * (2 ** attempt))
    elapsed = time.monotonic() - start_all
    raise TransportError(
        f"exhausted {config.max_retries + 1} attempts for "
        f"{bundle.problem_id} after {elapsed:.1f}s", attempts=log)


# ---------------------------------------------------------------------------
# response store

class ResponseStore:
    """Append-only store of raw responses: <root>/<problem>/<regime>-<k>.json."""

    def __init__(self, root):
        self.root = Path(root)

    def path(self, problem_id: str, regime: str, attempt: int) -> Path:
        return self.root / problem_id / f"{regime}-{attempt:03d}.json"

    def has(self, problem_id: str, regime: str, attempt: int) -> bool:
        return self.path(problem_id, regime, attempt).exists()

    def save(self, problem_id: str, regime: str, attempt: int, record: dict):
        path = self.path(problem_id, regime, attempt)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
        os.replace(tmp, path)

    def load(self, problem_id: str, regime: str, attempt: int) -> dict:
        return json.loads(self.path(problem_id, regime, attempt).read_text())

    def iter_records(self):
        """All stored records, sorted by (problem, file name)."""
        if not self.root.exists():
            return
        for problem_dir in sorted(p for p in self.root.iterdir() if p.is_dir()):
            for path in sorted(problem_dir.glob("*.json")):
                yield json.loads(path.read_text())

    def attempts_for(self, problem_id: str, regime: str) -> list[dict]:
        problem_dir = self.root / problem_id
        if not problem_dir.exists():
            return []
        records = []
        for path in sorted(problem_dir.glob(f"{regime}-*.json")):
            records.append(json.loads(path.read_text()))
        return records


@dataclass(frozen=True)
class RunTask:
    bundle: PromptBundle
    attempt: int


def run_bundles(tasks, config: EndpointConfig, store: ResponseStore,
                transport=None, resume: bool = True):
    """Fan prompt tasks out to the endpoint under bounded parallelism.

    At most ``config.concurrency`` requests are in flight at any time.
    Existing store entries are skipped when ``resume`` is set. Returns
    (completed, skipped, failures) where failures is a list of
    (task, exception).
    """
    todo = []
    skipped = 0
    for task in tasks:
        if resume and store.has(task.bundle.problem_id, task.bundle.regime,
                                task.attempt):
            skipped += 1
        else:
            todo.append(task)
    failures = []
    completed = 0

    def worker(task: RunTask):
        result = complete(task.bundle, config, transport=transport)
        record = {
            "problem_id": task.bundle.problem_id,
            "regime": task.bundle.regime,
            "attempt": task.attempt,
            "model": config.model,
            "prompt_hash": task.bundle.sha256,
            "raw_text": result.text,
            "latency_ms": result.latency_ms,
            "timestamp": time.time(),
        }
        store.save(task.bundle.problem_id, task.bundle.regime, task.attempt,
                   record)

    with concurrent.futures.ThreadPoolExecutor(
            max_workers=max(1, config.concurrency)) as pool:
        futures = {pool.submit(worker, task): task for task in todo}
        for future in concurrent.futures.as_completed(futures):
            task = futures[future]
            try:
                future.result()
            except Exception as exc:
                failures.append((task, exc))
            else:
                completed += 1
    failures.sort(key=lambda pair: (pair[0].bundle.problem_id,
                                    pair[0].bundle.regime, pair[0].attempt))
    return completed, skipped, failures


def anonymous_config(base_url: str, model: str, **kwargs) -> EndpointConfig:
    """Endpoint config that skips authentication (local or mock servers)."""
    return EndpointConfig(base_url=base_url, model=model, api_key_env=None,
                          **kwargs)


def with_overrides(config: EndpointConfig, **kwargs) -> EndpointConfig:
    return replace(config, **kwargs)
