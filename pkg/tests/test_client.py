import json
import re
import threading
import time

import pytest

from cohbench.benchgen import BenchmarkProblem
from cohbench.client import (EndpointConfig, PromptBundle,
                             ResponseStore, RunTask, anonymous_config,
                             build_benchmark_prompt, build_practical_prompt,
                             complete, run_bundles)
from cohbench.errors import ConfigError, InputError, TransportError
from cohbench.propositions import inject_uncertainty, model_coherence_graph
from cohbench.scoring import parse_edge_list, postprocess, score_attempt


@pytest.fixture
def problem(pentagon):
    base = model_coherence_graph(pentagon, "percolation", "greedy", seed=0)
    variants = {"base": base}
    for regime in ("zero", "low", "medium", "high"):
        variants[regime] = inject_uncertainty(base, regime, seed=1)
    meta = {"size": 5, "sparsity": "sparse", "density_target": 0.15,
            "achieved_density": 0.7, "cover_method": "percolation",
            "sfd_method": "greedy", "seed": "0:0"}
    return BenchmarkProblem("sparse-n05-i0", pentagon, variants, meta)


class TestBenchmarkPrompt:
    def test_contains_format_instruction(self, problem):
        bundle = build_benchmark_prompt(problem, "base")
        assert ("Return solely the edge list with proposition names "
                "for vertices") in bundle.text
        assert "[('b', 'c', 0)," in bundle.text

    def test_block_order(self, problem):
        text = build_benchmark_prompt(problem, "base").text
        positions = [text.index("Variables:"),
                     text.index("A given variable can have these properties:"),
                     text.index("A given property is assigned in a fuzzy manner:"),
                     text.index("Input:")]
        assert positions == sorted(positions)

    def test_one_threshold_line_per_property(self, problem):
        ps = problem.variants["base"]
        text = build_benchmark_prompt(problem, "base").text
        threshold_lines = [ln for ln in text.splitlines()
                           if re.match(r"property \d+: !", ln)]
        assert len(threshold_lines) == len(ps.properties)
        for prop in ps.properties:
            assert f"property {prop}: {prop} XOR !{prop}" in text

    def test_variables_listed(self, problem):
        text = build_benchmark_prompt(problem, "base").text
        assert "['q1', 'q2', 'q3']" in text

    def test_proposition_block_round_trips(self, problem):
        for regime in ("base", "high"):
            text = build_benchmark_prompt(problem, regime).text
            rendered = problem.variants[regime].rendered()
            extracted = dict(re.findall(r"'Proposition\((\w+)\): \"([^\"]+)\"'",
                                        text))
            assert extracted == rendered

    def test_deterministic(self, problem):
        a = build_benchmark_prompt(problem, "low")
        b = build_benchmark_prompt(problem, "low")
        assert a.text == b.text and a.sha256 == b.sha256

    def test_missing_regime(self, problem):
        bare = BenchmarkProblem(problem.id, problem.graph,
                                {"base": problem.variants["base"]},
                                problem.meta)
        with pytest.raises(InputError):
            build_benchmark_prompt(bare, "high")


class TestPracticalPrompt:
    def test_contains_ordering_instruction(self):
        bundle = build_practical_prompt([("p1", "x"), ("p2", "y")])
        assert ("Order vertices (in edges) and edges (in the graph) "
                "lexicographically.") in bundle.text
        assert "buildCoherence: " in bundle.text

    def test_twelve_labeled_lines(self):
        items = [(f"p{i}", f"claim number {i}") for i in range(1, 13)]
        text = build_practical_prompt(items).text
        body = text.split("buildCoherence: \n", 1)[1]
        assert len(body.strip().splitlines()) == 12
        assert body.startswith("p1: claim number 1")

    def test_requires_two_propositions(self):
        with pytest.raises(InputError):
            build_practical_prompt([("p1", "only one")])


class FakeTransport:
    """Scripted transport: a list of (status, body) or exceptions."""

    def __init__(self, script):
        self.script = list(script)
        self.calls = []

    def post(self, url, headers, payload):
        self.calls.append((url, headers, payload))
        action = self.script.pop(0)
        if isinstance(action, Exception):
            raise action
        return action


def chat_body(content):
    return json.dumps({"choices": [{"message": {"content": content}}]})


BUNDLE = PromptBundle("hello", "prob-1", "base", "benchmark")


class TestComplete:
    def config(self, **kw):
        return anonymous_config("http://unit.test/v1", "mock-model",
                                backoff_base=0.0, **kw)

    def test_success_first_try(self):
        transport = FakeTransport([(200, chat_body("[('a','b',0)]"))])
        result = complete(BUNDLE, self.config(), transport=transport)
        assert result.text == "[('a','b',0)]"
        assert result.attempts == 1
        url, headers, payload = transport.calls[0]
        assert url == "http://unit.test/v1/chat/completions"
        assert payload["messages"] == [{"role": "user", "content": "hello"}]
        assert "Authorization" not in headers

    def test_retries_transient_failures(self):
        transport = FakeTransport([
            (503, "busy"), ConnectionError("boom"), (200, chat_body("ok"))])
        result = complete(BUNDLE, self.config(max_retries=3),
                          transport=transport)
        assert result.text == "ok"
        assert result.attempts == 3

    def test_exhausted_retries_raise_with_log(self):
        transport = FakeTransport([(503, "busy")] * 3)
        with pytest.raises(TransportError) as err:
            complete(BUNDLE, self.config(max_retries=2), transport=transport)
        assert len(err.value.attempts) == 3

    def test_non_retryable_status_fails_fast(self):
        transport = FakeTransport([(400, "bad request")])
        with pytest.raises(TransportError):
            complete(BUNDLE, self.config(max_retries=5), transport=transport)
        assert transport.script == []  # nothing further attempted

    def test_temperature_forwarded_only_when_set(self):
        transport = FakeTransport([(200, chat_body("x"))])
        complete(BUNDLE, self.config(), transport=transport)
        assert "temperature" not in transport.calls[0][2]
        transport = FakeTransport([(200, chat_body("x"))])
        complete(BUNDLE, self.config(temperature=0.2), transport=transport)
        assert transport.calls[0][2]["temperature"] == 0.2

    def test_missing_api_key_is_config_error(self, monkeypatch):
        monkeypatch.delenv("UNIT_TEST_KEY", raising=False)
        config = EndpointConfig("http://unit.test", "m",
                                api_key_env="UNIT_TEST_KEY")
        with pytest.raises(ConfigError):
            complete(BUNDLE, config, transport=FakeTransport([]))

    def test_key_from_environment(self, monkeypatch):
        monkeypatch.setenv("UNIT_TEST_KEY", "sk-unit")
        transport = FakeTransport([(200, chat_body("x"))])
        config = EndpointConfig("http://unit.test", "m",
                                api_key_env="UNIT_TEST_KEY", backoff_base=0.0)
        complete(BUNDLE, config, transport=transport)
        assert transport.calls[0][1]["Authorization"] == "Bearer sk-unit"

    def test_key_from_credentials_file(self, tmp_path):
        secret = tmp_path / "key.txt"
        secret.write_text("sk-file\n")
        transport = FakeTransport([(200, chat_body("x"))])
        config = EndpointConfig("http://unit.test", "m",
                                credentials_file=str(secret), backoff_base=0.0)
        complete(BUNDLE, config, transport=transport)
        assert transport.calls[0][1]["Authorization"] == "Bearer sk-file"

    def test_endpoint_config_validation(self):
        with pytest.raises(ConfigError):
            EndpointConfig.from_json_dict({"base_url": "x"})
        with pytest.raises(ConfigError):
            EndpointConfig.from_json_dict({"base_url": "x", "model": "m",
                                           "apikey": "nope"})


class TestClosedLoop:
    def test_mock_truth_scores_one(self, problem):
        truth = problem.graph
        response = "[" + ", ".join(
            f"('{u}', '{v}', {1 if w < 0 else 0})"
            for u, v, w in truth.edges()) + "]"
        transport = FakeTransport([(200, chat_body(response))])
        bundle = build_benchmark_prompt(problem, "base")
        result = complete(bundle, anonymous_config("http://t", "m",
                                                   backoff_base=0.0),
                          transport=transport)
        report = score_attempt(truth, result.text, problem.id, "mock")
        assert report.micro_f1 == 1.0

    def test_mock_prose_yields_parse_failed(self, problem):
        transport = FakeTransport([(200, chat_body("I politely decline."))])
        result = complete(build_benchmark_prompt(problem, "base"),
                          anonymous_config("http://t", "m", backoff_base=0.0),
                          transport=transport)
        report = score_attempt(problem.graph, result.text, problem.id, "mock")
        assert "parse_failed" in report.flags

    def test_thirty_responses_feed_consensus(self, problem):
        from cohbench.graphs import median_consensus
        response = "[" + ", ".join(
            f"('{u}', '{v}', {1 if w < 0 else 0})"
            for u, v, w in problem.graph.edges()) + "]"
        graphs = []
        for _ in range(30):
            raw, failed = parse_edge_list(response)
            assert not failed
            g, _ = postprocess(raw, problem.graph.vertices)
            graphs.append(g)
        assert median_consensus(graphs) == problem.graph


class TestPracticalPath:
    def test_ratings_round_trip_to_weighted_cut(self, debate):
        # a full practical-mode pass: prompt, rated responses, parse,
        # consensus, exact cut
        from cohbench.graphs import median_consensus
        from cohbench.solvers import max_cut_exact

        items = [(v, f"claim {v}") for v in sorted(debate.vertices)]
        bundle = build_practical_prompt(items, problem_id="debate")
        assert bundle.template == "practical"
        rating_rows = [f"('{u}', '{v}', {5 * w + 5})"
                       for u, v, w in debate.edges()]
        response = "[" + ", ".join(rating_rows) + "]"
        graphs = []
        for _ in range(30):
            raw, failed = parse_edge_list(response, benchmark_mode=False)
            assert not failed
            g, flags = postprocess(raw, debate.vertices)
            assert not flags
            graphs.append(g)
        consensus = median_consensus(graphs)
        assert consensus == debate
        cut = max_cut_exact(consensus)
        assert cut.members == frozenset(
            {"p1", "p2", "p3", "p4", "p6", "p7", "p9"})


class CountingTransport:
    """Tracks the maximum number of concurrent in-flight requests."""

    def __init__(self):
        self.lock = threading.Lock()
        self.in_flight = 0
        self.max_in_flight = 0

    def post(self, url, headers, payload):
        with self.lock:
            self.in_flight += 1
            self.max_in_flight = max(self.max_in_flight, self.in_flight)
        time.sleep(0.02)
        with self.lock:
            self.in_flight -= 1
        return 200, chat_body("[('a','b',0)]")


class TestRunBundles:
    def make_tasks(self, n):
        return [RunTask(PromptBundle(f"prompt {i}", f"prob-{i:02d}", "base",
                                     "benchmark"), 0) for i in range(n)]

    def test_concurrency_limit_respected(self, tmp_path):
        transport = CountingTransport()
        config = anonymous_config("http://t", "m", concurrency=3,
                                  backoff_base=0.0)
        store = ResponseStore(tmp_path / "run")
        completed, skipped, failures = run_bundles(
            self.make_tasks(12), config, store, transport=transport)
        assert completed == 12 and skipped == 0 and not failures
        assert transport.max_in_flight <= 3

    def test_resume_skips_existing(self, tmp_path):
        transport = CountingTransport()
        config = anonymous_config("http://t", "m", concurrency=2,
                                  backoff_base=0.0)
        store = ResponseStore(tmp_path / "run")
        tasks = self.make_tasks(4)
        run_bundles(tasks, config, store, transport=transport)
        completed, skipped, _ = run_bundles(tasks, config, store,
                                            transport=transport)
        assert completed == 0 and skipped == 4

    def test_failures_collected(self, tmp_path):
        class FailingTransport:
            def post(self, url, headers, payload):
                raise ConnectionError("down")

        config = anonymous_config("http://t", "m", concurrency=2,
                                  max_retries=0, backoff_base=0.0)
        store = ResponseStore(tmp_path / "run")
        completed, _, failures = run_bundles(self.make_tasks(3), config, store,
                                             transport=FailingTransport())
        assert completed == 0 and len(failures) == 3


class TestResponseStore:
    def test_save_load_round_trip(self, tmp_path):
        store = ResponseStore(tmp_path / "run")
        record = {"problem_id": "p", "regime": "base", "attempt": 0,
                  "raw_text": "[]", "model": "m", "prompt_hash": "x",
                  "latency_ms": 1.0, "timestamp": 0.0}
        store.save("p", "base", 0, record)
        assert store.has("p", "base", 0)
        assert store.load("p", "base", 0) == record
        assert not list((tmp_path / "run" / "p").glob("*.tmp"))

    def test_attempts_for_filters_regime(self, tmp_path):
        store = ResponseStore(tmp_path / "run")
        for regime in ("base", "high"):
            for attempt in range(2):
                store.save("p", regime, attempt,
                           {"regime": regime, "attempt": attempt})
        records = store.attempts_for("p", "high")
        assert [r["attempt"] for r in records] == [0, 1]

    def test_iter_records_sorted(self, tmp_path):
        store = ResponseStore(tmp_path / "run")
        store.save("b", "base", 0, {"problem_id": "b"})
        store.save("a", "base", 0, {"problem_id": "a"})
        assert [r["problem_id"] for r in store.iter_records()] == ["a", "b"]
