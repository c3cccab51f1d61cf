import json
import logging

import httpx
import numpy as np
import pytest

from uedkit.corpus import PostRecord
from uedkit.errors import DataError, ProviderError
from uedkit.providers import HttpChatClient, MockChatClient
from uedkit.stance import (LABELS, PromptTemplate, StanceLabel, aggregate_reports, classify,
                           evaluate, f1_score, monthly_proportions, normalize_label,
                           report_from_confusion, sample_monthly, StanceRecord)


@pytest.mark.parametrize("raw, label", [
    ("favor", "favor"), ("FAVOR\n", "favor"), ("  Against.", "against"), ("Favour", "favor"),
    ("neither", "neutral"), ("Neither of the two inferences can be reasonably made.", "neutral"),
    ("Stance: against", "against"), ('"neutral"', "neutral"), ("favor\nbecause it says so", "favor"),
])
def test_normalize(raw, label):
    assert normalize_label(raw) == StanceLabel(label)


@pytest.mark.parametrize("raw", ["", "maybe", "I cannot tell", "favor against"])
def test_normalize_unmappable(raw):
    assert normalize_label(raw) is None


def posts(n, month="2021-01", prefix="p"):
    return [PostRecord(f"{prefix}{i:03d}", f"u{i}", f"{month}-{i % 28 + 1:02d}T00:00:00Z", f"text {i}", 2)
            for i in range(n)]


class Fixed:
    model = "fixed"

    def __init__(self, answer):
        self.answer = answer

    def complete(self, messages, temperature, run_id=""):
        return self.answer(messages) if callable(self.answer) else self.answer


def test_always_favor():
    res = classify(posts(5), Fixed("favor"), concurrency=2)
    assert [r.label for r in res.records] == ["favor"] * 5 and res.failures == []


def test_noisy_answer():
    res = classify(posts(3), Fixed("FAVOR\n"), concurrency=1)
    assert {r.label for r in res.records} == {"favor"}


def test_one_garbage_answer(tmp_path, caplog):
    calls = []

    def answer(messages):
        calls.append(messages[-1]["content"])
        return "???" if "text 7" in messages[-1]["content"] else "against"

    with caplog.at_level(logging.WARNING):
        res = classify(posts(10), Fixed(answer), concurrency=3, log_path=tmp_path / "log.jsonl")
    assert len(res.records) == 9 and res.failures == ["p007"]
    assert sum("text 7" in c for c in calls) == 2  # retried once
    logged = [json.loads(x) for x in (tmp_path / "log.jsonl").read_text().splitlines()]
    assert [r for r in logged if r["label"] is None] == [
        {"post_id": "p007", "label": None, "model_id": "fixed", "temperature": 0.4,
         "prompt_hash": PromptTemplate.default().hash, "run_id": "run-0"}]


def test_records_sorted_and_tagged():
    ps = posts(6)[::-1]
    res = classify(ps, MockChatClient(), temperature=0.7, run_id="r9", concurrency=4)
    assert [r.post_id for r in res.records] == sorted(p.id for p in ps)
    assert {(r.model_id, r.temperature, r.run_id) for r in res.records} == {("mock-stance-v1", 0.7, "r9")}


def test_bad_temperature_and_duplicates():
    with pytest.raises(ValueError):
        classify(posts(1), Fixed("favor"), temperature=2.5)
    with pytest.raises(DataError):
        classify(posts(2) + posts(1), Fixed("favor"))


def cue_posts(n):
    words = ["poison", "safe", "clinic", "grateful", "mandatory", "today", "lies", "protect"]
    return [PostRecord(f"c{i:04d}", "u", "2021-02-01T00:00:00Z",
                       " ".join(words[(i * k) % len(words)] for k in range(1, 4)), 3) for i in range(n)]


def test_resume_equivalence(tmp_path):
    ps = cue_posts(60)
    log = tmp_path / "run.log.jsonl"
    with pytest.raises(ProviderError) as err:
        classify(ps, MockChatClient(fail_after=25), temperature=0.4, concurrency=1, log_path=log)
    assert err.value.checkpoint == log
    assert len(log.read_text().splitlines()) == 25
    resumed = classify(ps, MockChatClient(), temperature=0.4, concurrency=3, log_path=log)
    straight = classify(ps, MockChatClient(), temperature=0.4, concurrency=3)
    assert resumed == straight


def test_prompt_template(tmp_path):
    t = PromptTemplate.parse("sys for {target}\n---\nPost: {text}\n\nAnswer:", "masks")
    msgs = t.messages("hello")
    assert msgs == [{"role": "system", "content": "sys for masks"},
                    {"role": "user", "content": "Post: hello\n\nAnswer:"}]
    assert t.hash != PromptTemplate.parse(t.system + "\n---\n" + t.user, "vaccines").hash
    with pytest.raises(ValueError):
        PromptTemplate.parse("no slot here")
    assert "{text}" in PromptTemplate.default().user


def test_http_chat_wire_format(monkeypatch):
    monkeypatch.setenv("TEST_LLM_KEY", "sekret")
    seen = []

    def handler(request):
        seen.append((request.headers.get("authorization"), json.loads(request.content)))
        if len(seen) == 1:
            return httpx.Response(429)
        return httpx.Response(200, json={"choices": [{"message": {"role": "assistant", "content": "Against"}}]})

    client = HttpChatClient("http://llm.test/v1/chat/completions", "m-1", api_key_env="TEST_LLM_KEY",
                            retries=2, backoff=0, transport=httpx.MockTransport(handler))
    msgs = [{"role": "user", "content": "hi"}]
    assert client.complete(msgs, 0.4) == "Against"
    assert seen[-1] == ("Bearer sekret", {"model": "m-1", "temperature": 0.4, "messages": msgs})


def test_http_chat_client_error_is_fatal():
    client = HttpChatClient("http://llm.test/", "m", retries=3, backoff=0,
                            transport=httpx.MockTransport(lambda r: httpx.Response(401)))
    with pytest.raises(ProviderError):
        client.complete([{"role": "user", "content": "x"}], 0.0)


def test_sample_monthly():
    corpus = posts(5, "2021-01", "a") + posts(3, "2021-02", "b")
    one = sample_monthly(corpus, 2, seed=3)
    assert one == sample_monthly(list(reversed(corpus)), 2, seed=3)
    assert sum(p.month == "2021-01" for p in one) == 2
    assert [p.id for p in one if p.month == "2021-02"] == ["b000", "b001"]
    with pytest.raises(DataError):
        sample_monthly([], 5)


def test_sample_exhaustion_warns(caplog):
    with caplog.at_level(logging.WARNING):
        out = sample_monthly(posts(3), 2000, seed=0)
    assert len(out) == 3 and "2021-01" in caplog.text


def test_sample_count_oracle():
    corpus = []
    for m in range(24):
        month = f"{2019 + m // 12}-{m % 12 + 1:02d}"
        corpus += posts(100 + 7 * (m % 5), month, f"m{m}-")
    out = sample_monthly(corpus, 100, seed=1)
    assert len(out) == 2400
    assert max(sum(p.month == m for p in out) for m in {p.month for p in out}) == 100


def test_f1_identity():
    assert f1_score(0.5464, 0.9282) == pytest.approx(0.6879, abs=1e-4)
    assert f1_score(0, 0) == 0


def test_perfect_predictions():
    gold = {"a": "favor", "b": "against", "c": "neutral"}
    r = evaluate(dict(gold), gold)
    assert r.accuracy == 1 and r.macro_avg.f1 == 1 and r.weighted_avg.f1 == 1


def test_twelve_item_confusion():
    # rows gold, columns predicted, order against/favor/neutral
    m = [[3, 1, 0],
         [1, 4, 1],
         [0, 1, 1]]
    r = report_from_confusion(m)
    assert r.total == 12 and r.accuracy == pytest.approx(8 / 12)
    a, f, n = (r.per_class[k] for k in LABELS)
    assert (a.precision, a.recall, a.support) == (pytest.approx(3 / 4), pytest.approx(3 / 4), 4)
    assert (f.precision, f.recall, f.support) == (pytest.approx(4 / 6), pytest.approx(4 / 6), 6)
    assert (n.precision, n.recall, n.support) == (pytest.approx(1 / 2), pytest.approx(1 / 2), 2)
    assert r.macro_avg.f1 == pytest.approx((3 / 4 + 4 / 6 + 1 / 2) / 3)
    assert r.weighted_avg.f1 == pytest.approx((4 * 3 / 4 + 6 * 4 / 6 + 2 * 1 / 2) / 12)
    assert r.weighted_avg.recall == pytest.approx(r.accuracy)


def test_evaluate_permutation_invariant_and_identities():
    rng = np.random.default_rng(5)
    ids = [f"x{i}" for i in range(200)]
    gold = {i: LABELS[k] for i, k in zip(ids, rng.integers(0, 3, 200))}
    pred = {i: LABELS[k] for i, k in zip(ids, rng.integers(0, 3, 200))}
    r1 = evaluate(pred, gold)
    shuffled = list(pred.items())
    rng.shuffle(shuffled)
    r2 = evaluate(shuffled, gold)
    assert r1 == r2
    assert r1.weighted_avg.recall == pytest.approx(r1.accuracy)
    assert sum(c.support for c in r1.per_class.values()) == r1.total
    for c in r1.per_class.values():
        assert c.f1 == pytest.approx(f1_score(c.precision, c.recall))


def test_evaluate_id_mismatch():
    with pytest.raises(DataError, match="missing predictions \\['b'\\]"):
        evaluate({"a": "favor"}, {"a": "favor", "b": "against"})


def test_aggregate_reports():
    r1 = report_from_confusion([[2, 0, 0], [0, 2, 0], [0, 0, 2]])
    r2 = report_from_confusion([[1, 1, 0], [0, 2, 0], [0, 0, 2]])
    agg = aggregate_reports([r1, r2])
    assert agg["runs"] == 2
    assert agg["accuracy"]["mean"] == pytest.approx((1 + 5 / 6) / 2)
    assert agg["accuracy"]["sd"] == pytest.approx(np.std([1, 5 / 6], ddof=1))
    assert agg["against"]["support"] == 2


def test_monthly_proportions():
    ps = posts(4, "2021-01", "a") + posts(2, "2021-02", "b")
    recs = [StanceRecord(i, lab, "m", 0.4, "h", "r") for i, lab in
            [("a000", "favor"), ("a001", "favor"), ("a002", "against"), ("b000", "neutral")]]
    rows = monthly_proportions(ps, recs)
    assert rows == [
        {"month": "2021-01", "n_sampled": 4, "favor_frac": 2 / 3, "against_frac": 1 / 3, "neutral_frac": 0.0},
        {"month": "2021-02", "n_sampled": 2, "favor_frac": 0.0, "against_frac": 0.0, "neutral_frac": 1.0},
    ]
