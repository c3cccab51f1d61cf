import logging

import pytest
from hypothesis import given, strategies as st

from uedkit.corpus import PostRecord
from uedkit.errors import DataError
from uedkit.lexicon import (CATEGORIES, EmotionLexicon, Scorer, WarmthLexicon, SCORE_SCALE,
                            default_exclusions, load_emotion_lexicon, load_warmth_lexicon,
                            score_post, tokenize)


def post(text, pid="p1", ts="2021-03-04T10:00:00Z"):
    return PostRecord(pid, "u1", ts, text, len(tokenize(text)))


@pytest.mark.parametrize("text, expected", [
    ("Get #Vaxxed, now!", ["get", "vaxxed", "now"]),
    ("", []),
    ("state-of-the-art", ["state", "of", "the", "art"]),
    ("COVID19 in 2020", ["covid19", "in", "2020"]),
])
def test_tokenize(text, expected):
    assert tokenize(text) == expected


def test_flag_semantics(tmp_path):
    p = tmp_path / "e.txt"
    p.write_text("abandon\tsadness\t1\nabandon\tjoy\t0\n")
    lex = load_emotion_lexicon(p, exclusions=())
    assert dict(lex.entries) == {"abandon": frozenset({"sadness"})}


def test_default_exclusions_drop_vaccine(lexdir):
    lex = load_emotion_lexicon(lexdir / "emotion.txt")
    assert "vaccine" not in lex and "flu" not in lex
    assert {"vaccine", "vaccination"} <= default_exclusions()
    wlex = load_warmth_lexicon(lexdir / "warmth.csv")
    assert "vaccine" not in wlex


def test_four_row_fixture(tmp_path):
    p = tmp_path / "e.txt"
    p.write_text("calm\ttrust\t1\ncalm\tpositive\t1\nrage\tanger\t1\nrage\tjoy\t0\n")
    lex = load_emotion_lexicon(p, exclusions=())
    assert dict(lex.entries) == {"calm": frozenset({"trust", "positive"}),
                                 "rage": frozenset({"anger"})}


def test_unknown_category_names_line(tmp_path):
    p = tmp_path / "e.txt"
    p.write_text("calm\ttrust\t1\ncalm\tboredom\t1\n")
    with pytest.raises(DataError, match=r":2: unknown category"):
        load_emotion_lexicon(p, exclusions=())


def test_duplicate_row_last_wins(tmp_path, caplog):
    p = tmp_path / "e.txt"
    p.write_text("calm\ttrust\t1\ncalm\ttrust\t0\n")
    with caplog.at_level(logging.WARNING):
        lex = load_emotion_lexicon(p, exclusions=())
    assert "calm" not in lex
    assert "duplicate" in caplog.text


def test_warmth_row_parse(tmp_path):
    p = tmp_path / "w.csv"
    p.write_text("word,warmth,sociability,trust,competence,arousal\nkind,0.9,0.95,0.85,0.6,0.3\n")
    lex = load_warmth_lexicon(p, exclusions=())
    assert lex.scores("kind") == {"warmth": 0.9, "sociability": 0.95, "trust": 0.85,
                                  "competence": 0.6, "arousal": 0.3}


def test_warmth_ten_rows(tmp_path):
    rows = {f"w{i}": tuple(round((i + j) / 20, 2) for j in range(5)) for i in range(10)}
    lines = ["word,warmth,sociability,trust,competence,arousal"]
    lines += [w + "," + ",".join(str(v) for v in s) for w, s in rows.items()]
    p = tmp_path / "w.csv"
    p.write_text("\n".join(lines) + "\n")
    lex = load_warmth_lexicon(p, exclusions=())
    assert {w: tuple(lex.scores(w).values()) for w in rows} == rows


@pytest.mark.parametrize("body, pattern", [
    ("word,warmth,sociability,trust,competence,arousal\nx,1.5,0,0,0,0\n", r":2: warmth score 1.5 outside"),
    ("word,warmth,sociability,trust,competence,arousal\nx,0.1,0,0,0,0\ny,0.2,abc,0,0,0\n",
     r":3: non-numeric sociability"),
    ("word,warmth,sociability,trust,arousal\nx,0.1,0,0,0\n", r"missing column 'competence'"),
])
def test_warmth_errors(tmp_path, body, pattern):
    p = tmp_path / "w.csv"
    p.write_text(body)
    with pytest.raises(DataError, match=pattern):
        load_warmth_lexicon(p, exclusions=())


def test_score_good_good_day():
    elex = EmotionLexicon({"good": frozenset({"positive", "joy"})})
    s = score_post(post("good good day"), elex, WarmthLexicon({}))
    assert s.token_count == 3
    assert s.count("positive") == 2 and s.count("joy") == 2
    assert sum(s.emotion_counts.values()) == 4


def test_no_hits():
    s = score_post(post("nothing here at all"), EmotionLexicon({}), WarmthLexicon({}))
    assert s.token_count == 4
    assert all(v == 0 for v in s.emotion_counts.values())


def test_warmth_sum_kind_kind():
    wlex = WarmthLexicon({"kind": (900000, 0, 0, 0, 0)})
    s = score_post(post("kind kind"), EmotionLexicon({}), wlex)
    assert s.warmth_sum == pytest.approx(1.8) and s.warmth_hits == 2
    assert s.score_sums["warmth"] == 1_800_000


def test_three_category_word_exceeds_tokens():
    elex = EmotionLexicon({"terrible": frozenset({"negative", "fear", "sadness"})})
    s = score_post(post("terrible"), elex, WarmthLexicon({}))
    assert sum(s.emotion_counts.values()) == 3 > s.token_count == 1


def test_excluded_words_still_count_as_tokens(lexdir):
    elex = load_emotion_lexicon(lexdir / "emotion.txt")
    wlex = load_warmth_lexicon(lexdir / "warmth.csv")
    s = score_post(post("vaccine flu vaccine"), elex, wlex)
    assert s.token_count == 3
    assert all(v == 0 for v in s.emotion_counts.values())
    assert s.warmth_hits == 0


def test_low_counts(lexdir):
    elex = load_emotion_lexicon(lexdir / "emotion.txt")
    wlex = load_warmth_lexicon(lexdir / "warmth.csv")
    s = Scorer(elex, wlex).score(post("bad bad good kind"))
    assert s.count("low_warmth") == 2
    assert s.count("low_competence") == 2  # bad has competence 0.3 < 1/3


WORDS = ["good", "bad", "terrible", "kind", "day", "x", "vaccine"]


@given(st.lists(st.sampled_from(WORDS), max_size=30), st.sampled_from(WORDS))
def test_appending_a_token_is_monotone(tokens, extra):
    elex = EmotionLexicon({"good": frozenset({"positive", "joy"}),
                           "terrible": frozenset({"negative", "fear", "sadness"}),
                           "bad": frozenset({"negative"})})
    wlex = WarmthLexicon({"kind": (900000, 950000, 850000, 600000, 300000),
                          "bad": (100000, 200000, 150000, 300000, 550000)})
    sc = Scorer(elex, wlex)
    a = sc.score_tokens("p", "2021-01", tokens)
    b = sc.score_tokens("p", "2021-01", tokens + [extra])
    assert b.token_count == a.token_count + 1
    for c in CATEGORIES:
        assert b.count(c) >= a.count(c)
        assert a.count(c) <= a.token_count
    for d in a.score_sums:
        assert b.score_sums[d] >= a.score_sums[d]
    if a.warmth_hits:
        assert 0 <= a.score_sums["warmth"] / (SCORE_SCALE * a.warmth_hits) <= 1
