import json
import unicodedata
from datetime import datetime, timezone

import pytest
from hypothesis import given, strategies as st

from tweettopics.ingest import (
    FileTweetSource,
    KeywordSet,
    LoadStats,
    RawTweet,
    dedupe,
    keyword_filter,
    load_jsonl,
    load_keywords,
    parse_created_at,
)


def _tweet(i, text="कोरोना खोप समाचार आज", lang="ne", when="2021-09-01T10:00:00+00:00"):
    return RawTweet(id=f"t{i}", created_at=parse_created_at(when), text=text, lang=lang)


def _write_jsonl(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


class TestLoadJsonl:
    def test_three_valid_lines(self, tmp_path):
        p = tmp_path / "in.jsonl"
        _write_jsonl(p, [
            json.dumps({"id": f"t{i}", "created_at": "2021-09-01T10:00:00Z",
                        "text": "कोरोना खोप", "lang": "ne"})
            for i in range(3)
        ])
        stats = LoadStats()
        tweets = list(load_jsonl(p, stats))
        assert [t.id for t in tweets] == ["t0", "t1", "t2"]
        assert stats.loaded == 3 and stats.skipped == 0

    def test_truncated_line_skipped_not_fatal(self, tmp_path):
        p = tmp_path / "in.jsonl"
        good = json.dumps({"id": "a", "created_at": "2021-09-01T10:00:00Z",
                           "text": "x", "lang": "ne"})
        good2 = json.dumps({"id": "b", "created_at": "2021-09-01T10:00:00Z",
                            "text": "y", "lang": "ne"})
        _write_jsonl(p, [good, '{"id": "broken", "created_a', good2])
        stats = LoadStats()
        tweets = list(load_jsonl(p, stats))
        assert [t.id for t in tweets] == ["a", "b"]
        assert stats.skipped == 1
        assert stats.bad_lines == [2]

    def test_missing_required_key_skipped(self, tmp_path):
        p = tmp_path / "in.jsonl"
        _write_jsonl(p, [json.dumps({"id": "a", "text": "x"})])
        stats = LoadStats()
        assert list(load_jsonl(p, stats)) == []
        assert stats.skipped == 1

    def test_empty_file(self, tmp_path):
        p = tmp_path / "in.jsonl"
        p.write_text("", encoding="utf-8")
        assert list(load_jsonl(p)) == []

    def test_unreadable_file_is_fatal(self, tmp_path):
        with pytest.raises(OSError):
            list(load_jsonl(tmp_path / "missing.jsonl"))

    def test_timestamps_parse_to_utc_seconds(self):
        dt = parse_created_at("2021-09-15T12:30:45.678+05:45")
        assert dt.tzinfo == timezone.utc
        assert dt.microsecond == 0
        assert dt.hour == 6 and dt.minute == 45


KW = KeywordSet(("कोरोना", "खोप", "भ्याक्सिन"), version="test")


class TestKeywordFilter:
    def test_containment_and_lang_truth_table(self):
        # ten cases against an independent substring-scan oracle
        cases = [
            ("कोरोना अपडेट", "ne"),
            ("कोरोना अपडेट", "en"),
            ("आज मौसम राम्रो", "ne"),
            ("आज मौसम राम्रो", "en"),
            ("खोप लगाउनुहोस्", "ne"),
            ("भ्याक्सिन आयो", "hi"),
            ("मेरो कथा", "ne"),
            ("कोरोना जोडिएको", "ne"),  # decomposable spelling, NFKC-equal
            ("prefixखोपsuffix", "ne"),
            ("खो प", "ne"),  # split keyword must not match
        ]
        for i, (text, lang) in enumerate(cases):
            tweet = _tweet(i, text=text, lang=lang)
            norm = unicodedata.normalize("NFKC", text)
            expected = lang == "ne" and any(
                unicodedata.normalize("NFKC", k) in norm for k in KW.keywords
            )
            assert keyword_filter(tweet, KW) == expected, (text, lang)

    def test_both_conditions_required(self):
        assert keyword_filter(_tweet(1, text="कोरोना छ", lang="ne"), KW)
        assert not keyword_filter(_tweet(2, text="कोरोना छ", lang="en"), KW)
        assert not keyword_filter(_tweet(3, text="मौसम राम्रो", lang="ne"), KW)

    def test_nfkc_invariance(self):
        # compatibility spellings of text and keyword must not change the verdict
        fancy = "ｋｅｙ"  # fullwidth "key"
        plain = _tweet(1, text="the key word")
        compat = _tweet(2, text=f"the {fancy} word")
        for kw in (KeywordSet(("key",)), KeywordSet((fancy,), version="compat")):
            assert keyword_filter(plain, kw)
            assert keyword_filter(compat, kw)

    def test_keywordset_rejects_nfkc_duplicates(self):
        with pytest.raises(ValueError):
            KeywordSet(("क़", "क़"))  # same letter after NFKC
        with pytest.raises(ValueError):
            KeywordSet(("खोप", "खोप"))

    def test_corpus_count_matches_brute_force(self):
        texts = [
            ("कोरोना समाचार", "ne"), ("खोप केन्द्र", "ne"), ("मौसम", "ne"),
            ("कोरोना", "en"), ("भ्याक्सिन dose", "ne"), ("via khabar", "ne"),
        ]
        tweets = [_tweet(i, text=t, lang=l) for i, (t, l) in enumerate(texts)]
        got = sum(1 for t in tweets if keyword_filter(t, KW))
        brute = sum(
            1 for t in tweets
            if t.lang == "ne" and any(k in unicodedata.normalize("NFKC", t.text)
                                      for k in KW.keywords)
        )
        assert got == brute == 3


class TestDedupe:
    def test_first_occurrence_wins(self):
        a1 = _tweet("a", text="पहिलो पटक भनेको कुरा")
        b = _tweet("b")
        a2 = RawTweet(id="ta", created_at=a1.created_at, text="दोस्रो फरक कुरा", lang="ne")
        dup = RawTweet(id=a1.id, created_at=a1.created_at, text=a2.text, lang="ne")
        dropped = []
        out = list(dedupe([a1, b, dup], dropped))
        assert [t.id for t in out] == [a1.id, b.id]
        assert out[0].text == a1.text  # id wins, first text kept
        assert len(dropped) == 1

    def test_all_distinct_identity(self):
        tweets = [_tweet(i) for i in range(5)]
        assert list(dedupe(tweets)) == tweets

    @given(st.lists(st.integers(min_value=0, max_value=5), max_size=30))
    def test_idempotent(self, ids):
        tweets = [_tweet(i) for i in ids]
        once = list(dedupe(tweets))
        twice = list(dedupe(once))
        assert twice == once
        assert len({t.id for t in once}) == len(once)


class TestKeywordFileAndSource:
    def test_load_keywords_skips_comments_and_blanks(self, tmp_path):
        p = tmp_path / "kw.txt"
        p.write_text("# comment\nकोरोना\n\nखोप\n# another\n", encoding="utf-8")
        kw = load_keywords(p)
        assert kw.keywords == ("कोरोना", "खोप")
        assert len(kw) == 2

    def test_file_source_fetch_since(self, tmp_path):
        p = tmp_path / "src.jsonl"
        _write_jsonl(p, [
            json.dumps({"id": "old", "created_at": "2021-06-01T00:00:00Z",
                        "text": "पुरानो कुरा", "lang": "ne"}),
            json.dumps({"id": "new", "created_at": "2021-10-01T00:00:00Z",
                        "text": "नयाँ कुरा", "lang": "ne"}),
        ])
        source = FileTweetSource(p)
        got = list(source.fetch(datetime(2021, 9, 1, tzinfo=timezone.utc)))
        assert [t.id for t in got] == ["new"]
