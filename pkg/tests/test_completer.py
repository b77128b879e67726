import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcqc.completer import (
    CorpusCompleter,
    EndpointConfig,
    ExternalCompleter,
    IdentityCompleter,
    MockEmbedder,
    QualityCondition,
    RandomCompleter,
    build_instruction,
    complete_corpus,
    complete_identity,
    complete_random,
    mock_embed,
)
from qcqc.errors import (
    EmptyGallery,
    EmptyPrefix,
    EmptyText,
    EndpointTimeout,
    HttpError,
    LevelsNotAssigned,
    MalformedResponse,
    UnknownLevelLabel,
)
from qcqc.gallery import Gallery, GalleryRecord, compute_relevance
from qcqc.quantile import LevelScheme

from conftest import unit

NAMES3 = ("Low", "Medium", "High")
SCHEME3 = LevelScheme(NAMES3, (33.0, 66.0), (0.0, 0.5))
HH = QualityCondition(rel_level="High", aes_level="High")
LL = QualityCondition(rel_level="Low", aes_level="Low")


def leveled_gallery(rows):
    """rows: (id, caption, rel_level, aes_level, rel_score)."""
    dim = max(4, len(rows))
    records = tuple(
        GalleryRecord(
            id=rid,
            caption=caption,
            embedding=unit(np.eye(dim)[i % dim]),
            aes_score=4.0 + al,
            rel_score=rel_score,
            rel_level=rl,
            aes_level=al,
        )
        for i, (rid, caption, rl, al, rel_score) in enumerate(rows)
    )
    return Gallery(records=records, dim=dim,
                   level_scheme_rel=SCHEME3, level_scheme_aes=SCHEME3)


class TestBuildInstruction:
    def test_template_is_byte_exact(self):
        out = build_instruction(HH, "a train")
        assert out == "Relevance: High, Aesthetic: High, Query: a train"

    def test_low_low(self):
        assert build_instruction(LL, "x") == "Relevance: Low, Aesthetic: Low, Query: x"

    def test_five_level_labels(self):
        cond = QualityCondition(rel_level="VH", aes_level="VL")
        out = build_instruction(cond, "a dog", names=("VL", "L", "M", "H", "VH"))
        assert out == "Relevance: VH, Aesthetic: VL, Query: a dog"

    def test_unknown_label_rejected(self):
        with pytest.raises(UnknownLevelLabel):
            build_instruction(QualityCondition("Ultra", "High"), "a dog", names=NAMES3)

    def test_empty_prefix_rejected(self):
        with pytest.raises(EmptyPrefix):
            build_instruction(HH, "")

    @given(st.text(min_size=1, max_size=20).filter(str.strip),
           st.sampled_from(NAMES3), st.sampled_from(NAMES3))
    def test_injective_over_inputs(self, prefix, rel, aes):
        cond = QualityCondition(rel, aes)
        out = build_instruction(cond, prefix)
        assert out.endswith(prefix)
        assert f"Relevance: {rel}," in out
        assert f"Aesthetic: {aes}," in out


class TestCorpusCompleter:
    def test_sole_exact_match(self):
        g = leveled_gallery([
            ("r0", "a cat on a sofa", 2, 2, 0.9),
            ("r1", "a dog by the door", 2, 2, 0.8),
            ("r2", "a cat in a box", 0, 0, 0.1),
            ("r3", "a train at night", 1, 1, 0.5),
        ])
        out = complete_corpus(g, "a cat", HH, k=5)
        assert len(out) == 1
        assert out[0].matched_record_id == "r0"
        assert out[0].text == "a cat on a sofa"
        assert out[0].suffix == " on a sofa"
        assert out[0].exact_condition_match is True

    def test_no_prefix_match_returns_empty(self):
        g = leveled_gallery([("r0", "a cat on a sofa", 2, 2, 0.9)])
        assert complete_corpus(g, "a zebra", HH) == []

    def test_backoff_to_nearest_condition(self):
        g = leveled_gallery([
            ("r0", "a cat on a sofa", 0, 0, 0.1),
            ("r1", "a cat in a box", 0, 0, 0.2),
        ])
        out = complete_corpus(g, "a cat", HH, k=5)
        assert {c.matched_record_id for c in out} == {"r0", "r1"}
        assert all(c.exact_condition_match is False for c in out)
        # ordered by descending relevance score
        assert out[0].matched_record_id == "r1"

    def test_backoff_prefers_higher_relevance_level(self):
        g = leveled_gallery([
            ("lowrel", "a cat sleeping", 0, 1, 0.1),   # distance 2 from (High, Medium)
            ("midrel", "a cat stretching", 1, 1, 0.4),  # distance 1
        ])
        cond = QualityCondition(rel_level="High", aes_level="Medium")
        out = complete_corpus(g, "a cat", cond, k=5)
        assert [c.matched_record_id for c in out] == ["midrel"]

    def test_article_stripped_on_both_sides(self):
        g = leveled_gallery([("r0", "cat wearing a hat", 2, 2, 0.9)])
        out = complete_corpus(g, "a cat", HH)
        assert out[0].text == "a cat wearing a hat"
        assert out[0].text.startswith("a cat")

    def test_case_insensitive_match(self):
        g = leveled_gallery([("r0", "A Cat wearing a hat", 2, 2, 0.9)])
        out = complete_corpus(g, "a cat", HH)
        assert out[0].text == "a cat wearing a hat"

    def test_k_bounds_candidates(self):
        g = leveled_gallery([
            (f"r{i}", f"a cat variant{i}", 2, 2, 0.1 * i) for i in range(6)
        ])
        out = complete_corpus(g, "a cat", HH, k=3)
        assert len(out) == 3
        # top relevance first, id ascending on ties
        assert [c.matched_record_id for c in out] == ["r5", "r4", "r3"]

    def test_levels_required(self, tiny_gallery):
        with pytest.raises(LevelsNotAssigned):
            CorpusCompleter(tiny_gallery)

    def test_unknown_condition_label(self):
        g = leveled_gallery([("r0", "a cat", 2, 2, 0.9)])
        with pytest.raises(UnknownLevelLabel):
            complete_corpus(g, "a cat", QualityCondition("Epic", "High"))

    def test_exhaustive_scan_oracle(self):
        rng = np.random.default_rng(5)
        nouns = ["cat", "dog", "bird"]
        rows = []
        for i in range(60):
            noun = nouns[i % 3]
            rows.append((
                f"r{i:02d}",
                f"a {noun} scene number{i}",
                int(rng.integers(0, 3)),
                int(rng.integers(0, 3)),
                float(rng.uniform(-1, 1)),
            ))
        g = leveled_gallery(rows)
        for noun in nouns:
            for rel in NAMES3:
                for aes in NAMES3:
                    cond = QualityCondition(rel, aes)
                    got = complete_corpus(g, f"a {noun}", cond, k=100)
                    # Oracle: exhaustive scan, exact-condition filter only.
                    want = [
                        r for r in g.records
                        if r.caption.split()[1] == noun
                        and r.rel_level == NAMES3.index(rel)
                        and r.aes_level == NAMES3.index(aes)
                    ]
                    want.sort(key=lambda r: (-r.rel_score, r.id))
                    if want:
                        assert [c.matched_record_id for c in got] == [r.id for r in want]
                        assert all(c.exact_condition_match for c in got)
                    else:
                        assert all(not c.exact_condition_match for c in got)

    def test_empty_prefix_rejected(self):
        g = leveled_gallery([("r0", "a cat", 2, 2, 0.9)])
        with pytest.raises(EmptyPrefix):
            complete_corpus(g, "   ", HH)


class TestIdentityCompleter:
    def test_prefix_unchanged(self):
        out = complete_identity("a dog", HH)
        assert out.text == "a dog"
        assert out.suffix == ""
        assert out.source == "identity"

    def test_condition_ignored(self):
        assert complete_identity("an airplane", LL).text == "an airplane"

    def test_empty_prefix_rejected(self):
        with pytest.raises(EmptyPrefix):
            complete_identity("", HH)

    def test_completer_interface(self):
        out = IdentityCompleter().complete("a dog", HH, k=3)
        assert len(out) == 1 and out[0].text == "a dog"


class TestRandomCompleter:
    def test_deterministic_given_seed(self, tiny_gallery):
        a = complete_random(tiny_gallery, "a dog", HH, seed=42)
        b = complete_random(tiny_gallery, "a dog", HH, seed=42)
        assert a == b

    def test_seeds_may_differ(self, tiny_gallery):
        outs = {complete_random(tiny_gallery, "a dog", HH, seed=s).text for s in range(10)}
        assert len(outs) > 1

    def test_condition_blind(self, tiny_gallery):
        a = complete_random(tiny_gallery, "a dog", LL, seed=7)
        b = complete_random(tiny_gallery, "a dog", HH, seed=7)
        assert a.text == b.text

    def test_empty_gallery(self):
        empty = Gallery(records=(), dim=4)
        with pytest.raises(EmptyGallery):
            complete_random(empty, "a dog", HH, seed=0)

    def test_prefix_preserved(self, tiny_gallery):
        out = complete_random(tiny_gallery, "a zebra", HH, seed=3)
        assert out.text.startswith("a zebra")

    def test_class_keys_on_prefix_not_condition(self, tiny_gallery):
        completer = RandomCompleter(tiny_gallery, seed=9)
        one = completer.complete("a dog", LL)[0]
        two = completer.complete("a dog", HH)[0]
        other = completer.complete("a cat", HH)[0]
        assert one.text == two.text
        assert one.suffix != other.suffix or one.matched_record_id != other.matched_record_id


class _StubHandler(BaseHTTPRequestHandler):
    behavior = "suffix"

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length)) if length else {}
        if self.behavior == "error":
            self.send_response(500)
            self.end_headers()
            return
        if self.behavior == "slow":
            time.sleep(1.0)
        if self.behavior == "notjson":
            payload = b",,,"
        elif self.behavior == "badshape":
            payload = json.dumps({"comps": ["x"]}).encode()
        elif self.behavior == "full":
            payload = json.dumps({"completions": [body["prefix"] + " at the park"]}).encode()
        else:
            payload = json.dumps({"completions": [" on a beach"]}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture
def stub_endpoint():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    url = f"http://127.0.0.1:{server.server_address[1]}/complete"
    yield url
    server.shutdown()
    thread.join(timeout=2)


class TestExternalCompleter:
    def test_suffix_gets_prefix_prepended(self, stub_endpoint):
        _StubHandler.behavior = "suffix"
        client = ExternalCompleter(EndpointConfig(url=stub_endpoint))
        out = client.complete("a dog", HH, k=1)
        assert out[0].text == "a dog on a beach"
        assert out[0].suffix == " on a beach"
        assert out[0].source == "external"

    def test_full_sentence_passes_through(self, stub_endpoint):
        _StubHandler.behavior = "full"
        client = ExternalCompleter(EndpointConfig(url=stub_endpoint))
        out = client.complete("a dog", HH, k=1)
        assert out[0].text == "a dog at the park"

    def test_http_error_carries_status(self, stub_endpoint):
        _StubHandler.behavior = "error"
        client = ExternalCompleter(EndpointConfig(url=stub_endpoint))
        with pytest.raises(HttpError) as err:
            client.complete("a dog", HH)
        assert err.value.status == 500

    def test_timeout(self, stub_endpoint):
        _StubHandler.behavior = "slow"
        client = ExternalCompleter(EndpointConfig(url=stub_endpoint, timeout=0.2))
        with pytest.raises(EndpointTimeout):
            client.complete("a dog", HH)

    def test_non_json_response(self, stub_endpoint):
        _StubHandler.behavior = "notjson"
        client = ExternalCompleter(EndpointConfig(url=stub_endpoint))
        with pytest.raises(MalformedResponse):
            client.complete("a dog", HH)

    def test_wrong_shape_response(self, stub_endpoint):
        _StubHandler.behavior = "badshape"
        client = ExternalCompleter(EndpointConfig(url=stub_endpoint))
        with pytest.raises(MalformedResponse):
            client.complete("a dog", HH)

    def test_unreachable_endpoint(self):
        client = ExternalCompleter(EndpointConfig(url="http://127.0.0.1:1/nope", timeout=0.5))
        with pytest.raises(HttpError):
            client.complete("a dog", HH)


class TestMockEmbed:
    def test_deterministic_and_unit(self):
        a = mock_embed("a dog on grass", 32, seed=0)
        b = mock_embed("a dog on grass", 32, seed=0)
        assert np.array_equal(a, b)
        assert abs(float(np.linalg.norm(a.astype(np.float64))) - 1.0) <= 1e-6

    def test_whitespace_insensitive(self):
        a = mock_embed("a dog", 16, seed=1)
        b = mock_embed("a    dog ", 16, seed=1)
        assert np.array_equal(a, b)

    def test_different_texts_not_parallel(self):
        a = mock_embed("a dog on grass", 64, seed=0)
        b = mock_embed("a cat on grass", 64, seed=0)
        cos = compute_relevance(a, b)
        assert cos < 1.0 - 1e-6
        assert cos > -1.0 + 1e-6

    def test_empty_rejected(self):
        with pytest.raises(EmptyText):
            mock_embed("   ", 8)

    def test_min_dim(self):
        with pytest.raises(ValueError):
            mock_embed("a dog", 1)

    def test_seed_changes_geometry(self):
        a = mock_embed("a dog", 32, seed=0)
        b = mock_embed("a dog", 32, seed=1)
        assert not np.array_equal(a, b)

    def test_class_matches_function(self):
        embedder = MockEmbedder(24, seed=5)
        for text in ("a dog", "a cat by the window", "an apple"):
            assert np.array_equal(embedder(text), mock_embed(text, 24, seed=5))

    def test_self_consistency_with_relevance(self, small_synth):
        # A record's caption embedded as both image and text sides: cosine 1.
        embedder = MockEmbedder(small_synth.dim, seed=0)
        rec = small_synth.records[17]
        assert compute_relevance(rec.embedding, embedder(rec.caption)) == pytest.approx(
            1.0, abs=1e-6
        )


@given(st.sampled_from(["a cat", "a dog", "an apple", "bird"]),
       st.sampled_from(NAMES3), st.sampled_from(NAMES3),
       st.integers(0, 50))
@settings(max_examples=60)
def test_every_candidate_text_starts_with_prefix(prefix, rel, aes, seed):
    rows = [
        ("r0", "a cat on a sofa", 2, 2, 0.9),
        ("r1", "cat in a box", 0, 0, 0.1),
        ("r2", "a dog by the door", 1, 1, 0.5),
        ("r3", "an apple on a desk", 2, 0, 0.7),
        ("r4", "bird over the lake", 1, 2, 0.3),
    ]
    g = leveled_gallery(rows)
    cond = QualityCondition(rel, aes)
    candidates = complete_corpus(g, prefix, cond, k=10)
    candidates.append(complete_identity(prefix, cond))
    candidates.append(complete_random(g, prefix, cond, seed=seed))
    for c in candidates:
        assert c.text.startswith(prefix)
