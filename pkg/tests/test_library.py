import random
from types import SimpleNamespace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from climalab.gateway import cosine, hash_embedding
from climalab.library import (
    DuplicateIdConflict,
    EmbeddingMismatch,
    InvalidK,
    InvalidRecord,
    KnowledgeRecord,
    Library,
    MissingRunReference,
    NotApproved,
    TemplateRecord,
    ToolManifest,
    template_id,
)

DIM = 64


def embed(text):
    return hash_embedding(text, DIM)


@pytest.fixture
def lib(tmp_path):
    return Library(tmp_path / "library.jsonl", embed, snapshot_every=5)


def record(lib, rid, summary, kind="plan", **kw):
    return lib.build_record(id=rid, kind=kind, summary=summary, payload={}, **kw)


def approval(run="run-1", ok=True):
    return SimpleNamespace(approved=ok, run_ref=run, reviewer="sci", comment="")


class TestIndexing:
    def test_index_then_retrieve_self_rank_one(self, lib):
        lib.index_record(record(lib, "a", "global mean temperature bias"))
        lib.index_record(record(lib, "b", "sea ice extent trend"))
        hits = lib.retrieve_text("global mean temperature bias", k=2)
        assert hits[0][0].id == "a"
        assert hits[0][1] == pytest.approx(1.0)

    def test_reindex_same_id_replaces(self, lib):
        lib.index_record(record(lib, "a", "old summary"))
        lib.index_record(record(lib, "a", "entirely new words"), replace_existing=True)
        assert len(lib) == 1
        assert lib.get("a").summary == "entirely new words"
        hits = lib.retrieve_text("entirely new words", k=1)
        assert hits[0][1] == pytest.approx(1.0)

    def test_same_content_is_idempotent(self, lib):
        rec = record(lib, "a", "something")
        lib.index_record(rec)
        lib.index_record(rec)
        assert len(lib) == 1

    def test_conflicting_content_without_replace_flag(self, lib):
        lib.index_record(record(lib, "a", "one"))
        with pytest.raises(DuplicateIdConflict):
            lib.index_record(record(lib, "a", "two"))

    def test_tampered_embedding_rejected(self, lib):
        rec = record(lib, "a", "summary text")
        bad = KnowledgeRecord(
            id=rec.id, kind=rec.kind, summary=rec.summary,
            embedding=embed("different text"), payload={},
        )
        with pytest.raises(EmbeddingMismatch):
            lib.index_record(bad)

    def test_unknown_kind_rejected(self, lib):
        with pytest.raises(InvalidRecord):
            lib.index_record(record(lib, "a", "s", kind="poem"))


class TestRetrieve:
    def test_invalid_k(self, lib):
        with pytest.raises(InvalidK):
            lib.retrieve(embed("x"), 0)

    def test_k_beyond_size_returns_all(self, lib):
        for i in range(3):
            lib.index_record(record(lib, f"r{i}", f"topic {i}"))
        assert len(lib.retrieve_text("topic", k=50)) == 3

    def test_kind_filter(self, lib):
        lib.index_record(record(lib, "p", "shared words", kind="plan"))
        t = TemplateRecord("shared words", "print(1)", "d" * 8)
        lib.promote_template(t, approval())
        hits = lib.retrieve_text("shared words", k=5, kind="template")
        assert [r.kind for r, _ in hits] == ["template"]

    def test_status_filter_excludes_drafts(self, lib):
        lib.queue_draft(TemplateRecord("draft case", "c", "d"), run_ref="run-9")
        assert lib.retrieve_text("draft case", k=5, status="validated") == []
        assert len(lib.retrieve_text("draft case", k=5, status="draft")) == 1

    def test_ties_broken_by_ascending_id(self, lib):
        # Identical summaries give identical scores for any query.
        lib.index_record(record(lib, "z-last", "same words here"))
        lib.index_record(record(lib, "a-first", "same words here"))
        hits = lib.retrieve_text("same words here", k=2)
        assert [r.id for r, _ in hits] == ["a-first", "z-last"]

    def test_matches_brute_force_oracle_100x20(self, lib):
        rng = random.Random(42)
        vocab = [
            "tas", "pr", "trend", "anomaly", "bias", "seasonal", "cycle",
            "ocean", "heat", "content", "sea", "ice", "enso", "amoc",
            "cloud", "forcing", "sensitivity", "regression", "monsoon",
        ]
        for i in range(100):
            words = " ".join(rng.sample(vocab, rng.randint(2, 6)))
            lib.index_record(record(lib, f"r{i:03d}", words))
        rows = lib.list_records()
        for q in range(20):
            query = " ".join(rng.sample(vocab, rng.randint(1, 4)))
            qv = embed(query)
            oracle = sorted(
                ((r, cosine(qv, r.embedding)) for r in rows),
                key=lambda p: (-p[1], p[0].id),
            )
            for k in (1, 5, 20):
                got = lib.retrieve(qv, k)
                assert [(r.id, s) for r, s in got] == [
                    (r.id, s) for r, s in oracle[:k]
                ], f"query {q} k={k}"


class TestPromotion:
    def test_approved_triplet_retrieved_rank_one(self, lib):
        for i in range(5):
            lib.index_record(record(lib, f"bg{i}", f"unrelated background {i}"))
        t = TemplateRecord(
            "compare historical surface air temperature against observations",
            "import json\nprint('analysis')\n",
            "abc123",
        )
        tid = lib.promote_template(t, approval("run-42"))
        hits = lib.retrieve_text(t.query_text, k=1, kind="template", status="validated")
        assert hits[0][0].id == tid
        assert hits[0][0].run_ref == "run-42"
        assert hits[0][0].provenance == "promoted"

    def test_not_approved_leaves_library_unchanged(self, lib):
        t = TemplateRecord("q", "c", "d")
        with pytest.raises(NotApproved):
            lib.promote_template(t, approval(ok=False))
        assert len(lib) == 0

    def test_missing_run_reference(self, lib):
        with pytest.raises(MissingRunReference):
            lib.promote_template(TemplateRecord("q", "c", "d"), approval(run=""))

    def test_incomplete_triplet_rejected(self, lib):
        with pytest.raises(InvalidRecord):
            lib.promote_template(TemplateRecord("q", "", "d"), approval())

    def test_draft_then_promote_validates_in_place(self, lib):
        t = TemplateRecord("query x", "code", "digest")
        lib.queue_draft(t, run_ref="run-1")
        assert lib.get(template_id(t)).status == "draft"
        lib.promote_template(t, approval("run-1"))
        assert lib.get(template_id(t)).status == "validated"
        assert len(lib) == 1

    def test_redrafting_a_validated_triplet_keeps_it_validated(self, lib):
        t = TemplateRecord("query x", "code", "digest")
        lib.promote_template(t, approval("run-1"))
        lib.queue_draft(t, run_ref="run-2")
        rec = lib.get(template_id(t))
        assert rec.status == "validated"
        assert rec.run_ref == "run-1"

    def test_promotion_never_removes_records(self, lib):
        ids = []
        for i in range(4):
            rec = record(lib, f"keep{i}", f"background {i}")
            lib.index_record(rec)
            ids.append(rec.id)
        before = {r.id: r.summary for r in lib.list_records()}
        lib.promote_template(TemplateRecord("new", "c", "d"), approval())
        after = {r.id: r.summary for r in lib.list_records()}
        for rid in ids:
            assert after[rid] == before[rid]


class TestTools:
    def test_register_requires_existing_entrypoint(self, lib, tmp_path):
        missing = ToolManifest(name="ghost", entrypoint=str(tmp_path / "no.py"))
        with pytest.raises(InvalidRecord):
            lib.register_tool(missing)

    def test_register_and_lookup(self, lib, tmp_path):
        script = tmp_path / "tool.py"
        script.write_text("pass\n")
        m = ToolManifest(
            name="regrid",
            entrypoint=str(script),
            params_schema=({"name": "target", "type": "object"},),
            description="nearest neighbor regrid",
        )
        lib.register_tool(m)
        got = lib.get_tool("regrid")
        assert got.entrypoint == str(script)
        assert got.params_schema[0]["name"] == "target"

    def test_duplicate_param_names_rejected(self, lib, tmp_path):
        script = tmp_path / "tool.py"
        script.write_text("pass\n")
        m = ToolManifest(
            name="bad",
            entrypoint=str(script),
            params_schema=({"name": "x", "type": "int"}, {"name": "x", "type": "int"}),
        )
        with pytest.raises(InvalidRecord):
            lib.register_tool(m)


class TestListing:
    def test_empty_library(self, lib):
        assert lib.list_records() == []

    def test_insertion_order_preserved(self, lib):
        for name in ("first", "second", "third"):
            lib.index_record(record(lib, name, f"summary {name}"))
        assert [r.id for r in lib.list_records()] == ["first", "second", "third"]

    def test_status_filter(self, lib):
        lib.queue_draft(TemplateRecord("a", "c", "d"), run_ref="r")
        lib.promote_template(TemplateRecord("b", "c", "d"), approval())
        assert len(lib.list_records(status="validated")) == 1
        assert len(lib.list_records(kind="template")) == 2


class TestPersistence:
    def test_reload_restores_state(self, tmp_path):
        path = tmp_path / "library.jsonl"
        lib = Library(path, embed, snapshot_every=3)
        for i in range(7):
            lib.index_record(record(lib, f"r{i}", f"topic {i}"))
        lib.promote_template(TemplateRecord("promoted q", "c", "d"), approval())

        reloaded = Library(path, embed, snapshot_every=3)
        assert len(reloaded) == 8
        assert [r.id for r in reloaded.list_records()] == [
            r.id for r in lib.list_records()
        ]
        hit = reloaded.retrieve_text("promoted q", k=1, status="validated")
        assert hit[0][0].payload["code"] == "c"

    def test_snapshot_written_and_log_appended(self, tmp_path):
        path = tmp_path / "library.jsonl"
        lib = Library(path, embed, snapshot_every=2)
        for i in range(4):
            lib.index_record(record(lib, f"r{i}", f"t {i}"))
        assert path.with_suffix(".snapshot.json").is_file()
        assert len(path.read_text().strip().splitlines()) == 4


@settings(max_examples=40, deadline=None)
@given(
    summaries=st.lists(
        st.text(alphabet="abcdefg hij", min_size=1, max_size=25),
        min_size=1,
        max_size=25,
        unique=True,
    ),
    query=st.text(alphabet="abcdefg hij", min_size=1, max_size=25),
    k=st.integers(min_value=1, max_value=30),
)
def test_retrieve_equals_oracle_property(tmp_path_factory, summaries, query, k):
    lib = Library(tmp_path_factory.mktemp("lib") / "l.jsonl", embed)
    for i, s in enumerate(summaries):
        lib.index_record(record(lib, f"r{i:02d}", s))
    qv = embed(query)
    oracle = sorted(
        ((r, cosine(qv, r.embedding)) for r in lib.list_records()),
        key=lambda p: (-p[1], p[0].id),
    )[:k]
    got = lib.retrieve(qv, k)
    assert [(r.id, pytest.approx(s)) for r, s in oracle] == [
        (r.id, s) for r, s in got
    ]
