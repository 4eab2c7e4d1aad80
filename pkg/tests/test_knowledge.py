import math

import pytest

from elicit.affect import ValenceRecord, valence
from elicit.knowledge import (
    DEFAULT_PREF,
    KnowledgeBase,
    NodeNotFoundError,
    SnapshotFormatError,
    score_node,
)
from elicit.textproc import analyze


def ingest_text(kb, text, pos_lexicon, sentiment_lexicon, now=1000):
    a = analyze(text, kb.salient_referents(now), pos_lexicon)
    v = valence(a.tokens, sentiment_lexicon)
    return kb.ingest(a, v, now)


def test_score_hand_arithmetic():
    assert score_node(3, 2000, 0.5) == 0.5
    assert score_node(7, 0, 0.0) == 0.0
    assert score_node(1, 0, 0.5) == 0.5


def test_ingest_possessive_alias_attribute(pos_lexicon, sentiment_lexicon):
    kb = KnowledgeBase()
    changed = ingest_text(kb, "My dog Rex is great", pos_lexicon,
                          sentiment_lexicon)
    dog = kb.find("dog")
    assert dog is not None
    assert dog.aliases == {"rex"}
    assert kb.find("rex") is dog
    assert dog.freq == 1
    assert dog.pref > 0.5
    speaker = kb.node(kb.speaker_id)
    assert dog.id in speaker.possessions
    assert set(changed) == {dog.id, speaker.id}


def test_ingest_empty_analysis_is_noop(pos_lexicon, sentiment_lexicon):
    kb = KnowledgeBase()
    assert ingest_text(kb, "", pos_lexicon, sentiment_lexicon) == []
    assert len(kb) == 0


def test_repeat_mention_one_node(pos_lexicon, sentiment_lexicon):
    kb = KnowledgeBase()
    ingest_text(kb, "I like hiking and hiking is fun", pos_lexicon,
                sentiment_lexicon)
    assert len(kb) == 1
    assert kb.find("hiking").freq == 2


def test_fresh_node_defaults(pos_lexicon, sentiment_lexicon):
    kb = KnowledgeBase()
    a = analyze("a table near a window", [], pos_lexicon)
    kb.ingest(a, ValenceRecord.neutral(), 500)
    for node in kb.nodes():
        assert node.pref == DEFAULT_PREF == 0.5
        assert node.freq >= 1
        assert node.last_mentioned_at == 500


def test_node_lookup_error():
    with pytest.raises(NodeNotFoundError):
        KnowledgeBase().node("n99")


def test_salience_matches_formula(pos_lexicon, sentiment_lexicon):
    kb = KnowledgeBase()
    ingest_text(kb, "I love hiking", pos_lexicon, sentiment_lexicon, now=1000)
    node = kb.find("hiking")
    s = kb.salience(node.id, 4000)
    assert s.score == score_node(node.freq, 3000, node.pref)
    assert s.at == 4000


def test_top_salient_ordering(pos_lexicon, sentiment_lexicon):
    kb = KnowledgeBase()
    # Two nodes; the later mention is fresher hence higher scoring.
    ingest_text(kb, "the garden", pos_lexicon, sentiment_lexicon, now=0)
    ingest_text(kb, "the attic", pos_lexicon, sentiment_lexicon, now=4000)
    top = kb.top_salient(5, 4000)
    assert [kb.node(s.node_id).canonical_name for s in top] == ["attic", "garden"]
    assert top[0].score > 0 > top[1].score

    assert KnowledgeBase().top_salient(5, 0) == []
    assert kb.top_salient(0, 4000) == []


def test_top_salient_keeps_negative_scores(pos_lexicon, sentiment_lexicon):
    kb = KnowledgeBase()
    ingest_text(kb, "the garden", pos_lexicon, sentiment_lexicon, now=0)
    top = kb.top_salient(5, 600_000)
    assert len(top) == 1
    assert top[0].score < 0


def test_preference_update_rule(pos_lexicon, sentiment_lexicon):
    kb = KnowledgeBase()
    ingest_text(kb, "the garden", pos_lexicon, sentiment_lexicon)
    nid = kb.find("garden").id
    kb.node(nid).pref = 0.5
    assert kb.update_preference(nid, 0.0) == 0.5
    assert kb.update_preference(nid, 1.0) == pytest.approx(0.65)
    kb.node(nid).pref = 1.0
    assert kb.update_preference(nid, 1.0) == 1.0
    kb.node(nid).pref = 0.0
    assert kb.update_preference(nid, -1.0) == 0.0


def test_snapshot_roundtrip_empty():
    kb = KnowledgeBase()
    restored = KnowledgeBase.restore(kb.snapshot())
    assert len(restored) == 0


def test_snapshot_roundtrip_preserves_salience(pos_lexicon, sentiment_lexicon):
    kb = KnowledgeBase()
    ingest_text(kb, "My dog Rex is great", pos_lexicon, sentiment_lexicon, 1000)
    ingest_text(kb, "He loves the snow", pos_lexicon, sentiment_lexicon, 2000)
    restored = KnowledgeBase.restore(kb.snapshot())
    assert restored.snapshot() == kb.snapshot()
    assert restored.top_salient(5, 9000) == kb.top_salient(5, 9000)
    assert restored.speaker_id == kb.speaker_id


def test_snapshot_new_ids_do_not_collide(pos_lexicon, sentiment_lexicon):
    kb = KnowledgeBase()
    ingest_text(kb, "the garden", pos_lexicon, sentiment_lexicon)
    restored = KnowledgeBase.restore(kb.snapshot())
    ingest_text(restored, "the attic", pos_lexicon, sentiment_lexicon, 2000)
    ids = [n.id for n in restored.nodes()]
    assert len(ids) == len(set(ids))


@pytest.mark.parametrize("doc", [
    {},
    {"version": 2, "nodes": []},
    {"version": 1, "nodes": "oops"},
    {"version": 1, "nodes": [{"id": "n1"}]},
    {"version": 1, "nodes": [], "speaker": "n1"},
])
def test_snapshot_format_errors(doc):
    with pytest.raises(SnapshotFormatError):
        KnowledgeBase.restore(doc)


def test_snapshot_rejects_dangling_references():
    kb = KnowledgeBase()
    doc = {"version": 1, "nodes": [{
        "id": "n1", "canonicalName": "dog", "aliases": [], "attributes": [],
        "possessions": ["n9"], "relatedTo": {}, "freq": 1,
        "lastMentionedAt": 0, "pref": 0.5, "anaphoraClass": "singular-any",
    }]}
    with pytest.raises(SnapshotFormatError):
        kb.restore(doc)


def test_snapshot_rejects_out_of_bounds_pref():
    doc = {"version": 1, "nodes": [{
        "id": "n1", "canonicalName": "dog", "aliases": [], "attributes": [],
        "possessions": [], "relatedTo": {}, "freq": 1,
        "lastMentionedAt": 0, "pref": 1.5, "anaphoraClass": "singular-any",
    }]}
    with pytest.raises(SnapshotFormatError):
        KnowledgeBase.restore(doc)


def test_load_rejects_truncated_file(tmp_path):
    path = tmp_path / "kb.json"
    path.write_text('{"version": 1, "nodes": [')
    with pytest.raises(SnapshotFormatError):
        KnowledgeBase.load(path)


def test_speaker_rename_keeps_old_name_as_alias(pos_lexicon, sentiment_lexicon):
    kb = KnowledgeBase()
    ingest_text(kb, "my garden", pos_lexicon, sentiment_lexicon)
    assert kb.node(kb.speaker_id).canonical_name == "user"
    kb.set_speaker_name("maya")
    speaker = kb.node(kb.speaker_id)
    assert speaker.canonical_name == "maya"
    assert "user" in speaker.aliases
    assert kb.find("maya") is speaker


def test_pronoun_mention_bumps_frequency(pos_lexicon, sentiment_lexicon):
    kb = KnowledgeBase()
    ingest_text(kb, "My dog Rex is great", pos_lexicon, sentiment_lexicon, 1000)
    before = kb.find("dog").freq
    ingest_text(kb, "He loves the snow", pos_lexicon, sentiment_lexicon, 2000)
    dog = kb.find("dog")
    assert dog.freq == before + 1
    assert dog.last_mentioned_at == 2000
    snow = kb.find("snow")
    assert dog.related_to.get(snow.id) == 1
    assert snow.related_to.get(dog.id) == 1
