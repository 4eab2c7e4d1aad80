from elicit.textproc import (
    analyze,
    reconstruct,
    tag_pos,
    tokenize,
)


def test_tokenize_empty():
    assert tokenize("") == []


def test_tokenize_sentence_with_trailing_period():
    tokens = tokenize("I love hiking in Colorado.")
    assert len(tokens) == 6
    assert all(t.sentence == 0 for t in tokens)
    assert tokens[-1].surface == "."


def test_tokenize_sentence_split():
    tokens = tokenize("It's fun. Really fun.")
    assert [t.sentence for t in tokens] == [0, 0, 0, 1, 1, 1]


def test_tokenize_contraction_kept_whole():
    tokens = tokenize("It's fun")
    assert tokens[0].surface == "It's"


def test_token_offsets_reconstruct_input():
    text = "My dog Rex is great!  He loves the snow."
    tokens = tokenize(text)
    assert reconstruct(text, tokens) == text
    for t in tokens:
        assert text[t.start:t.end] == t.surface


def test_token_indices_unique_and_contiguous():
    tokens = tokenize("One two three. Four five.")
    assert [t.index for t in tokens] == list(range(len(tokens)))


def test_lemma_nonempty_for_wordlike_tokens():
    for t in tokenize("Cats chase 3 mice!"):
        if any(ch.isalnum() for ch in t.surface):
            assert t.lemma


def test_tag_pos_examples(pos_lexicon):
    tags = [t.pos for t in tag_pos(tokenize("I love hiking"), pos_lexicon)]
    assert tags == ["PRON", "VERB", "NOUN"]
    tags = [t.pos for t in tag_pos(tokenize("the red car"), pos_lexicon)]
    assert tags == ["DET", "ADJ", "NOUN"]
    assert tag_pos([], pos_lexicon) == []


def test_tag_pos_closed_class_beats_lexicon(pos_lexicon):
    # Closed-class words keep their tag even at sentence start.
    tags = [t.pos for t in tag_pos(tokenize("My car"), pos_lexicon)]
    assert tags == ["DET", "NOUN"]


def test_analyze_chunks_and_proper_nouns(pos_lexicon):
    a = analyze("My dog Rex is great", [], pos_lexicon)
    assert a.subject is not None
    assert a.span_text(a.subject) == "My dog"
    assert [a.span_text(s) for s in a.proper_nouns] == ["Rex"]
    assert a.subject in a.noun_phrases


def test_analyze_spans_in_bounds_and_disjoint(pos_lexicon):
    a = analyze("The quick brown fox jumps over the lazy dog near Rome", [],
                pos_lexicon)
    for spans in (a.noun_phrases, a.proper_nouns):
        covered = set()
        for lo, hi in spans:
            assert 0 <= lo < hi <= len(a.tokens)
            assert covered.isdisjoint(range(lo, hi))
            covered.update(range(lo, hi))


def test_pronoun_resolution_with_candidate(pos_lexicon):
    a = analyze("He is great", [("Rex", "singular-any")], pos_lexicon)
    assert a.resolved_references == {0: "Rex"}


def test_pronoun_resolution_without_candidates(pos_lexicon):
    a = analyze("He is great", [], pos_lexicon)
    assert a.resolved_references == {}


def test_pronoun_resolution_respects_class(pos_lexicon):
    # "they" wants a plural referent; a singular one is skipped.
    a = analyze("They are great", [("Rex", "singular-any")], pos_lexicon)
    assert a.resolved_references == {}
    a = analyze("They are great", [("birds", "plural")], pos_lexicon)
    assert a.resolved_references == {0: "birds"}
