from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from seqlab.corpus import (AMBIGUOUS, PROFILE_FREQUENCIES, TRIGGER_GAP, TRIGGERS, Document, TaggedSequence,
                           format_conll, gen_synthetic, load_conll, read_text_corpus, save_conll, to_sequences)
from seqlab.errors import ContractError, DataFormatError


def write(tmp_path, text, name="c.conll"):
    p = tmp_path / name
    p.write_bytes(text.encode("utf-8"))
    return p


def test_empty_file(tmp_path):
    assert load_conll(write(tmp_path, "")) == []


def test_two_sentences_one_document(tmp_path):
    docs = load_conll(write(tmp_path, "a\tO\nb\tB-X\n\nc\tO\nd\tI-X\n"))
    assert len(docs) == 1 and len(docs[0].sentences) == 2
    assert docs[0].sentences[1] == TaggedSequence(("c", "d"), ("O", "I-X"))


def test_docstart_splits_documents_and_crlf(tmp_path):
    docs = load_conll(write(tmp_path, "a\tO\r\n\r\n-DOCSTART-\tO\r\nb\tO\r\n"))
    assert [d.id for d in docs] == ["doc00000", "doc00001"]


@pytest.mark.parametrize("text,line", [
    ("foo bar\tO\n", 1),
    ("ok\tO\nfoo\n", 2),
    ("ok\tO\n\nx\tB_X\n", 3),
    ("x\tO\tO\n", 1),
    ("\tO\n", 1),
])
def test_malformed_lines(tmp_path, text, line):
    with pytest.raises(DataFormatError) as exc:
        load_conll(write(tmp_path, text))
    assert exc.value.line == line


def test_untagged_input(tmp_path):
    docs = load_conll(write(tmp_path, "take\naspirin\n"), allow_untagged=True)
    assert docs[0].sentences[0].tags == ("O", "O")


def test_round_trip_canonical(tmp_path):
    text = "a\tB-X\nb\tI-X\n\nc\tO\n\n-DOCSTART-\nd\tO\n\n"
    p = write(tmp_path, text)
    save_conll(load_conll(p), tmp_path / "out.conll")
    assert (tmp_path / "out.conll").read_text() == text


def test_save_edge_cases(tmp_path):
    save_conll([], tmp_path / "e.conll")
    assert (tmp_path / "e.conll").read_text() == ""
    one = [Document("d", (TaggedSequence(("a",), ("O",)),))]
    assert "-DOCSTART-" not in format_conll(one)


def test_to_sequences_modes():
    s = [TaggedSequence(("a", "b"), ("O", "B-X")), TaggedSequence(("c",), ("O",)),
         TaggedSequence(("d", "e", "f"), ("B-Y", "I-Y", "O"))]
    docs = [Document("d", tuple(s))]
    assert len(to_sequences(docs, "sentence")) == 3
    (doc,) = to_sequences(docs, "document")
    assert doc.tokens == ("a", "b", "c", "d", "e", "f")
    assert doc.tags == ("O", "B-X", "O", "B-Y", "I-Y", "O")
    assert to_sequences([], "document") == []
    with pytest.raises(ContractError):
        to_sequences(docs, "paragraph")


def test_type_contracts():
    with pytest.raises(ContractError):
        TaggedSequence(("a",), ())
    with pytest.raises(ContractError):
        Document("d", (TaggedSequence((), ()),))


def test_text_corpus(tmp_path):
    p = tmp_path / "t.txt"
    p.write_text("The Cat  sat\n\nA dog\n")
    assert read_text_corpus(p) == [["the", "cat", "sat"], ["a", "dog"]]


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(["local", "longdep", "docdep"]), st.integers(1, 40), st.integers(0, 2**32))
def test_generated_corpora_are_valid_and_deterministic(tmp_path_factory, profile, n, seed):
    docs = gen_synthetic(profile, n, seed)
    assert docs == gen_synthetic(profile, n, seed)
    assert sum(len(d.sentences) for d in docs) == n
    p = tmp_path_factory.mktemp("synth") / "s.conll"
    save_conll(docs, p)
    back = load_conll(p)
    assert [d.sentences for d in back] == [d.sentences for d in docs]
    total = sum(len(s) for s in to_sequences(docs, "sentence"))
    assert total == sum(len(s) for s in to_sequences(docs, "document"))


def test_longdep_trigger_contract():
    trigger_type = {w: t for t, ws in TRIGGERS.items() for w in ws}
    for s in to_sequences(gen_synthetic("longdep", 500, 3)):
        amb = [i for i, w in enumerate(s.tokens) if w in AMBIGUOUS]
        assert len(amb) == 1
        (i,) = amb
        trig = [j for j, w in enumerate(s.tokens) if w in trigger_type]
        in_range = [j for j in trig if TRIGGER_GAP[0] <= i - j <= TRIGGER_GAP[1]]
        assert len(trig) == 1 and len(in_range) == 1
        assert s.tags[i] == "B-" + trigger_type[s.tokens[in_range[0]]]


def test_docdep_cue_precedes_ambiguous_sentence():
    trigger_type = {w: t for t, ws in TRIGGERS.items() for w in ws}
    for doc in gen_synthetic("docdep", 120, 5):
        for prev, cur in zip(doc.sentences, doc.sentences[1:]):
            amb = [i for i, w in enumerate(cur.tokens) if w in AMBIGUOUS]
            if amb:
                cue = [w for w in prev.tokens if w in trigger_type]
                assert len(cue) == 1 and cur.tags[amb[0]] == "B-" + trigger_type[cue[0]]
                assert not any(w in trigger_type for w in cur.tokens)


@pytest.mark.parametrize("profile", ["local", "longdep", "docdep"])
def test_label_frequencies(profile):
    docs = gen_synthetic(profile, 10_000, 11)
    counts = Counter(t[2:] for s in to_sequences(docs) for t in s.tags if t.startswith("B-"))
    total = sum(counts.values())
    for label, expected in PROFILE_FREQUENCIES[profile].items():
        assert abs(counts[label] / total - expected) <= 0.05


def test_generator_contracts():
    with pytest.raises(ContractError):
        gen_synthetic("other", 5, 0)
    with pytest.raises(ContractError):
        gen_synthetic("local", 0, 0)
