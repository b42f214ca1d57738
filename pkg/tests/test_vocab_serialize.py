import json

import numpy as np
import pytest

from seqlab.crf import init_crf
from seqlab.errors import ContractError, DataFormatError
from seqlab.model import forward, init_model
from seqlab.numerics import Rng
from seqlab.serialize import binary_path, load_model, save_model
from seqlab.vocab import UNK, TagSet, Vocabulary

TAGS = TagSet(["O", "B-Drug", "I-Drug"])


def test_vocabulary_build_order_and_unknown():
    v = Vocabulary.build(["b", "a", "b", "c", "c"])
    assert v.tokens == [UNK, "b", "c", "a"]
    assert v.index("zzz") == v.unk_id == 0
    closed = Vocabulary(["x"], unk=None)
    with pytest.raises(KeyError):
        closed.index("y")
    assert Vocabulary.build(["a", "b", "a"], min_count=2, unk=None).tokens == ["a"]


def test_tagset():
    t = TagSet.build(["I-Drug", "B-Dose", "B-Drug"])
    assert t.tags == ["O", "B-Dose", "B-Drug", "I-Drug"]
    with pytest.raises(ContractError):
        t.index("B-Route")
    with pytest.raises(DataFormatError):
        TagSet(["X-Drug"])


@pytest.mark.parametrize("kind", ["rnn", "lstm", "gru"])
@pytest.mark.parametrize("use_bias", [False, True])
def test_recurrent_round_trip(tmp_path, kind, use_bias):
    m = init_model(Vocabulary(["a", "b"]), TAGS, kind, hidden=3, dim=4, variant="standard", use_bias=use_bias,
                   seed=2)
    m.seq_unit = "document"
    save_model(m, tmp_path / "m.json")
    back = load_model(tmp_path / "m.json")
    assert (back.cell_kind, back.variant, back.seq_unit, back.use_bias) == (kind, "standard", "document",
                                                                            m.use_bias)
    assert back.vocab == m.vocab and back.tagset == m.tagset
    for name, arr in m.tensors().items():
        np.testing.assert_array_equal(back.tensors()[name], arr)
    np.testing.assert_array_equal(forward(back, [0, 1, 2])[0], forward(m, [0, 1, 2])[0])
    save_model(back, tmp_path / "again.json")
    assert binary_path(tmp_path / "again.json").read_bytes() == binary_path(tmp_path / "m.json").read_bytes()


@pytest.mark.parametrize("context", [True, False])
def test_crf_round_trip(tmp_path, context):
    m = init_crf(Vocabulary(["a", "b"]), TAGS, Rng(0).normal(size=(3, 2)), context=context)
    m.emission[...] = Rng(1).normal(size=m.emission.shape)
    save_model(m, tmp_path / "c.json")
    back = load_model(tmp_path / "c.json")
    assert back.cell_kind == m.cell_kind and back.layout == m.layout
    np.testing.assert_array_equal(back.embedding, m.embedding)
    np.testing.assert_array_equal(back.emission, m.emission)


def test_manifest_layout(tmp_path):
    m = init_model(Vocabulary(["a"]), TAGS, "gru", hidden=2, dim=3)
    save_model(m, tmp_path / "m.json")
    doc = json.loads((tmp_path / "m.json").read_text())
    assert doc["format_version"] == "SEQLAB/1"
    assert doc["binary"] == "m.json.bin"
    assert doc["binary_bytes"] == 8 * sum(a.size for a in m.tensors().values())


def test_corrupt_files(tmp_path):
    m = init_model(Vocabulary(["a"]), TAGS, "gru", hidden=2, dim=3)
    save_model(m, tmp_path / "m.json")
    binary_path(tmp_path / "m.json").write_bytes(b"\0" * 8)
    with pytest.raises(DataFormatError):
        load_model(tmp_path / "m.json")
    (tmp_path / "m.json").write_text("{not json")
    with pytest.raises(DataFormatError):
        load_model(tmp_path / "m.json")
    (tmp_path / "m.json").write_text(json.dumps({"format_version": "OTHER/9"}))
    with pytest.raises(DataFormatError):
        load_model(tmp_path / "m.json")
