import numpy as np
import pytest

from earlyrisk.errors import LeakageError, LineageError
from earlyrisk.seal import CURRENT, EVALUATOR_KEY, PRIOR, Lineage, SealedLabels, TaggedLabels, require_trainable


def test_sealed_labels_are_opaque():
    s = SealedLabels([0, 1, 1], "B")
    assert len(s) == 3 and not s.opened
    with pytest.raises(LeakageError):
        np.asarray(s)
    with pytest.raises(LeakageError):
        list(s)
    with pytest.raises(LeakageError):
        s.values
    with pytest.raises(AttributeError):
        s.__dict__
    assert not s.opened


def test_unseal_needs_evaluator_key():
    s = SealedLabels([0, 1], "B")
    with pytest.raises(LeakageError):
        s.unseal(object())
    labels = s.unseal(EVALUATOR_KEY, "scoring")
    assert labels.values.tolist() == [0, 1] and labels.kind == CURRENT
    assert s.opened and s.access_log == ["scoring"]


def test_tagged_labels_are_read_only():
    t = TaggedLabels([1, 0], PRIOR, "A")
    with pytest.raises(ValueError):
        t.values[0] = 0
    with pytest.raises(ValueError):
        TaggedLabels([1], "future", "A")


def test_require_trainable():
    assert require_trainable([1, 0]).tolist() == [1, 0]
    with pytest.raises(LeakageError):
        require_trainable(SealedLabels([1], "B"))
    with pytest.raises(LeakageError):
        require_trainable(TaggedLabels([1], CURRENT, "B"), forbidden_current=("B",))
    with pytest.raises(LeakageError):
        require_trainable(TaggedLabels([1], CURRENT, "A"), allowed_kinds=(PRIOR,))
    assert require_trainable(TaggedLabels([1], PRIOR, "B"), forbidden_current=("B",)).tolist() == [1]


def test_lineage():
    lin = Lineage().add(TaggedLabels([1], CURRENT, "A")).add(TaggedLabels([1], PRIOR, "B"))
    lin.check_can_score("B")
    with pytest.raises(LineageError):
        lin.check_can_score("A")
    assert Lineage.from_dict(lin.to_dict()) == lin
