import numpy as np
import pytest

from altm.errors import ArtifactIOError, UsageError
from altm.linalg import Rng
from altm.network import build_network, snapshot_teacher
from altm.serialization import load_network, load_teacher, save_network


@pytest.fixture
def net():
    return build_network(5, [4, 3], "relu", {"b": 2, "a": 3}, 0.3, Rng(11))


def test_round_trip_preserves_parameters(net, tmp_path):
    loaded = load_network(save_network(net, tmp_path / "net.npz"))
    assert loaded.digest() == net.digest()
    assert loaded.head_ids == ("b", "a")
    assert not loaded.frozen


def test_reloaded_teacher_gives_identical_logits(net, tmp_path):
    teacher = snapshot_teacher(net)
    loaded = load_teacher(save_network(teacher, tmp_path / "teacher.npz"))
    assert loaded == teacher
    assert loaded.network.frozen
    x = Rng(1).normal(5, 7)
    for head in ("a", "b"):
        np.testing.assert_array_equal(loaded.logits(x, [head])[head], teacher.logits(x, [head])[head])


def test_saves_are_byte_identical(net, tmp_path):
    first = save_network(net, tmp_path / "one.npz").read_bytes()
    second = save_network(net, tmp_path / "two.npz").read_bytes()
    assert first == second


def test_linear_network_without_bias_round_trips(tmp_path):
    dln = build_network(4, [4], "linear", {"h": 2}, 0.1, Rng(0), use_bias=False)
    loaded = load_network(save_network(dln, tmp_path / "dln.npz"))
    assert loaded.digest() == dln.digest()
    assert loaded.use_bias is False


def test_missing_file_raises(tmp_path):
    with pytest.raises(ArtifactIOError):
        load_network(tmp_path / "absent.npz")


def test_unknown_version_is_rejected(tmp_path):
    path = tmp_path / "future.npz"
    np.savez(path, format_version=np.array(99))
    with pytest.raises(UsageError):
        load_network(path)
