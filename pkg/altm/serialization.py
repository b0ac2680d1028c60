"""
Network parameter files.

Format (numpy ``.npz``, no pickled objects)::

    format_version   int64 scalar, currently 1
    activation       str scalar ("linear" | "tanh" | "relu")
    use_bias         bool scalar
    trunk_layers     int64 scalar
    head_ids         1-D str array, head order
    trunk.<k>.weight / trunk.<k>.bias        float64, row-major
    head.<id>.weight / head.<id>.bias        float64, row-major

Values are stored bit-exactly, so a reloaded teacher produces identical
logits.
"""

from __future__ import annotations

__all__ = ["FORMAT_VERSION", "save_network", "load_network", "load_teacher"]

import logging
import zipfile
from pathlib import Path
from typing import Final

import numpy as np

from altm.errors import ArtifactIOError, UsageError
from altm.network import Layer, Network, TeacherSnapshot, snapshot_teacher

logger = logging.getLogger(__name__)

FORMAT_VERSION: Final[int] = 1
_ZIP_TIMESTAMP: Final = (1980, 1, 1, 0, 0, 0)


def save_network(net: Network | TeacherSnapshot, path: str | Path) -> Path:
    """
    Write *net* to *path* as an uncompressed ``.npz`` archive.

    Raises:
        ArtifactIOError: if the file cannot be written.
    """
    source = net.network if isinstance(net, TeacherSnapshot) else net
    arrays: dict[str, np.ndarray] = {
        "format_version": np.array(FORMAT_VERSION, dtype=np.int64),
        "activation": np.array(source.activation.value),
        "use_bias": np.array(source.use_bias),
        "trunk_layers": np.array(len(source.trunk), dtype=np.int64),
        "head_ids": np.array(list(source.heads), dtype=str),
    }
    for name, block in source.parameters():
        arrays[name] = np.ascontiguousarray(block, dtype=np.float64)

    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        with zipfile.ZipFile(target, "w", compression=zipfile.ZIP_STORED) as zf:
            for name, arr in arrays.items():
                # fixed member timestamps keep the file byte-identical across runs
                info = zipfile.ZipInfo(f"{name}.npy", date_time=_ZIP_TIMESTAMP)
                with zf.open(info, "w", force_zip64=True) as member:
                    np.lib.format.write_array(member, arr, allow_pickle=False)
    except OSError as exc:
        raise ArtifactIOError("cannot write network file", target) from exc
    logger.info("saved network (%s) to %s", source.digest()[:12], target)
    return target


def load_network(path: str | Path) -> Network:
    """
    Read a network written by :func:`save_network`.

    Raises:
        ArtifactIOError: if the file is missing or unreadable.
        UsageError: on an unknown format version or missing blocks.
    """
    source = Path(path)
    try:
        with np.load(source, allow_pickle=False) as data:
            arrays = {k: data[k] for k in data.files}
    except (OSError, ValueError, zipfile.BadZipFile) as exc:
        raise ArtifactIOError("cannot read network file", source) from exc

    version = int(arrays.get("format_version", -1))
    if version != FORMAT_VERSION:
        raise UsageError(f"unsupported network file version {version} in {source}")
    try:
        trunk = [
            Layer(arrays[f"trunk.{k}.weight"].copy(), arrays[f"trunk.{k}.bias"].copy())
            for k in range(int(arrays["trunk_layers"]))
        ]
        heads = {
            str(h): Layer(arrays[f"head.{h}.weight"].copy(), arrays[f"head.{h}.bias"].copy())
            for h in arrays["head_ids"].tolist()
        }
    except KeyError as exc:
        raise UsageError(f"network file {source} is missing block {exc.args[0]!r}") from exc
    return Network(
        trunk=trunk,
        heads=heads,
        activation=str(arrays["activation"]),
        use_bias=bool(arrays["use_bias"]),
    )


def load_teacher(path: str | Path) -> TeacherSnapshot:
    """Load a saved network and freeze it as a teacher."""
    return snapshot_teacher(load_network(path))
