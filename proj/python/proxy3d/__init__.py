"""Compile scene encoder outputs into compact 3D proxy token sequences."""

from __future__ import annotations

import os
from typing import Any, Mapping

from ._core import Proxy3DError, inspect, read_scene, write_scene_from_arrays
from . import _core

__all__ = ["Proxy3DError", "compress", "inspect", "read_scene", "write_scene_from_arrays"]


def _object_id(token: str | int) -> int:
    if isinstance(token, int):
        return token
    text = token if token.startswith("<") else f"<{token}>"
    if len(text) != 8 or not text.startswith("<OBJ") or not text.endswith(">") or not text[4:7].isdigit():
        raise ValueError(f"not an object token: {token!r}")
    return int(text[4:7])


def compress(scene: str | os.PathLike | Mapping[str, Any], *, tokens: int = 450, min_proxies: int = 1,
             overrides: Mapping[int, int] | None = None, edges: int = 3, posenc: bool = True,
             refer: Mapping[str | int, int] | None = None, seed: int = 0, threads: int = 1,
             q: int | None = None, out: str | os.PathLike | None = None) -> dict:
    """Compress a PX3D file or a read_scene()-style dict.

    Returns a dict with ``tokens`` (K, C), ``coords`` (K, 3), ``group_labels``
    (K,) and ``meta``. ``refer`` maps an object token such as ``"OBJ007"`` to
    a scene label; ``out`` additionally writes the PXTK file.
    """
    config = dict(tokens=tokens, min_proxies=min_proxies, overrides=dict(overrides or {}), edges=edges,
                  posenc=posenc, refer={label: _object_id(tok) for tok, label in (refer or {}).items()},
                  seed=seed, threads=threads, q=q, out=out)
    if isinstance(scene, Mapping):
        return _core.compress_arrays(scene["features"], scene["points"], scene["labels"],
                                     granularity=scene.get("granularity", "patch"),
                                     frame_indices=scene.get("frame_indices"),
                                     image_size=scene.get("image_size"), **config)
    return _core.compress_file(os.fspath(scene), **config)
