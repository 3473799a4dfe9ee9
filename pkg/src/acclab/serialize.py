"""Deterministic array-bundle files: a zip of .npy members plus a JSON header.

Byte-identical output for identical input is required so that artifact
hashes are reproducible across reruns; zip entries therefore carry a fixed
timestamp and no compression.
"""

from __future__ import annotations

import io
import json
import zipfile

import numpy as np

__all__ = ["save_bundle", "load_bundle"]

_EPOCH = (1980, 1, 1, 0, 0, 0)


def save_bundle(path: str, arrays: dict[str, np.ndarray], meta: dict) -> None:
    """Write ``meta`` (JSON) and named arrays to ``path`` deterministically."""
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        info = zipfile.ZipInfo("meta.json", date_time=_EPOCH)
        zf.writestr(info, json.dumps(meta, sort_keys=True, indent=1))
        for name in sorted(arrays):
            buf = io.BytesIO()
            np.lib.format.write_array(buf, np.ascontiguousarray(arrays[name]))
            info = zipfile.ZipInfo(f"{name}.npy", date_time=_EPOCH)
            zf.writestr(info, buf.getvalue())


def load_bundle(path: str) -> tuple[dict[str, np.ndarray], dict]:
    """Read back a bundle written by :func:`save_bundle`."""
    arrays: dict[str, np.ndarray] = {}
    try:
        with zipfile.ZipFile(path) as zf:
            meta = json.loads(zf.read("meta.json").decode())
            for name in zf.namelist():
                if name.endswith(".npy"):
                    arrays[name[:-4]] = np.lib.format.read_array(io.BytesIO(zf.read(name)))
    except (zipfile.BadZipFile, KeyError) as err:
        raise ValueError(f"{path} is not an array bundle: {err}") from err
    return arrays, meta
