"""Pure numpy reader for `<stem>.hdr` / `<stem>.raw` containers.

Kept free of the compiled module so data consumers only need numpy.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

FORMAT_TAG = "snapcube-container-1"


def read_header(stem: str | Path) -> dict[str, str]:
    """Key/value pairs of the sidecar; `shape` stays a string."""
    out: dict[str, str] = {}
    for line in Path(f"{stem}.hdr").read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{stem}.hdr: malformed line {line!r}")
        out[key.strip()] = value.strip()
    if out.get("format") != FORMAT_TAG:
        raise ValueError(f"{stem}.hdr: not a {FORMAT_TAG} header")
    return out


def load_container(stem: str | Path) -> tuple[np.ndarray, dict[str, str]]:
    """Returns (array, header). The header lists shape as `nx ny [nz]`;
    the array comes back as (nx, ny) or (nz, nx, ny)."""
    hdr = read_header(stem)
    if hdr.get("dtype", "float64") != "float64" or hdr.get("layout", "y-fastest") != "y-fastest":
        raise ValueError(f"{stem}.hdr: unsupported dtype or layout")
    shape = [int(s) for s in hdr["shape"].split()]
    data = np.fromfile(f"{stem}.raw", dtype="<f8")
    if data.size != int(np.prod(shape)):
        raise ValueError(f"{stem}.raw: expected {int(np.prod(shape))} values, found {data.size}")
    if len(shape) == 3:
        nx, ny, nz = shape
        return data.reshape(nz, nx, ny), hdr
    return data.reshape(shape), hdr
