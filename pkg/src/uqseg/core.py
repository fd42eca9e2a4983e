"""Array type, NPY file I/O, dataset manifests and intensity normalization.

Centralizes all file-format handling: the interchange format is a strict
subset of NPY v1.0 (little-endian float32 or uint8, C order, 2 or 3
dimensions) so that files are bit-exact, language-neutral and readable by
any standard NPY implementation.  Physical spacing (mm per axis) travels in
the dataset manifest, not in the NPY header, and defaults to 1.0.
"""

from __future__ import annotations

import ast
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, NpyFormatError

_MAGIC = b"\x93NUMPY"
_SUPPORTED_DESCR = {"<f4": np.dtype("<f4"), "|u1": np.dtype("|u1")}


@dataclass(frozen=True, eq=False)
class Tensor:
    """Immutable 2D/3D array (float32 image or uint8 label map) with spacing.

    ``data`` is C-contiguous and read-only; ``spacing`` is mm per axis and
    has one entry per dimension.
    """

    data: np.ndarray
    spacing: tuple[float, ...] = ()

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.dtype not in (np.dtype(np.float32), np.dtype(np.uint8)):
            raise ValueError(f"unsupported dtype {arr.dtype}; expected float32 or uint8")
        if arr.ndim not in (2, 3):
            raise ValueError(f"unsupported rank {arr.ndim}; expected 2 or 3 dimensions")
        if any(s <= 0 for s in arr.shape):
            raise ValueError(f"all dimensions must be positive, got shape {arr.shape}")
        if not arr.flags.c_contiguous:
            arr = np.ascontiguousarray(arr)
        view = arr.view()
        view.flags.writeable = False
        object.__setattr__(self, "data", view)
        spacing = self.spacing or (1.0,) * arr.ndim
        spacing = tuple(float(s) for s in spacing)
        if len(spacing) != arr.ndim:
            raise ValueError(f"spacing has {len(spacing)} entries for a {arr.ndim}D tensor")
        if any(s <= 0 for s in spacing):
            raise ValueError(f"spacing entries must be positive, got {spacing}")
        object.__setattr__(self, "spacing", spacing)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype


def read_npy(path: str | os.PathLike) -> Tensor:
    """Read an NPY v1.0 file into a Tensor (spacing defaults to 1.0 per axis).

    Only little-endian float32 ('<f4') and uint8 ('|u1') in C order are
    accepted; anything else raises NpyFormatError naming the offending field.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:6] != _MAGIC:
        raise NpyFormatError("magic", f"not an NPY file: {raw[:6]!r}")
    if raw[6:8] != b"\x01\x00":
        raise NpyFormatError("version", f"unsupported NPY version {raw[6]}.{raw[7]}, expected 1.0")
    if len(raw) < 10:
        raise NpyFormatError("header", "file truncated before header length")
    header_len = int.from_bytes(raw[8:10], "little")
    header_end = 10 + header_len
    if len(raw) < header_end:
        raise NpyFormatError("header", "file truncated inside header")
    try:
        header = ast.literal_eval(raw[10:header_end].decode("latin1"))
    except (ValueError, SyntaxError) as exc:
        raise NpyFormatError("header", f"cannot parse header dict: {exc}") from exc
    if not isinstance(header, dict) or set(header) != {"descr", "fortran_order", "shape"}:
        raise NpyFormatError("header", f"unexpected header keys: {sorted(header)}")
    descr = header["descr"]
    if descr not in _SUPPORTED_DESCR:
        raise NpyFormatError("descr", f"unsupported dtype {descr!r}, expected '<f4' or '|u1'")
    if header["fortran_order"] is not False:
        raise NpyFormatError("fortran_order", "Fortran-order arrays are not supported")
    shape = header["shape"]
    if (
        not isinstance(shape, tuple)
        or len(shape) not in (2, 3)
        or not all(isinstance(n, int) and n > 0 for n in shape)
    ):
        raise NpyFormatError("shape", f"expected a tuple of 2 or 3 positive ints, got {shape!r}")
    dtype = _SUPPORTED_DESCR[descr]
    expected = math.prod(shape) * dtype.itemsize
    payload = raw[header_end:]
    if len(payload) != expected:
        raise NpyFormatError("data", f"payload is {len(payload)} bytes, expected {expected}")
    arr = np.frombuffer(payload, dtype=dtype).reshape(shape)
    return Tensor(arr)


def write_npy(t: Tensor, path: str | os.PathLike) -> None:
    """Write a Tensor as NPY v1.0, bit-exactly re-readable by read_npy."""
    descr = "<f4" if t.dtype == np.float32 else "|u1"
    header = "{'descr': '%s', 'fortran_order': False, 'shape': %s, }" % (descr, tuple(t.shape))
    # Pad with spaces so magic+version+len+header is a multiple of 64, newline-terminated.
    unpadded = len(_MAGIC) + 2 + 2 + len(header) + 1
    header = header + " " * (-unpadded % 64) + "\n"
    data = t.data if t.dtype == np.uint8 else t.data.astype("<f4", copy=False)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(b"\x01\x00")
        fh.write(len(header).to_bytes(2, "little"))
        fh.write(header.encode("latin1"))
        fh.write(data.tobytes())


def znormalize(image: Tensor) -> Tensor:
    """Normalize a float32 image to zero mean and unit population std."""
    if image.dtype != np.float32:
        raise ValueError("znormalize expects a float32 image")
    values = image.data.astype(np.float64)
    mean = values.mean()
    std = values.std()  # population (divide-by-n)
    if std == 0.0:
        raise DegenerateInputError("constant image: standard deviation is zero")
    out = ((values - mean) / std).astype(np.float32)
    return Tensor(out, image.spacing)


# ---------------------------------------------------------------------------
# Dataset manifests
# ---------------------------------------------------------------------------


@dataclass
class ManifestCase:
    id: str
    image_path: str
    label_path: str | None = None
    spacing: tuple[float, ...] = ()


@dataclass
class DatasetManifest:
    """Ordered list of cases; ids are unique and paths are relative to the manifest file."""

    cases: list[ManifestCase] = field(default_factory=list)
    root: str = "."

    def __post_init__(self):
        ids = [c.id for c in self.cases]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"duplicate case ids in manifest: {dupes}")

    def resolve(self, rel: str) -> str:
        return os.path.normpath(os.path.join(self.root, rel))

    def load_image(self, case: ManifestCase) -> Tensor:
        t = read_npy(self.resolve(case.image_path))
        return Tensor(t.data, case.spacing) if case.spacing else t

    def load_label(self, case: ManifestCase) -> Tensor:
        if case.label_path is None:
            raise ValueError(f"case {case.id} has no label")
        t = read_npy(self.resolve(case.label_path))
        return Tensor(t.data, case.spacing) if case.spacing else t


def load_manifest(path: str | os.PathLike) -> DatasetManifest:
    """Load a manifest JSON and check that every referenced file exists."""
    with open(path) as fh:
        doc = json.load(fh)
    root = os.path.dirname(os.path.abspath(path))
    cases = []
    for entry in doc.get("cases", []):
        case = ManifestCase(
            id=entry["id"],
            image_path=entry["image_path"],
            label_path=entry.get("label_path"),
            spacing=tuple(entry.get("spacing", ())),
        )
        cases.append(case)
    manifest = DatasetManifest(cases=cases, root=root)
    for case in manifest.cases:
        for rel in (case.image_path, case.label_path):
            if rel is not None and not os.path.exists(manifest.resolve(rel)):
                raise FileNotFoundError(f"manifest case {case.id}: missing file {manifest.resolve(rel)}")
    return manifest


def save_manifest(manifest: DatasetManifest, path: str | os.PathLike) -> None:
    doc = {
        "cases": [
            {
                "id": c.id,
                "image_path": c.image_path,
                **({"label_path": c.label_path} if c.label_path is not None else {}),
                **({"spacing": list(c.spacing)} if c.spacing else {}),
            }
            for c in manifest.cases
        ]
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
