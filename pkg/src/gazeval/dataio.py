"""Persistent formats: SMR rasters, PGM import, scanpath CSV, manifests,
and the JSON configuration for model parameters and cost profiles.

SMR raster format (bit-exact contract)
--------------------------------------
Line 1: magic ``SMR1``. Line 2: ASCII ``width height``. Then width*height
little-endian IEEE-754 binary32 values, row-major from the top-left. Values
widen to float64 in memory; writing narrows back without loss for any value
that originated as a binary32.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    MalformedHeader,
    MissingColumn,
    NonContiguousIndices,
    NonFiniteValue,
    NonPositiveSigma,
    OutOfBounds,
    SchemaViolation,
    TruncatedPayload,
    UnsupportedFormat,
)
from .grid import Grid, PixelCoord, downscale_bilinear

log = logging.getLogger(__name__)

SMR_MAGIC = b"SMR1"


# ---------------------------------------------------------------------------
# JSON emission: every float with 17 significant digits (round-trip safe)
# ---------------------------------------------------------------------------

def format_float(x: float) -> str:
    """Render a float with 17 significant digits, always float-typed JSON."""
    s = format(float(x), ".17g")
    if "." not in s and "e" not in s and "E" not in s and "n" not in s:
        s += ".0"
    return s


def dump_json(obj, indent: int = 2) -> str:
    """Deterministic JSON text: insertion-ordered keys, 17-digit floats."""
    out: list[str] = []
    _emit(obj, out, indent, 0)
    out.append("\n")
    return "".join(out)


def _emit(obj, out: list[str], indent: int, level: int) -> None:
    pad = " " * (indent * (level + 1))
    end_pad = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (k, v) in enumerate(obj.items()):
            out.append(f"{pad}{json.dumps(str(k))}: ")
            _emit(v, out, indent, level + 1)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end_pad + "}")
    elif isinstance(obj, (list, tuple)):
        seq = list(obj)
        if not seq:
            out.append("[]")
            return
        out.append("[\n")
        for i, v in enumerate(seq):
            out.append(pad)
            _emit(v, out, indent, level + 1)
            out.append(",\n" if i < len(seq) - 1 else "\n")
        out.append(end_pad + "]")
    elif isinstance(obj, bool) or obj is None:
        out.append(json.dumps(obj))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


# ---------------------------------------------------------------------------
# SMR raster
# ---------------------------------------------------------------------------

def write_raster_bytes(g: Grid) -> bytes:
    with np.errstate(over="ignore"):  # overflow checked explicitly below
        payload = g.data.astype("<f4")
    if not np.all(np.isfinite(payload)):
        raise NonFiniteValue("grid value overflows binary32 range")
    header = SMR_MAGIC + b"\n" + f"{g.width} {g.height}\n".encode("ascii")
    return header + payload.tobytes(order="C")


def write_raster(g: Grid, path) -> None:
    Path(path).write_bytes(write_raster_bytes(g))


def read_raster_bytes(blob: bytes) -> Grid:
    nl1 = blob.find(b"\n")
    if nl1 < 0 or blob[:nl1] != SMR_MAGIC:
        raise MalformedHeader("not an SMR raster (bad magic)")
    nl2 = blob.find(b"\n", nl1 + 1)
    if nl2 < 0:
        raise MalformedHeader("missing dimension line")
    try:
        w_s, h_s = blob[nl1 + 1 : nl2].split()
        width, height = int(w_s), int(h_s)
    except ValueError as exc:
        raise MalformedHeader("dimension line must be two integers") from exc
    if width < 1 or height < 1:
        raise MalformedHeader(f"dimensions must be positive, got {width}x{height}")
    payload = blob[nl2 + 1 :]
    expected = 4 * width * height
    if len(payload) != expected:
        raise TruncatedPayload(
            f"payload holds {len(payload)} bytes, header declares {expected}"
        )
    arr = np.frombuffer(payload, dtype="<f4").astype(np.float64).reshape(height, width)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue("raster payload contains NaN or infinity")
    return Grid(arr)


def read_raster(path) -> Grid:
    return read_raster_bytes(Path(path).read_bytes())


# ---------------------------------------------------------------------------
# PGM import (binary grayscale, 8 or 16 bit)
# ---------------------------------------------------------------------------

def import_pgm(path) -> Grid:
    """Read a binary ``P5`` PGM; pixel p maps to p / maxval in [0, 1]."""
    blob = Path(path).read_bytes()
    if blob[:2] != b"P5":
        raise UnsupportedFormat("only binary grayscale PGM (P5) is supported")
    # header tokens: magic, width, height, maxval; '#' comments allowed
    pos = 2
    tokens: list[int] = []
    while len(tokens) < 3:
        while pos < len(blob) and blob[pos : pos + 1].isspace():
            pos += 1
        if pos < len(blob) and blob[pos : pos + 1] == b"#":
            eol = blob.find(b"\n", pos)
            pos = len(blob) if eol < 0 else eol + 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise UnsupportedFormat("unterminated PGM header")
        try:
            tokens.append(int(blob[start:pos]))
        except ValueError as exc:
            raise UnsupportedFormat("non-numeric PGM header token") from exc
    width, height, maxval = tokens
    if width < 1 or height < 1 or not (0 < maxval < 65536):
        raise UnsupportedFormat(f"bad PGM geometry {width}x{height} maxval {maxval}")
    pos += 1  # single whitespace byte after maxval
    dtype = ">u2" if maxval > 255 else "u1"
    count = width * height
    raw = blob[pos:]
    need = count * (2 if maxval > 255 else 1)
    if len(raw) < need:
        raise TruncatedPayload(f"PGM payload holds {len(raw)} bytes, needs {need}")
    pixels = np.frombuffer(raw[:need], dtype=dtype).astype(np.float64)
    return Grid((pixels / maxval).reshape(height, width))


# ---------------------------------------------------------------------------
# Scanpath CSV
# ---------------------------------------------------------------------------

SCANPATH_COLUMNS = ("image_id", "subject_id", "fixation_index", "x", "y")


@dataclass(frozen=True)
class ScanpathRecord:
    image_id: str
    subject_id: str
    fixation_index: int  # 1-based ordinal position
    x: float
    y: float


def parse_scanpaths(source, bounds=None, strict: bool = False):
    """Parse scanpath CSV into ``{(image_id, subject_id): [ScanpathRecord]}``.

    Groups are sorted by fixation_index and must be contiguous 1..T.
    ``bounds`` maps image_id -> (width, height) at original resolution; when
    given, out-of-bounds coordinates are clamped to [0, dim-1], or raise
    OutOfBounds in strict mode.
    """
    if isinstance(source, (str, Path)) and "\n" not in str(source):
        with open(source, newline="", encoding="utf-8") as fh:
            return parse_scanpaths(fh, bounds=bounds, strict=strict)
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.DictReader(source)
    header = reader.fieldnames or []
    missing = [c for c in SCANPATH_COLUMNS if c not in header]
    if missing:
        raise MissingColumn(f"scanpath CSV lacks columns: {', '.join(missing)}")

    groups: dict[tuple[str, str], list[ScanpathRecord]] = {}
    for lineno, row in enumerate(reader, start=2):
        try:
            idx = int(row["fixation_index"])
            x = float(row["x"])
            y = float(row["y"])
        except (TypeError, ValueError) as exc:
            raise SchemaViolation(f"unparseable scanpath row at line {lineno}") from exc
        image_id, subject_id = row["image_id"], row["subject_id"]
        if bounds is not None and image_id in bounds:
            w, h = bounds[image_id]
            if not (0.0 <= x < w and 0.0 <= y < h):
                if strict:
                    raise OutOfBounds(
                        f"fixation ({x}, {y}) outside {w}x{h} image {image_id!r}"
                    )
                x = min(max(x, 0.0), w - 1.0)
                y = min(max(y, 0.0), h - 1.0)
        groups.setdefault((image_id, subject_id), []).append(
            ScanpathRecord(image_id, subject_id, idx, x, y)
        )

    result: dict[tuple[str, str], list[ScanpathRecord]] = {}
    for key in sorted(groups):
        records = sorted(groups[key], key=lambda r: r.fixation_index)
        indices = [r.fixation_index for r in records]
        if indices != list(range(1, len(records) + 1)):
            raise NonContiguousIndices(
                f"scanpath {key} has fixation indices {indices}, expected 1..{len(records)}"
            )
        result[key] = records
    return result


def rescale_to_working(records, factor: int, width: int, height: int) -> list[PixelCoord]:
    """Map original-resolution fixations onto a working grid.

    Divides by the downscale factor and clamps into [0, dim-1].
    """
    pts = []
    for r in records:
        x = min(max(r.x / factor, 0.0), width - 1.0)
        y = min(max(r.y / factor, 0.0), height - 1.0)
        pts.append(PixelCoord(x, y))
    return pts


# ---------------------------------------------------------------------------
# Dataset manifest
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ManifestEntry:
    image_id: str
    saliency_path: Path
    image_width: int
    image_height: int
    scanpath_source: Path


@dataclass(frozen=True)
class DatasetManifest:
    downscale_factor: int
    entries: tuple[ManifestEntry, ...]
    dataset_id: str
    digest: str  # sha256 of the manifest file bytes

    def working_dims(self, entry: ManifestEntry) -> tuple[int, int]:
        return (
            entry.image_width // self.downscale_factor,
            entry.image_height // self.downscale_factor,
        )

    def load_saliency(self, entry: ManifestEntry) -> Grid:
        """Load an entry's saliency map at working resolution.

        Accepts rasters stored either at original resolution (downscaled
        here) or already at working resolution.
        """
        g = read_raster(entry.saliency_path)
        ww, wh = self.working_dims(entry)
        if (g.width, g.height) == (ww, wh):
            return g
        if (g.width, g.height) == (entry.image_width, entry.image_height):
            if self.downscale_factor == 1:
                return g
            return downscale_bilinear(g, self.downscale_factor)
        raise SchemaViolation(
            f"saliency raster for {entry.image_id!r} is {g.width}x{g.height}; "
            f"expected {entry.image_width}x{entry.image_height} or {ww}x{wh}"
        )


def load_manifest(path) -> DatasetManifest:
    path = Path(path)
    blob = path.read_bytes()
    try:
        doc = json.loads(blob)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"manifest {path} is not valid JSON") from exc
    if not isinstance(doc, dict):
        raise SchemaViolation("manifest must be a JSON object")
    factor = doc.get("downscale_factor")
    if not isinstance(factor, int) or factor < 1:
        raise SchemaViolation("downscale_factor must be a positive integer")
    raw_entries = doc.get("entries")
    if not isinstance(raw_entries, list) or not raw_entries:
        raise SchemaViolation("manifest needs a non-empty entries list")
    base = path.parent
    entries = []
    seen = set()
    for e in raw_entries:
        if not isinstance(e, dict):
            raise SchemaViolation("each manifest entry must be an object")
        try:
            image_id = str(e["image_id"])
            saliency_path = base / e["saliency_path"]
            iw, ih = int(e["image_width"]), int(e["image_height"])
            scan_src = base / e["scanpath_source"]
        except KeyError as exc:
            raise SchemaViolation(f"manifest entry missing key {exc}") from exc
        if image_id in seen:
            raise SchemaViolation(f"duplicate image_id {image_id!r}")
        seen.add(image_id)
        if iw < 1 or ih < 1:
            raise SchemaViolation(f"bad image dims for {image_id!r}: {iw}x{ih}")
        for p in (saliency_path, scan_src):
            if not p.exists():
                raise SchemaViolation(f"referenced path does not exist: {p}")
        entries.append(ManifestEntry(image_id, saliency_path, iw, ih, scan_src))
    dataset_id = str(doc.get("dataset_id", path.stem))
    digest = hashlib.sha256(blob).hexdigest()
    return DatasetManifest(factor, tuple(entries), dataset_id, digest)


# ---------------------------------------------------------------------------
# Model parameters
# ---------------------------------------------------------------------------

PHI_INDEXING_MODES = ("lag", "absolute")


@dataclass(frozen=True)
class ModelParams:
    """Weights of the value-map composition plus the exploration shape.

    w0 scales the saliency map and is pinned to 1.0 in fitted sets; w1 and
    w2 scale the oculomotor-cost and exploration maps. sigma is the
    exploration Gaussian width in working-resolution pixels; phis are the
    exploration weights, applied by lag (default) or by absolute ordinal.
    """

    w1: float
    w2: float
    sigma: float
    phis: tuple[float, ...]
    w0: float = 1.0
    phi_indexing: str = "lag"

    def __post_init__(self):
        object.__setattr__(self, "phis", tuple(float(p) for p in self.phis))
        if self.sigma <= 0:
            raise NonPositiveSigma(f"sigma must be > 0, got {self.sigma}")
        if not self.phis:
            raise SchemaViolation("phis must be non-empty")
        if self.phi_indexing not in PHI_INDEXING_MODES:
            raise SchemaViolation(f"phi_indexing must be one of {PHI_INDEXING_MODES}")

    def replace(self, **changes) -> "ModelParams":
        current = dict(
            w1=self.w1, w2=self.w2, sigma=self.sigma, phis=self.phis,
            w0=self.w0, phi_indexing=self.phi_indexing,
        )
        current.update(changes)
        return ModelParams(**current)


def params_from_dict(doc) -> ModelParams:
    if not isinstance(doc, dict):
        raise SchemaViolation("params must be a JSON object")
    allowed = {"w0", "w1", "w2", "sigma", "phis", "phi_indexing"}
    unknown = set(doc) - allowed
    if unknown:
        raise SchemaViolation(f"unknown params keys: {sorted(unknown)}")
    for key in ("w1", "w2", "sigma", "phis"):
        if key not in doc:
            raise SchemaViolation(f"params missing required key {key!r}")
    w0 = doc.get("w0", 1.0)
    if not isinstance(w0, (int, float)) or float(w0) != 1.0:
        raise SchemaViolation("w0 must equal 1.0")
    for key in ("w1", "w2", "sigma"):
        if not isinstance(doc[key], (int, float)) or isinstance(doc[key], bool):
            raise SchemaViolation(f"{key} must be a number")
    sigma = float(doc["sigma"])
    if sigma <= 0:
        raise NonPositiveSigma(f"sigma must be > 0, got {sigma}")
    phis = doc["phis"]
    if (
        not isinstance(phis, list)
        or not phis
        or not all(isinstance(p, (int, float)) and not isinstance(p, bool) for p in phis)
    ):
        raise SchemaViolation("phis must be a non-empty list of numbers")
    indexing = doc.get("phi_indexing", "lag")
    if indexing not in PHI_INDEXING_MODES:
        raise SchemaViolation(f"phi_indexing must be one of {PHI_INDEXING_MODES}")
    return ModelParams(
        w1=float(doc["w1"]),
        w2=float(doc["w2"]),
        sigma=sigma,
        phis=tuple(float(p) for p in phis),
        w0=1.0,
        phi_indexing=indexing,
    )


def params_to_dict(p: ModelParams) -> dict:
    return {
        "w0": p.w0,
        "w1": p.w1,
        "w2": p.w2,
        "sigma": p.sigma,
        "phis": list(p.phis),
        "phi_indexing": p.phi_indexing,
    }


def load_params(path) -> ModelParams:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"params file {path} is not valid JSON") from exc
    return params_from_dict(doc)


def save_params(p: ModelParams, path) -> None:
    Path(path).write_text(dump_json(params_to_dict(p)), encoding="utf-8")


# ---------------------------------------------------------------------------
# Oculomotor cost profile
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CostProfile:
    """Tabulated saccade-amplitude value function plus linear angle weights.

    amplitude_bin_edges are in degrees; the tabulated values attach to bin
    centers and interpolate linearly, clamped outside the outermost centers.
    psi1 weighs the angle to the previous saccade, psi2 the angle to the
    horizontal axis, both per radian. Values enter the value map as-is: the
    polarity is the profile author's choice.
    """

    pixels_per_degree: float
    amplitude_bin_edges: tuple[float, ...]
    amplitude_values: tuple[float, ...]
    psi1: float
    psi2: float

    def __post_init__(self):
        object.__setattr__(
            self, "amplitude_bin_edges", tuple(float(v) for v in self.amplitude_bin_edges)
        )
        object.__setattr__(
            self, "amplitude_values", tuple(float(v) for v in self.amplitude_values)
        )
        if self.pixels_per_degree <= 0:
            raise SchemaViolation("pixels_per_degree must be > 0")
        edges = self.amplitude_bin_edges
        if len(edges) != len(self.amplitude_values) + 1:
            raise SchemaViolation(
                f"{len(edges)} bin edges require {len(edges) - 1} values, "
                f"got {len(self.amplitude_values)}"
            )
        if len(self.amplitude_values) < 1:
            raise SchemaViolation("amplitude table needs at least one bin")
        if any(b <= a for a, b in zip(edges, edges[1:])):
            raise SchemaViolation("amplitude bin edges must be strictly ascending")
        if not all(np.isfinite(v) for v in self.amplitude_values):
            raise NonFiniteValue("amplitude values must be finite")

    @property
    def amplitude_centers(self) -> np.ndarray:
        edges = np.asarray(self.amplitude_bin_edges)
        return (edges[:-1] + edges[1:]) / 2.0


def profile_from_dict(doc) -> CostProfile:
    if not isinstance(doc, dict):
        raise SchemaViolation("cost profile must be a JSON object")
    allowed = {"pixels_per_degree", "amplitude", "psi1", "psi2"}
    unknown = set(doc) - allowed
    if unknown:
        raise SchemaViolation(f"unknown cost profile keys: {sorted(unknown)}")
    try:
        amp = doc["amplitude"]
        edges = amp["bin_edges"]
        values = amp["values"]
        psi1 = float(doc["psi1"])
        psi2 = float(doc["psi2"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaViolation(f"cost profile missing or malformed field: {exc}") from exc
    ppd = float(doc.get("pixels_per_degree", 1.0))
    if not isinstance(edges, list) or not isinstance(values, list):
        raise SchemaViolation("amplitude bin_edges and values must be lists")
    return CostProfile(
        pixels_per_degree=ppd,
        amplitude_bin_edges=tuple(float(v) for v in edges),
        amplitude_values=tuple(float(v) for v in values),
        psi1=psi1,
        psi2=psi2,
    )


def profile_to_dict(p: CostProfile) -> dict:
    return {
        "pixels_per_degree": p.pixels_per_degree,
        "amplitude": {
            "bin_edges": list(p.amplitude_bin_edges),
            "values": list(p.amplitude_values),
        },
        "psi1": p.psi1,
        "psi2": p.psi2,
    }


def load_profile(path) -> CostProfile:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"cost profile file {path} is not valid JSON") from exc
    return profile_from_dict(doc)


def save_profile(p: CostProfile, path) -> None:
    Path(path).write_text(dump_json(profile_to_dict(p)), encoding="utf-8")
