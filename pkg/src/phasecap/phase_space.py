"""Phase-space data model: point clouds, the standard symplectic matrix J and
general symplectic forms assembled from position/momentum blocks.

Coordinates are always ordered ``(x_1, ..., x_n, p_1, ..., p_n)``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateForm, IngestError, InvalidBlocks, InvalidInput
from .numerics import skew_block_form

# Smallest/largest singular value ratio below which Omega counts as singular.
SINGULAR_RATIO = 1e-12


def standard_j(n: int) -> np.ndarray:
    """The standard symplectic matrix ``[[0, I], [-I, 0]]`` of size 2n."""
    if n < 1:
        raise InvalidInput("n must be positive")
    eye, zero = np.eye(n), np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


@dataclass(frozen=True, eq=False)
class PointCloud:
    """N phase-space samples stored as an ``(N, 2n)`` array."""

    n: int
    points: np.ndarray
    position_unit: str = ""
    momentum_unit: str = ""

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 * self.n:
            raise InvalidInput(f"points must have shape (N, {2 * self.n}), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InvalidInput("points must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def __len__(self):
        return self.size

    def __eq__(self, other):
        if not isinstance(other, PointCloud):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.points, other.points)


@dataclass(frozen=True, eq=False)
class SymplecticFormSpec:
    """Antisymmetric ``Omega = [[A, B], [-B^T, C]]`` together with a Darboux
    factor ``F`` satisfying ``F.T @ J @ F == Omega``.

    ``B`` is symmetric for forms made by :func:`build_form`; only
    :func:`form_from_omega` produces a general ``B``. The constructor does no
    checks.
    """

    n: int
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    omega: np.ndarray
    darboux_f: np.ndarray
    omega_inv: np.ndarray = field(repr=False)

    def blocks(self) -> dict:
        return {"A": self.A.tolist(), "B": self.B.tolist(), "C": self.C.tolist()}

    def is_standard(self) -> bool:
        return np.array_equal(self.omega, standard_j(self.n))

    def __eq__(self, other):
        if not isinstance(other, SymplecticFormSpec):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.omega, other.omega)


def _block(m, n, name) -> np.ndarray:
    a = np.array(m, dtype=float)
    if a.ndim == 0:
        a = a * np.eye(n) if name == "B" else np.full((n, n), float(a))
    if a.shape != (n, n):
        raise InvalidBlocks(f"block {name} must be {n}x{n}, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidBlocks(f"block {name} has non-finite entries")
    return a


def _check_singular(omega: np.ndarray) -> None:
    s = np.linalg.svd(omega, compute_uv=False)
    if s[0] == 0 or s[-1] < SINGULAR_RATIO * s[0]:
        raise DegenerateForm("Omega is singular")


def darboux_factor(omega) -> np.ndarray:
    """Return an invertible ``F`` with ``F.T @ J @ F == omega``.

    ``omega`` is reduced orthogonally to ``[[0, D], [-D, 0]]``; the block
    magnitudes are absorbed as ``F = diag(sqrt(D), sqrt(D)) @ O.T``. F is only
    defined up to left multiplication by a symplectic matrix.
    """
    a = np.array(omega, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] % 2:
        raise InvalidInput(f"omega must be square of even size, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput("omega has non-finite entries")
    if np.max(np.abs(a + a.T)) > 1e-12 * max(1.0, float(np.max(np.abs(a)))):
        raise InvalidInput("omega is not antisymmetric")
    _check_singular(a)
    o, d = skew_block_form(a)
    root = np.sqrt(np.concatenate([d, d]))
    return root[:, None] * o.T


def _assemble(a, b, c) -> SymplecticFormSpec:
    n = a.shape[0]
    omega = np.block([[a, b], [-b.T, c]])
    _check_singular(omega)
    f = darboux_factor(omega)
    inv = np.linalg.inv(omega)
    inv = 0.5 * (inv - inv.T)
    for arr in (a, b, c, omega, f, inv):
        arr.setflags(write=False)
    return SymplecticFormSpec(n, a, b, c, omega, f, inv)


def build_form(A, B, C) -> SymplecticFormSpec:
    """Assemble ``Omega = [[A, B], [-B, C]]`` and cache its Darboux factor.

    Scalars are accepted as shorthand: ``B=eps`` means ``eps * I``, and
    ``A=0``/``C=0`` mean zero blocks (``n`` is then taken from the first
    non-scalar block).

    Raises:
        InvalidBlocks: wrong shapes or A, C not antisymmetric / B not symmetric.
        DegenerateForm: Omega singular.
    """
    shapes = [np.shape(b) for b in (A, B, C) if np.ndim(b) == 2]
    if not shapes:
        raise InvalidBlocks("at least one block must be a matrix to fix n")
    n = shapes[0][0]
    a, b, c = _block(A, n, "A"), _block(B, n, "B"), _block(C, n, "C")
    for name, m, sign in (("A", a, -1), ("B", b, 1), ("C", c, -1)):
        if not np.array_equal(m.T, sign * m):
            kind = "symmetric" if sign > 0 else "antisymmetric"
            raise InvalidBlocks(f"block {name} must be {kind}")
    return _assemble(a, b, c)


def standard_form(n: int, scale: float = 1.0) -> SymplecticFormSpec:
    """``Omega = scale * J``."""
    return build_form(np.zeros((n, n)), scale * np.eye(n), np.zeros((n, n)))


def form_from_omega(omega) -> SymplecticFormSpec:
    """Wrap an arbitrary invertible antisymmetric ``Omega``.

    The upper-right block ``B`` need not be symmetric here; the lower-left block
    is ``-B^T``. Tiny asymmetries are removed by antisymmetrizing.
    """
    a = np.array(omega, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] % 2:
        raise InvalidBlocks(f"omega must be square of even size, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidBlocks("omega has non-finite entries")
    if np.max(np.abs(a + a.T)) > 1e-12 * max(1.0, float(np.max(np.abs(a)))):
        raise InvalidBlocks("omega is not antisymmetric")
    a = 0.5 * (a - a.T)
    n = a.shape[0] // 2
    return _assemble(a[:n, :n].copy(), a[:n, n:].copy(), a[n:, n:].copy())


def eval_form(spec: SymplecticFormSpec, z, z_prime) -> float:
    """``omega(z, z') = -(z')^T Omega^{-1} z``."""
    z = np.asarray(z, dtype=float)
    zp = np.asarray(z_prime, dtype=float)
    if z.shape != (2 * spec.n,) or zp.shape != (2 * spec.n,):
        raise InvalidInput(f"vectors must have length {2 * spec.n}")
    # the two orderings are averaged so that swapping z and z' negates exactly
    x = spec.omega_inv
    return float(-0.5 * ((zp @ x @ z) - (z @ x @ zp)))


def sigma(z, z_prime) -> float:
    """The standard form ``sigma(z, z') = (z')^T J z``."""
    z = np.asarray(z, dtype=float)
    zp = np.asarray(z_prime, dtype=float)
    if z.shape != zp.shape or z.ndim != 1 or z.size % 2:
        raise InvalidInput("vectors must share an even length")
    return float(zp @ standard_j(z.size // 2) @ z)


# ---------------------------------------------------------------------------
# ingestion

_HEADER_RE = re.compile(r"^([xp])(\d+)$")


def _parse_header(cells: list[str]) -> int:
    names = [c.strip().lower() for c in cells]
    if len(names) % 2:
        raise IngestError("header must have an even number of columns", row=1)
    n = len(names) // 2
    expected = [f"x{i}" for i in range(1, n + 1)] + [f"p{i}" for i in range(1, n + 1)]
    if names != expected:
        for col, name in enumerate(names, start=1):
            if not _HEADER_RE.match(name):
                raise IngestError(f"unrecognized header column {cells[col - 1]!r}", row=1, column=col)
        raise IngestError(
            f"header must list x1..x{n} then p1..p{n} in order, got {','.join(names)}", row=1
        )
    return n


def _is_header(cells: list[str]) -> bool:
    for c in cells:
        try:
            float(c)
        except ValueError:
            return True
    return False


def _check_size(n: int, count: int) -> None:
    if count < 2 * n + 2:
        raise IngestError(f"need at least 2n+2 = {2 * n + 2} points for n={n}, got {count}")


def _parse_csv(text: str, n: int | None) -> PointCloud:
    rows = [r for r in csv.reader(io.StringIO(text))]
    numbered = [(i, r) for i, r in enumerate(rows, start=1) if any(c.strip() for c in r)]
    if not numbered:
        raise IngestError("empty point-cloud file")
    header_n = None
    if _is_header(numbered[0][1]):
        header_n = _parse_header(numbered[0][1])
        numbered = numbered[1:]
    if not numbered:
        raise IngestError("point-cloud file has no data rows")
    width = 2 * header_n if header_n is not None else len(numbered[0][1])
    if width % 2:
        raise IngestError(f"rows must have an even number of columns, got {width}", row=numbered[0][0])
    cloud_n = width // 2
    if n is not None and n != cloud_n:
        raise IngestError(f"expected n={n} ({2 * n} columns), file has {width} columns")
    data = np.empty((len(numbered), width))
    for r, (line, cells) in enumerate(numbered):
        if len(cells) != width:
            raise IngestError(f"expected {width} columns, got {len(cells)}", row=line)
        for col, cell in enumerate(cells):
            try:
                value = float(cell)
            except ValueError:
                raise IngestError(f"non-numeric value {cell.strip()!r}", row=line, column=col + 1) from None
            if not math.isfinite(value):
                raise IngestError(f"non-finite value {cell.strip()!r}", row=line, column=col + 1)
            data[r, col] = value
    _check_size(cloud_n, len(data))
    return PointCloud(cloud_n, data)


def _parse_json(text: str, n: int | None) -> PointCloud:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise IngestError(f"invalid JSON: {exc.msg}", row=exc.lineno) from None
    if not isinstance(doc, dict) or "n" not in doc or "points" not in doc:
        raise IngestError('JSON cloud must be an object with keys "n" and "points"')
    cloud_n = doc["n"]
    if not isinstance(cloud_n, int) or isinstance(cloud_n, bool) or cloud_n < 1:
        raise IngestError(f'"n" must be a positive integer, got {cloud_n!r}')
    if n is not None and n != cloud_n:
        raise IngestError(f"expected n={n}, file declares n={cloud_n}")
    pts = doc["points"]
    if not isinstance(pts, list):
        raise IngestError('"points" must be a list of rows')
    data = np.empty((len(pts), 2 * cloud_n))
    for r, row in enumerate(pts):
        if not isinstance(row, list) or len(row) != 2 * cloud_n:
            raise IngestError(f"expected {2 * cloud_n} coordinates", row=r + 1)
        for col, v in enumerate(row):
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                raise IngestError(f"non-numeric or non-finite value {v!r}", row=r + 1, column=col + 1)
            data[r, col] = v
    _check_size(cloud_n, len(data))
    return PointCloud(cloud_n, data, doc.get("position_unit", ""), doc.get("momentum_unit", ""))


def load_cloud(source, n: int | None = None) -> PointCloud:
    """Read a point cloud from a CSV or JSON file (path) or a text stream.

    CSV: optional header ``x1,...,xn,p1,...,pn``, one measurement per row.
    JSON: ``{"n": int, "points": [[...2n reals...], ...]}``. Rows are reported
    1-based; for CSV they are physical line numbers.
    """
    if isinstance(source, (str, os.PathLike)):
        path = Path(source)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise IngestError(f"cannot read {path}: {exc.strerror}") from None
        is_json = path.suffix.lower() == ".json"
    else:
        text = source.read()
        is_json = text.lstrip().startswith("{")
    if is_json:
        return _parse_json(text, n)
    return _parse_csv(text, n)
