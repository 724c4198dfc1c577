"""
Matrix repository: binary and CSV matrix files.

Binary layout (little-endian):
    b"AMAT" | version byte 0x01 | uint32 rows | uint32 cols | rows*cols float64, row-major

CSV layout: comma-separated numeric rows, optional '#' header lines.
"""

import struct
from pathlib import Path
from typing import Optional

import numpy as np

import config
from core.errors import (
    BadMagic, TruncatedPayload, NonNumericCell, DimMismatch, InvalidMatrix, SpecValidationError
)
from core.matcore import as_matrix
from repositories.base_repository import BaseRepository, PathLike

MAGIC = b"AMAT"
VERSION = 1
HEADER = struct.Struct('<II')
HEADER_SIZE = len(MAGIC) + 1 + HEADER.size

EXTENSIONS = {
    "binary": ".amat",
    "csv": ".csv",
}


def encode_matrix(m) -> bytes:
    """Serialize a matrix to the binary layout."""
    m = as_matrix(m)
    rows, cols = m.shape
    payload = np.ascontiguousarray(m, dtype='<f8').tobytes()
    return MAGIC + bytes([VERSION]) + HEADER.pack(rows, cols) + payload


def decode_matrix(data: bytes, source: str = "<bytes>") -> np.ndarray:
    """
    Parse the binary layout.

    Raises:
        BadMagic: wrong magic bytes or version
        TruncatedPayload: header or payload shorter than the dims require
        DimMismatch: zero dims, or payload longer than the dims allow
    """
    if len(data) >= len(MAGIC) and data[:len(MAGIC)] != MAGIC:
        raise BadMagic(f"{source}: not a matrix file (magic {data[:len(MAGIC)]!r})")
    if len(data) < HEADER_SIZE:
        raise TruncatedPayload(f"{source}: header truncated ({len(data)} of {HEADER_SIZE} bytes)")
    if data[len(MAGIC)] != VERSION:
        raise BadMagic(f"{source}: unsupported format version {data[len(MAGIC)]}")

    rows, cols = HEADER.unpack_from(data, len(MAGIC) + 1)
    if rows < 1 or cols < 1:
        raise DimMismatch(f"{source}: invalid dims {rows}x{cols}")

    expected = rows * cols * 8
    payload = data[HEADER_SIZE:]
    if len(payload) < expected:
        raise TruncatedPayload(
            f"{source}: payload has {len(payload) // 8} values, dims {rows}x{cols} need {rows * cols}"
        )
    if len(payload) > expected:
        raise DimMismatch(
            f"{source}: payload has {len(payload) - expected} bytes beyond dims {rows}x{cols}"
        )

    values = np.frombuffer(payload, dtype='<f8').reshape(rows, cols).astype(np.float64)
    if not np.all(np.isfinite(values)):
        raise InvalidMatrix(f"{source}: matrix contains NaN or Inf")
    return values


def parse_csv_matrix(text: str, source: str = "<text>") -> np.ndarray:
    """
    Parse comma-separated numeric rows; blank and '#' lines are skipped.

    Raises:
        NonNumericCell: a cell is not a finite number (line and column named)
        DimMismatch: ragged rows or no data rows
    """
    rows = []
    width = None
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith('#'):
            continue

        cells = line.split(',')
        values = []
        for column, cell in enumerate(cells, start=1):
            try:
                value = float(cell.strip())
            except ValueError:
                raise NonNumericCell(
                    f"{source}: line {line_number}, column {column}: '{cell.strip()}' is not numeric"
                ) from None
            if not np.isfinite(value):
                raise NonNumericCell(
                    f"{source}: line {line_number}, column {column}: non-finite value '{cell.strip()}'"
                )
            values.append(value)

        if width is None:
            width = len(values)
        elif len(values) != width:
            raise DimMismatch(
                f"{source}: line {line_number} has {len(values)} values, expected {width}"
            )
        rows.append(values)

    if not rows:
        raise DimMismatch(f"{source}: no data rows")
    return np.array(rows, dtype=np.float64)


def infer_format(path: PathLike) -> str:
    return "csv" if Path(path).suffix.lower() == ".csv" else "binary"


class MatrixRepository(BaseRepository):
    """
    Repository for matrix files.

    Provides methods for:
    - Reading binary / CSV matrices (format from extension unless given)
    - Atomic writes in either format
    """

    def read_matrix(self, path: PathLike, fmt: Optional[str] = None) -> np.ndarray:
        """
        Read a matrix file.

        Args:
            path: Matrix file
            fmt: 'binary' or 'csv' (inferred from the extension when None)

        Returns:
            rows x cols float64 array
        """
        p = self.require_file(path, "matrix file")
        fmt = (fmt or infer_format(p)).lower()

        if fmt == "binary":
            matrix = decode_matrix(p.read_bytes(), str(p))
        elif fmt == "csv":
            matrix = parse_csv_matrix(p.read_text(encoding='utf-8'), str(p))
        else:
            raise SpecValidationError(f"unknown matrix format '{fmt}'")

        self._count("matrix_files_read_total")
        self.logger.debug(f"Read {matrix.shape[0]}x{matrix.shape[1]} {fmt} matrix from {p}")
        return matrix

    def write_matrix(self, m, path: PathLike, fmt: Optional[str] = None, header: Optional[str] = None) -> Path:
        """
        Write a matrix atomically.

        Args:
            m: Matrix to write
            path: Target file
            fmt: 'binary' or 'csv' (default SRMKIT_MATRIX_FORMAT)
            header: Optional '#' comment written above CSV rows

        Returns:
            The written path
        """
        fmt = (fmt or config.MATRIX_FORMAT).lower()
        matrix = as_matrix(m)
        target = Path(path)

        if fmt == "binary":
            with self.atomic_write(target, "wb") as fh:
                fh.write(encode_matrix(matrix))
        elif fmt == "csv":
            with self.atomic_write(target, "w") as fh:
                np.savetxt(
                    fh, matrix, fmt='%.17g', delimiter=',',
                    header=header or '', comments='# '
                )
        else:
            raise SpecValidationError(f"unknown matrix format '{fmt}'")

        self._count("matrix_files_written_total")
        self.logger.debug(f"Wrote {matrix.shape[0]}x{matrix.shape[1]} {fmt} matrix to {target}")
        return target

    @staticmethod
    def file_name(stem: str, fmt: Optional[str] = None) -> str:
        """File name for `stem` with the extension of `fmt`."""
        fmt = (fmt or config.MATRIX_FORMAT).lower()
        if fmt not in EXTENSIONS:
            raise SpecValidationError(f"unknown matrix format '{fmt}'")
        return stem + EXTENSIONS[fmt]
