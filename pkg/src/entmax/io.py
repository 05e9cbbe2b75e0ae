"""State files: versioned JSON with ``[re, im]`` pairs.

Emission is canonical (17 significant digits, ``-0`` written as ``0``,
sorted meta keys), so ``dumps_state(loads_state(text)) == text`` for every
emitted file.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionError, InvalidOperatorError, StateFileError
from .linalg import BipartiteState, Dims, SubnormalizedOperator

SCHEMA = 1


def format_float(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise StateFileError(f"non-finite matrix entry {x!r}")
    if x == 0:
        return "0"
    return f"{x:.17g}"


@dataclass(frozen=True, eq=False)
class StateFile:
    dims: Dims
    matrix: np.ndarray
    meta: dict = field(default_factory=dict)

    def to_state(self, subnormalized: bool = False):
        """Validated operator; ``subnormalized`` relaxes the unit-trace check."""
        cls = SubnormalizedOperator if subnormalized else BipartiteState
        M = self.matrix
        if not np.any(M.imag):
            M = M.real
        try:
            return cls(M, self.dims)
        except (InvalidOperatorError, DimensionError) as exc:
            raise StateFileError(f"invalid state: {exc}") from exc

    @classmethod
    def from_state(cls, state, meta=None) -> "StateFile":
        return cls(state.dims, np.asarray(state.matrix, dtype=complex), dict(meta or {}))


def dumps_state(sf: StateFile) -> str:
    rows = []
    for row in sf.matrix:
        pairs = ", ".join(f"[{format_float(z.real)}, {format_float(z.imag)}]" for z in row)
        rows.append(f"    [{pairs}]")
    lines = [
        "{",
        f'  "schema": {SCHEMA},',
        f'  "dims": [{sf.dims.dA}, {sf.dims.dB}],',
        '  "matrix": [',
        ",\n".join(rows),
        "  ]" + ("," if sf.meta else ""),
    ]
    if sf.meta:
        lines.append(f'  "meta": {json.dumps(sf.meta, sort_keys=True, separators=(", ", ": "))}')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _number(v, where):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise StateFileError(f"{where}: expected a number, got {v!r}")
    if not math.isfinite(v):
        raise StateFileError(f"{where}: non-finite value")
    return float(v)


def loads_state(text: str) -> StateFile:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StateFileError(f"not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise StateFileError("state file must be a JSON object")
    if data.get("schema") != SCHEMA:
        raise StateFileError(f"unsupported schema {data.get('schema')!r}; expected {SCHEMA}")
    dims = data.get("dims")
    if not (isinstance(dims, list) and len(dims) == 2 and all(isinstance(v, int) and v >= 1 for v in dims)):
        raise StateFileError(f"dims must be two positive integers, got {dims!r}")
    dims = Dims(*dims)
    rows = data.get("matrix")
    if not isinstance(rows, list) or len(rows) != dims.d:
        raise StateFileError(f"matrix must have {dims.d} rows")
    M = np.empty((dims.d, dims.d), dtype=complex)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != dims.d:
            raise StateFileError(f"row {i} must have {dims.d} entries")
        for j, z in enumerate(row):
            if not isinstance(z, list) or len(z) != 2:
                raise StateFileError(f"entry ({i}, {j}) must be a [re, im] pair")
            M[i, j] = complex(_number(z[0], f"entry ({i}, {j})"), _number(z[1], f"entry ({i}, {j})"))
    meta = data.get("meta", {})
    if not isinstance(meta, dict):
        raise StateFileError("meta must be an object")
    extra = set(data) - {"schema", "dims", "matrix", "meta"}
    if extra:
        raise StateFileError(f"unknown fields {sorted(extra)}")
    return StateFile(dims, M, meta)


def read_state(path) -> StateFile:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise StateFileError(f"cannot read {path}: {exc}") from exc
    return loads_state(text)


def write_state(path, sf: StateFile) -> None:
    Path(path).write_text(dumps_state(sf))
