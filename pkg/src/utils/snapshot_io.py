"""
MHDBL1 snapshot codec

    MHDBL1\n
    <Nx> <Ny> <Ymax> <ell> <delta> <t>\n
    u, f, v, g as row-major little-endian float64 blocks of (Ny+1) x Nx

The envelope constant is not part of the format; read_snapshot
recomputes it from f.
"""

from dataclasses import replace
from pathlib import Path
from typing import Tuple

import numpy as np

from src.core.errors import InvalidParameterError
from src.core.grid import Grid, build_grid
from src.core.state import ENVELOPE_MARGIN, State, check_envelope, reconstruct

MAGIC = b"MHDBL1"
FIELD_ORDER = ("u", "f", "v", "g")


def write_snapshot(path, state: State, grid: Grid) -> Path:
    target = Path(path)
    numbers = (grid.ymax, grid.ell, grid.delta, state.t)
    header = f"{grid.nx} {grid.ny} " + " ".join(repr(float(v)) for v in numbers) + "\n"
    with open(target, "wb") as fh:
        fh.write(MAGIC + b"\n")
        fh.write(header.encode("ascii"))
        for name in FIELD_ORDER:
            fh.write(np.ascontiguousarray(getattr(state, name), dtype="<f8").tobytes())
    return target


def read_snapshot(path) -> Tuple[State, Grid]:
    raw = Path(path).read_bytes()
    magic, _, rest = raw.partition(b"\n")
    if magic != MAGIC:
        raise InvalidParameterError("snapshot", f"bad magic {magic[:16]!r}")
    header, _, payload = rest.partition(b"\n")
    try:
        nx_s, ny_s, ymax_s, ell_s, delta_s, t_s = header.decode("ascii").split()
        nx, ny = int(nx_s), int(ny_s)
        ymax, ell, delta, t = float(ymax_s), float(ell_s), float(delta_s), float(t_s)
    except ValueError as exc:
        raise InvalidParameterError("snapshot", f"malformed header {header[:80]!r}") from exc

    grid = build_grid(nx, ny, ymax, ell, delta)
    block = (ny + 1) * nx
    data = np.frombuffer(payload, dtype="<f8")
    if data.size != 4 * block:
        raise InvalidParameterError("snapshot", f"expected {4 * block} samples, found {data.size}")
    fields = {name: data[i * block:(i + 1) * block].reshape(ny + 1, nx).astype(float)
              for i, name in enumerate(FIELD_ORDER)}

    state = State(t=t, c=0.0, delta=delta, **fields)
    envelope = check_envelope(state, grid)
    c = ENVELOPE_MARGIN * envelope.admissible_c if envelope.min_ratio > 0 else 0.0
    v, g = reconstruct(fields["u"], fields["f"], grid)
    consistent = bool(np.allclose(v, fields["v"]) and np.allclose(g, fields["g"]))
    return replace(state, c=c, consistent=consistent), grid
