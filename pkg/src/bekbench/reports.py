"""Canonical report serialization.

Reports must be byte-identical across runs with the same scenario and seed,
so everything funnels through one JSON encoder: keys sorted, floats written
with their shortest round-trip representation, numpy scalars and arrays
reduced to plain Python values, complex numbers to [re, im] pairs.  The one
volatile field, the generation timestamp, is added only when compare mode is
off.  Trajectory CSV cells use a fixed 12-digit scientific format.
"""

from __future__ import annotations

import json
from datetime import datetime, timezone

import numpy as np

CSV_CELL = "{:.12e}"


def plain(obj):
    """Reduce numpy containers and complex values to JSON-encodable ones."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        z = complex(obj)
        if z.imag == 0.0:
            return z.real
        return [z.real, z.imag]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def canonical_json(payload: dict) -> str:
    return json.dumps(plain(payload), sort_keys=True, indent=2) + "\n"


def stamp(payload: dict, compare: bool) -> dict:
    """Attach the volatile timestamp unless compare mode suppresses it."""
    if not compare:
        payload = dict(payload)
        payload["generated_at"] = datetime.now(timezone.utc).isoformat()
    return payload


def trajectory_csv(samples) -> str:
    """Flow samples as CSV: s, coordinates, velocity components, beta_local."""
    if not samples:
        return "s,beta_local\n"
    n_coord = len(samples[0].point)
    coords = ["t"] + [f"x{i}" for i in range(1, n_coord)]
    header = ["s"] + coords + [f"v_{c}" for c in coords] + ["beta_local"]
    lines = [",".join(header)]
    for s in samples:
        cells = [s.s, *s.point.tolist(), *s.velocity.tolist(), s.beta_local]
        lines.append(",".join(CSV_CELL.format(c) for c in cells))
    return "\n".join(lines) + "\n"
