"""Scenario files and seeded random instances.

A scenario is a JSON object naming two algebras, a channel between them, a
state on the codomain, and either an inverse temperature or a spacetime
region (exactly one of the two).  The seed is mandatory so every run is
reproducible.  Example:

    {
      "name": "diagonal-inclusion",
      "seed": 7,
      "algebras": {"N": {"kind": "diagonal", "dim": 2},
                   "M": {"kind": "full", "dim": 2}},
      "channel": {"kind": "inclusion"},
      "state": {"kind": "trace"},
      "beta": 1.0
    }

Structural problems (missing fields, unknown kinds, both or neither of
beta/region) raise ScenarioError; a well-formed scenario whose content is
invalid (a non-positive state, a Kraus family that is not unital, a bad
region parameter) fails later, in build_scenario, with the corresponding
domain error.

The module also hosts the seeded generators behind the verification suites:
Haar unitaries, faithful densities inside an algebra, unital Kraus families,
and the catalog of channel/state couples whose bimodule is known to be full.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .algebras import Functional, MatrixAlgebra
from .channels import QuantumChannel, tensor_algebra
from .errors import ScenarioError
from .flows import BCFTDoubleCone, DoubleCone, Region, SchwarzschildExterior
from .linalg import dagger

ALGEBRA_KINDS = ("full", "diagonal", "scalars", "blocks")
CHANNEL_KINDS = ("identity", "inclusion", "unit", "unitary", "kraus", "map")
STATE_KINDS = ("trace", "density", "random", "compatible")
REGION_KINDS = ("double-cone", "bcft", "schwarzschild")


@dataclass
class Scenario:
    """Parsed, structurally valid scenario description."""

    name: str
    seed: int
    algebra_n: dict
    algebra_m: dict
    channel: dict
    state: dict
    beta: Optional[float] = None
    region: Optional[dict] = None
    tolerances: dict = field(default_factory=dict)
    optimizer: dict = field(default_factory=dict)
    flow: dict = field(default_factory=dict)


@dataclass
class BuiltScenario:
    """Scenario with all objects constructed and content-validated."""

    scenario: Scenario
    domain: MatrixAlgebra
    codomain: MatrixAlgebra
    alpha: QuantumChannel
    omega: Functional
    beta: Optional[float]
    region: Optional[Region]


def _require(cond: bool, message: str):
    if not cond:
        raise ScenarioError(message)


def parse_scenario(source) -> Scenario:
    """Read and structurally validate a scenario from a path or a dict."""
    if isinstance(source, dict):
        data = source
    else:
        try:
            with open(source, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except FileNotFoundError as exc:
            raise ScenarioError(f"scenario file not found: {source}") from exc
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"scenario is not valid JSON: {exc}") from exc
    _require(isinstance(data, dict), "scenario must be a JSON object")
    _require("name" in data and isinstance(data["name"], str) and data["name"],
             "scenario needs a non-empty name")
    _require("seed" in data, "scenario needs a seed")
    seed = data["seed"]
    _require(isinstance(seed, int) and not isinstance(seed, bool) and seed >= 0,
             "seed must be a non-negative integer")

    algebras = data.get("algebras")
    _require(isinstance(algebras, dict) and set(algebras) >= {"N", "M"},
             "scenario needs algebras N and M")
    for key in ("N", "M"):
        spec = algebras[key]
        _require(isinstance(spec, dict) and spec.get("kind") in ALGEBRA_KINDS,
                 f"algebra {key} needs a kind from {ALGEBRA_KINDS}")

    channel = data.get("channel")
    _require(isinstance(channel, dict) and channel.get("kind") in CHANNEL_KINDS,
             f"channel needs a kind from {CHANNEL_KINDS}")
    state = data.get("state", {"kind": "trace"})
    _require(isinstance(state, dict) and state.get("kind") in STATE_KINDS,
             f"state needs a kind from {STATE_KINDS}")

    has_beta = "beta" in data
    has_region = "region" in data
    _require(has_beta != has_region,
             "scenario needs exactly one of beta or region")
    beta = None
    region = None
    if has_beta:
        _require(isinstance(data["beta"], (int, float)),
                 "beta must be a number")
        beta = float(data["beta"])
    else:
        region = data["region"]
        _require(isinstance(region, dict) and region.get("kind") in REGION_KINDS,
                 f"region needs a kind from {REGION_KINDS}")

    for opt in ("tolerances", "optimizer", "flow"):
        if opt in data:
            _require(isinstance(data[opt], dict), f"{opt} must be an object")

    return Scenario(
        name=data["name"],
        seed=seed,
        algebra_n=algebras["N"],
        algebra_m=algebras["M"],
        channel=channel,
        state=state,
        beta=beta,
        region=region,
        tolerances=dict(data.get("tolerances", {})),
        optimizer=dict(data.get("optimizer", {})),
        flow=dict(data.get("flow", {})),
    )


def _parse_cmatrix(obj) -> np.ndarray:
    """Complex matrix from nested lists; entries are numbers or [re, im]."""
    _require(isinstance(obj, list) and obj and all(isinstance(r, list) for r in obj),
             "matrix must be a non-empty list of rows")
    rows = []
    for row in obj:
        vals = []
        for cell in row:
            if isinstance(cell, (int, float)):
                vals.append(complex(cell))
            elif (isinstance(cell, list) and len(cell) == 2
                  and all(isinstance(p, (int, float)) for p in cell)):
                vals.append(complex(cell[0], cell[1]))
            else:
                raise ScenarioError("matrix entries must be numbers or [re, im]")
        rows.append(vals)
    _require(len({len(r) for r in rows}) == 1, "matrix rows have unequal lengths")
    return np.array(rows, dtype=np.complex128)


def build_algebra(spec: dict) -> MatrixAlgebra:
    kind = spec["kind"]
    if kind == "blocks":
        blocks = spec.get("blocks")
        _require(isinstance(blocks, list) and blocks
                 and all(isinstance(b, list) and len(b) == 2 for b in blocks),
                 "blocks algebra needs a list of [factor, multiplicity] pairs")
        return MatrixAlgebra.from_blocks([(int(n), int(m)) for n, m in blocks])
    dim = spec.get("dim")
    _require(isinstance(dim, int) and dim >= 1, f"{kind} algebra needs dim >= 1")
    if kind == "full":
        return MatrixAlgebra.full(dim)
    if kind == "diagonal":
        return MatrixAlgebra.diagonal(dim)
    return MatrixAlgebra.scalars(dim)


def build_region(spec: dict) -> Region:
    kind = spec["kind"]
    if kind == "double-cone":
        _require("radius" in spec, "double-cone region needs a radius")
        return DoubleCone(float(spec["radius"]), int(spec.get("spatial_dim", 1)))
    if kind == "bcft":
        pts = spec.get("endpoints")
        _require(isinstance(pts, list) and len(pts) == 4,
                 "bcft region needs endpoints [a1, b1, a2, b2]")
        return BCFTDoubleCone(*(float(p) for p in pts))
    _require("mass" in spec, "schwarzschild region needs a mass")
    return SchwarzschildExterior(float(spec["mass"]))


def _build_channel(spec: dict, domain: MatrixAlgebra, codomain: MatrixAlgebra,
                   rng: np.random.Generator) -> QuantumChannel:
    kind = spec["kind"]
    if kind == "identity":
        _require(domain.dim == codomain.dim
                 and domain.span_dim == codomain.span_dim,
                 "identity channel needs matching algebras")
        return QuantumChannel.identity(codomain)
    if kind == "inclusion":
        return QuantumChannel.from_inclusion(domain, codomain)
    if kind == "unit":
        _require(domain.dim == 1, "unit channel needs the scalar domain")
        return QuantumChannel.unit_channel(codomain)
    if kind == "unitary":
        if "matrix" in spec:
            u = _parse_cmatrix(spec["matrix"])
        else:
            u = random_unitary(rng, codomain.dim)
        return QuantumChannel.from_unitary(domain, codomain, u)
    if kind == "kraus":
        ops = spec.get("operators")
        _require(isinstance(ops, list) and ops,
                 "kraus channel needs a list of operators")
        return QuantumChannel.from_kraus(
            domain, codomain, [_parse_cmatrix(o) for o in ops]
        )
    mat = spec.get("matrix")
    _require(mat is not None, "map channel needs a coefficient matrix")
    return QuantumChannel(domain, codomain, _parse_cmatrix(mat), check=True)


def _build_state(spec: dict, alpha: QuantumChannel,
                 rng: np.random.Generator) -> Functional:
    kind = spec["kind"]
    codomain = alpha.codomain
    if kind == "trace":
        return Functional.trace_state(codomain)
    if kind == "density":
        mat = spec.get("matrix")
        _require(mat is not None, "density state needs a matrix")
        return Functional.from_density(codomain, _parse_cmatrix(mat))
    if kind == "random":
        return Functional.from_density(
            codomain, random_density(rng, codomain, floor=spec.get("floor", 0.05))
        )
    return Functional.from_density(codomain, compatible_density(rng, alpha))


def build_scenario(sc: Scenario) -> BuiltScenario:
    """Construct all scenario objects; domain errors propagate to the caller."""
    rng = np.random.default_rng(sc.seed)
    domain = build_algebra(sc.algebra_n)
    codomain = build_algebra(sc.algebra_m)
    alpha = _build_channel(sc.channel, domain, codomain, rng)
    omega = _build_state(sc.state, alpha, rng)
    beta = sc.beta
    region = build_region(sc.region) if sc.region is not None else None
    if beta is not None and beta <= 0:
        raise ValueError("beta must be positive")
    return BuiltScenario(sc, domain, codomain, alpha, omega, beta, region)


# -- seeded random instances ---------------------------------------------------


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Haar-distributed unitary (QR of a complex Gaussian, phases fixed)."""
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    phases = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * phases


def random_density(rng: np.random.Generator, algebra: MatrixAlgebra,
                   floor: float = 0.05) -> np.ndarray:
    """Faithful trace-one density inside the algebra.

    a a* for a random algebra element stays in the algebra; mixing toward
    the normalized identity keeps every eigenvalue above floor / dim.
    """
    coeffs = rng.standard_normal(algebra.span_dim) + 1j * rng.standard_normal(
        algebra.span_dim
    )
    a = algebra.from_coefficients(coeffs)
    rho = a @ dagger(a)
    rho = rho / np.trace(rho).real
    eye = np.eye(algebra.dim, dtype=np.complex128) / algebra.dim
    rho = (1.0 - floor) * rho + floor * eye
    return (rho + dagger(rho)) / 2.0


def random_unital_kraus(rng: np.random.Generator, dim: int, n_ops: int):
    """Kraus family V_a with sum V_a V_a* = 1 (rows of a random co-isometry)."""
    z = rng.standard_normal((n_ops * dim, dim)) + 1j * rng.standard_normal(
        (n_ops * dim, dim)
    )
    q, _ = np.linalg.qr(z)
    w = dagger(q)
    return [np.ascontiguousarray(w[:, a * dim : (a + 1) * dim]) for a in range(n_ops)]


def compatible_density(rng: np.random.Generator, alpha: QuantumChannel) -> np.ndarray:
    """Faithful codomain density that restricts blockwise along the domain image.

    Built as (+)_i U_i (rho_i (x) tau_i) U_i* over the block frame of the
    image of the channel inside its codomain, so conditioning onto the image
    preserves the state.  For these couples the induced carrier is full.
    """
    codomain = alpha.codomain
    image = MatrixAlgebra.from_generators(
        [alpha(b) for b in alpha.domain.basis], dim=codomain.dim
    )
    structure = image.structure
    out = np.zeros((codomain.dim, codomain.dim), dtype=np.complex128)
    for (n, m), u in zip(structure.blocks, structure.isometries):
        rho = random_density(rng, MatrixAlgebra.full(n)) if n > 1 else np.eye(
            1, dtype=np.complex128
        )
        tau = random_density(rng, MatrixAlgebra.full(m)) if m > 1 else np.eye(
            1, dtype=np.complex128
        )
        weight = rng.uniform(0.2, 1.0)
        out += weight * (u @ np.kron(rho, tau) @ dagger(u))
    out = out / np.trace(out).real
    return (out + dagger(out)) / 2.0


def full_couple_catalog(rng: np.random.Generator):
    """One random channel/state couple whose bimodule carrier is full.

    Draws uniformly from: identity on M_d, conjugation by a Haar unitary,
    a subalgebra inclusion with a compatible state, the unit channel from
    the scalars, and a tensor product of an identity with an inclusion.
    Ambient sizes stay small (d_N * d_M <= 9 effective work size).
    """
    kind = int(rng.integers(0, 5))
    if kind == 0:
        d = int(rng.integers(2, 4))
        m = MatrixAlgebra.full(d)
        alpha = QuantumChannel.identity(m)
        omega = Functional.from_density(m, random_density(rng, m))
        return alpha, omega, f"identity-{d}"
    if kind == 1:
        d = int(rng.integers(2, 4))
        m = MatrixAlgebra.full(d)
        alpha = QuantumChannel.from_unitary(m, m, random_unitary(rng, d))
        omega = Functional.from_density(m, random_density(rng, m))
        return alpha, omega, f"unitary-{d}"
    if kind == 2:
        d = int(rng.integers(2, 4))
        small = MatrixAlgebra.diagonal(d)
        big = MatrixAlgebra.full(d)
        alpha = QuantumChannel.from_inclusion(small, big)
        omega = Functional.from_density(big, compatible_density(rng, alpha))
        return alpha, omega, f"diagonal-in-{d}"
    if kind == 3:
        d = int(rng.integers(2, 4))
        m = MatrixAlgebra.full(d)
        alpha = QuantumChannel.unit_channel(m)
        omega = Functional.from_density(m, random_density(rng, m))
        return alpha, omega, f"unit-{d}"
    small = tensor_algebra(MatrixAlgebra.full(2), MatrixAlgebra.scalars(2))
    big = MatrixAlgebra.full(4)
    alpha = QuantumChannel.from_inclusion(small, big)
    omega = Functional.from_density(big, compatible_density(rng, alpha))
    return alpha, omega, "factor-in-4"


def inclusion_catalog(rng: np.random.Generator):
    """One random subalgebra inclusion for index cross-checks."""
    kind = int(rng.integers(0, 4))
    if kind == 0:
        d = int(rng.integers(2, 4))
        return MatrixAlgebra.diagonal(d), MatrixAlgebra.full(d), f"diagonal-{d}"
    if kind == 1:
        d = int(rng.integers(2, 4))
        return MatrixAlgebra.scalars(d), MatrixAlgebra.full(d), f"scalars-{d}"
    if kind == 2:
        small = tensor_algebra(MatrixAlgebra.full(2), MatrixAlgebra.scalars(2))
        return small, MatrixAlgebra.full(4), "factor-in-4"
    return (MatrixAlgebra.from_blocks([(1, 1), (2, 1)]),
            MatrixAlgebra.full(3), "scalar-plus-factor-in-3")
