"""Command-line workbench.

Three subcommands share one exit-code contract:

    analyze <scenario.json>   full numeric pipeline, writes a JSON report
    flow <scenario.json>      integrates the region flow, writes trajectory CSV
    verify --seed S --n N     seeded property suites, prints a summary

Exit codes: 0 all good; 1 a run-time invariant failed its tolerance (the
report is still written); 2 the scenario or the usage line does not parse;
3 the scenario parses but its content is invalid (bad state, bad channel,
bad region).  Identical inputs produce identical output bytes; the one
timestamp field is suppressed by --compare for golden-file testing.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .algebras import Functional, MatrixAlgebra, minimal_expectation, pimsner_popa_index
from .bimodules import ChannelBimodule, channel_from_bimodule, fullness
from .channels import QuantumChannel, transpose_channel
from .entropy import decomposition_entropy, kosaki_bound, relative_entropy
from .errors import (
    BekbenchError,
    CommutantMismatch,
    InvariantViolation,
    NotFull,
    PathsDisagree,
    ScenarioError,
    SignatureViolation,
    UnsupportedRegion,
)
from .flows import (
    BCFTDoubleCone,
    DoubleCone,
    SchwarzschildExterior,
    bekenstein_coefficient,
    chiral_velocity,
    dilate,
    integrate_flow,
    local_beta,
    max_beta,
    size_normalization,
)
from .modular import conditional_entropy, modular_pair
from .reports import canonical_json, stamp, trajectory_csv
from .scenarios import (
    build_region,
    build_scenario,
    full_couple_catalog,
    inclusion_catalog,
    parse_scenario,
    random_density,
    random_unital_kraus,
)
from .thermo import thermo_report

INVARIANT_ERRORS = (
    InvariantViolation,
    PathsDisagree,
    CommutantMismatch,
    SignatureViolation,
    NotFull,
)


def _fail(code: int, label: str, exc: Exception) -> int:
    print(f"{label}: {exc}", file=sys.stderr)
    return code


def _default_out(scenario_path: str, kind: str) -> Path:
    p = Path(scenario_path)
    stem = p.with_suffix("") if p.suffix == ".json" else p
    return Path(f"{stem}.{kind}")


# -- analyze --------------------------------------------------------------------


def _region_payload(region) -> dict:
    if isinstance(region, DoubleCone):
        return {"kind": "double-cone", "radius": region.radius,
                "spatial_dim": region.spatial_dim}
    if isinstance(region, BCFTDoubleCone):
        return {"kind": "bcft", "endpoints": [region.a1, region.b1,
                                              region.a2, region.b2]}
    return {"kind": "schwarzschild", "mass": region.mass}


def _cmd_analyze(args) -> int:
    try:
        sc = parse_scenario(args.scenario)
    except ScenarioError as exc:
        return _fail(2, "parse error", exc)
    try:
        built = build_scenario(sc)
    except (BekbenchError, ValueError) as exc:
        return _fail(3, "validation error", exc)

    scale = args.tolerance_scale
    tols = sc.tolerances
    path_tol = tols.get("path", 1e-9) * scale
    check_tol = tols.get("check", 1e-8) * scale
    bound_slack = tols.get("bound", 1e-9) * scale

    payload = {
        "name": sc.name,
        "seed": sc.seed,
        "tolerance_scale": scale,
        "algebras": {
            "N": {"kind": sc.algebra_n["kind"], "dim": built.domain.dim,
                  "span": built.domain.span_dim},
            "M": {"kind": sc.algebra_m["kind"], "dim": built.codomain.dim,
                  "span": built.codomain.span_dim},
        },
        "channel": {"kind": sc.channel["kind"]},
        "state": {"kind": sc.state["kind"], "mass": built.omega.mass},
    }
    violations = []

    beta = built.beta
    if built.region is not None:
        lam = bekenstein_coefficient(built.region)
        region_info = _region_payload(built.region)
        region_info["bekenstein_coefficient"] = lam
        if not isinstance(built.region, SchwarzschildExterior):
            region_info["size_normalization"] = size_normalization(built.region)
        payload["region"] = region_info
        beta = lam
    payload["beta"] = beta

    try:
        bim = ChannelBimodule(built.alpha, built.omega)
        full = fullness(bim, tol=path_tol)
        rebuilt = channel_from_bimodule(bim, tol=path_tol)
        round_defect = rebuilt.choi_distance(built.alpha)
        tp_direct = transpose_channel(built.alpha, built.omega)
        tp_agreement = full.transpose.choi_distance(tp_direct)
        payload["carrier"] = {
            "dim": full.carrier_dim,
            "is_full": full.is_full,
            "cyclic_rank": full.cyclic_rank,
            "roundtrip_defect": full.roundtrip_defect,
            "reconstruction_defect": round_defect,
            "transpose_agreement": tp_agreement,
        }
        if tp_agreement > path_tol:
            violations.append(
                f"transpose constructions disagree: {tp_agreement:.3e}"
            )
        if round_defect > path_tol:
            violations.append(
                f"channel reconstruction misses the input: {round_defect:.3e}"
            )

        pair = modular_pair(bim, tol=check_tol)
        payload["modular"] = {
            "index": pair.index,
            "h": pair.h,
            "h_measured": pair.h_measured,
            "check_residual": pair.check_residual,
        }

        ce = conditional_entropy(built.alpha, built.omega, bimodule=bim)
        payload["conditional_entropy"] = {"index": ce.index, "value": ce.value}
        if abs(ce.index - pair.index) > 1e-6 * max(1.0, pair.index):
            violations.append("index mismatch between expectation and inclusion data")

        opt = sc.optimizer
        pieces = int(opt.get("pieces", max(2, round(pair.index))))
        result = decomposition_entropy(
            built.alpha,
            built.omega,
            pieces,
            restarts=int(opt.get("restarts", 6)),
            iterations=int(opt.get("iterations", 600)),
            seed=int(opt.get("seed", sc.seed)),
        )
        payload["optimizer"] = {
            "lower_bound": result.value,
            "gap": pair.h - result.value,
            "pieces": pieces,
            "restarts": result.restarts,
            "iterations": result.iterations,
        }
        if result.value > pair.h + 1e-6:
            violations.append(
                f"optimizer lower bound {result.value:.6f} exceeds h {pair.h:.6f}"
            )

        rep = thermo_report(pair, beta)
        payload["thermo"] = {
            "beta": rep.beta,
            "entropy": rep.entropy,
            "energy": rep.energy,
            "free_energy": rep.free_energy,
            "residual_identity": rep.residual_identity,
            "residual_geometric": rep.residual_geometric,
            "bound_margin": rep.bound_margin,
            "bound": "S <= beta E",
            "bound_holds": rep.bound_holds(bound_slack),
        }
        if rep.residual_identity > check_tol:
            violations.append(
                f"free-energy identity residual {rep.residual_identity:.3e}"
            )
        if rep.residual_geometric > check_tol:
            violations.append(
                f"geometric free-energy residual {rep.residual_geometric:.3e}"
            )
        if not rep.bound_holds(bound_slack):
            violations.append(f"entropy bound violated: margin {rep.bound_margin:.3e}")
    except INVARIANT_ERRORS as exc:
        violations.append(str(exc))
    except (BekbenchError, ValueError) as exc:
        return _fail(3, "validation error", exc)

    payload["violations"] = violations
    text = canonical_json(stamp(payload, args.compare))
    out = Path(args.out) if args.out else _default_out(args.scenario, "report.json")
    out.write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return 1 if violations else 0


# -- flow -----------------------------------------------------------------------


def _default_start(region) -> np.ndarray:
    if isinstance(region, DoubleCone):
        return np.zeros(region.spatial_dim + 1)
    if isinstance(region, BCFTDoubleCone):
        u_mid = 0.5 * (region.a2 + region.b2)
        v_mid = 0.5 * (region.a1 + region.b1)
        return np.array([0.5 * (u_mid + v_mid), 0.5 * (u_mid - v_mid)])
    raise UnsupportedRegion("no flow trajectories for this region")


def _cmd_flow(args) -> int:
    try:
        sc = parse_scenario(args.scenario)
        if sc.region is None:
            raise ScenarioError("flow needs a scenario with a region block")
    except ScenarioError as exc:
        return _fail(2, "parse error", exc)
    try:
        region = build_region(sc.region)
        spec = sc.flow
        x0 = np.asarray(spec["x0"], dtype=np.float64) if "x0" in spec else _default_start(region)
        s_span = tuple(spec.get("s_span", (0.0, 1.0)))
        step = float(spec.get("step", 1e-3))
        samples = integrate_flow(region, x0, s_span, step=step)
        lam = bekenstein_coefficient(region)
    except (BekbenchError, ValueError) as exc:
        return _fail(3, "validation error", exc)

    csv_text = trajectory_csv(samples)
    out = Path(args.out) if args.out else _default_out(args.scenario, "trajectory.csv")
    out.write_text(csv_text, encoding="utf-8")

    betas = [s.beta_local for s in samples]
    summary = {
        "name": sc.name,
        "seed": sc.seed,
        "region": _region_payload(region),
        "bekenstein_coefficient": lam,
        "samples": len(samples),
        "s_span": list(s_span),
        "step": step,
        "beta_start": betas[0],
        "beta_end": betas[-1],
        "beta_max_sampled": max(betas),
        "trajectory_csv": str(out),
    }
    if not isinstance(region, SchwarzschildExterior):
        summary["size_normalization"] = size_normalization(region)
    sys.stdout.write(canonical_json(stamp(summary, args.compare)))
    return 0


# -- verify ----------------------------------------------------------------------


def _suite_monotonicity(seed: int, n: int, scale: float):
    tol = 1e-9 * scale
    worst = 0.0
    passed = 0
    for k in range(n):
        rng = np.random.default_rng([seed, 101, k])
        d = int(rng.integers(2, 4))
        alg = MatrixAlgebra.full(d)
        phi = Functional.from_density(alg, random_density(rng, alg))
        psi = Functional.from_density(alg, random_density(rng, alg))
        alpha = QuantumChannel.from_kraus(
            alg, alg, random_unital_kraus(rng, d, int(rng.integers(2, 4)))
        )
        before = relative_entropy(phi, psi)
        phi_n = Functional.from_density(alg, alpha.apply_adjoint(phi.density), project=True)
        psi_n = Functional.from_density(alg, alpha.apply_adjoint(psi.density), project=True)
        after = relative_entropy(phi_n, psi_n)
        resid = after - before
        worst = max(worst, resid)
        if resid <= tol:
            passed += 1
    return passed, worst, tol


def _suite_positivity(seed: int, n: int, scale: float):
    tol = 1e-9 * scale
    worst = 0.0
    passed = 0
    for k in range(n):
        rng = np.random.default_rng([seed, 202, k])
        if rng.integers(0, 2) == 0:
            alg = MatrixAlgebra.full(int(rng.integers(2, 4)))
        else:
            alg = MatrixAlgebra.from_blocks([(1, 1), (2, 1)])
        phi = Functional.from_density(alg, random_density(rng, alg))
        psi = Functional.from_density(alg, random_density(rng, alg))
        s = relative_entropy(phi, psi)
        self_s = relative_entropy(phi, phi)
        kb = kosaki_bound(phi, psi)
        resid = max(-s, abs(self_s), kb - s)
        worst = max(worst, resid)
        if resid <= tol:
            passed += 1
    return passed, worst, tol


def _suite_round_trip(seed: int, n: int, scale: float):
    tol = 1e-9 * scale
    worst = 0.0
    passed = 0
    for k in range(n):
        rng = np.random.default_rng([seed, 303, k])
        alpha, omega, _tag = full_couple_catalog(rng)
        bim = ChannelBimodule(alpha, omega)
        res = fullness(bim)
        rebuilt = channel_from_bimodule(bim)
        tp = transpose_channel(alpha, omega)
        resid = max(
            res.roundtrip_defect,
            rebuilt.choi_distance(alpha),
            res.transpose.choi_distance(tp),
        )
        worst = max(worst, resid)
        if resid <= tol:
            passed += 1
    return passed, worst, tol


def _suite_index_oracle(seed: int, n: int, scale: float):
    tol = 1e-3 * scale
    worst = 0.0
    passed = 0
    for k in range(n):
        rng = np.random.default_rng([seed, 404, k])
        small, big, _tag = inclusion_catalog(rng)
        index, eps = minimal_expectation(small, big)
        pp = pimsner_popa_index(eps, big, seed=int(rng.integers(1, 2**31)))
        resid = abs(index - pp.index_estimate) / max(index, 1.0)
        worst = max(worst, resid)
        if resid <= tol:
            passed += 1
    return passed, worst, tol


def _suite_thermo_identity(seed: int, n: int, scale: float):
    tol = 1e-8 * scale
    worst = 0.0
    passed = 0
    for k in range(n):
        rng = np.random.default_rng([seed, 505, k])
        alpha, omega, _tag = full_couple_catalog(rng)
        beta = float(rng.uniform(0.5, 2.0))
        pair = modular_pair(ChannelBimodule(alpha, omega))
        rep = thermo_report(pair, beta)
        resid = max(
            rep.residual_identity,
            rep.residual_geometric,
            max(0.0, -rep.bound_margin),
        )
        worst = max(worst, resid)
        if resid <= tol:
            passed += 1
    return passed, worst, tol


def _suite_flow_covariance(seed: int, n: int, scale: float):
    # mixed sub-tolerances, so residuals are normalized by their own budget
    tol = 1.0 * scale
    worst = 0.0
    passed = 0
    for k in range(n):
        rng = np.random.default_rng([seed, 606, k])
        a1 = float(rng.uniform(0.0, 2.0))
        g = rng.uniform(0.3, 2.0, size=3)
        region = BCFTDoubleCone(a1, a1 + g[0], a1 + g[0] + g[1], a1 + g[0] + g[1] + g[2])
        lam = float(rng.uniform(0.5, 3.0))
        big = dilate(region, lam)
        ratios = []
        for y in (region.a1, region.b1, region.a2, region.b2):
            ratios.append(abs(chiral_velocity(region, y)) / 1e-10)
        for _ in range(5):
            y = float(rng.uniform(region.a2, region.b2))
            drift = abs(chiral_velocity(big, lam * y) - lam * chiral_velocity(region, y))
            ratios.append(drift / 1e-10)
        b_small, _ = max_beta(region)
        b_big, _ = max_beta(big)
        ratios.append(abs(b_big - lam * b_small) / (1e-8 * max(b_big, 1.0)))
        mid = _default_start(region)
        leg_a = integrate_flow(region, mid, (0.0, 0.3))[-1].point
        leg_b = integrate_flow(region, leg_a, (0.0, 0.4))[-1].point
        joint = integrate_flow(region, mid, (0.0, 0.7))[-1].point
        ratios.append(float(np.linalg.norm(leg_b - joint)) / 1e-7)
        dc = DoubleCone(float(rng.uniform(0.5, 3.0)))
        center = np.zeros(2)
        ratios.append(abs(local_beta(dc, center) - math.pi * dc.radius) / 1e-12)
        resid = max(ratios)
        worst = max(worst, resid)
        if resid <= tol:
            passed += 1
    return passed, worst, tol


SUITES = (
    ("monotonicity", _suite_monotonicity),
    ("positivity", _suite_positivity),
    ("round-trip", _suite_round_trip),
    ("index-oracle", _suite_index_oracle),
    ("thermodynamic-identity", _suite_thermo_identity),
    ("flow-covariance", _suite_flow_covariance),
)


def _cmd_verify(args) -> int:
    if args.n < 1:
        print("usage error: --n must be at least 1", file=sys.stderr)
        return 2
    lines = [f"verify seed={args.seed} n={args.n} tolerance-scale={args.tolerance_scale}"]
    lines.append(f"{'suite':<24} {'pass':>7}  {'worst residual':>15}  tolerance")
    all_ok = True
    ok_count = 0
    for name, fn in SUITES:
        try:
            passed, worst, tol = fn(args.seed, args.n, args.tolerance_scale)
        except (BekbenchError, ValueError) as exc:
            lines.append(f"{name:<24} {'error':>7}  {exc}")
            all_ok = False
            continue
        ok = passed == args.n
        ok_count += 1 if ok else 0
        all_ok = all_ok and ok
        mark = f"{passed}/{args.n}"
        lines.append(f"{name:<24} {mark:>7}  {worst:>15.3e}  {tol:.1e}")
    lines.append(
        f"verify: {'PASS' if all_ok else 'FAIL'} ({ok_count}/{len(SUITES)} suites)"
    )
    sys.stdout.write("\n".join(lines) + "\n")
    return 0 if all_ok else 1


# -- entry point -------------------------------------------------------------------


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bekbench",
        description="Numerical workbench for channel thermodynamics and "
                    "geometric modular flows.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="run the numeric pipeline on a scenario")
    pa.add_argument("scenario", help="path to a scenario JSON file")
    pa.add_argument("--out", help="report path (default: <scenario>.report.json)")
    pa.add_argument("--compare", action="store_true",
                    help="suppress volatile fields for golden-file comparison")
    pa.add_argument("--tolerance-scale", type=float, default=1.0)

    pf = sub.add_parser("flow", help="integrate the region flow of a scenario")
    pf.add_argument("scenario", help="path to a scenario JSON file")
    pf.add_argument("--out", help="trajectory CSV path (default: <scenario>.trajectory.csv)")
    pf.add_argument("--compare", action="store_true",
                    help="suppress volatile fields for golden-file comparison")
    pf.add_argument("--tolerance-scale", type=float, default=1.0)

    pv = sub.add_parser("verify", help="run the seeded property suites")
    pv.add_argument("--seed", type=int, required=True)
    pv.add_argument("--n", type=int, required=True,
                    help="instances per suite (>= 1)")
    pv.add_argument("--tolerance-scale", type=float, default=1.0)

    args = parser.parse_args(argv)
    if args.tolerance_scale <= 0:
        print("usage error: --tolerance-scale must be positive", file=sys.stderr)
        return 2
    if args.command == "analyze":
        return _cmd_analyze(args)
    if args.command == "flow":
        return _cmd_flow(args)
    return _cmd_verify(args)


if __name__ == "__main__":
    sys.exit(main())
