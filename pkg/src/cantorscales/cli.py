"""Batch command line writing machine-readable JSON reports.

Subcommands: construct, verify, premeasure, scales, embed.  Every run
writes one JSON report (sorted keys, two-space indent) and prints
exactly two lines: the report path and a one-line summary.  Identical
arguments and seeds produce byte-identical reports.

Exit codes: 0 success, 2 malformed input (bad JSON, bad gauge spec,
invalid parameters), 3 gauge pair fails the domination check, 4 stored
report fails re-verification, 1 anything else.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional

from . import seqbuild
from .enclosure import DEFAULT_PRECISION
from .errors import (CantorScalesError, DominationViolatedError,
                     InvalidParameterError, InvalidSpecError, OutOfDepthError)
from .gauge import Gauge, ScalingFamily, parse_gauge
from .measure import (TruncationWindow, hausdorff_premeasure,
                      packing_premeasure, premeasure_csv, premeasure_rows)
from .product import CompactProduct
from .scale import (ScaleSearch, construction_window, estimate_hausdorff_scale,
                    estimate_local_scales, estimate_packing_scale,
                    order_check_details)
from .embed import sample_distortion_pairs, verify_distortion_bounds

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_DOMINATION = 3
EXIT_VERIFY = 4

_LN2 = math.log(2)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _parse_json_arg(text: str, what: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidSpecError(f"{what} is not valid JSON: {exc}") from exc


def _gauge_arg(text: str, what: str) -> Gauge:
    return parse_gauge(_parse_json_arg(text, what))


def _load_product(path_str: str):
    """A product from either its own JSON form or a construction report.

    Returns (product, meta) where meta carries k0 and T when the file was
    a construction report, for window defaulting.
    """
    path = Path(path_str)
    try:
        spec = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidSpecError(f"cannot read product from {path}: {exc}") from exc
    if not isinstance(spec, dict):
        raise InvalidSpecError("product file must hold a JSON object")
    if spec.get("schema") == "construction/1":
        if spec.get("mode") != "exact":
            raise InvalidSpecError(
                "approximate construction reports carry no materialized product")
        n = spec.get("n")
        if not isinstance(n, list) or any(not isinstance(x, int) for x in n):
            raise InvalidSpecError("construction report has no integer branch list")
        meta = {"k0": spec.get("k0"), "T": tuple(spec.get("T") or ())}
        return CompactProduct(tuple(n)), meta
    return CompactProduct.from_spec(spec), {}


# ---------------------------------------------------------------------------
# construct
# ---------------------------------------------------------------------------


def cmd_construct(args) -> int:
    phi = _gauge_arg(args.phi, "--phi")
    psi = _gauge_arg(args.psi, "--psi")
    result = seqbuild.construct_prescribed_product(
        phi, psi, args.depth, precision_bits=args.precision, mode=args.mode)
    out = Path(args.out)
    _write_json(out, result.report())
    print(out)
    print(f"construct: depth={args.depth} mode={args.mode} "
          f"k0={result.chain.k0} events={len(result.schedule.times)} "
          f"warnings={len(result.warnings)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def _check(name: str, fn) -> dict:
    try:
        detail = fn()
    except Exception as exc:        # any malformed field fails its check
        return {"name": name, "status": "fail", "detail": str(exc)}
    if detail is None:
        return {"name": name, "status": "pass", "detail": ""}
    if detail.startswith("skipped:"):
        return {"name": name, "status": "skipped",
                "detail": detail[len("skipped:"):].strip()}
    return {"name": name, "status": "fail", "detail": detail}


def run_report_checks(report: dict,
                      precision_bits: int = DEFAULT_PRECISION) -> list:
    """Re-derive every chain and product invariant from a stored report."""
    checks: list = []

    def shape() -> Optional[str]:
        needed = {"schema", "mode", "depth", "n", "v_log2", "T", "k0",
                  "window", "warnings", "params"}
        missing = needed - set(report)
        if missing:
            return f"missing keys {sorted(missing)}"
        if report["schema"] != "construction/1":
            return f'unknown schema {report["schema"]!r}'
        if report["mode"] not in ("exact", "approx"):
            return f'unknown mode {report["mode"]!r}'
        depth = report["depth"]
        if not isinstance(depth, int) or depth < 1:
            return "depth must be a positive integer"
        for key in ("n", "v_log2"):
            if not isinstance(report[key], list) or len(report[key]) != depth:
                return f'"{key}" must list one entry per level'
        if not isinstance(report["T"], list):
            return '"T" must be a list'
        return None

    checks.append(_check("shape", shape))
    if checks[0]["status"] == "fail":
        return checks

    mode = report["mode"]
    depth = report["depth"]
    n = report["n"]
    v_log2 = report["v_log2"]

    def branch_factors() -> Optional[str]:
        for k, x in enumerate(n, start=1):
            if x is None:
                if mode == "exact":
                    return f"exact mode but branch count missing at level {k}"
                continue
            if not isinstance(x, int) or x < 1:
                return f"branch count {x!r} at level {k} is not a positive integer"
        return None

    checks.append(_check("branch-factors", branch_factors))

    def divisibility() -> Optional[str]:
        if mode == "approx":
            return "skipped: approximate mode tracks only log2 of the chain"
        if "v" not in report:
            return ("skipped: chain integers are not serialized at this depth; "
                    "growth consistency is checked from the branch counts")
        v = [int(x) for x in report["v"]]
        if len(v) != depth:
            return '"v" must list one integer per level'
        if v[0] != 1:
            return f"chain must start at 1, got {v[0]}"
        prev = 1
        for k, vk in enumerate(v, start=1):
            if vk % prev != 0:
                return f"divisibility broken at level {k}: {prev} does not divide {vk}"
            if vk // prev != n[k - 1]:
                return (f"branch count at level {k} is {n[k - 1]} "
                        f"but the chain steps by {vk // prev}")
            prev = vk
        return None

    checks.append(_check("divisibility", divisibility))

    def chain_growth() -> Optional[str]:
        if abs(v_log2[0]) > 1e-12:
            return f"log2 chain must start at 0, got {v_log2[0]}"
        for k in range(1, depth):
            step = v_log2[k] - v_log2[k - 1]
            if step < -1e-9:
                return f"log2 chain decreases at level {k + 1}"
            if n[k] is not None and abs(step - math.log2(n[k])) > 1e-6:
                return (f"log2 chain step {step:.9f} at level {k + 1} "
                        f"disagrees with branch count {n[k]}")
        return None

    checks.append(_check("chain-growth", chain_growth))

    def first_growth() -> Optional[str]:
        k0 = next((k for k in range(1, depth + 1) if v_log2[k - 1] > 1e-12),
                  None)
        if k0 != report["k0"]:
            return f'stored k0 {report["k0"]!r} but the chain first grows at {k0!r}'
        return None

    checks.append(_check("first-growth", first_growth))

    # gauge-dependent checks need the stored parameters back
    try:
        params = report["params"]
        phi = parse_gauge(params["phi"])
        psi = parse_gauge(params["psi"])
    except Exception as exc:
        checks.append({"name": "parameters", "status": "fail",
                       "detail": f"cannot rebuild gauges: {exc}"})
        return checks
    checks.append({"name": "parameters", "status": "pass", "detail": ""})

    certificate = seqbuild.check_domination(phi, psi, depth + 1, precision_bits)
    targets = seqbuild.targets_from_gauges(phi, psi, certificate, depth,
                                           precision_bits)

    def oscillation() -> Optional[str]:
        schedule = seqbuild.oscillation_times(targets)
        if list(schedule.times) != list(report["T"]):
            return (f'stored switching times {report["T"]} but the scan '
                    f"finds {list(schedule.times)}")
        return None

    checks.append(_check("oscillation-times", oscillation))

    def sandwich() -> Optional[str]:
        k0 = report["k0"]
        if k0 is None:
            return "skipped: chain never grew, nothing to sandwich"
        envelope = seqbuild.build_envelope(targets)
        for k in range(k0, depth + 1):
            lu = envelope.eval(k).log_float() / _LN2
            gap = lu - v_log2[k - 1]
            if not -1e-6 <= gap <= 1 + 1e-6:
                return (f"level {k}: log2 envelope {lu:.9f} vs chain "
                        f"{v_log2[k - 1]:.9f} leaves the factor-2 corridor")
        return None

    checks.append(_check("sandwich", sandwich))

    def window_stats() -> Optional[str]:
        stored = report["window"]
        k0 = report["k0"]
        if k0 is None:
            return None if stored is None else "window stats stored for a flat chain"
        if not isinstance(stored, dict):
            return "window stats missing for a grown chain"
        a_max = max(targets.a(k).log_float() - v_log2[k - 1] * _LN2
                    for k in range(k0, depth + 1))
        b_min = min(targets.b(k).log_float() - v_log2[k - 1] * _LN2
                    for k in range(k0, depth + 1))
        for key, val in (("a_over_v_max", math.exp(a_max)),
                         ("b_over_v_min", math.exp(b_min))):
            got = stored.get(key)
            if not isinstance(got, (int, float)):
                return f"window stat {key} missing"
            if abs(got - val) > 1e-9 * max(1.0, abs(val)):
                return f"window stat {key} stored {got!r}, recomputed {val!r}"
        return None

    checks.append(_check("window-stats", window_stats))
    return checks


def cmd_verify(args) -> int:
    path = Path(args.report)
    try:
        report = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"verify: cannot read report: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    if not isinstance(report, dict):
        print("verify: report must hold a JSON object", file=sys.stderr)
        return EXIT_SCHEMA
    checks = run_report_checks(report, precision_bits=args.precision)
    failed = [c["name"] for c in checks if c["status"] == "fail"]
    summary = {
        "schema": "verification/1",
        "report": path.name,
        "checks": checks,
        "failed": failed,
    }
    out = Path(args.out) if args.out else path.with_name(path.stem
                                                         + ".verify.json")
    _write_json(out, summary)
    print(out)
    counts = {s: sum(1 for c in checks if c["status"] == s)
              for s in ("pass", "fail", "skipped")}
    print(f"verify: {counts['pass']} passed, {counts['fail']} failed, "
          f"{counts['skipped']} skipped")
    if failed:
        for c in checks:
            if c["status"] == "fail":
                print(f"verify: failed {c['name']}: {c['detail']}",
                      file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


# ---------------------------------------------------------------------------
# premeasure
# ---------------------------------------------------------------------------


def _value_json(pv) -> dict:
    out = {
        "value_log": pv.value_log.log_float(),
        "error_bound": float(pv.value_log.error_bound),
        "level": pv.level,
        "status": "ok",
    }
    v = pv.value
    if isinstance(v, Fraction):
        out["exact"] = {"numerator": str(v.numerator),
                        "denominator": str(v.denominator)}
    else:
        out["exact"] = None
    return out


def cmd_premeasure(args) -> int:
    product, _ = _load_product(args.product)
    gauge = _gauge_arg(args.phi, "--phi")
    e, D = args.window
    window = TruncationWindow(e, D)
    h = hausdorff_premeasure(product, gauge, window, args.precision)
    p = packing_premeasure(product, gauge, window, args.precision)
    report = {
        "schema": "premeasure/1",
        "product": product.to_spec(),
        "gauge": gauge.to_spec(),
        "window": [e, D],
        "hausdorff": _value_json(h),
        "packing": _value_json(p),
    }
    out = Path(args.out)
    _write_json(out, report)
    if args.csv:
        for kind, suffix in (("cover", "cover"), ("pack", "pack")):
            rows = premeasure_rows(product, gauge, window, kind,
                                   args.precision)
            Path(f"{args.csv}.{suffix}.csv").write_text(premeasure_csv(rows))
    print(out)
    print(f"premeasure: window=[{e},{D}] hausdorff_log={h.value_log.log_float()!r} "
          f"packing_log={p.value_log.log_float()!r}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# scales
# ---------------------------------------------------------------------------


def cmd_scales(args) -> int:
    product, meta = _load_product(args.product)
    family = ScalingFamily.from_spec(
        _parse_json_arg(args.family, "--family")) if args.family \
        else ScalingFamily(kind="power")
    search = ScaleSearch(*args.search) if args.search else ScaleSearch()
    if args.window:
        window = (args.window[0], args.window[1])
    elif meta.get("k0") is not None:
        window = construction_window(meta["k0"], meta["T"], product.depth)
    else:
        window = (1, product.depth)
    h = estimate_hausdorff_scale(product, family, search, window,
                                 precision_bits=args.precision)
    p = estimate_packing_scale(product, family, search, window,
                               precision_bits=args.precision)
    local = estimate_local_scales(product, family, search, window,
                                  precision_bits=args.precision)
    order = order_check_details(h, p, local)
    report = {
        "schema": "scales/1",
        "family": family.to_spec(),
        "window": [window[0], window[1]],
        "search": [search.alpha_lo, search.alpha_hi, search.tol],
        "scl_H": {"value": h.value, "bracket": list(h.bracket),
                  "flags": h.flags},
        "scl_P": {"value": p.value, "bracket": list(p.bracket),
                  "flags": p.flags},
        "local": {"lower": local.lower, "upper": local.upper,
                  "lower_bracket": list(local.lower_bracket),
                  "upper_bracket": list(local.upper_bracket),
                  "flags": local.flags},
        "order_checks": order,
    }
    out = Path(args.out)
    _write_json(out, report)
    print(out)
    ok = all(c["holds"] for c in order)
    print(f"scales: scl_H=[{h.bracket[0]:.4f},{h.bracket[1]:.4f}] "
          f"scl_P=[{p.bracket[0]:.4f},{p.bracket[1]:.4f}] "
          f"local=({local.lower:.4f},{local.upper:.4f}) "
          f"order={'ok' if ok else 'violated'}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# embed
# ---------------------------------------------------------------------------


def cmd_embed(args) -> int:
    product, _ = _load_product(args.product)
    pairs = sample_distortion_pairs(product, args.pairs, args.seed,
                                    max_split=args.max_split,
                                    length=args.length)
    stats = verify_distortion_bounds(pairs, m=args.m)
    report = {"schema": "embed/1", "seed": args.seed, **stats}
    out = Path(args.out)
    _write_json(out, report)
    print(out)
    print(f"embed: pairs={stats['pairs']} violations={stats['violations']} "
          f"ratio=[{stats['ratio_min']:.6f},{stats['ratio_max']:.6f}]")
    return EXIT_OK


# ---------------------------------------------------------------------------
# wiring
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cantorscales",
        description="Construct compact ultrametric products with prescribed "
                    "coarse measure behavior and check the results.")
    sub = ap.add_subparsers(dest="command", required=True)

    pc = sub.add_parser("construct",
                        help="build a product for a compatible gauge pair")
    pc.add_argument("--phi", required=True, metavar="JSON",
                    help='lower gauge, e.g. \'{"kind":"power","alpha":1}\'')
    pc.add_argument("--psi", required=True, metavar="JSON", help="upper gauge")
    pc.add_argument("--depth", type=int, required=True)
    pc.add_argument("--precision", type=int, default=DEFAULT_PRECISION)
    pc.add_argument("--mode", choices=("exact", "approx"), default="exact")
    pc.add_argument("--out", default="construction.json")
    pc.set_defaults(func=cmd_construct)

    pv = sub.add_parser("verify",
                        help="re-check all invariants of a stored report")
    pv.add_argument("report")
    pv.add_argument("--precision", type=int, default=DEFAULT_PRECISION)
    pv.add_argument("--out", default=None)
    pv.set_defaults(func=cmd_verify)

    pm = sub.add_parser("premeasure",
                        help="truncated cover and packing values of a gauge")
    pm.add_argument("product", help="product JSON or construction report")
    pm.add_argument("--phi", required=True, metavar="JSON")
    pm.add_argument("--window", type=int, nargs=2, required=True,
                    metavar=("E", "D"))
    pm.add_argument("--precision", type=int, default=DEFAULT_PRECISION)
    pm.add_argument("--out", default="premeasure.json")
    pm.add_argument("--csv", default=None, metavar="PREFIX",
                    help="also write per-level recursion traces")
    pm.set_defaults(func=cmd_premeasure)

    ps = sub.add_parser("scales",
                        help="bracket the measure transitions of a family")
    ps.add_argument("product", help="product JSON or construction report")
    ps.add_argument("--family", default=None, metavar="JSON",
                    help='e.g. \'{"kind":"power"}\' (default)')
    ps.add_argument("--search", type=float, nargs=3, default=None,
                    metavar=("LO", "HI", "TOL"))
    ps.add_argument("--window", type=int, nargs=2, default=None,
                    metavar=("LO", "HI"))
    ps.add_argument("--precision", type=int, default=DEFAULT_PRECISION)
    ps.add_argument("--out", default="scales.json")
    ps.set_defaults(func=cmd_scales)

    pe = sub.add_parser("embed",
                        help="check embedding distortion on sampled pairs")
    pe.add_argument("product", help="product JSON or construction report")
    pe.add_argument("--pairs", type=int, default=1000)
    pe.add_argument("--seed", type=int, default=0)
    pe.add_argument("--max-split", type=int, default=None)
    pe.add_argument("--length", type=int, default=None)
    pe.add_argument("--m", type=int, default=None,
                    help="embedding horizon (defaults to the pair length)")
    pe.add_argument("--out", default="embed.json")
    pe.set_defaults(func=cmd_embed)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DominationViolatedError as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return EXIT_DOMINATION
    except (InvalidSpecError, InvalidParameterError, OutOfDepthError) as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except CantorScalesError as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
