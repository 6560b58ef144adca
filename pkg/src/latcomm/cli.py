"""Command-line front end.

One binary with subcommands (reduce, babai, cvp, perror, levelcurves,
simulate, rates) so the whole experiment surface is discoverable from
--help.  All commands are deterministic for a fixed command line and input
files: the seed defaults to 0, JSON is emitted with sorted keys, CSV floats
with 12 significant digits.  Output goes to stdout or, with --out, to a
file written atomically (temp file + rename), so failures leave nothing
behind.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from fractions import Fraction

import numpy as np

from .babai import nearest_plane, np_matches_cvp
from .error_analysis import (
    PE_CSV_HEADER,
    analytic_pe,
    exact_pe_area,
    level_curve_points,
    monte_carlo_pe,
    pe_csv_line,
)
from .lattice import (
    MAX_CVP_DIM,
    GeneratorMatrix,
    ReducedBasis2D,
    canonicalize_2d,
    cvp_bruteforce,
    gauss_reduce_2d,
)
from .protocol import (
    ProtocolUnsupportedError,
    SourceModel,
    _s_bits,
    build_ratio_table,
    centralized_rate_bound,
    interactive_coefficients_batch,
    interactive_rate,
    empirical_entropy,
    run_centralized,
    run_interactive,
    varint_bits,
)

_DEFAULT_K = "0,0.01,0.02,0.04,0.06,1/12"


def _json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _emit(text: str, out_path):
    if out_path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(out_path))
    fd, tmp = tempfile.mkstemp(prefix=".latcomm-", dir=directory)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, out_path)
    except BaseException:
        os.unlink(tmp)
        raise


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


def _load_matrix(path) -> GeneratorMatrix:
    return GeneratorMatrix.from_json(_load_json(path))


def _parse_x(text: str, n: int) -> np.ndarray:
    parts = [p for p in text.split(",") if p.strip() != ""]
    if len(parts) != n:
        raise ValueError(f"--x needs {n} comma-separated numbers")
    return np.array([float(p) for p in parts])


def _parse_k_list(text: str):
    out = []
    for part in text.split(","):
        part = part.strip()
        if part == "":
            continue
        out.append(float(Fraction(part)))
    if not out:
        raise ValueError("--k must list at least one level")
    return out


def _cmd_reduce(args) -> str:
    V = _load_matrix(args.matrix)
    W, U = gauss_reduce_2d(V)
    rb, scale, _ = canonicalize_2d(V)
    return _json_text({
        "reduced": W.to_json(),
        "transform": [[int(v) for v in row] for row in U],
        "canonical": {"a": rb.a, "b": rb.b},
        "scale": scale,
    })


def _rounding_report(V, x, coeffs, point):
    match = None
    if V.n <= MAX_CVP_DIM:
        match = np_matches_cvp(V, x)
    return _json_text({
        "coeffs": [int(c) for c in coeffs],
        "point": [float(p) for p in point],
        "match": match,
    })


def _cmd_babai(args) -> str:
    V = _load_matrix(args.matrix)
    x = _parse_x(args.x, V.n)
    res = nearest_plane(V, x)
    return _rounding_report(V, x, res.coeffs, res.point)


def _cmd_cvp(args) -> str:
    V = _load_matrix(args.matrix)
    x = _parse_x(args.x, V.n)
    res = cvp_bruteforce(V, x)
    return _rounding_report(V, x, res.coeffs, res.point)


def _cmd_perror(args) -> str:
    V = _load_matrix(args.matrix)
    report = {"method": args.method}
    a = b = None
    if V.n == 2:
        rb, _, _ = canonicalize_2d(V)
        a, b = rb.a, rb.b
        report["a"] = a
        report["b"] = b
    if args.method == "analytic":
        if V.n != 2:
            raise ValueError("analytic P_e needs a 2D basis")
        report["pe"] = analytic_pe(a, b)
    elif args.method == "area":
        report["pe"] = exact_pe_area(V)
    else:
        est = monte_carlo_pe(V, args.samples, seed=args.seed,
                             workers=args.workers)
        report["pe"] = est.estimate
        report["std_error"] = est.std_error
        report["n_samples"] = est.n_samples
        report["seed"] = est.seed
    if args.format == "csv":
        if V.n != 2:
            raise ValueError("CSV P_e output needs a 2D basis")
        cols = {"pe_analytic": None, "pe_exact": None,
                "pe_mc": None, "mc_stderr": None}
        if args.method == "analytic":
            cols["pe_analytic"] = report["pe"]
        elif args.method == "area":
            cols["pe_exact"] = report["pe"]
        else:
            cols["pe_mc"] = report["pe"]
            cols["mc_stderr"] = report["std_error"]
        line = pe_csv_line(a, b, cols["pe_analytic"], cols["pe_exact"],
                           cols["pe_mc"], cols["mc_stderr"])
        return PE_CSV_HEADER + "\n" + line + "\n"
    return _json_text(report)


def _levelcurve_rows(args):
    rows = []
    for k in _parse_k_list(args.k):
        if k < 0:
            raise ValueError(f"k out of range: {k}")
        if k == 0:
            # the zero level set is the orthogonal boundary a = 0; choose a
            # bounded slice of the unbounded ray so the curve is plottable
            pairs = [(0.0, float(b)) for b in np.linspace(1.0, 3.0, args.grid)]
        else:
            pairs = level_curve_points(k, args.grid)
        for a, b in pairs:
            V = ReducedBasis2D(a, b).matrix()
            pe_mc = mc_stderr = None
            if args.samples > 0:
                est = monte_carlo_pe(V, args.samples, seed=args.seed)
                pe_mc, mc_stderr = est.estimate, est.std_error
            rows.append({"a": a, "b": b,
                         "pe_analytic": analytic_pe(a, b),
                         "pe_exact": exact_pe_area(V),
                         "pe_mc": pe_mc, "mc_stderr": mc_stderr})
    return rows


def _cmd_levelcurves(args) -> str:
    rows = _levelcurve_rows(args)
    if args.format == "json":
        return _json_text({"points": rows})
    lines = [PE_CSV_HEADER]
    for r in rows:
        lines.append(pe_csv_line(r["a"], r["b"], r["pe_analytic"],
                                 r["pe_exact"], r["pe_mc"], r["mc_stderr"]))
    return "\n".join(lines) + "\n"


def _load_scenario(path):
    obj = _load_json(path)
    if not isinstance(obj, dict) or "matrix" not in obj:
        raise ValueError('scenario needs a "matrix"')
    V = GeneratorMatrix.from_json(obj["matrix"])
    alpha = float(obj.get("alpha", 1.0))
    sources = None
    if "sources" in obj:
        sources = [SourceModel.from_json(s) for s in obj["sources"]]
        if len(sources) != V.n:
            raise ValueError("scenario needs one source per coordinate")
    return obj, V, alpha, sources


def _cmd_simulate(args) -> str:
    obj, V, alpha, sources = _load_scenario(args.scenario)
    model = obj.get("model")
    if model not in ("centralized", "interactive"):
        raise ValueError('scenario "model" must be centralized or interactive')
    trials = int(obj.get("trials", 1))
    if trials < 1:
        raise ValueError("trials must be positive")
    seed = int(obj.get("seed", args.seed))
    fixed_x = obj.get("x")
    if fixed_x is not None:
        x0 = np.asarray([float(v) for v in fixed_x])
        if x0.shape != (V.n,):
            raise ValueError(f'scenario "x" needs {V.n} numbers')
        X = np.tile(x0, (trials, 1))
    else:
        if sources is None:
            raise ValueError('scenario needs "sources" or a fixed "x"')
        rng = np.random.Generator(np.random.Philox(key=seed))
        X = np.column_stack([s.sample(rng, trials) for s in sources])

    scaled = V.scaled(alpha)
    summary = {"model": model, "trials": trials, "seed": seed, "alpha": alpha}
    if model == "centralized":
        table = build_ratio_table(scaled)
        matches = 0
        total_bits = 0
        sample = None
        for t in range(trials):
            coeffs, transcript = run_centralized(scaled, X[t])
            if sample is None:
                sample = transcript
            total_bits += transcript.total_bits
            if np.array_equal(coeffs, nearest_plane(scaled, X[t]).coeffs):
                matches += 1
        summary["babai_match_count"] = matches
        summary["mean_total_bits"] = total_bits / trials
        summary["side_info_bits_per_trial"] = sum(_s_bits(q) for q in table.q)
        summary["side_info_bound_bits"] = sum(
            math.log2(q) for q in table.q)
        summary["analytic_rate_bound"] = (
            centralized_rate_bound(sources, V, alpha)
            if sources is not None else None)
    else:
        B = interactive_coefficients_batch(V, X, alpha)
        matches = 0
        total_bits = 0
        for t in range(trials):
            if np.array_equal(B[t], nearest_plane(scaled, X[t]).coeffs):
                matches += 1
            total_bits += (V.n - 1) * sum(varint_bits(int(u)) for u in B[t])
        _, sample = run_interactive(V, X[0], alpha)
        entropies = [empirical_entropy(B[:, i].tolist()) for i in range(V.n)]
        summary["babai_match_count"] = matches
        summary["mean_total_bits"] = total_bits / trials
        summary["empirical_entropy_bits"] = entropies
        summary["empirical_rate_bits"] = (V.n - 1) * sum(entropies)
        summary["analytic_rate_bound"] = (
            interactive_rate(sources, V, alpha)
            if sources is not None else None)
    summary["sample_transcript"] = sample.to_json()
    return _json_text(summary)


def _cmd_rates(args) -> str:
    _, V, alpha, sources = _load_scenario(args.scenario)
    if sources is None:
        raise ValueError('rates needs scenario "sources"')
    out = {}
    try:
        table = build_ratio_table(V)
        out["centralized_rate_bound"] = centralized_rate_bound(
            sources, V, alpha)
        out["side_info_bound_bits"] = sum(math.log2(q) for q in table.q)
        out["side_info_bits_ceil"] = sum(_s_bits(q) for q in table.q)
    except ProtocolUnsupportedError:
        out["centralized_rate_bound"] = None
        out["side_info_bound_bits"] = None
        out["side_info_bits_ceil"] = None
    try:
        out["interactive_rate"] = interactive_rate(sources, V, alpha)
    except ProtocolUnsupportedError:
        out["interactive_rate"] = None
    return _json_text(out)


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0,
                        help="RNG seed (default 0)")
    common.add_argument("--out", default=None,
                        help="output file (atomic write); default stdout")
    common.add_argument("--format", choices=("json", "csv"), default=None,
                        help="output format where applicable")

    parser = argparse.ArgumentParser(
        prog="latcomm",
        description="Lattice rounding, its 2D error probability, and "
                    "distributed protocols for computing it.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reduce", parents=[common],
                       help="Lagrange-Gauss reduce a 2D basis")
    p.add_argument("--matrix", required=True, help="matrix JSON file")
    p.set_defaults(func=_cmd_reduce, default_format="json")

    p = sub.add_parser("babai", parents=[common],
                       help="nearest-plane rounding of a target")
    p.add_argument("--matrix", required=True)
    p.add_argument("--x", required=True, help="comma-separated target")
    p.set_defaults(func=_cmd_babai, default_format="json")

    p = sub.add_parser("cvp", parents=[common],
                       help="exact closest lattice point (n <= 6)")
    p.add_argument("--matrix", required=True)
    p.add_argument("--x", required=True, help="comma-separated target")
    p.set_defaults(func=_cmd_cvp, default_format="json")

    p = sub.add_parser("perror", parents=[common],
                       help="rounding-error probability of a basis")
    p.add_argument("--matrix", required=True)
    p.add_argument("--method", choices=("analytic", "area", "mc"),
                   default="analytic")
    p.add_argument("--samples", type=int, default=100000,
                   help="Monte Carlo sample count (method mc)")
    p.add_argument("--workers", type=int, default=1,
                   help="worker threads for method mc")
    p.set_defaults(func=_cmd_perror, default_format="json")

    p = sub.add_parser("levelcurves", parents=[common],
                       help="level curves of the 2D error probability")
    p.add_argument("--k", default=_DEFAULT_K,
                   help=f"comma-separated levels (default {_DEFAULT_K})")
    p.add_argument("--grid", type=int, default=64,
                   help="points per curve (default 64)")
    p.add_argument("--samples", type=int, default=0,
                   help="optional Monte Carlo samples per point")
    p.set_defaults(func=_cmd_levelcurves, default_format="csv")

    p = sub.add_parser("simulate", parents=[common],
                       help="run a protocol scenario file")
    p.add_argument("--scenario", required=True, help="scenario JSON file")
    p.set_defaults(func=_cmd_simulate, default_format="json")

    p = sub.add_parser("rates", parents=[common],
                       help="analytic rate formulas for a scenario")
    p.add_argument("--scenario", required=True)
    p.set_defaults(func=_cmd_rates, default_format="json")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = args.default_format
    elif args.format != args.default_format and args.command not in (
            "perror", "levelcurves"):
        print(f"error: {args.command} supports only "
              f"--format {args.default_format}", file=sys.stderr)
        return 2
    try:
        text = args.func(args)
        _emit(text, args.out)
    except Exception as e:  # one-line diagnostic, nonzero exit
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
