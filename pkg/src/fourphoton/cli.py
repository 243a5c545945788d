"""Command-line interface: scans, CHSH evaluation, truncation and bound studies.

Every run writes its outputs into ``--out-dir`` together with a JSON manifest
recording the resolved parameters, seed, and file paths, so a result can be
regenerated byte-for-byte from the manifest alone.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, bell, dsl, layout, vacuum_bound
from . import fock


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        raise UsageError(message)


def bundled_path(name: str) -> Path:
    return Path(resources.files("fourphoton.data") / name)


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")


def _manifest(out_dir: Path, name: str, args: argparse.Namespace,
              inputs: list[str], outputs: list[Path]) -> Path:
    params = {
        k: v for k, v in sorted(vars(args).items())
        if k not in {"func"} and not k.startswith("_")
    }
    payload = {
        "tool": "fourphoton",
        "version": __version__,
        "subcommand": name,
        "parameters": {k: (str(v) if isinstance(v, Path) else v) for k, v in params.items()},
        "seed": getattr(args, "seed", None),
        "inputs": inputs,
        "outputs": [str(p) for p in outputs],
    }
    path = out_dir / f"{name}.manifest.json"
    _write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def _angle(text: str) -> float:
    try:
        return dsl.parse_angle(text)
    except ValueError as exc:
        raise UsageError(f"bad angle {text!r}") from exc


def _parse_overrides(pairs: list[str]) -> dict[str, float]:
    out = {}
    for item in pairs:
        if "=" not in item:
            raise UsageError(f"--set expects SYMBOL=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        out[key.strip()] = _angle(value)
    return out


def _load_experiment(path: Path, overrides: dict[str, float], cap: int) -> dsl.CompiledExperiment:
    doc, diagnostics = dsl.parse(path.read_text(encoding="utf-8"))
    for diag in diagnostics:
        print(f"{path}:{diag}", file=sys.stderr)
    if doc is None:
        raise UsageError(f"cannot parse experiment file {path}")
    compiled = dsl.compile_doc(doc, max_total_photons=cap)
    if overrides:
        fixed = dict(compiled.fixed)
        sweeps = dict(compiled.sweeps)
        for symbol, value in overrides.items():
            fixed[symbol] = value
            sweeps.pop(symbol, None)
        compiled = dsl.CompiledExperiment(compiled.layout, fixed, sweeps)
    return compiled


def cmd_scan(args: argparse.Namespace) -> int:
    out_dir = Path(args.out_dir)
    compiled = _load_experiment(Path(args.experiment), _parse_overrides(args.set), args.cap)
    grid = compiled.settings_grid()
    policy = fock.TruncationPolicy(max_total_photons=args.cap, series_order=2)
    with_noise = args.noise is not None
    noise = None
    if with_noise:
        rate_scale = 2 * args.rate / ((1 + args.noise) * args.duration)
        noise = bell.NoiseModel(args.noise, rate_scale)
    rows = []
    for index, settings in enumerate(grid):
        rate = layout.fourfold_rate(compiled.layout, settings, n0=args.n0, policy=policy)
        row = {
            "alpha": settings.get("alpha", 0.0),
            "beta": settings.get("beta", 0.0),
            "rate_ideal": rate,
        }
        if with_noise:
            alpha, beta = row["alpha"], row["beta"]
            mean = bell.fringe_mean(noise, alpha, beta, args.duration)
            rng = np.random.Generator(np.random.Philox(key=[args.seed, index]))
            row["counts_mc"] = int(rng.poisson(mean))
        rows.append(row)
    header = ["alpha", "beta", "rate_ideal"] + (["counts_mc"] if with_noise else [])
    lines = [",".join(header)]
    for row in rows:
        cells = [f"{row['alpha']:.9f}", f"{row['beta']:.9f}", f"{row['rate_ideal']:.12g}"]
        if with_noise:
            cells.append(str(row["counts_mc"]))
        lines.append(",".join(cells))
    csv_path = out_dir / "scan.csv"
    _write(csv_path, "\n".join(lines) + "\n")
    outputs = [csv_path]
    if args.gnuplot:
        gp_path = out_dir / "scan.gp"
        _write(gp_path, _scan_gnuplot(with_noise))
        outputs.append(gp_path)
    if args.plot:
        from . import figures

        png_path = out_dir / "scan.png"
        figures.scan_figure(png_path, rows)
        outputs.append(png_path)
    outputs.append(_manifest(out_dir, "scan", args, [str(args.experiment)], outputs))
    print(f"wrote {csv_path} ({len(rows)} settings)")
    return 0


def _scan_gnuplot(with_noise: bool) -> str:
    lines = [
        "set datafile separator ','",
        "set xlabel 'beta (rad)'",
        "set ylabel 'four-fold rate'",
        "plot 'scan.csv' skip 1 using 2:3 with lines title 'ideal rate'" +
        (", \\\n     'scan.csv' skip 1 using 2:4 axes x1y2 with points title 'counts'"
         if with_noise else ""),
    ]
    return "\n".join(lines) + "\n"


def cmd_chsh(args: argparse.Namespace) -> int:
    out_dir = Path(args.out_dir)
    settings = (
        _angle(args.alpha1), _angle(args.alpha2),
        _angle(args.beta1), _angle(args.beta2),
    )
    a1, a2, b1, b2 = settings
    if args.ideal:
        terms = {}
        for alpha in (a1, a2):
            for beta in (b1, b2):
                terms[(alpha, beta)] = bell.CorrelationResult(math.cos(alpha + beta), 0.0)
        es = [terms[(a1, b1)].E, terms[(a1, b2)].E, terms[(a2, b1)].E, terms[(a2, b2)].E]
        s_val = abs(-es[0] + es[1] + es[2] + es[3])
        best = max(
            abs(-es[0] + es[1] + es[2] + es[3]),
            abs(es[0] - es[1] + es[2] + es[3]),
            abs(es[0] + es[1] - es[2] + es[3]),
            abs(es[0] + es[1] + es[2] - es[3]),
        )
        result = bell.CHSHResult(
            s_val, 0.0, terms, (a1, a2, b1, b2),
            math.inf if s_val > 2 else -math.inf, best,
        )
        inputs = ["<ideal>"]
    else:
        counts_path = Path(args.counts) if args.counts else bundled_path("tableA1.csv")
        table = bell.CountTable.from_csv(counts_path.read_text(encoding="utf-8"))
        result = bell.chsh(table, (a1, a2), (b1, b2))
        inputs = [str(counts_path)]
    report = bell.chsh_report(result)
    print(report, end="")
    csv_path = out_dir / "chsh.csv"
    _write(csv_path, bell.chsh_csv(result))
    outputs = [csv_path]
    outputs.append(_manifest(out_dir, "chsh", args, inputs, outputs))
    return 0


def _parse_orders(spec: str) -> list[int]:
    if ":" in spec:
        lo, hi = spec.split(":", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(tok) for tok in spec.replace(",", " ").split()]


def cmd_truncation(args: argparse.Namespace) -> int:
    out_dir = Path(args.out_dir)
    orders = _parse_orders(args.orders)
    betas = np.linspace(0.0, 2 * math.pi, args.beta_steps, endpoint=False)
    rows = layout.truncation_study(
        layout.canonical_layout(args.gain), orders, betas, policy_cap=args.cap
    )
    csv_path = out_dir / "truncation.csv"
    _write(csv_path, layout.truncation_study_csv(rows))
    outputs = [csv_path]
    if args.plot:
        from . import figures

        png_path = out_dir / "truncation.png"
        figures.truncation_figure(png_path, rows)
        outputs.append(png_path)
    outputs.append(_manifest(out_dir, "truncation", args, [], outputs))
    print(f"wrote {csv_path} ({len(rows)} orders)")
    return 0


def cmd_vacuum_bound(args: argparse.Namespace) -> int:
    out_dir = Path(args.out_dir)
    if args.gain < 0:
        raise UsageError("gain must be non-negative")
    rows = vacuum_bound.bound_report(args.gain, args.sigma_gain, args.alpha, args.beta)
    csv_path = out_dir / "vacuum_bound.csv"
    _write(csv_path, vacuum_bound.bound_report_csv(rows))
    print(f"vacuum/four-photon sector at g = {args.gain:g} +- {args.sigma_gain:g}")
    for row in rows:
        print(f"  {row.model:28s} S = {row.S:.4f} +- {row.sigma_S:.4f}")
    print(f"  reference value              S = {args.reference:.4f} +- {args.reference_sigma:.4f}")
    closest = min(rows, key=lambda r: abs(r.S - args.reference))
    print(f"  closest shipped model: {closest.model} "
          f"(|dS| = {abs(closest.S - args.reference):.4f})")
    outputs = [csv_path]
    outputs.append(_manifest(out_dir, "vacuum_bound", args, [], outputs))
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    out_dir = Path(args.out_dir)
    path = Path(args.sweep)
    table = bell.CountTable.from_csv(path.read_text(encoding="utf-8"))
    by_alpha: dict[float, list[tuple[float, float]]] = {}
    for (alpha, beta), counts in table.entries.items():
        by_alpha.setdefault(alpha, []).append((beta, float(counts)))
    per_alpha = []
    for alpha in sorted(by_alpha):
        sweep = sorted(by_alpha[alpha])
        res = bell.visibility(sweep, method=args.estimator)
        per_alpha.append((alpha, res.V, res.sigma_V))
    weights = [1.0 / max(s, 1e-12) ** 2 for _, _, s in per_alpha]
    mean_v = sum(w * v for (_, v, _), w in zip(per_alpha, weights)) / sum(weights)
    sigma_mean = math.sqrt(1.0 / sum(weights))
    s_val, sigma_s = bell.s_from_visibility(min(mean_v, 1.0), sigma_mean)
    lines = ["alpha,V,sigma_V"]
    for alpha, v, s in per_alpha:
        lines.append(f"{alpha:.9f},{v:.9g},{s:.9g}")
    lines.append("mean_V,sigma_mean_V,S_from_V,sigma_S")
    lines.append(f"{mean_v:.9g},{sigma_mean:.9g},{s_val:.9g},{sigma_s:.9g}")
    csv_path = out_dir / "analyze.csv"
    _write(csv_path, "\n".join(lines) + "\n")
    print(f"visibility estimator: {args.estimator}")
    for alpha, v, s in per_alpha:
        print(f"  alpha = {alpha:8.4f}: V = {v:.4f} +- {s:.4f}")
    print(f"  mean V = {mean_v:.4f} +- {sigma_mean:.4f}")
    print(f"  S from V = {s_val:.4f} +- {sigma_s:.4f}")
    outputs = [csv_path]
    if args.plot:
        from . import figures

        png_path = out_dir / "analyze.png"
        figures.analyze_figure(png_path, per_alpha)
        outputs.append(png_path)
    outputs.append(_manifest(out_dir, "analyze", args, [str(path)], outputs))
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="fourphoton", description=__doc__)
    parser.add_argument("--version", action="version", version=f"fourphoton {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="RNG seed for stochastic steps")
    common.add_argument("--out-dir", default=".", help="directory for outputs and manifest")
    common.add_argument("--format", choices=["csv"], default="csv",
                        help="output interchange format")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_scan = sub.add_parser("scan", parents=[common],
                            help="sweep the phase settings of an experiment file")
    p_scan.add_argument("experiment", nargs="?", default=str(bundled_path("fourphoton.fi")),
                        help="experiment description (.fi); defaults to the bundled layout")
    p_scan.add_argument("--set", action="append", default=[], metavar="SYMBOL=VALUE",
                        help="override a symbol binding (repeatable)")
    p_scan.add_argument("--cap", type=int, default=8, help="total-photon cap")
    p_scan.add_argument("--n0", type=float, default=1.0, help="trials per unit time")
    p_scan.add_argument("--noise", type=float, default=None,
                        help="fringe visibility for the Monte-Carlo counts column")
    p_scan.add_argument("--rate", type=float, default=350.0,
                        help="expected counts at the fringe maximum per window")
    p_scan.add_argument("--duration", type=float, default=60.0,
                        help="integration window in seconds")
    p_scan.add_argument("--gnuplot", action="store_true",
                        help="emit a companion gnuplot script")
    p_scan.add_argument("--plot", action="store_true", help="render a PNG figure")
    p_scan.set_defaults(func=cmd_scan)

    p_chsh = sub.add_parser("chsh", parents=[common],
                            help="CHSH statistic from a count table")
    p_chsh.add_argument("counts", nargs="?", default=None,
                        help="count CSV; defaults to the bundled table")
    p_chsh.add_argument("--ideal", action="store_true",
                        help="use noiseless cosine correlations instead of counts")
    p_chsh.add_argument("--alpha1", default="0")
    p_chsh.add_argument("--alpha2", default="pi/2")
    p_chsh.add_argument("--beta1", default="pi/4")
    p_chsh.add_argument("--beta2", default="3pi/4")
    p_chsh.set_defaults(func=cmd_chsh)

    p_trunc = sub.add_parser("truncation", parents=[common],
                             help="fringe visibility versus expansion order")
    p_trunc.add_argument("--orders", default="2:10", help="range LO:HI or list")
    p_trunc.add_argument("--gain", type=float, default=0.096)
    p_trunc.add_argument("--cap", type=int, default=8, help="total-photon cap")
    p_trunc.add_argument("--beta-steps", type=int, default=24)
    p_trunc.add_argument("--plot", action="store_true", help="render a PNG figure")
    p_trunc.set_defaults(func=cmd_truncation)

    p_vac = sub.add_parser("vacuum-bound", parents=[common],
                           help="CHSH reach of the vacuum/four-photon sector")
    p_vac.add_argument("--gain", type=float, default=0.096)
    p_vac.add_argument("--sigma-gain", type=float, default=0.008)
    p_vac.add_argument("--alpha", type=float, default=0.0)
    p_vac.add_argument("--beta", type=float, default=0.0)
    p_vac.add_argument("--reference", type=float, default=1.467,
                       help="reported value to compare the models against")
    p_vac.add_argument("--reference-sigma", type=float, default=0.009)
    p_vac.set_defaults(func=cmd_vacuum_bound)

    p_an = sub.add_parser("analyze", parents=[common],
                          help="per-setting visibilities of a sweep CSV")
    p_an.add_argument("sweep", help="count CSV in alpha,beta,counts,duration_s format")
    p_an.add_argument("--estimator", choices=["fit", "extrema"], default="fit")
    p_an.add_argument("--plot", action="store_true", help="render a PNG figure")
    p_an.set_defaults(func=cmd_analyze)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (dsl.DslError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except bell.FitError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
