"""Command-line entry point: every experiment as a reproducible subcommand.

Each run writes its tabular results next to a ``<prefix>.manifest.json``
recording the subcommand, the full flag set, the seed, the package version,
the output paths, and the wall-clock time, so no output exists without
provenance.  Exit codes: 0 success, 1 validation failure (bad flags or
malformed input files), 2 internal tolerance breach -- the consistency alarm.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .amplitudes import (
    BruteForcePaths,
    PathExplosionError,
    RecursiveDecompose,
    SigmaInsert,
    TransferMatrix,
    consistency_check,
)
from .born import (
    ProjectorWindow,
    convergence_scan,
    overlap_for_window,
    small_N_direct,
)
from .evolution import evolve
from .lattice import (
    Event,
    KernelFormatError,
    LatticeConfig,
    load_kernel,
    load_wavefunction,
    make_tight_binding_kernel,
)
from .regrade import (
    CATALOG_NAMES,
    RegradeError,
    additivity_residual,
    associativity_residual,
    catalog_op,
    product_rule_residual,
    recover_regrade,
)
from .setups import SetupError, load_setup, random_setup, setup_to_dict

CONSISTENCY_TOL = 1e-10

SUM_CHECK_TOL = 1e-12

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_TOLERANCE = 2


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage errors with exit code 1, keeping 2 free
    for tolerance breaches."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _fmt(x) -> str:
    return f"{x:.17g}" if isinstance(x, float) else str(x)


class _Run:
    """Collects output files for one invocation and writes the manifest."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.prefix = Path(args.out)
        self.outputs: list[str] = []
        self.started = time.monotonic()

    def _register(self, suffix: str) -> Path:
        p = Path(str(self.prefix) + suffix)
        p.parent.mkdir(parents=True, exist_ok=True)
        self.outputs.append(str(p))
        return p

    def write_table(self, stem: str, header: list[str], rows: list[list]) -> Path:
        """Tabular output as CSV, or JSON rows when --format json."""
        if getattr(self.args, "format", "csv") == "json":
            p = self._register(f"{stem}.json")
            payload = {"columns": header, "rows": [[_fmt(x) for x in r] for r in rows]}
            p.write_text(json.dumps(payload, indent=2) + "\n")
            return p
        p = self._register(f"{stem}.csv")
        with p.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(x) for x in row])
        return p

    def write_report(self, payload: dict) -> Path:
        p = self._register(".json")
        p.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return p

    def finish(self) -> None:
        flags = {
            k: v
            for k, v in sorted(vars(self.args).items())
            if k != "func" and isinstance(v, (str, int, float, bool, type(None)))
        }
        manifest = {
            "subcommand": self.args.subcommand,
            "flags": flags,
            "seed": getattr(self.args, "seed", None),
            "version": __version__,
            "outputs": self.outputs,
            "wall_clock_s": time.monotonic() - self.started,
        }
        path = Path(str(self.prefix) + ".manifest.json")
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise ValueError(f"expected a comma-separated integer list: {text!r}")


def _fuzz_kernel(config: LatticeConfig):
    # fixed non-uniform onsite profile: breaks translation symmetry so the
    # fuzz covers structurally distinct amplitudes while staying reproducible
    onsite = 0.5 * np.sin(
        2.0 * np.pi * np.arange(config.num_sites) / config.num_sites
    )
    return make_tight_binding_kernel(config, hop=1.0, onsite=onsite)


def _consistency_all_strategies(setup, kernel, max_paths: int):
    strategies = [
        TransferMatrix(),
        RecursiveDecompose(),
        SigmaInsert(),
        BruteForcePaths(max_paths=max_paths),
    ]
    try:
        return consistency_check(setup, kernel, strategies)
    except PathExplosionError:
        return consistency_check(setup, kernel, strategies[:-1])


def _cmd_amplitude(args: argparse.Namespace) -> int:
    run = _Run(args)
    setup = load_setup(args.setup)
    kernel = load_kernel(args.kernel)
    report = _consistency_all_strategies(setup, kernel, args.max_paths)
    value = report.value("transfer_matrix")
    payload = {
        "setup": setup_to_dict(setup),  # normalized: filters and holes sorted
        "amplitude": [value.real, value.imag],
        "strategies": {name: [v.real, v.imag] for name, v in report.values},
        "pair_deviations": {
            f"{a}|{b}": dev for a, b, dev in report.pair_deviations
        },
        "max_deviation": report.max_deviation,
        "tolerance": CONSISTENCY_TOL,
    }
    run.write_report(payload)
    run.finish()
    print(json.dumps(payload))
    if report.max_deviation > CONSISTENCY_TOL:
        print(
            f"consistency violation: max deviation {report.max_deviation:.3e}",
            file=sys.stderr,
        )
        return EXIT_TOLERANCE
    return EXIT_OK


def _cmd_fuzz(args: argparse.Namespace) -> int:
    run = _Run(args)
    config = LatticeConfig(num_sites=args.L, num_steps=args.T)
    kernel = _fuzz_kernel(config)
    max_filters = min(args.max_filters, args.T - 1)
    rows = []
    worst = 0.0
    for i in range(args.count):
        seed = args.seed + i
        setup = random_setup(config, seed, max_filters=max_filters)
        report = _consistency_all_strategies(setup, kernel, args.max_paths)
        worst = max(worst, report.max_deviation)
        for name_a, name_b, dev in report.pair_deviations:
            rows.append([seed, f"{name_a}|{name_b}", dev])
    run.write_table("", ["seed", "strategy_pair", "deviation"], rows)
    run.finish()
    print(f"fuzz: {args.count} setups, max deviation {worst:.3e}")
    if worst > CONSISTENCY_TOL:
        print(f"consistency violation: {worst:.3e}", file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


def _cmd_evolve(args: argparse.Namespace) -> int:
    run = _Run(args)
    kernel = load_kernel(args.kernel)
    psi = load_wavefunction(args.psi)
    rows = []
    state = psi
    for step in range(args.steps + 1):
        for site, z in enumerate(state.coeffs):
            rows.append(
                [step, site, float(z.real), float(z.imag), float(abs(z) ** 2)]
            )
        if step < args.steps:
            state = evolve(state, kernel, 1)
    run.write_table("", ["step", "site", "re", "im", "prob"], rows)
    run.finish()
    print(f"evolved {args.steps} steps on {kernel.num_sites} sites")
    return EXIT_OK


def _cmd_born(args: argparse.Namespace) -> int:
    run = _Run(args)
    n_list = _parse_int_list(args.N_list)
    rows = [
        [row.N, row.overlap_exact, row.overlap_gaussian, row.deviation]
        for row in convergence_scan(args.p, args.f, args.eps, n_list)
    ]
    run.write_table(
        "", ["N", "overlap_exact", "overlap_gauss", "deviation"], rows
    )
    run.finish()
    for row in rows:
        print(f"N={row[0]}: overlap={row[1]:.12f} deviation={row[3]:.3e}")
    return EXIT_OK


def _cmd_born_direct(args: argparse.Namespace) -> int:
    run = _Run(args)
    psi = load_wavefunction(args.psi)
    window = ProjectorWindow(args.n_min, args.n_max)
    direct = small_N_direct(psi, args.site, window, args.N)
    p = float(abs(psi.coeffs[args.site]) ** 2)
    exact = overlap_for_window(min(p, 1.0), args.N, window)
    gap = abs(direct - exact)
    payload = {
        "p": p,
        "N": args.N,
        "window": [window.n_min, window.n_max],
        "overlap_direct": direct,
        "overlap_exact": exact,
        "abs_difference": gap,
        "tolerance": 1e-12,
    }
    run.write_report(payload)
    run.finish()
    print(json.dumps(payload))
    if gap > 1e-12:
        print(f"binomial cross-check violation: {gap:.3e}", file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


def _cmd_regrade(args: argparse.Namespace) -> int:
    run = _Run(args)
    sampler = catalog_op(args.op, param=args.param, grid_n=args.grid_n)
    assoc = associativity_residual(sampler)
    payload = {
        "op": sampler.name,
        "assoc_residual": assoc,
        "associative": assoc <= 1e-8,
    }
    if args.check_product_rule:
        report = product_rule_residual(sampler)
        payload["product_rule"] = {
            "left_distributivity": report.left_distributivity,
            "right_distributivity": report.right_distributivity,
            "associativity": report.associativity,
            "c_fit": report.c_fit,
            "fit_residual": report.fit_residual,
            "passes": report.passes(),
        }
    if not payload["associative"]:
        run.write_report(payload)
        run.finish()
        print(json.dumps(payload))
        print(
            f"operation {sampler.name} is not associative "
            f"(residual {assoc:.3e}); no regrade exists",
            file=sys.stderr,
        )
        return EXIT_INVALID
    result = recover_regrade(sampler)
    table = run.write_table(
        "_xi",
        ["u", "xi"],
        [[float(u), float(x)] for u, x in zip(result.u_grid, result.xi_values)],
    )
    payload.update(
        {
            "additivity_residual": additivity_residual(result, sampler),
            "additivity_mean": result.additivity_mean,
            "c_constant": result.c_constant,
            "c_diagnostic": result.c_diagnostic,
            "xi_table": str(table),
        }
    )
    run.write_report(payload)
    run.finish()
    print(json.dumps({k: v for k, v in payload.items() if k != "xi_table"}))
    return EXIT_OK


def _cmd_double_slit(args: argparse.Namespace) -> int:
    run = _Run(args)
    holes = _parse_int_list(args.holes)
    if len(holes) != 2:
        raise SetupError("--holes needs exactly two comma-separated sites")
    config = LatticeConfig(num_sites=args.L, num_steps=args.steps, dt=args.dt)
    kernel = make_tight_binding_kernel(config, hop=args.hop)
    source = Event(args.source if args.source is not None else args.L // 2, 0)
    if not 0 <= source.site < args.L:
        raise SetupError(f"source site {source.site} outside [0, {args.L})")
    t_filter = (
        args.filter_time if args.filter_time is not None else args.steps // 2
    )
    if not 0 < t_filter < args.steps:
        raise SetupError("filter time must be strictly between 0 and steps")
    if any(not 0 <= h < args.L for h in holes):
        raise SetupError(f"holes must lie in [0, {args.L})")
    hole_a, hole_b = holes

    def detector_amplitudes(hole_set: tuple[int, ...]) -> np.ndarray:
        psi = np.zeros(args.L, dtype=complex)
        psi[source.site] = 1.0
        for t in range(1, args.steps + 1):
            psi = kernel.step @ psi
            if t == t_filter:
                keep = np.zeros(args.L)
                keep[list(hole_set)] = 1.0
                psi = psi * keep
        return psi

    amp_a = detector_amplitudes((hole_a,))
    amp_b = detector_amplitudes((hole_b,))
    amp_both = detector_amplitudes((hole_a, hole_b))
    rows = []
    worst = 0.0
    for site in range(args.L):
        gap = abs(amp_both[site] - amp_a[site] - amp_b[site])
        worst = max(worst, gap)
        rows.append(
            [
                site,
                amp_a[site].real,
                amp_a[site].imag,
                amp_b[site].real,
                amp_b[site].imag,
                amp_both[site].real,
                amp_both[site].imag,
                gap,
            ]
        )
    run.write_table(
        "",
        ["site", "re_a", "im_a", "re_b", "im_b", "re_both", "im_both", "sum_check"],
        rows,
    )
    run.finish()
    print(f"double slit: max |psi_both - psi_a - psi_b| = {worst:.3e}")
    if worst > SUM_CHECK_TOL:
        print(f"sum-rule violation: {worst:.3e}", file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="amplab",
        description="Lattice amplitude simulator and consistency checks",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p: argparse.ArgumentParser, default_out: str) -> None:
        p.add_argument("--out", default=default_out, help="output path prefix")
        p.add_argument("--seed", type=int, default=0, help="random seed")
        p.add_argument(
            "--format",
            choices=("csv", "json"),
            default="csv",
            help="tabular output format (reports and manifest are always JSON)",
        )

    p = sub.add_parser("amplitude", help="evaluate one setup by all strategies")
    p.add_argument("--setup", required=True, help="setup JSON file")
    p.add_argument("--kernel", required=True, help="kernel JSON file")
    p.add_argument("--max-paths", type=int, default=10_000_000)
    common(p, "amplitude_out")
    p.set_defaults(func=_cmd_amplitude)

    p = sub.add_parser("fuzz", help="randomized consistency sweep")
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--L", type=int, default=8)
    p.add_argument("--T", type=int, default=6)
    p.add_argument("--max-filters", type=int, default=3)
    p.add_argument("--max-paths", type=int, default=10_000_000)
    common(p, "fuzz_out")
    p.set_defaults(func=_cmd_fuzz)

    p = sub.add_parser("evolve", help="time-evolve a wave function")
    p.add_argument("--kernel", required=True, help="kernel JSON file")
    p.add_argument("--psi", required=True, help="wave function JSON ([[re,im],...])")
    p.add_argument("--steps", type=int, required=True)
    common(p, "evolve_out")
    p.set_defaults(func=_cmd_evolve)

    p = sub.add_parser("born", help="binomial/Gaussian concentration scan")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--f", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--N-list", required=True, help="comma-separated replica counts")
    common(p, "born_out")
    p.set_defaults(func=_cmd_born)

    p = sub.add_parser("born-direct", help="small-N tensor cross-check")
    p.add_argument("--psi", required=True, help="wave function JSON")
    p.add_argument("--site", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--n-min", type=int, required=True)
    p.add_argument("--n-max", type=int, required=True)
    common(p, "born_direct_out")
    p.set_defaults(func=_cmd_born_direct)

    p = sub.add_parser(
        "regrade", help="recover the additive regrade of an operation"
    )
    p.add_argument("--op", required=True, choices=CATALOG_NAMES)
    p.add_argument("--param", type=float, default=None)
    p.add_argument("--grid-n", type=int, default=256)
    p.add_argument("--check-product-rule", action="store_true")
    common(p, "regrade_out")
    p.set_defaults(func=_cmd_regrade)

    p = sub.add_parser("double-slit", help="two-hole interference demo")
    p.add_argument("--L", type=int, default=16)
    p.add_argument("--steps", type=int, default=8)
    p.add_argument("--holes", required=True, help="two sites, e.g. 5,10")
    p.add_argument("--source", type=int, default=None)
    p.add_argument("--filter-time", type=int, default=None)
    p.add_argument("--hop", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=0.35)
    common(p, "double_slit_out")
    p.set_defaults(func=_cmd_double_slit)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (
        SetupError,
        KernelFormatError,
        RegradeError,
        FileNotFoundError,
        json.JSONDecodeError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    raise SystemExit(main())
