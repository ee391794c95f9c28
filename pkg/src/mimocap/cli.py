"""Command-line front end: SNR sweeps, figure datasets and per-config metrics.

Exit codes:
    0  success
    2  invalid arguments (including a malformed SNR grid or unknown figure)
    3  configuration outside the closed-form envelope
    4  output path not writable
    5  numerical failure
"""

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction

from mimocap import asymptotics, closedform, montecarlo
from mimocap.errors import DomainError, NoCeilingError, NumericalError, UnsupportedConfigurationError
from mimocap.model import AntennaConfig, ImpairmentConfig, db_to_linear, linear_to_db

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_ENVELOPE = 3
EXIT_OUTPUT = 4
EXIT_NUMERICAL = 5

METHODS = ("closed-form", "quadrature", "monte-carlo")
CSV_HEADER = (
    "snr_db", "rho", "nt", "nr", "delta_t", "delta_r",
    "method", "capacity_bits", "std_error", "trials", "seed",
)
FIGURES = ("fig2", "fig3", "fig4", "fig5", "fig6")

DEFAULT_TRIALS = 100_000
DEFAULT_SEED = 42


class GridError(ValueError):
    pass


class OutputError(OSError):
    pass


@dataclass
class SweepRequest:
    nt: int
    nr: int
    delta_t: float
    delta_r: float
    snr_grid: list
    method: str = "all"
    trials: int = DEFAULT_TRIALS
    seed: int = DEFAULT_SEED
    output_format: str = "csv"
    output_path: str = "-"
    threads: int = 1
    shards: int = montecarlo.DEFAULT_SHARDS

    @property
    def ant(self):
        return AntennaConfig(self.nt, self.nr)

    @property
    def imp(self):
        return ImpairmentConfig(self.delta_t, self.delta_r)

    @property
    def methods(self):
        return METHODS if self.method == "all" else (self.method,)

    def validate(self):
        if not self.snr_grid:
            raise GridError("SNR grid is empty")
        if any(b <= a for a, b in zip(self.snr_grid, self.snr_grid[1:])):
            raise GridError("SNR grid must be strictly increasing")
        if self.method not in METHODS + ("all",):
            raise GridError(f"unknown method {self.method!r}")
        if "monte-carlo" in self.methods and self.trials < 100:
            raise GridError("Monte-Carlo needs at least 100 trials")
        if not 0 <= self.seed < 2**64:
            raise GridError("seed must be an unsigned 64-bit integer")
        AntennaConfig(self.nt, self.nr)
        ImpairmentConfig(self.delta_t, self.delta_r)


@dataclass
class SweepRow:
    snr_db: float
    rho: float
    nt: int
    nr: int
    delta_t: float
    delta_r: float
    method: str
    capacity_bits: float
    std_error: float = None
    trials: int = None
    seed: int = None


@dataclass
class SweepResult:
    request: SweepRequest
    rows: list = field(default_factory=list)


def parse_snr_grid(text):
    """Parse ``start:step:stop`` (inclusive) or a single value, in dB."""
    parts = text.split(":")
    try:
        values = [float(v) for v in parts]
    except ValueError as exc:
        raise GridError(f"malformed SNR grid {text!r}") from exc
    if len(values) == 1:
        return values
    if len(values) != 3:
        raise GridError(f"SNR grid must be start:step:stop, got {text!r}")
    start, step, stop = values
    if not all(math.isfinite(v) for v in values):
        raise GridError("SNR grid values must be finite")
    if step <= 0 or stop < start:
        raise GridError(f"SNR grid {text!r} is not increasing")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(count)]


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def run_sweep(req):
    """Evaluate every requested method at every grid SNR.

    Monte-Carlo rows share one set of channel draws across the grid, which is
    the same as estimating each SNR separately with the same seed.
    """
    req.validate()
    ant, imp = req.ant, req.imp
    if {"closed-form", "quadrature"} & set(req.methods):
        closedform.build_spectrum_coefficients(ant)

    eigenvalues = None
    if "monte-carlo" in req.methods:
        eigenvalues = montecarlo.sample_eigenvalues(
            ant, req.trials, seed=req.seed, shards=req.shards, threads=req.threads
        )

    result = SweepResult(request=req)
    for snr_db in req.snr_grid:
        rho = db_to_linear(snr_db)
        base = dict(snr_db=snr_db, rho=rho, nt=ant.nt, nr=ant.nr, delta_t=imp.delta_t, delta_r=imp.delta_r)
        for method in req.methods:
            if method == "closed-form":
                row = SweepRow(method=method, capacity_bits=closedform.ergodic_capacity_closed(rho, ant, imp), **base)
            elif method == "quadrature":
                row = SweepRow(method=method, capacity_bits=closedform.ergodic_capacity_quadrature(rho, ant, imp), **base)
            else:
                est = montecarlo.summarize(
                    montecarlo.capacity_from_eigenvalues(eigenvalues, rho, ant, imp), req.seed
                )
                row = SweepRow(
                    method=method, capacity_bits=est.mean, std_error=est.std_error,
                    trials=est.trials, seed=est.seed, **base,
                )
            result.rows.append(row)
    return result


def rows_to_csv(rows, header=CSV_HEADER):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        record = row if isinstance(row, dict) else asdict(row)
        writer.writerow([_fmt(record.get(col)) for col in header])
    return buf.getvalue()


def sweep_to_json(result):
    request = asdict(result.request)
    # execution details that must not change the output
    request.pop("output_path", None)
    request.pop("threads", None)
    return json.dumps({"request": request, "rows": [asdict(r) for r in result.rows]}, indent=2) + "\n"


def sweep_from_json(text):
    """Rebuild a ``SweepResult`` from ``sweep_to_json`` output."""
    data = json.loads(text)
    req = SweepRequest(**data["request"])
    return SweepResult(request=req, rows=[SweepRow(**r) for r in data["rows"]])


def write_output(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def _mc_mean(rho, ant, imp, trials, seed, threads):
    est = montecarlo.estimate_ergodic_capacity(rho, ant, imp, trials, seed=seed, threads=threads)
    return est.mean, est.std_error


IMPAIRED = ImpairmentConfig(0.15, 0.15)
_CURVES = (("ideal", ImpairmentConfig(0.0, 0.0)), ("impaired", IMPAIRED))


def _figure2(trials, seed, threads):
    files = {}
    for nt, nr in ((2, 2), (4, 4)):
        for label, imp in _CURVES:
            req = SweepRequest(
                nt=nt, nr=nr, delta_t=imp.delta_t, delta_r=imp.delta_r,
                snr_grid=parse_snr_grid("-10:5:50"), method="closed-form",
                trials=trials, seed=seed, threads=threads,
            )
            rows = run_sweep(req).rows
            req.method = "monte-carlo"
            rows += run_sweep(req).rows
            files[f"fig2_{nr}x{nt}_{label}.csv"] = rows_to_csv(rows)
    return files


FIG3_HEADER = ("snr_db", "rho", "delta_t", "delta_r", "capacity_mc", "std_error",
               "eb_n0_db", "capacity_linear_approx", "eb_n0_min_db", "s0", "trials", "seed")


def _figure3(trials, seed, threads):
    ant = AntennaConfig(4, 4)
    lam = montecarlo.sample_eigenvalues(ant, trials, seed=seed, threads=threads)
    files = {}
    for label, imp in _CURVES:
        metrics = asymptotics.low_snr_metrics(ant, imp)
        rows = []
        for snr_db in parse_snr_grid("-30:2:10"):
            rho = db_to_linear(snr_db)
            est = montecarlo.summarize(montecarlo.capacity_from_eigenvalues(lam, rho, ant, imp), seed)
            # x-axis is Eb/N0 = rho / C with C from the simulation
            eb_n0 = rho / est.mean
            rows.append(dict(
                snr_db=snr_db, rho=rho, delta_t=imp.delta_t, delta_r=imp.delta_r,
                capacity_mc=est.mean, std_error=est.std_error, eb_n0_db=linear_to_db(eb_n0),
                capacity_linear_approx=asymptotics.low_snr_capacity_approx(eb_n0, metrics),
                eb_n0_min_db=metrics.eb_n0_min_db, s0=metrics.s0, trials=est.trials, seed=seed,
            ))
        files[f"fig3_4x4_{label}.csv"] = rows_to_csv(rows, FIG3_HEADER)
    return files


ARRAY_HEADER = ("nt", "nr", "rho", "delta_t", "delta_r", "capacity_mc", "std_error",
                "capacity_closed", "reference_limit", "trials", "seed")
ARRAY_SIZES = (1, 2, 4, 8, 16, 32, 64, 128, 256, 512)


def _array_sweep(configs, imp, reference, trials, seed, threads):
    rho = db_to_linear(10.0)
    rows = []
    for ant in configs:
        mean, se = _mc_mean(rho, ant, imp, trials, seed, threads)
        closed = closedform.ergodic_capacity_closed(rho, ant, imp) if ant.q <= closedform.MAX_Q else None
        rows.append(dict(
            nt=ant.nt, nr=ant.nr, rho=rho, delta_t=imp.delta_t, delta_r=imp.delta_r,
            capacity_mc=mean, std_error=se, capacity_closed=closed,
            reference_limit=reference(ant, imp), trials=trials, seed=seed,
        ))
    return rows_to_csv(rows, ARRAY_HEADER)


def _figure4(trials, seed, threads):
    rho = db_to_linear(10.0)
    configs = [AntennaConfig(nt, 4) for nt in ARRAY_SIZES]
    ref = lambda ant, imp: asymptotics.capacity_large_nt(rho, ant.nr, imp)  # noqa: E731
    return {f"fig4_nr4_{label}.csv": _array_sweep(configs, imp, ref, trials, seed, threads)
            for label, imp in _CURVES}


def _figure5(trials, seed, threads):
    configs = [AntennaConfig(4, nr) for nr in ARRAY_SIZES]

    def ref(ant, imp):
        try:
            return asymptotics.capacity_large_nr(ant.nt, imp)
        except NoCeilingError:
            return None

    return {f"fig5_nt4_{label}.csv": _array_sweep(configs, imp, ref, trials, seed, threads)
            for label, imp in _CURVES}


FIG6_HEADER = ("beta", "nt", "nr", "rho", "delta_t", "delta_r", "capacity_mc", "std_error",
               "deterministic_equivalent", "relative_gap", "trials", "seed")
FIG6_BETAS = ("1/2", "1", "2")
FIG6_NR = (4, 8, 16, 32, 64)


def _figure6(trials, seed, threads):
    rho = db_to_linear(10.0)
    files = {}
    for beta_text in FIG6_BETAS:
        beta = Fraction(beta_text)
        ideal_mc = {}
        for label, imp in _CURVES:
            rows = []
            for nr in FIG6_NR:
                ant = AntennaConfig(int(nr / beta), nr)
                mean, se = _mc_mean(rho, ant, imp, trials, seed, threads)
                if label == "ideal":
                    ideal_mc[nr] = mean
                rows.append(dict(
                    beta=float(beta), nt=ant.nt, nr=ant.nr, rho=rho, delta_t=imp.delta_t,
                    delta_r=imp.delta_r, capacity_mc=mean, std_error=se,
                    deterministic_equivalent=asymptotics.deterministic_equivalent(rho, ant, imp).capacity_approx,
                    relative_gap=asymptotics.relative_capacity_gap(mean, ideal_mc[nr]),
                    trials=trials, seed=seed,
                ))
            files[f"fig6_beta{float(beta):g}_{label}.csv"] = rows_to_csv(rows, FIG6_HEADER)
    return files


_FIGURE_BUILDERS = {
    "fig2": _figure2, "fig3": _figure3, "fig4": _figure4, "fig5": _figure5, "fig6": _figure6,
}


def reproduce_figure(fig_id, trials=DEFAULT_TRIALS, seed=DEFAULT_SEED, threads=1):
    """CSV datasets behind one figure, as ``{filename: text}``.

    Reference curves come from the formulas; nothing is read off plots.
    """
    if fig_id not in _FIGURE_BUILDERS:
        raise GridError(f"unknown figure {fig_id!r}; choose from {', '.join(FIGURES)}")
    return _FIGURE_BUILDERS[fig_id](trials, seed, threads)


def print_metrics(ant, imp, snr_db=10.0):
    """Closed-form metrics for one configuration, as a plain dict."""
    low = asymptotics.low_snr_metrics(ant, imp)
    try:
        ceiling = closedform.capacity_ceiling(ant, imp)
    except NoCeilingError:
        ceiling = "unbounded"
    try:
        large_nr = asymptotics.capacity_large_nr(ant.nt, imp)
    except NoCeilingError:
        large_nr = "unbounded"
    return {
        "nt": ant.nt,
        "nr": ant.nr,
        "delta_t": imp.delta_t,
        "delta_r": imp.delta_r,
        "snr_db": snr_db,
        "eb_n0_min": low.eb_n0_min,
        "eb_n0_min_db": low.eb_n0_min_db,
        "s0": low.s0,
        "capacity_ceiling": ceiling,
        "large_nt_limit": asymptotics.capacity_large_nt(db_to_linear(snr_db), ant.nr, imp),
        "large_nr_limit": large_nr,
    }


def _format_metrics_text(report):
    width = max(len(k) for k in report)
    return "".join(f"{k:<{width}}  {_fmt(v)}\n" for k, v in report.items())


def _add_config_args(parser):
    parser.add_argument("--nt", type=int, required=True, help="transmit antennas")
    parser.add_argument("--nr", type=int, required=True, help="receive antennas")
    parser.add_argument("--delta-t", type=float, default=0.0, help="transmitter impairment level")
    parser.add_argument("--delta-r", type=float, default=0.0, help="receiver impairment level")


def _add_mc_args(parser):
    parser.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for Monte-Carlo shards; never changes the output")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mimocap",
        description="Ergodic capacity of MIMO links with residual transceiver impairments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="capacity over an SNR grid")
    _add_config_args(sweep)
    sweep.add_argument("--snr-db", required=True, help="start:step:stop in dB (inclusive)")
    sweep.add_argument("--method", choices=METHODS + ("all",), default="closed-form")
    _add_mc_args(sweep)
    sweep.add_argument("--format", choices=("csv", "json"), default="csv")
    sweep.add_argument("--out", default="-", help="output file, '-' for stdout")

    figure = sub.add_parser(
        "figure",
        help="datasets behind a figure",
        description="Writes one CSV per curve. fig3 plots capacity against Eb/N0 = rho / C "
        "with C the simulated capacity.",
    )
    figure.add_argument("id", choices=FIGURES)
    _add_mc_args(figure)
    figure.add_argument("--out", default=".", help="output directory")

    metrics = sub.add_parser("metrics", help="low-SNR, ceiling and large-array metrics")
    _add_config_args(metrics)
    metrics.add_argument("--snr-db", type=float, default=10.0, help="SNR for the large-Nt limit")
    metrics.add_argument("--format", choices=("text", "json"), default="text")
    metrics.add_argument("--out", default="-")
    return parser


def _run(args):
    if args.command == "sweep":
        req = SweepRequest(
            nt=args.nt, nr=args.nr, delta_t=args.delta_t, delta_r=args.delta_r,
            snr_grid=parse_snr_grid(args.snr_db), method=args.method, trials=args.trials,
            seed=args.seed, output_format=args.format, output_path=args.out, threads=args.threads,
        )
        result = run_sweep(req)
        text = rows_to_csv(result.rows) if args.format == "csv" else sweep_to_json(result)
        write_output(text, args.out)
    elif args.command == "figure":
        files = reproduce_figure(args.id, trials=args.trials, seed=args.seed, threads=args.threads)
        try:
            os.makedirs(args.out, exist_ok=True)
        except OSError as exc:
            raise OutputError(f"cannot create {args.out}: {exc}") from exc
        for name, text in files.items():
            write_output(text, os.path.join(args.out, name))
    else:
        report = print_metrics(AntennaConfig(args.nt, args.nr),
                               ImpairmentConfig(args.delta_t, args.delta_r), args.snr_db)
        text = json.dumps(report, indent=2) + "\n" if args.format == "json" else _format_metrics_text(report)
        write_output(text, args.out)


def _join_negative_grid(argv):
    # argparse reads "-10:5:30" as an option flag; bind it to --snr-db explicitly
    out = []
    it = iter(argv)
    for token in it:
        if token == "--snr-db":
            value = next(it, None)
            out.append(token if value is None else f"--snr-db={value}")
        else:
            out.append(token)
    return out


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_join_negative_grid(argv))
    try:
        _run(args)
    except UnsupportedConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENVELOPE
    except (GridError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OutputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OUTPUT
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
