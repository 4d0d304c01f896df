"""Command-line entry point: verification runs and plot-ready data.

Exit codes: 0 all checks pass, 1 a checked inequality fails, 2 bad usage or
configuration.  Output depends only on the arguments (including --seed).
"""
import argparse
from dataclasses import dataclass, field
import sys

from . import balls, compare, laplace, spheresum
from .errors import ConfigError, DomainError
from .report import dumps, fmt, VerificationReport

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_CONFIG = 2

PRESETS = {
    "quick": {
        "grid_size": spheresum.GRID_SIZE,
        "lemma1_d_max": 1000,
        "lemma2_d": range(2, 31),
        "lemma3_d": range(2, 11),
        "shift_instances": 8,
        "instances": 40,
    },
    "full": {
        "grid_size": spheresum.GRID_SIZE,
        "lemma1_d_max": 10_000,
        "lemma2_d": range(2, 101),
        "lemma3_d": range(2, 31),
        "shift_instances": 40,
        "instances": 200,
    },
}


@dataclass
class RunConfig:
    command: str
    d: int = None
    coeffs: tuple = ()
    t: tuple = ()
    radial: object = None
    preset: str = "full"
    seed: int = 0
    tol: float = None
    out: str = None
    format: str = "json"
    threads: int = 1
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.tol is not None and not self.tol > 0.0:
            raise ConfigError(f"--tol must be > 0, got {self.tol!r}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"--seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if self.threads < 1:
            raise ConfigError(f"--threads must be >= 1, got {self.threads!r}")
        if self.preset not in PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}")

    @property
    def settings(self):
        return PRESETS[self.preset]

    def coefficient_vector(self):
        if self.d is None or not self.coeffs:
            raise ConfigError(f"{self.command} needs --d and --coeffs")
        try:
            return spheresum.CoefficientVector(self.d, self.coeffs)
        except DomainError as exc:
            raise ConfigError(str(exc)) from None


def _floats(text):
    try:
        vals = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _radial(text):
    try:
        return spheresum.RadialLaw.parse(text)
    except DomainError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--d", type=int, help="ambient dimension")
    common.add_argument("--coeffs", type=_floats, default=(), help="a1,a2,...")
    common.add_argument("--t", type=_floats, default=(), help="comma-separated t values")
    common.add_argument("--radial", type=_radial, help="const:r | ball | twopoint:r1,r2,p")
    common.add_argument("--grid-preset", choices=sorted(PRESETS), default="full")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float)
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(
        prog="spheretail",
        description="Tail comparison of sphere sums against Gaussian sums.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("verify-lemmas", parents=[common], help="grid checks of the supporting inequalities")
    sub.add_parser("tail", parents=[common], help="law of ||sum a_i xi_i|| and survival values")
    p = sub.add_parser("compare", parents=[common], help="sphere tail / Gaussian tail ratios")
    p.add_argument("--instances", type=int, help="number of seeded random instances")
    p = sub.add_parser("search-constant", parents=[common], help="empirical worst-case ratio")
    p.add_argument("--m-max", type=int, default=4)
    p.add_argument("--budget", type=int, default=200, help="number of distribution builds")
    p = sub.add_parser("counterexample", parents=[common], help="Rademacher sums in one direction")
    p.add_argument("--m", type=int, default=100)
    p.add_argument("--d-max", type=int, default=200)
    return parser


def config_from_args(args):
    extra = {k: v for k, v in vars(args).items() if k in ("instances", "m_max", "budget", "m", "d_max", "inject_fault")}
    return RunConfig(
        command=args.command,
        d=args.d,
        coeffs=args.coeffs,
        t=args.t,
        radial=args.radial,
        preset=args.grid_preset,
        seed=args.seed,
        tol=args.tol,
        out=args.out,
        format=args.format,
        threads=args.threads,
        extra=extra,
    )


# --------------------------------------------------------------------------
# commands: each returns (text, exit code)


def _reports_output(cfg, reports):
    ok = all(r.passed for r in reports)
    if cfg.format == "csv":
        lines = ["claim,worst_margin,tolerance,checked,failures,pass"]
        for r in reports:
            lines.append(f"{r.claim},{fmt(r.worst_margin)},{fmt(r.tolerance)},{r.checked},{r.failures},{fmt(r.passed)}")
        text = "\n".join(lines) + "\n"
    else:
        text = dumps({"pass": ok, "reports": [r.envelope() for r in reports]})
    return text, EXIT_OK if ok else EXIT_VIOLATION


def _flipped_lemma1(d_max):
    """The chi-square ball bound with its first inequality reversed; used to exercise the failure path."""
    report = VerificationReport("fault-injection.lemma1_reversed", {"d": [2, d_max]}, 0.0)
    c1 = balls.LEMMA1_CONSTANTS[0]
    for d in range(2, d_max + 1):
        p1 = compare.chi_square_sf(d, d)
        report.update(c1 - p1, d=d, value=p1)
    return report


def cmd_verify_lemmas(cfg):
    s = cfg.settings
    reports = list(balls.verify_lemma1(s["lemma1_d_max"]))
    b_grid = laplace.standard_b_grid()
    if cfg.tol is None:
        reports += laplace.verify_lemma2(s["lemma2_d"], b_grid)
        reports += list(balls.verify_lemma3_sweep(s["lemma3_d"]))
        reports.append(spheresum.verify_shift_consistency(s["shift_instances"], cfg.seed, grid_size=s["grid_size"]))
    else:
        reports += laplace.verify_lemma2(s["lemma2_d"], b_grid, tol=cfg.tol)
        reports += list(balls.verify_lemma3_sweep(s["lemma3_d"], tol=cfg.tol))
        reports.append(spheresum.verify_shift_consistency(
            s["shift_instances"], cfg.seed, tol=cfg.tol, grid_size=s["grid_size"]))
    if cfg.extra.get("inject_fault"):
        reports.append(_flipped_lemma1(s["lemma1_d_max"]))
    return _reports_output(cfg, reports)


def cmd_tail(cfg):
    c = cfg.coefficient_vector()
    gs = cfg.settings["grid_size"]
    try:
        if cfg.radial is None:
            law = spheresum.norm_distribution(c, gs)
        else:
            law = spheresum.radial_mixture_distribution(c, cfg.radial, gs)
        values = [(t, spheresum.survival(law, t)) for t in cfg.t]
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    if cfg.format == "csv":
        lines = ["kind,t,cdf,sf"]
        for t, sv in values:
            lines.append(f"query,{fmt(t)},{fmt(1.0 - sv)},{fmt(sv)}")
        if law.is_atomic:
            for pos, cum in zip(law.grid, law.cdf):
                lines.append(f"atom,{fmt(pos)},{fmt(cum)},{fmt(max(1.0 - cum, 0.0))}")
        else:
            for x, cd, sf in zip(law.grid, law.cdf, law.sf):
                lines.append(f"grid,{fmt(x)},{fmt(cd)},{fmt(sf)}")
        return "\n".join(lines) + "\n", EXIT_OK
    env = law.envelope()
    env["radial"] = None if cfg.radial is None else cfg.radial.label()
    env["survival"] = [{"t": t, "survival": sv} for t, sv in values]
    env["grid"] = law.grid.tolist()
    env["cdf"] = law.cdf.tolist()
    env["sf"] = law.sf.tolist()
    return dumps(env), EXIT_OK


def cmd_compare(cfg):
    gs = cfg.settings["grid_size"]
    if cfg.coeffs:
        c = cfg.coefficient_vector()
        try:
            if not cfg.t:
                rows = compare.run_harness([c], cfg.radial, gs)
            elif cfg.radial is None:
                law = spheresum.norm_distribution(c, gs)
                rows = [compare.compare_ko(c, t, law) for t in cfg.t]
            else:
                law = spheresum.radial_mixture_distribution(c, cfg.radial, gs)
                rows = [compare.compare_general(c, cfg.radial, t, law) for t in cfg.t]
        except DomainError as exc:
            raise ConfigError(str(exc)) from None
        label = "sphere" if cfg.radial is None else cfg.radial.label()
        summary = compare.HarnessSummary(rows, label)
    else:
        n = cfg.extra.get("instances")
        if n is None:
            n = cfg.settings["instances"]
        if n < 1:
            raise ConfigError(f"--instances must be >= 1, got {n!r}")
        summary = compare.theorem_check(n, cfg.seed, cfg.radial, gs, cfg.threads)
    code = EXIT_OK if not summary.violations else EXIT_VIOLATION
    if cfg.format == "csv":
        return compare.rows_to_csv(summary.rows), code
    out = summary.summary()
    out["seed"] = cfg.seed
    out["grid_preset"] = cfg.preset
    out["table"] = [r.record() for r in summary.rows]
    return dumps(out), code


def cmd_search_constant(cfg):
    if cfg.d is None:
        raise ConfigError("search-constant needs --d")
    try:
        res = compare.search_constant(
            cfg.d, cfg.extra.get("m_max", 4), cfg.extra.get("budget", 200), cfg.seed, cfg.settings["grid_size"]
        )
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    code = EXIT_OK if res.best_ratio <= compare.C0 + compare.RATIO_SLACK else EXIT_VIOLATION
    out = res.summary()
    out["seed"] = cfg.seed
    out["base_case_supremum"] = compare.base_case_supremum(cfg.d)
    if cfg.format == "csv":
        w = res.witness
        text = "d,empirical_best_ratio,t,coefficients,found_by,evaluations\n"
        text += f"{w.d},{fmt(res.best_ratio)},{fmt(w.t)},{';'.join(fmt(a) for a in w.coefficients)},{res.family},{res.evaluations}\n"
        return text, code
    return dumps(out), code


def cmd_counterexample(cfg):
    m = cfg.extra.get("m", 100)
    d_max = cfg.extra.get("d_max", 200)
    t = cfg.t[0] if cfg.t else 2.0
    if m < 1 or d_max < 2 or not t > 0.0:
        raise ConfigError("counterexample needs --m >= 1, --d-max >= 2 and t > 0")
    table = compare.counterexample(m, range(2, d_max + 1), t)
    if cfg.format == "csv":
        return table.to_csv(), EXIT_OK
    out = table.summary()
    out["table"] = [{"d": d, "rhs": r, "c0_rhs": s, "exceeds": e} for d, r, s, e in table.rows]
    return dumps(out), EXIT_OK


COMMANDS = {
    "verify-lemmas": cmd_verify_lemmas,
    "tail": cmd_tail,
    "compare": cmd_compare,
    "search-constant": cmd_search_constant,
    "counterexample": cmd_counterexample,
}


def run(argv=None, stdout=None):
    """Parse, execute and write; returns the exit code."""
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        cfg = config_from_args(args)
        text, code = COMMANDS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"spheretail: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        try:
            stdout.write(text)
            stdout.flush()
        except BrokenPipeError:
            pass
    return code


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
