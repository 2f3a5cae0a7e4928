"""Command-line front end: ``asymcop fit | simulate | tails | demo``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import CopulaDomainError, CopulaNumericError
from .inference import (
    DEFAULT_LEVELS,
    FAMILIES,
    LEVELS,
    FitResult,
    ModelSpec,
    NestingError,
    fit_ladder,
    lr_test,
    pseudo_observations,
    tail_estimate,
)
from .margins import MarginFitError, MarginModel, fit_margin, gpd_tail_quantile, margin_quantile
from .sampling import reproduce_figure1, sample
from .tails import (
    TailMethod,
    TailReport,
    lambda_lower_frailty_gumbel,
    lambda_upper_clayton_survival,
    lambda_upper_gumbel,
    numerical_tail_probe,
)

log = logging.getLogger("asymcop")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

# synthetic wave-height / wind-speed margins: (location, scale, shape) per variable,
# with the tail shape in the bounded-tail-positive sign convention
DEMO_MARGINS = {"Hs": (6.10, 1.07, -0.07), "Ws": (14.90, 0.92, -0.11)}
DEMO_THRESHOLDS = (0.90, 0.96)
DEMO_COPULA = ("clayton:asym2", {"theta": 0.78, "delta": 0.96, "alpha": 2.34})
DEMO_N = 8103


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    input_path: Path
    columns: tuple[str, str]
    thresholds: tuple[float, float] = (0.90, 0.90)
    dither: tuple[float, float] = (0.0, 0.0)
    grid: list[ModelSpec] = field(default_factory=list)
    asym_side: str = "v"
    seed: int = 0
    out_dir: Path = Path("out")
    workers: int = 1

    def validate(self):
        if not self.grid:
            raise ConfigError("model grid is empty")
        for q in self.thresholds:
            if not (0.5 < q < 1.0):
                raise ConfigError(f"threshold quantile {q} outside (0.5, 1)")
        for w in self.dither:
            if w < 0.0:
                raise ConfigError(f"dither half-width {w} is negative")
        if self.columns[0] == self.columns[1]:
            raise ConfigError("the two columns must differ")


def parse_pair(text: str, cast=float, name="value") -> tuple:
    parts = [p.strip() for p in text.split(",")]
    try:
        vals = [cast(p) for p in parts]
    except ValueError as exc:
        raise ConfigError(f"cannot parse {name} {text!r}") from exc
    if len(vals) == 1:
        vals = vals * 2
    if len(vals) != 2:
        raise ConfigError(f"{name} needs one or two comma-separated entries, got {text!r}")
    return tuple(vals)


def parse_grid(text: str, side: str) -> list[ModelSpec]:
    """``default``, ``full``, level names, family names or ``family:level[:side]`` tokens."""
    specs: list[ModelSpec] = []
    tokens = [t.strip() for t in text.split(",") if t.strip()]
    for tok in tokens:
        try:
            if tok == "default":
                specs += [ModelSpec(f, lv, side) for f in FAMILIES for lv in DEFAULT_LEVELS]
            elif tok == "full":
                specs += [ModelSpec(f, lv, side) for f in FAMILIES for lv in LEVELS]
            elif tok in LEVELS:
                specs += [ModelSpec(f, tok, side) for f in FAMILIES]
            elif tok in FAMILIES:
                specs += [ModelSpec(tok, lv, side) for lv in DEFAULT_LEVELS]
            else:
                specs.append(ModelSpec.parse(tok, side))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    return sort_grid(set(specs))


def sort_grid(specs) -> list[ModelSpec]:
    return sorted(specs, key=lambda s: (FAMILIES.index(s.family), LEVELS.index(s.level), s.side))


def parse_params(text: str) -> dict[str, float]:
    out = {}
    for item in filter(None, (t.strip() for t in text.split(","))):
        if "=" not in item:
            raise ConfigError(f"parameter {item!r} is not name=value")
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = float(v)
        except ValueError as exc:
            raise ConfigError(f"parameter {k!r} has non-numeric value {v!r}") from exc
    return out


def read_columns(path: Path, columns: tuple[str, str]) -> tuple[np.ndarray, np.ndarray, int]:
    """Two numeric columns from a headered CSV; rows with missing or NaN values are dropped."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in columns if c not in header]
        if missing:
            raise ConfigError(f"columns {missing} not found in {path} (have {header})")
        xs, ys, dropped = [], [], 0
        for row in reader:
            try:
                x, y = float(row[columns[0]]), float(row[columns[1]])
            except (TypeError, ValueError):
                dropped += 1
                continue
            if math.isnan(x) or math.isnan(y):
                dropped += 1
                continue
            xs.append(x)
            ys.append(y)
    return np.array(xs), np.array(ys), dropped


def build_model(key: str, params: dict[str, float], side: str = "v"):
    try:
        spec = ModelSpec.parse(key, side)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    missing = [n for n in spec.param_names if n not in params]
    extra = [n for n in params if n not in spec.param_names]
    if missing or extra:
        raise ConfigError(f"{spec.key} takes parameters {spec.param_names}; missing {missing}, unexpected {extra}")
    for name, x in params.items():
        box = spec.box(name)
        if not (box.lo <= x <= box.hi):
            raise ConfigError(f"{name}={x} outside [{box.lo}, {box.hi}] for {spec.key}")
    try:
        return spec, spec.build(params)
    except CopulaDomainError as exc:
        raise ConfigError(str(exc)) from exc


def write_pairs(path: Path, a, b, header=("u", "v")):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for x, y in zip(a, b):
            fh.write(f"{float(x)!r},{float(y)!r}\n")


def write_json(path: Path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n")


# ---------------------------------------------------------------- fit


def run_grid(pseudo, grid: list[ModelSpec], workers: int = 1) -> tuple[dict[ModelSpec, FitResult], list[dict]]:
    by_family: dict[str, list[ModelSpec]] = {}
    for spec in grid:
        by_family.setdefault(spec.family, []).append(spec)

    def job(family_specs):
        out, errs = {}, []
        # each one-sided side is its own ladder
        for side in sorted({s.side for s in family_specs}):
            specs = [s for s in family_specs if s.side == side]
            levels = [s.level for s in sorted(specs, key=lambda s: LEVELS.index(s.level))]
            try:
                fits = fit_ladder(pseudo, specs[0].family, levels, side)
            except (ArithmeticError, ValueError) as exc:
                errs.append({"family": specs[0].family, "side": side, "error": str(exc)})
                continue
            out.update({f.spec: f for f in fits})
        return out, errs

    results: dict[ModelSpec, FitResult] = {}
    failures: list[dict] = []
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        for out, errs in pool.map(job, [by_family[f] for f in sorted(by_family, key=FAMILIES.index)]):
            results.update(out)
            failures.extend(errs)
    # levels with the same restricted model but different sides may alias; keep grid members only
    return {s: results[s] for s in grid if s in results}, failures


def grid_report(fits: dict[ModelSpec, FitResult]) -> tuple[list[dict], list[dict], str | None]:
    lr_rows, tail_rows = [], []
    for spec, fit in fits.items():
        r = spec.restricted
        while r is not None and r not in fits:
            r = r.restricted
        if r is not None and np.isfinite(fit.loglik) and np.isfinite(fits[r].loglik):
            try:
                t = lr_test(fits[r], fit)
                lr_rows.append({"restricted": r.key, "full": spec.key, **t.to_dict()})
            except NestingError:
                pass
        if spec.level == "base" and spec.family != "plackett":
            try:
                t = tail_estimate(fit)
                tail_rows.append({"model": spec.key, "side": "upper", **t.to_dict()})
            except (LookupError, ValueError) as exc:
                tail_rows.append({"model": spec.key, "side": "upper", "error": str(exc)})
    finite = [f for f in fits.values() if np.isfinite(f.bic)]
    best = min(finite, key=lambda f: (f.bic, f.spec.key)).spec.key if finite else None
    return lr_rows, tail_rows, best


def _fmt(x, digits=4):
    if x is None:
        return "-"
    if isinstance(x, float) and (abs(x) >= 1e4 or (0 < abs(x) < 1e-3)):
        return f"{x:.3e}"
    return f"{x:.{digits}g}"


def text_table(report: dict) -> str:
    lines = [f"n = {report['n_obs']} (dropped {report['n_dropped']})", ""]
    lines.append("margins")
    for name, m in report["margins"].items():
        lines.append(
            f"  {name:<10} threshold {_fmt(m['threshold'])}  u0 {_fmt(m['u0'])}"
            f"  scale {_fmt(m['scale'])}  shape {_fmt(m['shape'])}"
        )
    lines += ["", f"{'model':<20} {'params (stderr)':<60} {'loglik':>10} {'BIC':>11}  flags"]
    for row in report["fits"]:
        se = row["stderr"] or {}
        parts = [f"{k}={_fmt(v)}({_fmt(se.get(k))})" for k, v in row["params"].items()]
        flags = []
        if not row["converged"]:
            flags.append("not-converged")
        if row["degenerate"]:
            flags.append("degenerate:" + "/".join(row["degenerate"]))
        if row["key"] == report["best_bic"]:
            flags.append("best-BIC")
        lines.append(
            f"{row['key']:<20} {' '.join(parts):<60} {row['loglik']:>10.1f} {row['bic']:>11.1f}  {' '.join(flags)}"
        )
    if report["lr_tests"]:
        lines += ["", "likelihood-ratio tests"]
        for t in report["lr_tests"]:
            lines.append(
                f"  {t['restricted']:<18} vs {t['full']:<18} stat {t['statistic']:9.2f}"
                f"  df {t['df']}  p {t['p_value']:.3g}"
            )
    if report["tail_estimates"]:
        lines += ["", "tail dependence (closed form, delta-method sd)"]
        for t in report["tail_estimates"]:
            if "error" in t:
                lines.append(f"  {t['model']:<18} {t['error']}")
            else:
                lines.append(f"  {t['model']:<18} lambda {t['lambda']:.4f}  sd {t['stderr']:.3g}")
    for f in report["failures"]:
        lines.append(f"FAILED {f}")
    return "\n".join(lines) + "\n"


def cmd_fit(cfg: RunConfig) -> int:
    cfg.validate()
    x, y, dropped = read_columns(cfg.input_path, cfg.columns)
    rng = np.random.default_rng(cfg.seed)
    # dither once so the margins and the pseudo-observations see the same values
    if cfg.dither[0] > 0:
        x = x + rng.uniform(-cfg.dither[0], cfg.dither[0], size=len(x))
    if cfg.dither[1] > 0:
        y = y + rng.uniform(-cfg.dither[1], cfg.dither[1], size=len(y))
    try:
        m1 = fit_margin(x, cfg.thresholds[0])
        m2 = fit_margin(y, cfg.thresholds[1])
    except MarginFitError as exc:
        raise ConfigError(f"margin fit failed: {exc}") from exc
    pseudo = pseudo_observations(x, y, m1, m2)
    fits, failures = run_grid(pseudo, cfg.grid, cfg.workers)
    lr_rows, tail_rows, best = grid_report(fits)
    names = cfg.columns
    report = {
        "config": {
            "input": str(cfg.input_path),
            "columns": list(names),
            "thresholds": list(cfg.thresholds),
            "dither": list(cfg.dither),
            "grid": [s.key for s in cfg.grid],
            "asym_side": cfg.asym_side,
            "seed": cfg.seed,
        },
        "n_obs": int(len(x)),
        "n_dropped": dropped,
        "margins": {names[0]: m1.to_dict(False), names[1]: m2.to_dict(False)},
        "fits": [fits[s].to_dict() for s in sort_grid(fits)],
        "lr_tests": lr_rows,
        "tail_estimates": tail_rows,
        "best_bic": best,
        "failures": failures,
    }
    out = cfg.out_dir
    write_json(out / "report.json", report)
    (out / "report.txt").write_text(text_table(report))
    write_json(out / "margins.json", {"x": m1.to_dict(), "y": m2.to_dict(), "columns": list(names)})
    sys.stdout.write(text_table(report))
    if not any(np.isfinite(f.loglik) for f in fits.values()):
        log.error("every model in the grid failed")
        return EXIT_NUMERIC
    return EXIT_OK


# ---------------------------------------------------------------- simulate


def load_margins(path: Path) -> tuple[MarginModel, MarginModel]:
    try:
        d = json.loads(Path(path).read_text())
        return MarginModel.from_dict(d["x"]), MarginModel.from_dict(d["y"])
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(f"cannot load margins from {path}: {exc}") from exc


def cmd_simulate(args) -> int:
    out = Path(args.out)
    if args.figure1:
        res = reproduce_figure1(args.seed, n=args.n or 5000)
        out.mkdir(parents=True, exist_ok=True)
        for i, s in enumerate(res.samples, start=1):
            write_pairs(out / f"figure1_{i}.csv", s.u, s.v)
        summary = {
            "taus": res.taus,
            "target_taus": res.target_taus,
            "alpha": res.alpha,
            "delta": res.delta,
            "beta": res.beta,
            "cuadras_auge_bound": res.cuadras_auge_bound,
            "seed": args.seed,
        }
        write_json(out / "figure1.json", summary)
        print(json.dumps(summary, indent=2))
        return EXIT_OK
    if not args.model:
        raise ConfigError("simulate needs --model (or --figure1)")
    if args.n is None or args.n < 0:
        raise ConfigError("simulate needs --n >= 0")
    spec, model = build_model(args.model, parse_params(args.params or ""), args.asym_side)
    margins = load_margins(Path(args.margins)) if args.margins else None
    if args.n == 0:
        u = v = np.empty(0)
    else:
        s = sample(model, args.n, args.seed)
        u, v = s.u, s.v
    if margins is None:
        write_pairs(out, u, v, ("u", "v"))
    else:
        write_pairs(out, margin_quantile(margins[0], u), margin_quantile(margins[1], v), ("x", "y"))
    return EXIT_OK


# ---------------------------------------------------------------- tails


def tails_report(spec: ModelSpec, params: dict[str, float]) -> dict:
    _, model = build_model(spec.key, params, spec.side)
    lam_u = lam_l = None
    notes = []
    candidates = {}
    if spec.level == "base" and spec.family == "clayton":
        lam_u, lam_l = lambda_upper_clayton_survival(params["alpha"]), 0.0
    elif spec.level == "base" and spec.family == "gumbel":
        lam_u, lam_l = lambda_upper_gumbel(params["alpha"]), 0.0
    elif spec.family == "gumbel" and spec.level in ("mixed",) and params["beta"] > 0:
        asym = params.get("theta", params.get("delta", 1.0))
        rep = lambda_lower_frailty_gumbel(params["alpha"], asym, params["beta"])
        candidates = rep.candidates
        lam_l = rep.lambda_lower
        notes.append(
            "lower tail: r^(-1/beta) holds for the (1+t)^(-1/beta) generator used here; "
            "r^(-beta) is the (1+t)^(-beta) convention; r_alt uses the swapped exponents"
        )
    else:
        notes.append("no closed form; see the numerical probes")
    lower = numerical_tail_probe(model, "lower")
    upper = numerical_tail_probe(model, "upper")
    return {
        "model": spec.key,
        "params": params,
        "lambda_upper": lam_u,
        "lambda_lower": lam_l,
        "method": (TailMethod.CLOSED_FORM if lam_u is not None or lam_l is not None else TailMethod.NUMERICAL_LIMIT).value,
        "candidates": candidates,
        "lower_probe": lower.to_dict(),
        "upper_probe": upper.to_dict(),
        "notes": notes,
    }


def cmd_tails(args) -> int:
    if args.report:
        try:
            report = json.loads(Path(args.report).read_text())
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read report {args.report}: {exc}") from exc
        rows = report.get("fits", [])
        if args.model:
            rows = [r for r in rows if r["key"] == args.model]
        if not rows:
            raise ConfigError("no matching fitted model in the report")
        out = []
        for r in rows:
            fit = FitResult.from_dict(r)
            if np.all(np.isfinite(list(fit.params.values()))):
                out.append(tails_report(fit.spec, fit.params))
    else:
        if not args.model:
            raise ConfigError("tails needs --model with --params, or --report")
        spec = ModelSpec.parse(args.model, args.asym_side)
        out = [tails_report(spec, parse_params(args.params or ""))]
    text = json.dumps(out if len(out) > 1 else out[0], indent=2)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text + "\n")
    print(text)
    return EXIT_OK


# ---------------------------------------------------------------- demo


def demo_margin_quantile(p, location, scale, shape, u0):
    """Smooth body below the threshold, GPD above it."""
    p = np.asarray(p, dtype=float)
    body = location * np.sqrt(p / u0)
    tail_p = np.clip((p - u0) / (1.0 - u0), 0.0, 1.0)
    tail = location + gpd_tail_quantile(tail_p, scale, shape)
    return np.where(p <= u0, body, tail)


def make_demo_data(n: int, seed: int):
    key, params = DEMO_COPULA
    _, model = build_model(key, params)
    s = sample(model, n, seed)
    cols = []
    for (name, (loc, sc, sh)), q, p in zip(DEMO_MARGINS.items(), DEMO_THRESHOLDS, (s.u, s.v)):
        cols.append(demo_margin_quantile(p, loc, sc, sh, q))
    return tuple(DEMO_MARGINS), cols[0], cols[1]


def cmd_demo(args) -> int:
    out = Path(args.out)
    names, x, y = make_demo_data(args.n or DEMO_N, args.seed)
    write_pairs(out / "demo.csv", x, y, names)
    grid = parse_grid(args.grid or "base,asym2,mixed2", args.asym_side)
    cfg = RunConfig(
        input_path=out / "demo.csv",
        columns=names,
        thresholds=parse_pair(args.thresholds, name="thresholds") if args.thresholds else DEMO_THRESHOLDS,
        dither=(0.0, 0.0),
        grid=grid,
        asym_side=args.asym_side,
        seed=args.seed,
        out_dir=out,
        workers=args.workers,
    )
    return cmd_fit(cfg)


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="asymcop", description="Asymmetric copulas: fit, simulate, tail dependence.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp, out_default):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=out_default)
        sp.add_argument("--asym-side", choices=("u", "v"), default="v",
                        help="coordinate carrying the exponent in one-sided models")

    f = sub.add_parser("fit", help="fit margins and a grid of copulas to two CSV columns")
    common(f, "out")
    f.add_argument("--input", required=True)
    f.add_argument("--cols", required=True, help="two column names, comma-separated")
    f.add_argument("--thresholds", default="0.9,0.9", help="GPD threshold quantiles per variable")
    f.add_argument("--dither", default="0,0", help="uniform dither half-widths per variable")
    f.add_argument("--grid", default="default",
                   help="default | full | levels | families | family:level[:side], comma-separated")
    f.add_argument("--workers", type=int, default=1)

    s = sub.add_parser("simulate", help="draw from a copula, optionally through fitted margins")
    common(s, "sample.csv")
    s.add_argument("--model", help="family:level[:side], e.g. clayton:asym2")
    s.add_argument("--params", help="name=value pairs, comma-separated")
    s.add_argument("--n", type=int)
    s.add_argument("--margins", help="margins.json written by 'fit'")
    s.add_argument("--figure1", action="store_true", help="the calibrated three-panel tau comparison")

    t = sub.add_parser("tails", help="tail-dependence indices and probe tables")
    common(t, "")
    t.add_argument("--model")
    t.add_argument("--params")
    t.add_argument("--report", help="report.json from 'fit'; all fits, or --model to select one")

    d = sub.add_parser("demo", help="synthetic wave and wind data run through the fit workflow")
    common(d, "demo_out")
    d.add_argument("--n", type=int)
    d.add_argument("--grid")
    d.add_argument("--thresholds")
    d.add_argument("--workers", type=int, default=1)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.verb == "fit":
            cols = parse_pair(args.cols, str, "columns")
            cfg = RunConfig(
                input_path=Path(args.input),
                columns=cols,
                thresholds=parse_pair(args.thresholds, name="thresholds"),
                dither=parse_pair(args.dither, name="dither"),
                grid=parse_grid(args.grid, args.asym_side),
                asym_side=args.asym_side,
                seed=args.seed,
                out_dir=Path(args.out),
                workers=args.workers,
            )
            return cmd_fit(cfg)
        if args.verb == "simulate":
            return cmd_simulate(args)
        if args.verb == "tails":
            return cmd_tails(args)
        return cmd_demo(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CopulaNumericError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
