"""Command-line interface: ``arhlab <command> [options]``.

Every command writes its artifacts plus ``manifest.json`` into the output
directory (``--out``, else ``$ARHLAB_DATA_DIR``, else ``./arhlab_out``).
Options may also come from a YAML file given by ``--config``; keys are the
long option names (dashes or underscores) and explicit flags win.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from . import io as aio
from .arh import changepoint_test, cross_validate, estimate_rho
from .datasets import bundled_elnino_path, month_positions
from .evaluation import elnino_pipeline, scheme_candidates
from .experiments import REFERENCE_MODELS, mc_lln_rate, mc_mean_clt, reference_model
from .hilbert import Curve, Grid, Sample
from .moments import compute_moments, functional_pca
from .regularize import RegScheme
from .simulate import ArhSpec, NoiseSpec, fourier_basis, simulate_arh1, simulate_ou_segments, \
    simulate_wong_segments


class ConfigError(ValueError):
    pass


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class Opt:
    name: str
    type: type | str
    default: object = None
    help: str = ""
    choices: tuple | None = None

    @property
    def dest(self) -> str:
        return self.name.replace("-", "_")


STOCHASTIC = {"simulate", "changepoint", "mc-lln", "mc-clt"}

COMMON = (
    Opt("seed", int, None, "integer seed (required for stochastic commands)"),
    Opt("grid", int, 101, "number of grid points"),
    Opt("out", str, None, "output directory"),
)

COMMANDS: dict[str, tuple[str, tuple[Opt, ...]]] = {
    "simulate": ("simulate a segmented or autoregressive functional process", (
        Opt("kind", str, "ou", "process kind", ("ou", "wong", "arh")),
        Opt("a", float, 1.0, "O-U rate"),
        Opt("n", int, 200, "number of curves"),
        Opt("model", str, "rank3", "reference operator for kind=arh", tuple(REFERENCE_MODELS)),
        Opt("rho", str, None, "operator CSV for kind=arh (overrides --model)"),
        Opt("noise-eigenvalues", "floats", None, "noise eigenvalues (Fourier basis), e.g. 1,0.25,0.11"),
        Opt("burnin", int, 200, "discarded warm-up curves for kind=arh"),
        Opt("plots", bool, True, "render PNG figures"),
    )),
    "moments": ("empirical mean, covariance and cross-covariance operators", (
        Opt("in", str, None, "sample CSV"),
        Opt("lags", "ints", [1], "cross-covariance lags"),
        Opt("center", bool, True, "subtract the empirical mean"),
        Opt("plots", bool, True, "render PNG figures"),
    )),
    "estimate": ("fit the autocorrelation operator", (
        Opt("in", str, None, "sample CSV"),
        Opt("scheme", str, None, "cutoff:k, penalized:alpha or tikhonov:alpha (default: cut-off schedule)"),
        Opt("center", bool, True, "subtract the empirical mean"),
        Opt("plots", bool, True, "render PNG figures"),
    )),
    "predict": ("one-step prediction from a fitted model", (
        Opt("model", str, None, "model.json written by estimate"),
        Opt("x", str, "last", "'last' (last training curve) or a sample CSV"),
    )),
    "cv": ("rolling-origin cross-validation of regularization schemes", (
        Opt("in", str, None, "sample CSV"),
        Opt("candidates", "strs", None, "schemes, e.g. cutoff:1,cutoff:2,tikhonov:0.01"),
        Opt("origin", float, 0.75, "fraction of the sample before the first forecast"),
        Opt("max-k", int, 8, "largest cut-off rank in the default candidate set"),
        Opt("center", bool, True, "subtract the empirical mean"),
    )),
    "changepoint": ("partial-sum test for a change in the operator", (
        Opt("in", str, None, "sample CSV"),
        Opt("scheme", str, None, "regularization scheme (default: cut-off schedule)"),
        Opt("reps", int, 500, "null replications"),
        Opt("center", bool, True, "subtract the empirical mean"),
        Opt("plots", bool, True, "render PNG figures"),
    )),
    "elnino": ("one-year-ahead forecast of the El Nino index", (
        Opt("data", str, None, "monthly CSV (year,month,value)"),
        Opt("smoothing", "any", "none", "none, penalized, or a mapping (in the config file)"),
        Opt("train-first", int, 1950, "first training year"),
        Opt("train-last", int, 1985, "last training year"),
        Opt("plots", bool, True, "render PNG figures"),
    )),
    "mc-lln": ("Monte Carlo check of n E||S_n/n||^2 against its limit", (
        Opt("model", str, "zero", "reference operator", tuple(REFERENCE_MODELS)),
        Opt("n", int, 2000, "curves per replication"),
        Opt("reps", int, 200, "replications"),
    )),
    "mc-clt": ("Monte Carlo check of the functional mean CLT", (
        Opt("model", str, "zero", "reference operator", tuple(REFERENCE_MODELS)),
        Opt("n", int, 2000, "curves per replication"),
        Opt("reps", int, 300, "replications"),
        Opt("directions", int, 3, "leading eigendirections"),
        Opt("batch-size", int, 30, "replications per normality test"),
        Opt("plots", bool, True, "render PNG figures"),
    )),
}


def _split(text: str) -> list[str]:
    return [s.strip() for s in str(text).split(",") if s.strip()]


def _convert(kind, value):
    """Convert a CLI string or a YAML scalar/list to the option type."""
    if kind == "any":
        return value
    if kind in ("floats", "ints", "strs"):
        items = _split(value) if isinstance(value, str) else value
        if not isinstance(items, list):
            raise ValueError("expected a list")
        conv = {"floats": float, "ints": int, "strs": str}[kind]
        out = []
        for v in items:
            if conv is not str and isinstance(v, bool):
                raise ValueError(f"expected a number, got {v!r}")
            if conv is int and isinstance(v, float):
                raise ValueError(f"expected an integer, got {v!r}")
            out.append(conv(v))
        return out
    if kind is bool:
        if isinstance(value, bool):
            return value
        raise ValueError(f"expected true or false, got {value!r}")
    if kind is int:
        if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
            raise ValueError(f"expected an integer, got {value!r}")
        return int(value)
    if kind is float:
        if isinstance(value, bool):
            raise ValueError(f"expected a number, got {value!r}")
        return float(value)
    if isinstance(value, (dict, list)):
        raise ValueError(f"expected a scalar, got {type(value).__name__}")
    return str(value)


def load_config(path, opts: dict[str, Opt]) -> dict:
    """Parse a YAML mapping of option values, reporting errors with line numbers."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line = mark.line + 1 if mark else "?"
        raise ConfigError(f"{path}:{line}: invalid YAML: {exc.problem}") from None
    if root is None:
        return {}
    if not isinstance(root, yaml.MappingNode):
        raise ConfigError(f"{path}:{root.start_mark.line + 1}: config must be a mapping of options")
    out = {}
    for knode, vnode in root.value:
        key = str(knode.value)
        line = knode.start_mark.line + 1
        dest = key.replace("-", "_")
        if dest not in opts:
            raise ConfigError(f"{path}:{line}: unknown option {key!r}; "
                              f"allowed: {', '.join(sorted(o.name for o in opts.values()))}")
        opt = opts[dest]
        try:
            val = _convert(opt.type, data[key])
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{path}:{vnode.start_mark.line + 1}: option {key!r}: {exc}") from None
        if opt.choices and val not in opt.choices:
            raise ConfigError(f"{path}:{vnode.start_mark.line + 1}: option {key!r} must be one of "
                              f"{', '.join(opt.choices)}")
        out[dest] = val
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="arhlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True
    for name, (help_text, opts) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text, description=help_text)
        for opt in (*COMMON, *opts):
            flag = f"--{opt.name}"
            if opt.type is bool:
                sp.add_argument(flag, dest=opt.dest, action=argparse.BooleanOptionalAction,
                                default=None, help=f"{opt.help} (default: {opt.default})")
                continue
            typ = opt.type if opt.type in (int, float, str) else str
            sp.add_argument(flag, dest=opt.dest, type=typ, default=None, choices=opt.choices,
                            help=f"{opt.help} (default: {opt.default})" if opt.default is not None
                            else opt.help)
        sp.add_argument("--config", default=None, help="YAML file with option values")
    return parser


def resolve(command: str, ns: argparse.Namespace) -> dict:
    opts = {o.dest: o for o in (*COMMON, *COMMANDS[command][1])}
    cfg = load_config(ns.config, opts) if ns.config else {}
    params = {}
    for dest, opt in opts.items():
        cli = getattr(ns, dest)
        if cli is not None:
            params[dest] = _convert(opt.type, cli) if isinstance(opt.type, str) else cli
        elif dest in cfg:
            params[dest] = cfg[dest]
        else:
            params[dest] = opt.default
    if command in STOCHASTIC and params["seed"] is None:
        raise UsageError(f"{command} requires --seed")
    if params["grid"] < 3:
        raise UsageError("--grid must be at least 3")
    if params["out"] is None:
        params["out"] = os.environ.get("ARHLAB_DATA_DIR") or "arhlab_out"
    return params


def _require(params: dict, key: str) -> str:
    if not params.get(key):
        raise UsageError(f"--{key} is required")
    return params[key]


def _scheme(text) -> RegScheme | None:
    return RegScheme.parse(text) if text else None


def _plots():
    from . import plotting

    return plotting


def cmd_simulate(p: dict, out: Path) -> tuple[list, list]:
    grid = Grid.uniform(p["grid"])
    kind, n, seed = p["kind"], p["n"], p["seed"]
    if n < 1:
        raise UsageError("--n must be positive")
    if kind == "ou":
        proc = simulate_ou_segments(p["a"], n, grid, seed)
    elif kind == "wong":
        proc = simulate_wong_segments(n, grid, seed)
    else:
        if p["noise_eigenvalues"]:
            g = np.asarray(p["noise_eigenvalues"], dtype=float)
            noise = NoiseSpec(g, Sample(grid, fourier_basis(grid, g.size)), seed)
        else:
            noise = NoiseSpec.default(grid, seed=seed)
        if p["rho"]:
            rho = aio.read_operator(p["rho"])
            if not rho.grid.same_as(grid):
                raise UsageError(f"operator in {p['rho']} does not live on a {grid.size}-point grid")
            spec = ArhSpec(rho, noise, p["burnin"])
        else:
            spec = reference_model(p["model"], noise=noise, burnin=p["burnin"])
        proc = simulate_arh1(spec, n, rng=np.random.default_rng(seed))
    written = [aio.write_sample(out / "sample.csv", proc.sample),
               aio.write_sample(out / "innovations.csv", proc.innovations),
               aio.write_operator(out / "truth.csv", proc.truth)]
    show = min(5, n)
    t = np.concatenate([i + grid.points for i in range(show)])
    written.append(aio.write_long_csv(out / "segments_long.csv", {
        "sample": (t, proc.sample.values[:show].ravel()),
        "innovations": (t, proc.innovations.values[:show].ravel())}))
    if p["plots"]:
        written.append(_plots().plot_segments(proc.sample, out / "segments.png", show,
                                              f"{kind} process, first {show} segments"))
    inputs = [p["rho"]] if p.get("rho") else []
    return written, inputs


def cmd_moments(p: dict, out: Path):
    src = _require(p, "in")
    sample = aio.read_sample(src)
    mom = compute_moments(sample, lags=tuple(p["lags"]), center=p["center"])
    written = [aio.write_sample(out / "mean.csv", Sample(sample.grid, mom.mean.values[None, :])),
               aio.write_operator(out / "cov.csv", mom.cov)]
    for h, op in sorted(mom.crosscov.items()):
        written.append(aio.write_operator(out / f"crosscov_lag{h}.csv", op))
    summ = mom.summary()
    written.append(aio.write_json(out / "moments.json", summ))
    if p["plots"]:
        written.append(_plots().plot_spectrum(summ["leading_eigenvalues"], out / "spectrum.png",
                                              title="leading covariance eigenvalues"))
    return written, [src]


def cmd_estimate(p: dict, out: Path):
    src = _require(p, "in")
    sample = aio.read_sample(src)
    est = estimate_rho(sample, _scheme(p["scheme"]), center=p["center"])
    written = [aio.write_operator(out / "rho_hat.csv", est.rho_hat),
               aio.write_sample(out / "mean.csv", Sample(sample.grid, est.mean.values[None, :]))]
    model = {
        "summary": est.summary(),
        "rho_hat": "rho_hat.csv",
        "mean": "mean.csv",
        "training_sample": str(Path(src).resolve()),
        "training_sample_sha256": aio.sha256_file(src),
    }
    written.append(aio.write_json(out / "model.json", model))
    if p["plots"]:
        written.append(_plots().plot_spectrum(est.eigens.eigenvalues, out / "spectrum.png",
                                              title="covariance eigenvalues"))
    return written, [src]


def _load_model(path):
    path = Path(path)
    model = aio.read_json(path)
    try:
        rho = aio.read_operator(path.parent / model["rho_hat"])
        mean = aio.read_sample(path.parent / model["mean"])
    except KeyError as exc:
        raise UsageError(f"{path}: model file lacks {exc.args[0]!r}") from None
    return model, rho, Curve(mean.grid, mean.values[0])


def cmd_predict(p: dict, out: Path):
    mpath = _require(p, "model")
    model, rho, mean = _load_model(mpath)
    inputs = [mpath]
    if p["x"] == "last":
        src = model["training_sample"]
        if aio.sha256_file(src) != model.get("training_sample_sha256"):
            raise UsageError(f"training sample {src} changed since the model was fitted")
        xs = aio.read_sample(src)
        xs = xs[len(xs) - 1 : len(xs)]
        inputs.append(src)
    else:
        xs = aio.read_sample(p["x"])
        inputs.append(p["x"])
    if not xs.grid.same_as(rho.grid):
        raise UsageError("input curves and model live on different grids")
    pred = Sample(rho.grid, mean.values + (xs.values - mean.values) @ rho.action.T)
    written = [aio.write_sample(out / "prediction.csv", pred)]
    written.append(aio.write_long_csv(out / "prediction_long.csv", {
        f"prediction_{i}": (rho.grid.points, pred.values[i]) for i in range(len(pred))}))
    return written, inputs


def cmd_cv(p: dict, out: Path):
    src = _require(p, "in")
    sample = aio.read_sample(src)
    if p["candidates"]:
        cands = [RegScheme.parse(s) for s in p["candidates"]]
    else:
        eig = functional_pca(compute_moments(sample, center=p["center"]).cov)
        cands = scheme_candidates(eig.eigenvalues, p["max_k"])
    rep = cross_validate(sample, cands, p["origin"], p["center"])
    written = [aio.write_json(out / "cv.json", rep.to_dict())]
    return written, [src]


def cmd_changepoint(p: dict, out: Path):
    src = _require(p, "in")
    sample = aio.read_sample(src)
    test = changepoint_test(sample, _scheme(p["scheme"]), p["reps"], p["seed"], p["center"])
    rep = test.to_dict() | {"scheme": test.estimate.scheme.to_dict()}
    written = [aio.write_json(out / "changepoint.json", rep)]
    b = test.cusum.bridge_norms
    written.append(aio.write_long_csv(out / "cusum_long.csv", {
        "bridge_norm": (np.arange(1, b.size + 1), b),
        "critical_value": (np.arange(1, b.size + 1), np.full(b.size, test.critical_value))}))
    if p["plots"]:
        written.append(_plots().plot_cusum(b, test.critical_value, out / "cusum.png"))
    return written, [src]


def cmd_elnino(p: dict, out: Path):
    data = p["data"] or bundled_elnino_path()
    cfg = {"smoothing": p["smoothing"], "grid": p["grid"], "train_first": p["train_first"],
           "train_last": p["train_last"], "test_year": p["train_last"] + 1}
    res = elnino_pipeline(data, cfg)
    rep = res.report
    written = [aio.write_json(out / "report.json", res.to_dict())]
    months = np.arange(1, 13)
    buf = "month,predicted,actual\n" + "".join(
        f"{m},{pr!r},{ac!r}\n" for m, pr, ac in zip(months, rep.predictions.tolist(), rep.actuals.tolist()))
    written.append(aio.atomic_write(out / "prediction.csv", buf))
    hist = res.train_curves.values[-3:]
    hist_m = np.array([np.interp(month_positions(), res.train_curves.grid.points, h) for h in hist])
    written.append(aio.write_long_csv(out / "forecast_long.csv", {
        "history": (np.arange(-hist_m.size, 0) + 1, hist_m.ravel()),
        "observed": (months, rep.actuals),
        "predicted": (months, rep.predictions)}))
    if p["plots"]:
        written.append(_plots().plot_forecast(months, rep.actuals, rep.predictions,
                                              out / "forecast.png", history=hist_m,
                                              title=f"forecast of {cfg['test_year']}"))
    return written, [data]


def cmd_mc_lln(p: dict, out: Path):
    spec = reference_model(p["model"], Grid.uniform(p["grid"]))
    res = mc_lln_rate(spec, p["n"], p["reps"], p["seed"])
    return [aio.write_json(out / "mc_lln.json", res.to_dict())], []


def cmd_mc_clt(p: dict, out: Path):
    spec = reference_model(p["model"], Grid.uniform(p["grid"]))
    res = mc_mean_clt(spec, p["n"], p["reps"], p["seed"], p["directions"], p["batch_size"])
    written = [aio.write_json(out / "mc_clt.json", res.to_dict())]
    if p["plots"]:
        written.append(_plots().plot_histogram(
            res.scores[:, 0] / np.sqrt(res.targets[0]), out / "mc_clt_scores.png",
            xlabel="standardized leading score"))
    return written, []


HANDLERS = {
    "simulate": cmd_simulate, "moments": cmd_moments, "estimate": cmd_estimate,
    "predict": cmd_predict, "cv": cmd_cv, "changepoint": cmd_changepoint,
    "elnino": cmd_elnino, "mc-lln": cmd_mc_lln, "mc-clt": cmd_mc_clt,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        params = resolve(ns.command, ns)
        out = Path(params["out"])
        written, inputs = HANDLERS[ns.command](params, out)
        echo = {k: v for k, v in params.items() if k != "out"}
        if ns.config:
            inputs = [*inputs, ns.config]
        aio.write_manifest(out, ns.command, echo, [i for i in inputs if i], written)
    except (ConfigError, UsageError) as exc:
        print(f"arhlab {ns.command}: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"arhlab {ns.command}: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
