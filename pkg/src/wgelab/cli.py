"""Command line front end: ``wgelab {closed-form,sweep,fit,gen-data}``.

Exit codes: 0 ok, 2 invalid model or malformed input, 3 covariance not
SPD, 4 failed sweep cells under ``--strict``, 5 empty group in a data
file.  Data goes to stdout, diagnostics to stderr.  Option values come
from the command line first, then the ``--config`` JSON file, then the
built-in defaults.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import experiments
from .closed_form import (
    Method,
    group_errors,
    optimal_model,
    wge,
    wge_closed_orthogonal,
)
from .dataset import GROUPS, format_group_counts
from .empirical import downsample, empirical_group_errors, fit, fit_lasso
from .errors import EmptyGroup, InvalidModel, NotSPD, WgeLabError
from .io import MalformedFile, read_embeddings, write_embeddings
from .model import (
    GaussianGroupModel,
    check_orthogonality,
    delta_bar,
    mahalanobis_norms,
    reference_model,
    sample_dataset,
)

SCHEMA = 1

DEFAULTS = {
    "model": "reference",
    "pi0": None,
    "seed": 0,
    "methods": "srm,ds,uw,mu",
    "alpha": 1.0,
    "format": "text",
    # sweep
    "kind": "wge-vs-n",
    "grid": None,
    "n": None,
    "seeds": 10,
    "trials": 10,
    "eval": "analytic",
    "out": None,
    "svg": False,
    "per_trial": False,
    "strict": False,
    # fit
    "eval_file": None,
    "split": 0.3,
    "repeats": 10,
    "lambdas": None,
}

SWEEP_KINDS = {
    "wge-vs-n": ("n", "wge"),
    "mse-vs-n": ("n", "param_mse"),
    "wge-vs-pi0": ("pi0", "wge"),
}


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _resolve(args):
    config = {}
    if args.config:
        try:
            config = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read config {args.config}: {exc}", 2) from None
    opts = {}
    for key, default in DEFAULTS.items():
        value = getattr(args, key, None)
        if value is None or value is False:
            value = config.get(key, default if value is None else value)
        opts[key] = value
    return argparse.Namespace(**opts)


def load_model(source, pi0=None) -> GaussianGroupModel:
    """``source`` is ``"reference"``, a JSON file path, or inline JSON."""
    if isinstance(source, dict):
        m = GaussianGroupModel.from_dict(source)
    elif source == "reference":
        m = reference_model()
    elif str(source).lstrip().startswith("{"):
        m = GaussianGroupModel.from_json(source)
    elif Path(source).is_file():
        m = GaussianGroupModel.from_json(Path(source).read_text())
    else:
        raise InvalidModel(f"model {source!r} is neither a file, inline JSON nor 'reference'")
    return m.with_pi0(float(pi0)) if pi0 is not None else m


def _methods(opts):
    if isinstance(opts.methods, (list, tuple)):
        names = list(opts.methods)
    else:
        names = [s for s in str(opts.methods).split(",") if s.strip()]
    try:
        return [Method.parse(s, alpha=float(opts.alpha)) for s in names]
    except ValueError as exc:
        raise CliError(str(exc), 2) from None


def _floats(text):
    if text is None:
        return None
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def _group_dict(errors):
    return {str(g): errors[g] for g in GROUPS}


def cmd_closed_form(opts, out):
    m = load_model(opts.model, opts.pi0)
    orthogonal = check_orthogonality(m)
    norms = mahalanobis_norms(m)
    rows = []
    for method in _methods(opts):
        theta = optimal_model(m, method)
        row = {"method": method.label, "w": theta.w.tolist(), "b": theta.b,
               "group_errors": _group_dict(group_errors(theta, m)), "wge": wge(theta, m)}
        if orthogonal:
            row["wge_closed_orthogonal"] = wge_closed_orthogonal(m, method)
        rows.append(row)
    report = {
        "schema": SCHEMA,
        "model": m.to_dict(),
        "orthogonal": bool(orthogonal),
        "delta_bar": delta_bar(m).tolist(),
        "norm_dc_sq": norms.norm_dc_sq,
        "norm_dd_sq": norms.norm_dd_sq,
        "cross": norms.cross,
        "c_tilde": norms.c_tilde,
        "methods": rows,
    }
    if opts.format == "json":
        out.write(json.dumps(report, indent=2) + "\n")
        return 0
    out.write(f"dim={m.dim}  pi0={m.pi0:g}  orthogonal={orthogonal}\n")
    out.write(f"|dc|^2={norms.norm_dc_sq:.6g}  |dd|^2={norms.norm_dd_sq:.6g}  "
              f"cross={norms.cross:.3g}  c_tilde={norms.c_tilde:.6g}\n")
    out.write("delta_bar=" + np.array2string(delta_bar(m), precision=6) + "\n\n")
    head = f"{'method':<8} " + " ".join(f"{'E' + str(g):>11}" for g in GROUPS) + f" {'WGE':>11}"
    if orthogonal:
        head += f" {'WGE_closed':>11}"
    out.write(head + "  w, b\n")
    for row in rows:
        line = f"{row['method']:<8} " + " ".join(f"{v:11.6f}" for v in row["group_errors"].values())
        line += f" {row['wge']:11.6f}"
        if orthogonal:
            line += f" {row['wge_closed_orthogonal']:11.6f}"
        w = np.array2string(np.asarray(row["w"]), precision=5)
        out.write(f"{line}  {w}, {row['b']:.5f}\n")
    return 0


def cmd_sweep(opts, out, err):
    if opts.kind not in SWEEP_KINDS:
        raise CliError(f"unknown sweep kind {opts.kind!r}", 2)
    grid_kind, statistic = SWEEP_KINDS[opts.kind]
    m = load_model(opts.model, opts.pi0)
    grid = _floats(opts.grid)
    try:
        cfg = experiments.SweepConfig(
            model=m, methods=tuple(_methods(opts)), grid=tuple(grid) if grid else None,
            grid_kind=grid_kind, n=int(opts.n or 10_000), trials_per_seed=int(opts.trials),
            seeds=int(opts.seeds), evaluation=opts.eval, master_seed=int(opts.seed))
    except ValueError as exc:
        raise CliError(str(exc), 2) from None
    records = experiments.run_sweep(cfg, statistic)
    text = experiments.records_to_csv(records)
    out.write(text)
    if opts.out:
        outdir = Path(opts.out)
        outdir.mkdir(parents=True, exist_ok=True)
        stem = opts.kind
        (outdir / f"{stem}.csv").write_text(text)
        written = [outdir / f"{stem}.csv"]
        if opts.per_trial:
            (outdir / f"{stem}_trials.csv").write_text(experiments.trials_to_csv(records))
            written.append(outdir / f"{stem}_trials.csv")
        if opts.svg:
            (outdir / f"{stem}.svg").write_text(experiments.records_to_svg(records, title=stem))
            written.append(outdir / f"{stem}.svg")
        err.write("wrote " + ", ".join(map(str, written)) + "\n")
    failures = sum(r.failures for r in records)
    if failures:
        err.write(f"{failures} fit(s) failed; see the failures column\n")
        if opts.strict:
            return 4
    return 0


def _split(ds, fraction, seed):
    if not 0 < fraction < 1:
        raise CliError("--split must lie strictly between 0 and 1", 2)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(2**31,)))
    perm = rng.permutation(ds.n)
    n_eval = int(round(fraction * ds.n))
    return ds.subset(np.sort(perm[n_eval:])), ds.subset(np.sort(perm[:n_eval]))


def _fitters(opts):
    for method in _methods(opts):
        yield method.label, (lambda ds, s, method=method: fit(ds, method, s).model)
    for lam in _floats(opts.lambdas) or []:
        yield f"DS+L1({lam:g})", (lambda ds, s, lam=lam: fit_lasso(downsample(ds, s), lam).model)
        yield f"UW+L1({lam:g})", (lambda ds, s, lam=lam: fit_lasso(ds, lam, "uw").model)


def _spread(values, axis=None):
    # identical repeats must report exactly zero, not a rounding residue
    std = np.std(values, axis=axis)
    return np.where(np.ptp(values, axis=axis) == 0, 0.0, std)


def cmd_fit(opts, embeddings, out, err):
    train = read_embeddings(embeddings)
    if opts.eval_file:
        test = read_embeddings(opts.eval_file)
        if test.dim != train.dim:
            raise CliError("evaluation file has a different dimension", 2)
    else:
        train, test = _split(train, float(opts.split), int(opts.seed))
        train.require_groups()
        test.require_groups()
    err.write(f"train: {format_group_counts(train.group_counts)}\n")
    err.write(f"eval:  {format_group_counts(test.group_counts)}\n")
    repeats = int(opts.repeats)
    rows = []
    for label, fitter in _fitters(opts):
        per_group = np.empty((repeats, 4))
        for r in range(repeats):
            theta = fitter(train, np.random.SeedSequence(int(opts.seed), spawn_key=(r,)))
            per_group[r] = list(empirical_group_errors(theta, test).values())
        worst = per_group.max(axis=1)
        rows.append({
            "method": label,
            "wge_mean": float(worst.mean()), "wge_std": float(_spread(worst)),
            "group_error_mean": {str(g): float(v) for g, v in zip(GROUPS, per_group.mean(axis=0))},
            "group_error_std": {str(g): float(v) for g, v in zip(GROUPS, _spread(per_group, axis=0))},
        })
    report = {"schema": SCHEMA, "repeats": repeats, "train_n": train.n, "eval_n": test.n,
              "rows": rows}
    if opts.format == "json":
        out.write(json.dumps(report, indent=2) + "\n")
        return 0
    out.write(f"WGE (%) mean +- std over {repeats} repeats; train n={train.n}, eval n={test.n}\n")
    out.write(f"{'method':<14}{'WGE':>16}" + "".join(f"{'E' + str(g):>16}" for g in GROUPS) + "\n")
    for row in rows:
        cells = [f"{100 * row['wge_mean']:.2f} +- {100 * row['wge_std']:.2f}"]
        cells += [f"{100 * row['group_error_mean'][str(g)]:.2f} +- {100 * row['group_error_std'][str(g)]:.2f}"
                  for g in GROUPS]
        out.write(f"{row['method']:<14}" + "".join(f"{c:>16}" for c in cells) + "\n")
    return 0


def cmd_gen_data(opts, n, path, err):
    m = load_model(opts.model, opts.pi0)
    ds = sample_dataset(m, int(n), np.random.SeedSequence(int(opts.seed)))
    write_embeddings(ds, path)
    err.write(f"wrote {ds.n} rows to {path}: {format_group_counts(ds.group_counts)}\n")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="wgelab", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with option values")
    common.add_argument("--model", help="model JSON path, inline JSON, or 'reference'")
    common.add_argument("--pi0", type=float, help="override the model's minority prior")
    common.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    common.add_argument("--methods", help="comma list from srm,ds,uw,mu")
    common.add_argument("--alpha", type=float, help="mixup Beta(alpha, alpha) parameter")
    common.add_argument("--format", choices=("text", "json"))
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("closed-form", parents=[common], help="optimal models and exact errors")

    sw = sub.add_parser("sweep", parents=[common], help="Monte Carlo sweeps")
    sw.add_argument("--kind", choices=sorted(SWEEP_KINDS))
    sw.add_argument("--grid", help="comma list of n or pi0 values")
    sw.add_argument("--n", type=int, help="training size for wge-vs-pi0")
    sw.add_argument("--seeds", type=int)
    sw.add_argument("--trials", type=int, help="fits per data seed")
    sw.add_argument("--eval", help="'analytic' or 'holdout:<count>'")
    sw.add_argument("--out", help="directory for CSV/SVG files")
    sw.add_argument("--svg", action="store_true")
    sw.add_argument("--per-trial", action="store_true", dest="per_trial")
    sw.add_argument("--strict", action="store_true")

    ft = sub.add_parser("fit", parents=[common], help="retrain on an embedding CSV")
    ft.add_argument("embeddings")
    ft.add_argument("--eval-file", dest="eval_file")
    ft.add_argument("--split", type=float, help="evaluation fraction when no --eval-file")
    ft.add_argument("--repeats", type=int)
    ft.add_argument("--lambda", dest="lambdas", help="comma list of l1 penalties")

    gd = sub.add_parser("gen-data", parents=[common], help="write a synthetic embedding CSV")
    gd.add_argument("--n", type=int, required=True)
    gd.add_argument("--out", required=True)
    return parser


def main(argv=None, stdout=None, stderr=None):
    out = stdout or sys.stdout
    err = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        opts = _resolve(args)
        if args.command == "closed-form":
            return cmd_closed_form(opts, out)
        if args.command == "sweep":
            return cmd_sweep(opts, out, err)
        if args.command == "fit":
            return cmd_fit(opts, args.embeddings, out, err)
        return cmd_gen_data(opts, args.n, args.out, err)
    except CliError as exc:
        err.write(f"error: {exc}\n")
        return exc.code
    except EmptyGroup as exc:
        err.write(f"error: {exc}\n")
        if exc.counts:
            err.write(f"group counts: {format_group_counts(exc.counts)}\n")
        return 5
    except NotSPD as exc:
        err.write(f"error: covariance is not SPD: {exc}\n")
        return 3
    except (InvalidModel, MalformedFile, OSError) as exc:
        err.write(f"error: {exc}\n")
        return 2
    except WgeLabError as exc:
        err.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
