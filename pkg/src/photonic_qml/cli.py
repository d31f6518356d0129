"""``photonic-qml`` command-line interface.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure, 5 file I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from collections import Counter
from pathlib import Path

import numpy as np

from . import data, gkm, persist, qerks, report, vqc
from .config import RunConfig, load_config
from .errors import ConfigError, DataError, NumericalError
from .fock import FockState
from .metrics import accuracy, sign

logger = logging.getLogger("photonic_qml")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4, 5
SUBSETS = ("all", "train", "validation", "test")


def _write_json(path, obj) -> None:
    Path(path).write_text(persist.dumps(obj), encoding="utf-8")


def _ratios(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected three comma-separated numbers, got {text!r}")


def _add_split_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("split")
    g.add_argument("--split-ratios", type=_ratios, help="train,validation,test percentages (80,10,10)")
    g.add_argument("--split-seed", type=int)
    g.add_argument("--no-stratify", dest="stratified", action="store_const", const=False)


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--method", choices=("gkm", "rks", "vqc"))
    g.add_argument("-n", "--photons", type=int, help="photons for gkm/rks (4 / 1)")
    g.add_argument("--input-state", help="VQC input Fock state, e.g. 1,0,0")
    g.add_argument("--sigma", type=float)
    g.add_argument("--alpha", type=float)
    g.add_argument("--gamma", type=float)
    g.add_argument("-k", type=int, dest="k")
    g.add_argument("-R", type=int, dest="R", help="random features")
    g.add_argument("--dist", choices=("gaussian", "chi2"))
    g.add_argument("--placement", choices=("outer", "inner"))
    g.add_argument("--ridge", type=float)
    g.add_argument("--fit", choices=("ls", "bh"), help="GKM observable fit")
    g.add_argument("--delta-count", type=int)
    g.add_argument("--delta-seed", type=int)
    g.add_argument("--niter", type=int)
    g.add_argument("--niter-basin", type=int)
    g.add_argument("--restarts", type=int)
    g.add_argument("--max-iter", type=int)
    g.add_argument("--no-polish", dest="polish", action="store_const", const=False)
    g.add_argument("--seed", type=int)


_CONFIG_KEYS = [f for f in RunConfig.__dataclass_fields__]


def _config(args) -> RunConfig:
    flags = {k: getattr(args, k, None) for k in _CONFIG_KEYS}
    if flags.get("input_state") is not None:
        flags["input_state"] = ",".join(map(str, FockState.parse(flags["input_state"])))
    return load_config(args.config, flags)


def _split(ds: data.Dataset2D, cfg: RunConfig) -> data.SplitAssignment:
    return data.split_dataset(ds.y, cfg.split_ratios, cfg.split_seed, cfg.stratified)


def _read_points(path) -> tuple[np.ndarray, np.ndarray | None]:
    """``x1,x2`` or ``x1,x2,label`` CSV; labels are returned when present."""
    with open(path, newline="") as fh:
        header = next(csv.reader(fh), None)
    if header is not None and [h.strip() for h in header] == ["x1", "x2"]:
        arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if arr.size == 0:
            raise DataError(f"{path}: no data rows")
        return arr, None
    ds = data.load_2d_vectors(path)
    return ds.x, ds.y


# --------------------------------------------------------------------------
# commands


def cmd_synth_data(args) -> int:
    ds = data.synth_dataset(args.n, args.overlap, args.seed)
    data.save_2d_vectors(ds, args.out)
    print(f"wrote {len(ds)} points to {args.out}; Bayes accuracy {data.synth_bayes_accuracy(args.overlap):.4f}")
    return EXIT_OK


def cmd_prepare_data(args) -> int:
    cfg = _config(args)
    records = data.read_polymer_csv(args.input)
    kept = data.filter_length(records)
    if len(kept) >= 2:
        kept = data.filter_outliers(kept, args.outlier_k)
    kept = [r for r in data.label_records(kept) if r.label != "MIR"]
    if not kept:
        raise DataError("class absent: no VIS or NIR records left after filtering")
    dictionary = data.build_dictionary((r.smiles for r in records), args.reserve_padding)
    labels = [r.label for r in kept]
    split = data.split_dataset(labels, cfg.split_ratios, cfg.split_seed, cfg.stratified)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "encoded.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["smiles", "gap_ev", "label"] + [f"v{i + 1}" for i in range(data.ENCODED_LENGTH)])
        for r in kept:
            w.writerow([r.smiles, repr(r.gap), r.label] + data.encode_smiles(r.smiles, dictionary).tolist())
    _write_json(out / "dictionary.json", {"format_version": 1, "kind": "char_dictionary", **dictionary.to_json()})
    _write_json(out / "split.json", split.to_json())

    print(f"{len(records)} records read, {len(kept)} kept")
    for name, idx in split.sets().items():
        counts = Counter(labels[i] for i in idx)
        print(f"{name:<10} {len(idx):>6}  VIS {counts['VIS']:>6}  NIR {counts['NIR']:>6}")
    return EXIT_OK


def _fit_observable(cfg: RunConfig, n: int):
    deltas = gkm.sample_deltas(cfg.delta_count, cfg.delta_seed)
    if cfg.fit == "ls":
        obs = gkm.fit_observable_ls(n, cfg.sigma, deltas)
    else:
        obs = gkm.fit_observable_bh(n, cfg.sigma, deltas, cfg.niter, cfg.niter_basin, seed=cfg.seed)
    return obs, gkm.fit_loss(obs, deltas, cfg.sigma)


def cmd_fit_kernel(args) -> int:
    cfg = _config(args)
    n = cfg.photons if cfg.photons is not None else 4
    if not 1 <= n <= 10:
        raise ConfigError(f"fit-kernel supports 1..10 photons, got {n}")
    obs, loss = _fit_observable(cfg, n)
    delta, target, model_vals = report.kernel_fit_curve(obs, cfg.sigma)
    report.write_kernel_csv(args.out, delta, target, model_vals)
    summary = {
        "format_version": 1,
        "kind": "kernel_fit",
        "photons": n,
        "sigma": cfg.sigma,
        "fit": cfg.fit,
        "delta_count": cfg.delta_count,
        "delta_seed": cfg.delta_seed,
        "loss": loss,
        "observable": persist.observable_to_json(obs),
    }
    _write_json(Path(args.out).with_suffix(".json"), summary)
    print(f"n={n} sigma={cfg.sigma} loss={loss:.6e}")
    return EXIT_OK


def _train_model(cfg: RunConfig, train: data.Dataset2D, val: data.Dataset2D):
    """Returns the model and method-specific metrics."""
    extra: dict = {}
    if cfg.method == "gkm":
        n = cfg.n_photons
        obs, fit = _fit_observable(cfg, n)
        alpha = cfg.alpha if cfg.alpha is not None else gkm.default_alpha(n)
        seeds = {"delta_seed": cfg.delta_seed, "split_seed": cfg.split_seed, "fit_seed": cfg.seed}
        model = gkm.train_gkm(train.x, train.y, obs, alpha, cfg.sigma, seeds)
        extra = {"photons": n, "alpha": alpha, "sigma": cfg.sigma, "kernel_fit_loss": fit}
        f = model.decision_function(train.x)
        extra["loss"] = float(np.mean((train.y - f) ** 2) / 2)
    elif cfg.method == "rks":
        n = cfg.n_photons
        model = qerks.train_rks(train.x, train.y, cfg.R, cfg.gamma, cfg.dist, cfg.seed, n, cfg.k,
                                cfg.placement, cfg.ridge)
        f = model.decision_function(train.x)
        extra = {"photons": n, "R": cfg.R, "gamma": cfg.gamma, "k": cfg.k, "dist": cfg.dist,
                 "placement": cfg.placement, "seed": cfg.seed,
                 "loss": float(np.mean((train.y - f) ** 2) / 2)}
    else:
        alpha = cfg.alpha if cfg.alpha is not None else vqc.DEFAULT_ALPHA
        seeds = vqc.default_seeds(cfg.restarts, cfg.seed)
        model = vqc.train_vqc(train.x, train.y, FockState.parse(cfg.input_state), alpha, cfg.restarts,
                              seeds, cfg.max_iter, val.x if len(val) else None,
                              val.y if len(val) else None, polish=cfg.polish)
        extra = {"input_state": cfg.input_state, "alpha": alpha, "loss": model.retained_loss,
                 "restart_losses": model.restart_losses, "retained": model.retained, "seeds": seeds}
    return model, extra


def cmd_train(args) -> int:
    cfg = _config(args)
    ds = data.load_2d_vectors(args.data)
    split = _split(ds, cfg)
    parts = {k: ds.subset(v) for k, v in split.sets().items()}
    start = time.perf_counter()
    model, extra = _train_model(cfg, parts["train"], parts["validation"])
    elapsed = time.perf_counter() - start
    persist.save_model(model, args.model_out)

    metrics = {"format_version": 1, "kind": "train_metrics", "method": cfg.method,
               "config": cfg.as_dict(), "sizes": {k: len(v) for k, v in parts.items()}, **extra}
    for name, part in parts.items():
        metrics[f"{name}_accuracy"] = accuracy(model.predict(part.x), part.y) if len(part) else None
    metrics_out = args.metrics_out or Path(args.model_out).with_suffix(".metrics.json")
    _write_json(metrics_out, metrics)
    # wall time is reported here only, so the metrics file stays reproducible
    accs = " ".join(f"{k} {_fmt(metrics[f'{k}_accuracy'])}" for k in parts)
    print(f"{cfg.method}: {accs} ({elapsed:.1f} s)")
    return EXIT_OK


def _fmt(v) -> str:
    return "n/a" if v is None else f"{v:.4f}"


def _subset_points(args, x, y):
    if args.subset == "all":
        return x, y
    if y is None:
        raise DataError(f"--subset {args.subset} needs a labelled data file")
    cfg = _config(args)
    split = data.split_dataset(y, cfg.split_ratios, cfg.split_seed, cfg.stratified)
    idx = np.asarray(getattr(split, args.subset), dtype=int)
    return x[idx], y[idx]


def cmd_predict(args) -> int:
    model = persist.load_model(args.model)
    x, _ = _read_points(args.data)
    dec = model.decision_function(x)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x1", "x2", "decision", "label"])
        for (a, b), d, s in zip(x, dec, sign(dec)):
            w.writerow([repr(float(a)), repr(float(b)), repr(float(d)), int(s)])
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


def cmd_score(args) -> int:
    model = persist.load_model(args.model)
    x, y = _read_points(args.data)
    if y is None:
        raise DataError(f"{args.data}: scoring needs labels")
    x, y = _subset_points(args, x, y)
    acc = accuracy(model.predict(x), y)
    if args.out:
        _write_json(args.out, {"format_version": 1, "kind": "score", "model_kind": model.kind,
                               "subset": args.subset, "points": int(len(y)), "accuracy": acc})
    print(f"accuracy {acc:.4f} on {len(y)} points ({args.subset})")
    return EXIT_OK


def cmd_boundary_grid(args) -> int:
    model = persist.load_model(args.model)
    pts, dec = report.boundary_grid(model, args.resolution)
    report.write_grid_csv(args.out, pts, dec)
    if args.ppm:
        overlay = None
        if args.points:
            x, y = _read_points(args.points)
            overlay, _ = _subset_points(args, x, y)
        report.write_ppm(args.ppm, report.sign_image(dec, args.resolution, overlay))
    print(f"wrote {args.resolution}x{args.resolution} grid to {args.out}")
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="photonic-qml", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="INI file with a [run] section")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth-data", help="write a synthetic two-cloud dataset")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--overlap", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth_data)

    p = sub.add_parser("prepare-data", help="encode a polymer CSV and split it")
    p.add_argument("--input", required=True, help="CSV with header smiles,gap_ev")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--outlier-k", type=float, default=data.OUTLIER_K)
    p.add_argument("--reserve-padding", action="store_true", help="number characters from 1")
    _add_split_flags(p)
    p.set_defaults(func=cmd_prepare_data)

    p = sub.add_parser("fit-kernel", help="fit the Gaussian-kernel observable and export the curve")
    p.add_argument("-n", "--photons", type=int)
    p.add_argument("--sigma", type=float)
    p.add_argument("--samples", dest="delta_count", type=int)
    p.add_argument("--seed", dest="delta_seed", type=int, help="seed of the training deltas")
    p.add_argument("--fit", choices=("ls", "bh"))
    p.add_argument("--niter", type=int)
    p.add_argument("--niter-basin", type=int)
    p.add_argument("--out", required=True, help="CSV path; a .json summary is written beside it")
    p.set_defaults(func=cmd_fit_kernel)

    p = sub.add_parser("train", help="train a classifier on a 2-D dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--model-out", required=True)
    p.add_argument("--metrics-out")
    _add_model_flags(p)
    _add_split_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="decision values and labels for points")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("score", help="accuracy of a model on labelled data")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--subset", choices=SUBSETS, default="all")
    p.add_argument("--out")
    _add_split_flags(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("boundary-grid", help="decision values over a grid on [-1, 1]^2")
    p.add_argument("--model", required=True)
    p.add_argument("--resolution", type=int, default=200)
    p.add_argument("--out", required=True)
    p.add_argument("--ppm", help="also write a sign heatmap")
    p.add_argument("--points", help="labelled points to overlay on the heatmap")
    p.add_argument("--subset", choices=SUBSETS, default="all")
    _add_split_flags(p)
    p.set_defaults(func=cmd_boundary_grid)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except BrokenPipeError:
        sys.stderr.close()
        return EXIT_OK
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
