"""Batch command-line front end.

Three subcommands: ``generate`` (synthetic datasets), ``estimate`` (BCV
score grid + minima), ``cluster`` (spectral clustering run).  Every output
file gets a ``.run.json`` sidecar recording the exact parameters and seed,
and identical invocations produce byte-identical files.
"""
import argparse
import csv
import json
import sys

import numpy as np

from . import __version__
from .bcv import find_minima, score_grid
from .cluster import degree_feature_column, spectral_cluster
from .datasets import PRESET_NAMES, BlobSpec, gaussian_blobs, generate_preset
from .errors import EmptyGrid, LapBcvError, ParseError, UnknownPreset
from .graph import Dataset, sigma_of_gamma

DEFAULT_GAMMAS = [0.005, 0.028, 0.158, 1.58]
DEFAULT_XIS = [1e-14, 6.3e-13, 1e-12, 2.5e-9]

LABEL_COLUMN = "truth_label"
COARSE_COLUMN = "truth_label_coarse"


def _fmt(x):
    """Shortest round-trip decimal form; deterministic across runs."""
    return repr(float(x))


def write_dataset_csv(path, data):
    names = data.column_names or [f"x{i}" for i in range(data.n_features)]
    header = list(names)
    if data.truth_labels is not None:
        header.append(LABEL_COLUMN)
    if data.coarse_labels is not None:
        header.append(COARSE_COLUMN)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i in range(data.n_samples):
            row = [_fmt(v) for v in data.values[i]]
            if data.truth_labels is not None:
                row.append(str(int(data.truth_labels[i])))
            if data.coarse_labels is not None:
                row.append(str(int(data.coarse_labels[i])))
            w.writerow(row)


def read_dataset_csv(path):
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ParseError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", line=1) from None
        header = [h.strip() for h in header]
        label_idx = header.index(LABEL_COLUMN) if LABEL_COLUMN in header else None
        coarse_idx = header.index(COARSE_COLUMN) if COARSE_COLUMN in header else None
        feat_idx = [i for i in range(len(header))
                    if i not in (label_idx, coarse_idx)]
        if not feat_idx:
            raise ParseError("no feature columns in header", line=1)
        rows, labels, coarse = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"expected {len(header)} fields, got {len(row)}", line=lineno)
            try:
                rows.append([float(row[i]) for i in feat_idx])
                if label_idx is not None:
                    labels.append(int(float(row[label_idx])))
                if coarse_idx is not None:
                    coarse.append(int(float(row[coarse_idx])))
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from exc
        if len(rows) < 2:
            raise ParseError(f"need at least 2 data rows, found {len(rows)}")
    return Dataset(
        values=np.array(rows, dtype=np.float64),
        column_names=[header[i] for i in feat_idx],
        truth_labels=np.array(labels) if label_idx is not None else None,
        coarse_labels=np.array(coarse) if coarse_idx is not None else None)


def _write_sidecar(out_path, command, params):
    record = {"tool": "lapbcv", "version": __version__, "command": command,
              "params": params}
    with open(str(out_path) + ".run.json", "w") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_generate(args):
    if args.preset is not None:
        try:
            data = generate_preset(args.preset, args.seed)
        except KeyError:
            raise UnknownPreset(
                f"unknown preset {args.preset!r}; valid presets: "
                + ", ".join(PRESET_NAMES)) from None
        params = {"preset": args.preset, "seed": args.seed}
    else:
        spec = BlobSpec(n_samples=args.n_samples, n_features=args.n_features,
                        n_clusters=args.n_clusters, cluster_std=args.cluster_std,
                        center_scale=args.center_scale, seed=args.seed,
                        separation_factor=args.separation_factor)
        data = gaussian_blobs(spec)
        params = {"seed": args.seed, "blob_spec": {
            "n_samples": spec.n_samples, "n_features": spec.n_features,
            "n_clusters": spec.n_clusters, "cluster_std": spec.cluster_std,
            "center_scale": spec.center_scale,
            "separation_factor": spec.separation_factor}}
    write_dataset_csv(args.out, data)
    _write_sidecar(args.out, "generate", params)
    print(f"wrote {data.n_samples} rows x {data.n_features} features to {args.out}")
    return 0


def cmd_estimate(args):
    data = read_dataset_csv(args.in_path)
    k_values = list(range(args.k_min, args.k_max + 1))
    gammas = sorted(args.gamma) if args.gamma else list(DEFAULT_GAMMAS)
    xis = sorted(args.xi) if args.xi else list(DEFAULT_XIS)
    grid = score_grid(data, k_values, gammas, xis, n_shuffles=args.shuffles,
                      master_seed=args.seed, n_jobs=args.jobs)

    score_path = args.out + ".scores.csv"
    with open(score_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "gamma", "xi", "sigma", "score", "n_shuffles",
                    "master_seed"])
        for ki, k in enumerate(grid.k_values):
            for gi, g in enumerate(grid.gamma_values):
                for xj, x in enumerate(grid.xi_values):
                    s = grid.scores[ki, gi, xj]
                    if np.isfinite(s):
                        w.writerow([k, _fmt(g), _fmt(x), _fmt(sigma_of_gamma(g)),
                                    _fmt(s), grid.n_shuffles, grid.master_seed])

    try:
        minima = find_minima(grid)
    except EmptyGrid:
        minima = []
    minima_path = args.out + ".minima.json"
    with open(minima_path, "w") as fh:
        json.dump([{"k": m.k, "gamma": m.gamma, "xi": m.xi, "sigma": m.sigma,
                    "score": m.score, "on_boundary": m.on_boundary}
                   for m in minima], fh, indent=2)
        fh.write("\n")

    _write_sidecar(args.out, "estimate", {
        "in": args.in_path, "k_min": args.k_min, "k_max": args.k_max,
        "gamma": gammas, "xi": xis, "shuffles": args.shuffles,
        "seed": args.seed})
    print(f"wrote {score_path} and {minima_path}")
    if minima:
        best = minima[0]
        print(f"best minimum: k={best.k} gamma={best.gamma:g} "
              f"sigma={best.sigma:.4g} xi={best.xi:g} score={best.score:.6g}"
              + (" (boundary)" if best.on_boundary else ""))
    if grid.failures:
        for g, x, msg in grid.failures:
            print(f"estimate: failed cell gamma={g:g} xi={x:g}: {msg}",
                  file=sys.stderr)
        return 1
    return 0


def cmd_cluster(args):
    data = read_dataset_csv(args.in_path)
    features = data
    if args.density_gamma is not None:
        features = degree_feature_column(data, gamma_density=args.density_gamma)
    result = spectral_cluster(features, args.k, args.gamma, seed=args.seed)

    names = features.column_names or [f"x{i}" for i in range(features.n_features)]
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        header = list(names)
        if data.truth_labels is not None:
            header.append(LABEL_COLUMN)
        if data.coarse_labels is not None:
            header.append(COARSE_COLUMN)
        header.append("label")
        w.writerow(header)
        for i in range(features.n_samples):
            row = [_fmt(v) for v in features.values[i]]
            if data.truth_labels is not None:
                row.append(str(int(data.truth_labels[i])))
            if data.coarse_labels is not None:
                row.append(str(int(data.coarse_labels[i])))
            row.append(str(int(result.labels[i])))
            w.writerow(row)

    _write_sidecar(args.out, "cluster", {
        "in": args.in_path, "k": args.k, "gamma": args.gamma,
        "seed": args.seed, "density_gamma": args.density_gamma})

    counts = np.bincount(result.labels, minlength=args.k)
    order = np.argsort(-counts)
    print(f"clustered {features.n_samples} rows into k={args.k} "
          f"(gamma={args.gamma:g}, inertia={result.inertia:.6g})")
    for ci in order:
        if counts[ci] > 0:
            print(f"  cluster {ci}: {counts[ci]} rows")
    if data.truth_labels is not None:
        from sklearn.metrics import adjusted_rand_score
        ari = adjusted_rand_score(data.truth_labels, result.labels)
        print(f"adjusted Rand index vs truth_label: {ari:.4f}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="lapbcv",
        description="Estimate spectral-clustering hyperparameters by "
                    "bi-cross-validating the regularized inverse Laplacian, "
                    "then run the clustering.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic dataset CSV")
    g.add_argument("--preset", choices=PRESET_NAMES, default=None,
                   help="named dataset preset")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--n-samples", type=int, default=150)
    g.add_argument("--n-features", type=int, default=2)
    g.add_argument("--n-clusters", type=int, default=3)
    g.add_argument("--cluster-std", type=float, default=1.0)
    g.add_argument("--center-scale", type=float, default=10.0)
    g.add_argument("--separation-factor", type=float, default=4.0)
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("estimate", help="sweep the BCV score grid and "
                                        "report minima")
    e.add_argument("--in", dest="in_path", required=True)
    e.add_argument("--out", required=True,
                   help="output prefix; writes <out>.scores.csv and "
                        "<out>.minima.json")
    e.add_argument("--k-min", type=int, default=2)
    e.add_argument("--k-max", type=int, default=15)
    e.add_argument("--gamma", type=float, action="append", default=None,
                   help="repeatable; default grid "
                        + ",".join(str(g_) for g_ in DEFAULT_GAMMAS))
    e.add_argument("--xi", type=float, action="append", default=None,
                   help="repeatable; default grid "
                        + ",".join(str(x) for x in DEFAULT_XIS))
    e.add_argument("--shuffles", type=int, default=40)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--jobs", type=int, default=1)
    e.set_defaults(func=cmd_estimate)

    c = sub.add_parser("cluster", help="run spectral clustering at fixed "
                                       "(k, gamma)")
    c.add_argument("--in", dest="in_path", required=True)
    c.add_argument("--out", required=True)
    c.add_argument("--k", type=int, required=True)
    c.add_argument("--gamma", type=float, required=True)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--density-gamma", type=float, default=None,
                   help="append a local-density feature column computed at "
                        "this RBF width before clustering")
    c.set_defaults(func=cmd_cluster)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except LapBcvError as exc:
        print(f"lapbcv {args.command}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"lapbcv {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
