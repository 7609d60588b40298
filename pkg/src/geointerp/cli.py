"""Command-line pipeline: gen-data, embed, train-ae, train-curve, eval, ablate.

Every command is deterministic given its flags and config; reports embed the
resolved config and a content hash of each input artifact. Exit codes:
0 success, 1 runtime failure, 2 usage or config error.
"""

import argparse
import contextlib
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import plots
from .autoencoder import load_autoencoder, save_autoencoder, train_ae
from .config import ConfigError
from .curve import CubicCurve, curve_eval, load_curve, save_curve
from .datasets import (PointCloud, SwissRollParams, load_csv, sample_semisphere,
                       sample_swissroll, save_csv, save_matrix_csv,
                       swissroll_intrinsic)
from .losses import BatchSpec, LossWeights, train_curve
from .ltsa import Embedding, ltsa_embed
from .oracle import build_report, great_circle, swissroll_geodesic, uniformity_cv

ABLATION_ORDER = ["linear", "conspeed", "min", "conspeed+min",
                  "conspeed+geo", "conspeed+geo+min", "real geodesic"]


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _dump_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _write_history_csv(path, history, keys):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(keys) + "\n")
        for row in history:
            fh.write(",".join(
                str(row[k]) if k == "epoch" else f"{row[k]:.17g}" for k in keys) + "\n")


def _figure_path(out_path, suffix=".png"):
    return Path(out_path).with_suffix(suffix)


def _resolved_seed(doc, flag_seed=None):
    env = os.environ.get(cfgmod.SEED_ENV)
    if env is not None:
        return int(env)
    if flag_seed is not None:
        return flag_seed
    return int(doc["seed"]) if doc else 0


def _load_config(path) -> dict:
    if path is None:
        return cfgmod.resolve({})
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    return cfgmod.load(path)


def _load_cloud(path) -> PointCloud:
    if not os.path.exists(path):
        raise FileNotFoundError(f"cloud file not found: {path}")
    return load_csv(path)


def _angle(u, v) -> float:
    c = float(u @ v / (np.linalg.norm(u) * np.linalg.norm(v)))
    return float(np.degrees(np.arccos(np.clip(c, -1.0, 1.0))))


def pick_semisphere_endpoints(points, radius, target_deg=60.0):
    """Two mid-latitude sample indices separated by ~target_deg.

    Mid-latitude endpoints keep the minor arc strictly inside the open
    hemisphere while the chart distortion there is large enough for the
    loss ablation to separate; near-polar pairs make latent chords already
    geodesic. Deterministic given the cloud: the point closest to z = 0.55 R
    within the z band [0.35 R, 0.75 R], then the band candidate whose angular
    distance to it is closest to the target."""
    z = points[:, 2]
    cand = np.where((z >= 0.35 * radius) & (z <= 0.75 * radius))[0]
    if cand.size < 2:
        raise ValueError("not enough points in the mid-latitude band")
    i = int(cand[np.argmin(np.abs(z[cand] - 0.55 * radius))])
    angles = np.array([_angle(points[i], points[c]) for c in cand])
    j = int(cand[np.argmin(np.abs(angles - target_deg))])
    if i == j:
        raise ValueError("endpoint picker collapsed to one point")
    return i, j


def pick_swissroll_endpoints(intrinsic):
    """Indices on opposite ends of the roll, away from the height boundary."""
    arc, h = intrinsic[:, 0], intrinsic[:, 1]
    lo, hi = np.quantile(h, [1.0 / 3.0, 2.0 / 3.0])
    band = np.where((h >= lo) & (h <= hi))[0]
    i = int(band[np.argmin(arc[band])])
    j = int(band[np.argmax(arc[band])])
    return i, j


# ---------------------------------------------------------------- commands


def cmd_gen_data(args) -> int:
    doc = cfgmod.resolve({})
    seed = _resolved_seed(doc, args.seed)
    if args.manifold == "semisphere":
        cloud = sample_semisphere(args.n, radius=args.radius, seed=seed)
    else:
        params = SwissRollParams(t_min=args.t_min, t_max=args.t_max,
                                 height=args.height, radius_scale=args.radius_scale)
        cloud = sample_swissroll(args.n, params, seed=seed)
    save_csv(cloud, args.out)
    if not args.no_figure:
        plots.save_cloud_figure(cloud.points, _figure_path(args.out),
                                title=f"{args.manifold} (n={args.n}, seed={seed})")
    print(f"wrote {cloud.n} {args.manifold} points to {args.out} (seed {seed})")
    return 0


def cmd_embed(args) -> int:
    doc = _load_config(args.config)
    if args.k is not None:
        doc["ltsa"]["k"] = args.k
    if args.d is not None:
        doc["ltsa"]["d"] = args.d
    cloud = _load_cloud(args.cloud)
    embedding = ltsa_embed(cloud, cfgmod.ltsa_config(doc))
    save_matrix_csv(embedding.coords, args.out)
    if not args.no_figure:
        color = cloud.points[:, 2] if cloud.dim >= 3 else None
        plots.save_embedding_figure(embedding.coords, _figure_path(args.out),
                                    color=color, title="geometric-prior embedding")
    print(f"embedded {cloud.n} points into {embedding.coords.shape[1]}-D "
          f"chart at {args.out}")
    return 0


def cmd_train_ae(args) -> int:
    doc = _load_config(args.config)
    cloud = _load_cloud(args.cloud)
    emb_cloud = _load_cloud(args.embedding)
    cfg = cfgmod.ae_config(doc)
    if emb_cloud.n != cloud.n:
        raise ValueError(
            f"{args.embedding}: {emb_cloud.n} rows do not match cloud {args.cloud} "
            f"({cloud.n} rows)")
    if emb_cloud.dim != cfg.latent_dim:
        raise ValueError(
            f"{args.embedding}: dimension {emb_cloud.dim} does not match "
            f"configured latent dimension {cfg.latent_dim}")
    embedding = Embedding(coords=emb_cloud.points, source="ltsa")
    result = train_ae(cloud, embedding, cfg)
    save_autoencoder(result.model, args.out)
    keys = ["epoch", "rec", "lat", "dec", "total"]
    _write_history_csv(args.history, result.history, keys)
    if not args.no_figure and result.history:
        plots.save_history_figure(result.history, ["rec", "lat", "dec", "total"],
                                  _figure_path(args.history), title="autoencoder loss")
    print(f"trained autoencoder for {cfg.epochs} epochs; "
          f"final reconstruction RMSE {result.final_rmse:.6g}; "
          f"checkpoint at {args.out}")
    return 0


def _parse_vector(text) -> np.ndarray:
    try:
        return np.array([float(f) for f in text.split(",")], dtype=np.float64)
    except ValueError:
        raise ConfigError(f"bad endpoint vector {text!r} (expected comma-separated reals)")


def _resolve_endpoints(args, cloud, model):
    """(z0, z1, record) from index or raw-vector endpoint flags."""
    if args.endpoints is not None:
        i, j = args.endpoints
        if not (0 <= i < cloud.n and 0 <= j < cloud.n):
            raise ValueError(f"endpoint indices ({i}, {j}) out of range for {cloud.n} points")
        x = cloud.points[[i, j]]
        record = {"indices": [i, j]}
    else:
        parts = args.endpoint_vectors.split(";")
        if len(parts) != 2:
            raise ConfigError(
                "endpoint vectors must be two comma-separated points joined "
                "by ';', e.g. --endpoint-vectors='x,y,z;x,y,z'")
        v0, v1 = (_parse_vector(p) for p in parts)
        if v0.shape != v1.shape:
            raise ConfigError("endpoint vectors have different dimensions")
        x = np.vstack([v0, v1])
        if x.shape[1] != cloud.dim:
            raise ValueError(
                f"endpoint vectors have dimension {x.shape[1]}, cloud has {cloud.dim}")
        record = {"vectors": x.tolist()}
    z = model.encode(x)
    return z[0], z[1], record, x


def cmd_train_curve(args) -> int:
    doc = _load_config(args.config)
    cloud = _load_cloud(args.cloud)
    model = load_autoencoder(args.model)
    if model.encoder.in_dim != cloud.dim:
        raise ValueError(
            f"{args.model}: encoder expects {model.encoder.in_dim}-D input, "
            f"cloud {args.cloud} is {cloud.dim}-D")
    weights = cfgmod.loss_weights(doc)
    weights.validate()
    cfg = cfgmod.curve_config(doc, weights)
    z0, z1, record, _ = _resolve_endpoints(args, cloud, model)
    curve, history = train_curve(model.decoder, z0, z1, cfg)
    save_curve(curve, args.out)
    keys = ["epoch", "conspeed", "geo", "min", "total"]
    _write_history_csv(args.history, history, keys)
    if not args.no_figure and history:
        plots.save_history_figure(history, ["conspeed", "geo", "min", "total"],
                                  _figure_path(args.history), title="curve loss")
    final = history[-1]["total"] if history else float("nan")
    print(f"trained curve between endpoints {record} for {cfg.epochs} epochs; "
          f"final loss {final:.6g}; curve at {args.out}")
    return 0


def _oracle_length(kind, doc, cloud, args, model, curve):
    """Analytic geodesic length for the configured manifold, or None."""
    if kind == "none":
        return None
    if kind == "auto":
        kind = "greatcircle" if doc["data"]["manifold"] == "semisphere" else "swissroll"
    if kind == "greatcircle":
        if args.endpoints is not None:
            i, j = args.endpoints
            p0, p1 = cloud.points[i], cloud.points[j]
        else:
            # fall back to decoded endpoints, projected back onto the sphere
            ends = model.decode(np.vstack([curve.z0, curve.z1]))
            radius = float(doc["data"]["radius"])
            p0 = ends[0] * radius / np.linalg.norm(ends[0])
            p1 = ends[1] * radius / np.linalg.norm(ends[1])
        return great_circle(p0, p1, m=8)[1]
    if kind == "swissroll":
        if args.endpoints is None:
            raise ConfigError("--oracle swissroll needs --endpoints (index pair) "
                              "to recover intrinsic coordinates")
        params = cfgmod.swissroll_params(doc)
        q = swissroll_intrinsic(cloud.points[list(args.endpoints)], params)
        bounds = _swissroll_bounds(params)
        return swissroll_geodesic(q[0], q[1], bounds=bounds)
    raise ConfigError(f"unknown oracle {kind!r}")


def _swissroll_bounds(params):
    from .datasets import _spiral_arclength
    total = params.radius_scale * (_spiral_arclength(params.t_max)
                                   - _spiral_arclength(params.t_min))
    return (np.array([0.0, 0.0]), np.array([total, params.height]))


def cmd_eval(args) -> int:
    doc = _load_config(args.config)
    cloud = _load_cloud(args.cloud)
    model = load_autoencoder(args.model)
    curve = load_curve(args.curve)
    if curve.dim != model.latent_dim:
        raise ValueError(
            f"{args.curve}: curve dimension {curve.dim} does not match model "
            f"latent dimension {model.latent_dim}")
    n_eval = int(doc["eval"]["n_samples"])
    dt = float(doc["eval"]["dt"])
    spec = BatchSpec.uniform(n_eval, dt)
    oracle_len = _oracle_length(args.oracle, doc, cloud, args, model, curve)
    report = build_report(model.decoder, curve, cloud, spec.ts, dt,
                          oracle_length=oracle_len)

    decoded = model.decoder.forward(curve_eval(curve, spec.ts))
    decoded_path = args.decoded or str(Path(args.report).with_suffix("")) + "_decoded.csv"
    save_matrix_csv(decoded, decoded_path)

    inputs = {"cloud": _sha256(args.cloud), "model": _sha256(args.model),
              "curve": _sha256(args.curve)}
    if args.config:
        inputs["config"] = _sha256(args.config)
    payload = {
        "report": report.to_dict(),
        "config": doc,
        "inputs": inputs,
        "endpoints": {"indices": list(args.endpoints) if args.endpoints else None,
                      "z0": curve.z0.tolist(), "z1": curve.z1.tolist()},
    }
    _dump_json(args.report, payload)

    if not args.no_figure:
        curves = [("decoded curve", decoded)]
        if args.oracle != "none" and doc["data"]["manifold"] == "semisphere" \
                and args.endpoints is not None:
            i, j = args.endpoints
            arc, _ = great_circle(cloud.points[i], cloud.points[j], m=n_eval)
            curves.append(("analytic geodesic", arc))
        plots.save_cloud_figure(cloud.points, _figure_path(args.report),
                                title="decoded interpolation", curves=curves)
    ratio = f", ratio to oracle {report.length_ratio:.4f}" if report.length_ratio else ""
    print(f"decoded length {report.polyline_length:.6g}{ratio}; "
          f"uniformity CV {report.uniformity_cv:.4f}; "
          f"tangential residual {report.tangential_residual:.4f}; "
          f"report at {args.report}")
    return 0


def _ablation_weights(doc):
    lam1 = float(doc["curve"]["lambda1"])
    lam2 = float(doc["curve"]["lambda2"])
    lam3 = float(doc["curve"]["lambda3"])
    return {
        "linear": None,
        "conspeed": LossWeights(lam1, 0.0, 0.0),
        "min": LossWeights(0.0, 0.0, lam3),
        "conspeed+min": LossWeights(lam1, 0.0, lam3),
        "conspeed+geo": LossWeights(lam1, lam2, 0.0),
        "conspeed+geo+min": LossWeights(lam1, lam2, lam3),
    }


def cmd_ablate(args) -> int:
    doc = _load_config(args.config)
    if doc["data"]["manifold"] != "semisphere":
        raise ConfigError("ablate needs a semisphere config (analytic oracle required)")
    seed = int(doc["seed"])
    radius = float(doc["data"]["radius"])
    cloud = sample_semisphere(int(doc["data"]["n"]), radius=radius, seed=seed)
    embedding = ltsa_embed(cloud, cfgmod.ltsa_config(doc))
    ae = train_ae(cloud, embedding, cfgmod.ae_config(doc))
    model = ae.model

    i, j = pick_semisphere_endpoints(cloud.points, radius)
    z = model.encode(cloud.points[[i, j]])
    z0, z1 = z[0], z[1]

    n_eval = int(doc["eval"]["n_samples"])
    dt = float(doc["eval"]["dt"])
    spec = BatchSpec.uniform(n_eval, dt)
    arc_pts, oracle_len = great_circle(cloud.points[i], cloud.points[j], m=n_eval)

    rows = []
    figure_curves = []
    for label in ABLATION_ORDER:
        if label == "real geodesic":
            rows.append({"loss_combo": label, "length": oracle_len,
                         "uniformity_cv": uniformity_cv(arc_pts),
                         "tangential_residual": None})
            figure_curves.append((label, arc_pts))
            continue
        weights = _ablation_weights(doc)[label]
        if weights is None:
            curve = CubicCurve.chord(z0, z1)
        else:
            curve, _ = train_curve(model.decoder, z0, z1,
                                   cfgmod.curve_config(doc, weights))
        report = build_report(model.decoder, curve, cloud, spec.ts, dt,
                              oracle_length=oracle_len)
        rows.append({"loss_combo": label, "length": report.polyline_length,
                     "uniformity_cv": report.uniformity_cv,
                     "tangential_residual": report.tangential_residual})
        figure_curves.append((label, model.decoder.forward(curve_eval(curve, spec.ts))))

    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("loss_combo,length,uniformity_cv,tangential_residual\n")
        for row in rows:
            resid = "" if row["tangential_residual"] is None \
                else f"{row['tangential_residual']:.17g}"
            fh.write(f"{row['loss_combo']},{row['length']:.17g},"
                     f"{row['uniformity_cv']:.17g},{resid}\n")

    meta = {
        "config": doc,
        "inputs": {"config": _sha256(args.config)} if args.config else {},
        "endpoints": {"indices": [i, j], "separation_deg":
                      _angle(cloud.points[i], cloud.points[j])},
        "rows": rows,
    }
    _dump_json(str(Path(args.out).with_suffix("")) + ".meta.json", meta)

    if not args.no_figure:
        plots.save_cloud_figure(cloud.points, _figure_path(args.out),
                                title="ablation curves", curves=figure_curves)
    for row in rows:
        print(f"{row['loss_combo']:>18s}  length {row['length']:.4f}")
    return 0


# ---------------------------------------------------------------- wiring


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geointerp",
        description="Manifold reconstruction and uniform-speed geodesic interpolation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="sample a synthetic manifold to CSV")
    p.add_argument("--manifold", choices=["semisphere", "swissroll"], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--t-min", type=float, default=cfgmod.DEFAULTS["data"]["t_min"])
    p.add_argument("--t-max", type=float, default=cfgmod.DEFAULTS["data"]["t_max"])
    p.add_argument("--height", type=float, default=cfgmod.DEFAULTS["data"]["height"])
    p.add_argument("--radius-scale", type=float,
                   default=cfgmod.DEFAULTS["data"]["radius_scale"])
    p.add_argument("--no-figure", action="store_true")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("embed", help="LTSA embedding of a cloud CSV")
    p.add_argument("--cloud", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--no-figure", action="store_true")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("train-ae", help="train the geometry-regularized autoencoder")
    p.add_argument("--cloud", required=True)
    p.add_argument("--embedding", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True, help="model checkpoint JSON")
    p.add_argument("--history", required=True, help="loss-history CSV")
    p.add_argument("--no-figure", action="store_true")
    p.set_defaults(func=cmd_train_ae)

    p = sub.add_parser("train-curve", help="train the interpolation curve")
    p.add_argument("--model", required=True)
    p.add_argument("--cloud", required=True)
    p.add_argument("--config", default=None)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--endpoints", type=int, nargs=2, metavar=("I", "J"))
    group.add_argument("--endpoint-vectors", metavar="P0;P1",
                       help="two comma-separated ambient points joined by ';' "
                            "(use the = form for leading minus signs)")
    p.add_argument("--out", required=True, help="curve JSON")
    p.add_argument("--history", required=True, help="loss-term CSV")
    p.add_argument("--no-figure", action="store_true")
    p.set_defaults(func=cmd_train_curve)

    p = sub.add_parser("eval", help="evaluate a trained curve")
    p.add_argument("--model", required=True)
    p.add_argument("--curve", required=True)
    p.add_argument("--cloud", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--oracle", choices=["auto", "greatcircle", "swissroll", "none"],
                   default="auto")
    p.add_argument("--endpoints", type=int, nargs=2, metavar=("I", "J"), default=None)
    p.add_argument("--report", required=True, help="GeodesicReport JSON")
    p.add_argument("--decoded", default=None, help="decoded-curve CSV")
    p.add_argument("--no-figure", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="loss-combination ablation table")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="ablation table CSV")
    p.add_argument("--no-figure", action="store_true")
    p.set_defaults(func=cmd_ablate)
    return parser


@contextlib.contextmanager
def _thread_limit():
    limit = os.environ.get(cfgmod.THREADS_ENV)
    if limit is None:
        yield
        return
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        yield
        return
    with threadpool_limits(limits=int(limit)):
        yield


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "n", None) is not None and args.command == "gen-data" and args.n < 1:
        parser.error("n must be >= 1")
    try:
        with _thread_limit():
            return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
