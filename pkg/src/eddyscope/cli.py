"""Batch command line entry point.

One verb per pipeline artifact: synth, fit, render, quartile, timeseries,
persistence, simplify, label, pmap, entropy, agree, query, diff, serve.
Exit codes: 0 success, 1 data/IO errors (message names the file), 2 usage
errors.  All randomness flows through --seed, so identical flags and inputs
produce byte-identical outputs.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import emorse, grid, models, morse, pipeline, rendering as rnd
from .errors import EddyscopeError
from .transfer import TransferFunction, default_tf


def _parse_dims(text):
    parts = [int(p) for p in text.split(",")]
    if len(parts) == 2:
        parts.append(1)
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("dims must be NX,NY[,NZ]")
    return tuple(parts)


def _load_tf(path):
    if not os.path.exists(path):
        raise EddyscopeError(f"transfer function file not found: {path}")
    return TransferFunction.load(path)


def _load_camera(path, width=None, height=None):
    if not os.path.exists(path):
        raise EddyscopeError(f"camera file not found: {path}")
    with open(path) as fh:
        obj = json.load(fh)
    if width:
        obj["width"] = width
    if height:
        obj["height"] = height
    return rnd.Camera.from_json(obj)


def _load_ensemble(args):
    if not os.path.exists(args.manifest):
        raise EddyscopeError(f"manifest not found: {args.manifest}")
    ens = grid.load_manifest(args.manifest)
    n = getattr(args, "members", None)
    if n:
        ens = grid.subsample(ens, n, getattr(args, "seed", 0))
    return ens


def _ensemble_2d(args):
    ens = _load_ensemble(args)
    return pipeline.prepare_ensemble_2d(
        ens, slice_index=getattr(args, "slice_z", None),
        negate_field=getattr(args, "negate", False))


def _config(args):
    kw = {}
    if getattr(args, "step", None):
        kw["step"] = args.step
    return rnd.RenderConfig(**kw)


# ---------------------------------------------------------------------------
# subcommand handlers

def cmd_synth(args):
    ens = grid.synth_eddy_ensemble(args.seed, args.members, args.dims,
                                   args.vortices, args.jitter)
    path = grid.save_manifest(ens, args.out_dir, name=args.name)
    print(path)
    return 0


def cmd_fit(args):
    ens = _load_ensemble(args)
    summary = models.fit(args.model, ens, quantiles=args.quantiles)
    summary.save(args.out)
    return 0


def cmd_render(args):
    if args.summary:
        if not os.path.exists(args.summary):
            raise EddyscopeError(f"summary file not found: {args.summary}")
        summary = models.load_summary(args.summary)
    else:
        if not args.manifest or not args.model:
            raise EddyscopeError("render needs --summary or (--manifest and --model)")
        summary = models.fit(args.model, _load_ensemble(args),
                             quantiles=args.quantiles)
    tf = _load_tf(args.tf)
    cam = _load_camera(args.camera, args.width, args.height)
    img = rnd.render(summary, tf, cam, _config(args), mode=args.mode,
                     seed=args.seed, n_samples=args.samples)
    rnd.write_image(img, args.out)
    return 0


def cmd_quartile(args):
    ens = _load_ensemble(args)
    tf = _load_tf(args.tf)
    cam = _load_camera(args.camera, args.width, args.height)
    imgs = rnd.render_quartile_view(ens, tf, cam, _config(args))
    for name, img in zip(("lower", "middle", "upper"), imgs):
        rnd.write_image(img, f"{args.out_prefix}_{name}.{args.format}")
    return 0


def cmd_timeseries(args):
    series = []
    for mpath in args.manifest:
        if not os.path.exists(mpath):
            raise EddyscopeError(f"manifest not found: {mpath}")
        ens = grid.load_manifest(mpath)
        series.append((ens.time_index, ens))
    series.sort(key=lambda te: te[0])
    tf = _load_tf(args.tf)
    cam = _load_camera(args.camera, args.width, args.height)
    frames = rnd.render_time_series(series, args.model, tf, cam, _config(args),
                                    quantiles=args.quantiles)
    os.makedirs(args.out_dir, exist_ok=True)
    for t, img in frames:
        rnd.write_image(img, os.path.join(args.out_dir, f"frame_t{t:03d}.{args.format}"))
    return 0


def emit_persistence_report(ensemble2d, out_dir, target_agreement=0.5):
    """Per-member persistence CSVs, a spaghetti boundary overlay, and the
    selected simplification scale as JSON."""
    os.makedirs(out_dir, exist_ok=True)
    pipe = pipeline.build_morse_pipeline(ensemble2d, target_agreement=target_agreement)
    for i, g in enumerate(pipe.graphs):
        morse.write_persistence_csv(g, os.path.join(out_dir, f"member_{i:02d}.csv"))
    h, w = pipe.simplified[0].labels.shape
    overlay = np.full((h, w, 4), 255, dtype=np.uint8)
    palette = emorse.palette_for(len(pipe.simplified))
    for i, d in enumerate(pipe.simplified):
        mask = morse.cell_boundaries(d)
        overlay[mask, :3] = palette[i]
    rnd.write_image(rnd.Image(w, h, overlay), os.path.join(out_dir, "spaghetti.ppm"))
    scale = {"threshold": pipe.threshold, "count": pipe.agreed_count,
             "fraction": pipe.agreement}
    with open(os.path.join(out_dir, "scale.json"), "w") as fh:
        json.dump(scale, fh, indent=1)
    return scale


def cmd_persistence(args):
    ens = _ensemble_2d(args)
    scale = emit_persistence_report(ens, args.out_dir, args.target_agreement)
    print(json.dumps(scale))
    return 0


def cmd_simplify(args):
    ens = _ensemble_2d(args)
    if not 0 <= args.member < ens.count:
        raise EddyscopeError(f"member index {args.member} out of range")
    g = ens.members[args.member]
    dest = morse.compute_destinations(g)
    pairing = morse.compute_persistence(g)
    simplified = morse.simplify(dest, pairing, args.threshold)
    morse.save_destination_map(simplified, args.out)
    return 0


def cmd_label(args):
    ens = _ensemble_2d(args)
    pm, assignment, pipe = pipeline.build_probabilistic_map(
        ens, args.strategy, seed=args.seed, threshold=args.threshold,
        k=args.k, target_agreement=args.target_agreement,
        min_level=args.min_level)
    out = {
        "strategy": assignment.strategy,
        "n_labels": assignment.n_labels,
        "threshold": pipe.threshold,
        "members": [{str(mid): lab for mid, lab in labs.items()}
                    for labs in assignment.member_labels],
        "palette": [[int(c) for c in row]
                    for row in assignment.palette[:assignment.n_labels]],
    }
    with open(args.out, "w") as fh:
        json.dump(out, fh, indent=1)
    return 0


def cmd_pmap(args):
    ens = _ensemble_2d(args)
    pm, assignment, _ = pipeline.build_probabilistic_map(
        ens, args.strategy, seed=args.seed, threshold=args.threshold,
        k=args.k, target_agreement=args.target_agreement,
        min_level=args.min_level)
    emorse.save_probabilistic_map(pm, assignment.palette, args.out)
    return 0


def _view_cmd(args, mode, param):
    if not os.path.exists(args.pmap):
        raise EddyscopeError(f"probabilistic map not found: {args.pmap}")
    pm, palette = emorse.load_probabilistic_map(args.pmap)
    px = emorse.view_image(pm, palette, mode, param)
    h, w = px.shape[:2]
    rnd.write_image(rnd.Image(w, h, px), args.out)
    return 0


def cmd_entropy(args):
    return _view_cmd(args, "entropy", args.tau)


def cmd_agree(args):
    return _view_cmd(args, "agreement", args.alpha)


def cmd_query(args):
    if not os.path.exists(args.pmap):
        raise EddyscopeError(f"probabilistic map not found: {args.pmap}")
    pm, palette = emorse.load_probabilistic_map(args.pmap)
    result = emorse.query(pm, args.x, args.y, palette)
    text = json.dumps(result, indent=1)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        print(text)
    return 0


def cmd_diff(args):
    for p in (args.a, args.b):
        if not os.path.exists(p):
            raise EddyscopeError(f"image not found: {p}")
    a = rnd.read_ppm(args.a)
    b = rnd.read_ppm(args.b)
    mean_d, max_d, heat = rnd.image_diff(a, b)
    if args.out:
        rnd.write_image(heat, args.out)
    print(json.dumps({"mean_abs_diff": mean_d, "max_diff": max_d}))
    return 0


def cmd_serve(args):
    import uvicorn
    from .server import create_app
    app = create_app(args.manifest, slice_index=args.slice_z, negate=args.negate,
                     viewer_dir=args.viewer)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="eddyscope",
                                description="ensemble uncertainty visualization")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, **kw):
        sp = sub.add_parser(name, **kw)
        sp.set_defaults(fn=fn)
        return sp

    sp = add("synth", cmd_synth, help="generate a synthetic eddy ensemble")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--members", type=int, default=10)
    sp.add_argument("--dims", type=_parse_dims, default=(64, 64, 8))
    sp.add_argument("--vortices", type=int, default=11)
    sp.add_argument("--jitter", type=float, default=1.0)
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--name", default="ensemble")

    def common_fit(sp):
        sp.add_argument("--manifest", required=False)
        sp.add_argument("--model", choices=sorted(models.KIND_CODES), default=None)
        sp.add_argument("--quantiles", type=int, default=models.DEFAULT_QUANTILES)
        sp.add_argument("--members", type=int, default=None,
                        help="subsample to N members (seeded)")
        sp.add_argument("--seed", type=int, default=0)

    sp = add("fit", cmd_fit, help="fit a distribution summary")
    common_fit(sp)
    sp.add_argument("--out", required=True)

    def common_render(sp):
        sp.add_argument("--tf", required=True)
        sp.add_argument("--camera", required=True)
        sp.add_argument("--width", type=int, default=None)
        sp.add_argument("--height", type=int, default=None)
        sp.add_argument("--step", type=float, default=None)

    sp = add("render", cmd_render, help="raycast a summary to an image")
    common_fit(sp)
    sp.add_argument("--summary", default=None)
    common_render(sp)
    sp.add_argument("--mode", choices=("expected", "mc"), default="expected")
    sp.add_argument("--samples", type=int, default=1)
    sp.add_argument("--out", required=True)

    sp = add("quartile", cmd_quartile, help="lower/middle/upper quartile renders")
    common_fit(sp)
    common_render(sp)
    sp.add_argument("--out-prefix", required=True)
    sp.add_argument("--format", choices=("ppm", "png"), default="ppm")

    sp = add("timeseries", cmd_timeseries, help="fit + render each time step")
    sp.add_argument("--manifest", action="append", required=True)
    sp.add_argument("--model", choices=sorted(models.KIND_CODES), required=True)
    sp.add_argument("--quantiles", type=int, default=models.DEFAULT_QUANTILES)
    common_render(sp)
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--format", choices=("ppm", "png"), default="ppm")

    def common_morse(sp):
        sp.add_argument("--manifest", required=True)
        sp.add_argument("--slice-z", type=int, default=None)
        sp.add_argument("--negate", action="store_true")
        sp.add_argument("--members", type=int, default=None)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--target-agreement", type=float, default=0.5)

    sp = add("persistence", cmd_persistence,
             help="per-member persistence graphs + selected scale")
    common_morse(sp)
    sp.add_argument("--out-dir", required=True)

    sp = add("simplify", cmd_simplify, help="simplified destination map of one member")
    common_morse(sp)
    sp.add_argument("--member", type=int, default=0)
    sp.add_argument("--threshold", type=float, required=True)
    sp.add_argument("--out", required=True, help="output prefix (.i32/.json)")

    def common_labeling(sp):
        common_morse(sp)
        sp.add_argument("--strategy", required=True,
                        choices=("kmeans", "morse_mapping", "nearest_mandatory"))
        sp.add_argument("--k", type=int, default=None)
        sp.add_argument("--threshold", type=float, default=None)
        sp.add_argument("--min-level", type=float, default=None)

    sp = add("label", cmd_label, help="global label assignment for member maxima")
    common_labeling(sp)
    sp.add_argument("--out", required=True)

    sp = add("pmap", cmd_pmap, help="probabilistic map over global labels")
    common_labeling(sp)
    sp.add_argument("--out", required=True)

    sp = add("entropy", cmd_entropy, help="entropy-thresholded view of a pmap")
    sp.add_argument("--pmap", required=True)
    sp.add_argument("--tau", type=float, required=True)
    sp.add_argument("--out", required=True)

    sp = add("agree", cmd_agree, help="agreement-thresholded view of a pmap")
    sp.add_argument("--pmap", required=True)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--out", required=True)

    sp = add("query", cmd_query, help="label distribution at a pixel")
    sp.add_argument("--pmap", required=True)
    sp.add_argument("--x", type=int, required=True)
    sp.add_argument("--y", type=int, required=True)
    sp.add_argument("--out", default=None)

    sp = add("diff", cmd_diff, help="image difference metrics + heatmap")
    sp.add_argument("--a", required=True)
    sp.add_argument("--b", required=True)
    sp.add_argument("--out", default=None)

    sp = add("serve", cmd_serve, help="HTTP service for the viewer")
    sp.add_argument("--manifest", action="append", required=True)
    sp.add_argument("--slice-z", type=int, default=0)
    sp.add_argument("--negate", action="store_true")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8642)
    sp.add_argument("--viewer", default=None,
                    help="directory with the built browser viewer to mount at /")

    sp = add("tfpreset", cmd_tfpreset, help="write the default transfer function")
    sp.add_argument("--lo", type=float, default=0.0)
    sp.add_argument("--hi", type=float, default=1.0)
    sp.add_argument("--out", required=True)
    return p


def cmd_tfpreset(args):
    default_tf(args.lo, args.hi).save(args.out)
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except EddyscopeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
