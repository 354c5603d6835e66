"""Read-only HTTP service exposing datasets, renders, probabilistic-map views,
and point queries.

Responses are pure functions of (dataset content, request parameters).
Fitted summaries, probabilistic maps, and encoded responses are cached by
content-addressed keys; each key is built at most once (single writer), and
POST /api/flush clears everything.
"""

import json
import threading

from fastapi import FastAPI, Request, Response

from . import emorse, grid, models, pipeline, rendering as rnd
from .errors import EddyscopeError
from .transfer import TransferFunction

STRATEGIES = ("kmeans", "morse_mapping", "nearest_mandatory")
VIEW_MODES = ("blend", "boundaries", "entropy", "agreement")


class Dataset:
    def __init__(self, name, manifests_by_time, slice_index=0, negate=False):
        self.name = name
        self.by_time = dict(manifests_by_time)
        self.times = sorted(self.by_time)
        self.slice_index = slice_index
        self.negate = negate

    def ensemble(self, time=None):
        t = self.times[0] if time is None else int(time)
        if t not in self.by_time:
            raise KeyError(t)
        return self.by_time[t]

    def describe(self):
        e = self.ensemble()
        return {"name": self.name, "dims": list(e.dims), "members": e.count,
                "field": e.field_name, "times": self.times}


class _Caches:
    """publish-once caches keyed by request content."""

    def __init__(self):
        self._lock = threading.Lock()
        self._key_locks = {}
        self.store = {}

    def flush(self):
        with self._lock:
            self.store.clear()
            self._key_locks.clear()

    def get_or_build(self, key, build):
        with self._lock:
            if key in self.store:
                return self.store[key], True
            kl = self._key_locks.setdefault(key, threading.Lock())
        with kl:
            with self._lock:
                if key in self.store:
                    return self.store[key], True
            value = build()
            with self._lock:
                self.store[key] = value
            return value, False


def _bad(msg, code=400):
    return Response(content=json.dumps({"error": msg}), status_code=code,
                    media_type="application/json")


def create_app(manifests, slice_index=0, negate=False, viewer_dir=None):
    """Build the service.  ``manifests`` is a list of manifest paths or of
    (name, EnsembleManifest) pairs; ``viewer_dir`` optionally mounts the
    built browser viewer at the web root."""
    registry = {}
    for entry in manifests:
        if isinstance(entry, (tuple, list)):
            name, ens = entry
            ds = registry.setdefault(name, Dataset(name, {}, slice_index, negate))
            ds.by_time[ens.time_index] = ens
            ds.times = sorted(ds.by_time)
        else:
            ens = grid.load_manifest(entry)
            name = ens.field_name
            ds = registry.setdefault(name, Dataset(name, {}, slice_index, negate))
            ds.by_time[ens.time_index] = ens
            ds.times = sorted(ds.by_time)

    app = FastAPI(title="eddyscope")
    caches = _Caches()
    app.state.registry = registry
    app.state.caches = caches

    def get_dataset(name):
        if name not in registry:
            raise KeyError(name)
        return registry[name]

    def build_summary(ds, time, model, quantiles):
        key = ("summary", ds.name, time, model, quantiles)
        value, _ = caches.get_or_build(
            key, lambda: models.fit(model, ds.ensemble(time), quantiles=quantiles))
        return value

    def build_pmap(ds, strategy):
        key = ("pmap", ds.name, strategy)

        def make():
            e2d = pipeline.prepare_ensemble_2d(
                ds.ensemble(), slice_index=ds.slice_index, negate_field=ds.negate)
            pm, assignment, pipe = pipeline.build_probabilistic_map(
                e2d, strategy, seed=0)
            return pm, assignment.palette, pipe

        value, _ = caches.get_or_build(key, make)
        return value

    @app.get("/api/datasets")
    def list_datasets():
        return [registry[n].describe() for n in sorted(registry)]

    @app.post("/api/render")
    async def handle_render(request: Request):
        try:
            body = await request.json()
        except json.JSONDecodeError as exc:
            return _bad(f"request body is not JSON: {exc}")
        key = ("render", json.dumps(body, sort_keys=True))
        if not isinstance(body, dict) or "dataset" not in body:
            return _bad("missing field 'dataset'")
        try:
            ds = get_dataset(body["dataset"])
        except KeyError:
            return _bad(f"unknown dataset '{body['dataset']}'", 404)
        model = body.get("model", "mean")
        if model not in models.KIND_CODES:
            return _bad(f"field 'model': unknown model '{model}'")
        try:
            tf = TransferFunction.from_json(body["tf"])
        except KeyError:
            return _bad("missing field 'tf'")
        except EddyscopeError as exc:
            return _bad(f"field 'tf': {exc}")
        try:
            cam_obj = dict(body["camera"])
        except KeyError:
            return _bad("missing field 'camera'")
        for dim in ("width", "height"):
            if dim in body:
                cam_obj[dim] = body[dim]
        try:
            cam = rnd.Camera.from_json(cam_obj)
        except EddyscopeError as exc:
            return _bad(f"field 'camera': {exc}")
        time = body.get("time")
        quantiles = int(body.get("quantiles", models.DEFAULT_QUANTILES))
        quartile = body.get("quartile")
        mode = body.get("mode", "expected")
        config = rnd.RenderConfig(step=float(body.get("step", 0.5)))

        def make():
            try:
                ens = ds.ensemble(time)
            except KeyError:
                raise EddyscopeError(f"field 'time': no time step {time}")
            if quartile is not None:
                bands = dict(zip(("lower", "middle", "upper"),
                                 models.quartile_split(ens)))
                if quartile not in bands:
                    raise EddyscopeError(
                        "field 'quartile': must be lower, middle, or upper")
                summary = bands[quartile]
            else:
                summary = build_summary(ds, time, model, quantiles)
            img = rnd.render(summary, tf, cam, config, mode=mode,
                             seed=int(body.get("seed", 0)),
                             n_samples=int(body.get("samples", 1)))
            return rnd.png_bytes(img)

        try:
            data, hit = caches.get_or_build(key, make)
        except EddyscopeError as exc:
            return _bad(str(exc))
        return Response(content=data, media_type="image/png",
                        headers={"X-Cache": "hit" if hit else "miss"})

    @app.get("/api/view")
    def handle_view(dataset: str, strategy: str = "morse_mapping",
                    mode: str = "blend", tau: float = None, alpha: float = None):
        try:
            ds = get_dataset(dataset)
        except KeyError:
            return _bad(f"unknown dataset '{dataset}'", 404)
        if strategy not in STRATEGIES:
            return _bad(f"unknown strategy '{strategy}'", 404)
        if mode not in VIEW_MODES:
            return _bad(f"field 'mode': unknown view mode '{mode}'")
        if mode == "entropy":
            if tau is None or tau < 0:
                return _bad("field 'tau': entropy threshold must be >= 0")
            param = tau
        elif mode == "agreement":
            if alpha is None or not 0 < alpha <= 1:
                return _bad("field 'alpha': agreement threshold must be in (0, 1]")
            param = alpha
        else:
            param = None
        key = ("view", dataset, strategy, mode, param)

        def make():
            pm, palette, _ = build_pmap(ds, strategy)
            px = emorse.view_image(pm, palette, mode, param)
            h, w = px.shape[:2]
            return rnd.png_bytes(rnd.Image(w, h, px))

        data, hit = caches.get_or_build(key, make)
        return Response(content=data, media_type="image/png",
                        headers={"X-Cache": "hit" if hit else "miss"})

    @app.get("/api/query")
    def handle_query(dataset: str, strategy: str = "morse_mapping",
                     x: int = 0, y: int = 0):
        try:
            ds = get_dataset(dataset)
        except KeyError:
            return _bad(f"unknown dataset '{dataset}'", 404)
        if strategy not in STRATEGIES:
            return _bad(f"unknown strategy '{strategy}'", 404)
        pm, palette, _ = build_pmap(ds, strategy)
        try:
            entries = emorse.query(pm, x, y, palette)
        except IndexError as exc:
            return _bad(str(exc))
        return entries

    @app.get("/api/persistence")
    def handle_persistence(dataset: str):
        try:
            ds = get_dataset(dataset)
        except KeyError:
            return _bad(f"unknown dataset '{dataset}'", 404)
        key = ("persistence", dataset)

        def make():
            e2d = pipeline.prepare_ensemble_2d(
                ds.ensemble(), slice_index=ds.slice_index, negate_field=ds.negate)
            pipe = pipeline.build_morse_pipeline(e2d)
            return {
                "members": [
                    {"member": i,
                     "thresholds": [float(t) for t in g.thresholds],
                     "counts": [int(c) for c in g.counts]}
                    for i, g in enumerate(pipe.graphs)],
                "scale": {"threshold": pipe.threshold, "count": pipe.agreed_count,
                          "fraction": pipe.agreement},
            }

        data, _ = caches.get_or_build(key, make)
        return data

    @app.post("/api/flush", status_code=204)
    def handle_flush():
        caches.flush()
        return Response(status_code=204)

    if viewer_dir:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=viewer_dir, html=True), name="viewer")

    return app
