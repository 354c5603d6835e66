"""CPU raycast volume rendering of distribution summaries, image containers,
and image IO/metrics.

Images are always writable as binary PPM (P6); PNG output uses Pillow when
available.  Rendering is deterministic for fixed inputs: rays are
independent, and mc-mode per-ray streams are hashed from (seed, pixel).
"""

import math
from dataclasses import dataclass

import numpy as np

from . import models
from ._rkernels import march_rays
from .errors import ArgumentError, CameraError, DataError, DimensionError

try:
    from PIL import Image as _PILImage
    HAVE_PNG = True
except ImportError:  # pragma: no cover
    HAVE_PNG = False


@dataclass(frozen=True)
class Camera:
    eye: tuple
    look_at: tuple
    up: tuple = (0.0, 0.0, 1.0)
    fov_deg: float = 40.0
    width: int = 256
    height: int = 256

    def __post_init__(self):
        if tuple(self.eye) == tuple(self.look_at):
            raise CameraError("eye and look-at coincide")
        if not 0 < self.fov_deg < 180:
            raise CameraError(f"fov must be in (0, 180), got {self.fov_deg}")
        if self.width < 1 or self.height < 1:
            raise CameraError("image dimensions must be >= 1")

    def basis(self):
        eye = np.array(self.eye, dtype=np.float64)
        fwd = np.array(self.look_at, dtype=np.float64) - eye
        fwd /= np.linalg.norm(fwd)
        up_hint = np.array(self.up, dtype=np.float64)
        right = np.cross(fwd, up_hint)
        nr = np.linalg.norm(right)
        if nr < 1e-12:
            raise CameraError("up vector is parallel to the view direction")
        right /= nr
        up = np.cross(right, fwd)
        return eye, right, up, fwd

    def to_json(self):
        return {"eye": list(self.eye), "look_at": list(self.look_at),
                "up": list(self.up), "fov_deg": self.fov_deg,
                "width": self.width, "height": self.height}

    @classmethod
    def from_json(cls, obj):
        try:
            return cls(tuple(obj["eye"]), tuple(obj["look_at"]),
                       tuple(obj.get("up", (0.0, 0.0, 1.0))),
                       float(obj.get("fov_deg", 40.0)),
                       int(obj.get("width", 256)), int(obj.get("height", 256)))
        except KeyError as exc:
            raise ArgumentError(f"camera JSON missing field {exc}")


@dataclass(frozen=True)
class RenderConfig:
    step: float = 0.5            # voxel units
    ref_step: float = 1.0        # opacity-correction reference, voxel units
    termination_alpha: float = 0.99
    background: tuple = (1.0, 1.0, 1.0, 1.0)

    def __post_init__(self):
        if self.step <= 0:
            raise ArgumentError("step must be > 0")
        if not 0 < self.termination_alpha <= 1:
            raise ArgumentError("termination alpha must be in (0, 1]")


@dataclass
class Image:
    width: int
    height: int
    pixels: np.ndarray           # (h, w, 4) uint8, row-major

    def __post_init__(self):
        if self.pixels.shape != (self.height, self.width, 4):
            raise DimensionError(
                f"pixel buffer {self.pixels.shape} does not match "
                f"{self.width}x{self.height} RGBA")


def quantize(float_rgba):
    return np.clip(np.rint(255.0 * float_rgba), 0, 255).astype(np.uint8)


def default_camera(dims, spacing=(1.0, 1.0, 1.0), width=256, height=256):
    """A three-quarter view framing the whole volume."""
    ext = np.array([(d - 1) * s for d, s in zip(dims, spacing)], dtype=np.float64)
    center = ext / 2.0
    radius = float(np.linalg.norm(ext)) or 1.0
    eye = center + radius * np.array([0.9, -1.4, 1.1])
    return Camera(tuple(eye), tuple(center), (0.0, 0.0, 1.0), 40.0, width, height)


def render(summary, tf, camera, config=RenderConfig(), mode="expected",
           seed=0, n_samples=1):
    """Raycast a distribution summary through a transfer function.

    mode "expected" composites per-step E[TF(X)]; mode "mc" averages
    n_samples seeded draws per step.
    """
    if mode not in ("expected", "mc"):
        raise ArgumentError(f"mode must be 'expected' or 'mc', got '{mode}'")
    if n_samples < 1:
        raise ArgumentError("n_samples must be >= 1")
    eye, right, up, fwd = camera.basis()
    tan_y = math.tan(math.radians(camera.fov_deg) / 2.0)
    tan_x = tan_y * camera.width / camera.height

    sx, sy, sz = summary.spacing
    vox = min(sx, sy, sz)
    dt = config.step * vox
    opac_exp = config.step / config.ref_step
    bg = np.array(config.background, dtype=np.float64)

    out = np.empty((camera.height, camera.width, 4))
    march_rays(summary.kind, summary.planes, sx, sy, sz,
               eye, right, up, fwd, tan_x, tan_y,
               camera.width, camera.height, dt, opac_exp,
               config.termination_alpha, bg, mode == "mc",
               np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF), n_samples,
               tf.s, tf.rgba, out)
    return Image(camera.width, camera.height, quantize(out))


def render_quartile_view(ensemble, tf, camera, config=RenderConfig()):
    """Renders of the lower/middle/upper quartile populations as uniform
    models, sharing one transfer function and camera."""
    lower, middle, upper = models.quartile_split(ensemble)
    return tuple(render(s, tf, camera, config) for s in (lower, middle, upper))


def render_time_series(manifests_by_time, model, tf, camera,
                       config=RenderConfig(), quantiles=models.DEFAULT_QUANTILES):
    """Fit + render one frame per time step; returns [(t, Image), ...]."""
    frames = []
    for t, ensemble in manifests_by_time:
        if ensemble is None:
            raise DataError(f"missing manifest for time step {t}")
        summary = models.fit(model, ensemble, quantiles=quantiles)
        frames.append((t, render(summary, tf, camera, config)))
    return frames


def image_diff(a, b):
    """(mean abs channel diff, max diff, grayscale heatmap) in 8-bit units."""
    if (a.width, a.height) != (b.width, b.height):
        raise DimensionError(
            f"image dims differ: {a.width}x{a.height} vs {b.width}x{b.height}")
    d = np.abs(a.pixels.astype(np.int16) - b.pixels.astype(np.int16))
    mean_diff = float(d.mean())
    max_diff = int(d.max())
    per_pixel = d.mean(axis=2)
    heat = np.empty(a.pixels.shape, dtype=np.uint8)
    heat[..., :3] = np.clip(np.rint(per_pixel), 0, 255).astype(np.uint8)[..., None]
    heat[..., 3] = 255
    return mean_diff, max_diff, Image(a.width, a.height, heat)


# ---------------------------------------------------------------------------
# image IO

def write_ppm(image, path):
    with open(path, "wb") as fh:
        fh.write(f"P6\n{image.width} {image.height}\n255\n".encode())
        fh.write(np.ascontiguousarray(image.pixels[..., :3]).tobytes())


def read_ppm(path):
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P6":
        raise DataError(f"{path}: not a binary PPM")
    w, h = (int(v) for v in parts[1].split())
    raw = np.frombuffer(parts[3], dtype=np.uint8)[: w * h * 3].reshape(h, w, 3)
    px = np.empty((h, w, 4), dtype=np.uint8)
    px[..., :3] = raw
    px[..., 3] = 255
    return Image(w, h, px)


def write_png(image, path):
    if not HAVE_PNG:
        raise DataError("PNG support needs Pillow; write PPM instead")
    _PILImage.fromarray(image.pixels, mode="RGBA").save(path, format="PNG")


def png_bytes(image):
    import io
    if not HAVE_PNG:
        raise DataError("PNG support needs Pillow")
    buf = io.BytesIO()
    _PILImage.fromarray(image.pixels, mode="RGBA").save(buf, format="PNG")
    return buf.getvalue()


def write_image(image, path):
    """Dispatch on extension: .png via Pillow, anything else as PPM."""
    if str(path).lower().endswith(".png") and HAVE_PNG:
        write_png(image, path)
    else:
        write_ppm(image, path)
