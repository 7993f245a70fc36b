"""Extended splat PLY reader/writer.

The on-disk layout follows the de-facto splat export format (x/y/z, nx/ny/nz,
f_dc_*, f_rest_*, opacity, scale_*, rot_*) extended with two optional feature
groups standard viewers simply ignore:

  * ``intensity_logit``       (float) reflectivity feature
  * ``seg_bit_0 .. seg_bit_5`` (float) segmentation bit features

``f_rest`` is channel-major: the (K-1) higher-order coefficients of the red
channel first, then green, then blue. ``rot_0`` is the quaternion w component.
Binary files are little-endian float32; ASCII files are accepted on read.

An optional sidecar ``<name>.labels.json`` maps label IDs ("0".."63") to class
names and travels with the PLY.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .scene import SEG_BITS, SplatScene, sh_coeff_count, sh_degree_from_count


class PlyParseError(ValueError):
    """Malformed or unsupported PLY content."""


_FLOAT_TYPES = {
    "float": "<f4", "float32": "<f4",
    "double": "<f8", "float64": "<f8",
}

_REQUIRED = ["x", "y", "z", "opacity",
             "scale_0", "scale_1", "scale_2",
             "rot_0", "rot_1", "rot_2", "rot_3",
             "f_dc_0", "f_dc_1", "f_dc_2"]


def _parse_header(f):
    magic = f.readline().strip()
    if magic != b"ply":
        raise PlyParseError("not a PLY file (missing 'ply' magic)")
    fmt = None
    count = None
    props = []
    in_vertex = False
    while True:
        line = f.readline()
        if not line:
            raise PlyParseError("unterminated header")
        tokens = line.decode("ascii", errors="replace").strip().split()
        if not tokens or tokens[0] == "comment":
            continue
        if tokens[0] == "format":
            if len(tokens) < 2 or tokens[1] not in ("binary_little_endian", "ascii"):
                raise PlyParseError(f"unsupported format {' '.join(tokens[1:])!r}")
            fmt = tokens[1]
        elif tokens[0] == "element":
            if len(tokens) != 3:
                raise PlyParseError(f"malformed element line: {line!r}")
            in_vertex = tokens[1] == "vertex"
            if in_vertex:
                count = int(tokens[2])
        elif tokens[0] == "property":
            if in_vertex:
                if len(tokens) != 3:
                    raise PlyParseError(f"unsupported property line: {line!r}")
                props.append((tokens[2], tokens[1]))
        elif tokens[0] == "end_header":
            break
    if fmt is None or count is None:
        raise PlyParseError("header missing format or vertex element")
    return fmt, count, props


def load_ply(path) -> SplatScene:
    """Load an extended splat PLY; see module docstring for the layout."""
    path = Path(path)
    with open(path, "rb") as f:
        fmt, count, props = _parse_header(f)
        names = [name for name, _ in props]
        for req in _REQUIRED:
            if req not in names:
                raise PlyParseError(f"missing required vertex property {req!r}")
        for name, typ in props:
            if typ not in _FLOAT_TYPES:
                raise PlyParseError(f"property {name!r} has non-float type {typ!r}")
        dtype = np.dtype([(name, _FLOAT_TYPES[typ]) for name, typ in props])
        if fmt == "binary_little_endian":
            raw = f.read(dtype.itemsize * count)
            if len(raw) != dtype.itemsize * count:
                raise PlyParseError("truncated vertex data")
            rec = np.frombuffer(raw, dtype=dtype, count=count)
            columns = {name: np.asarray(rec[name], dtype=np.float64) for name in names}
        else:
            try:
                flat = np.array(f.read().decode("ascii").split(), dtype=np.float64)
            except ValueError as exc:
                raise PlyParseError(f"bad ASCII vertex data: {exc}") from None
            if flat.size < count * len(props):
                raise PlyParseError("truncated ASCII vertex data")
            table = flat[: count * len(props)].reshape(count, len(props))
            columns = {name: table[:, i] for i, name in enumerate(names)}

    def col(name, default=0.0):
        if name in columns:
            return columns[name]
        return np.full(count, default)

    means = np.stack([col("x"), col("y"), col("z")], axis=1)
    rotations = np.stack([col(f"rot_{i}") for i in range(4)], axis=1)
    log_scales = np.stack([col(f"scale_{i}") for i in range(3)], axis=1)
    opacity = col("opacity")
    dc = np.stack([col(f"f_dc_{c}") for c in range(3)], axis=1)

    rest_names = sorted((n for n in names if n.startswith("f_rest_")),
                        key=lambda n: int(n.split("_")[-1]))
    if rest_names:
        if len(rest_names) % 3 != 0:
            raise PlyParseError("f_rest_* count not divisible by 3")
        k_rest = len(rest_names) // 3
        sh_degree_from_count(k_rest + 1)  # raises if not a complete degree set
        rest = np.stack([col(n) for n in rest_names], axis=1).reshape(count, 3, k_rest)
        color_sh = np.concatenate([dc[:, None, :], np.transpose(rest, (0, 2, 1))], axis=1)
    else:
        color_sh = dc[:, None, :]

    intensity = col("intensity_logit")
    seg = np.stack([col(f"seg_bit_{i}") for i in range(SEG_BITS)], axis=1)

    all_cols = np.concatenate([means, rotations, log_scales, opacity[:, None],
                               color_sh.reshape(count, -1), intensity[:, None], seg], axis=1)
    finite = np.all(np.isfinite(all_cols), axis=1)
    if not np.all(finite):
        bad = int(np.flatnonzero(~finite)[0])
        raise PlyParseError(f"non-finite value in vertex element {bad}")
    norms = np.linalg.norm(rotations, axis=1)
    if np.any(norms == 0):
        bad = int(np.flatnonzero(norms == 0)[0])
        raise PlyParseError(f"zero quaternion in vertex element {bad}")

    label_names = None
    sidecar = path.with_name(path.stem + ".labels.json")
    if sidecar.exists():
        raw_map = json.loads(sidecar.read_text())
        label_names = {int(k): str(v) for k, v in raw_map.items()}

    return SplatScene(means, rotations, log_scales, opacity, color_sh,
                      intensity, seg, label_names=label_names)


def save_ply(scene: SplatScene, path) -> None:
    """Write binary little-endian extended splat PLY (+ labels sidecar)."""
    path = Path(path)
    n = len(scene)
    k = scene.color_sh.shape[1]
    rest_count = 3 * (k - 1)

    names = ["x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"]
    names += [f"f_rest_{i}" for i in range(rest_count)]
    names += ["opacity", "scale_0", "scale_1", "scale_2",
              "rot_0", "rot_1", "rot_2", "rot_3",
              "intensity_logit"] + [f"seg_bit_{i}" for i in range(SEG_BITS)]

    header = ["ply", "format binary_little_endian 1.0", f"element vertex {n}"]
    header += [f"property float {name}" for name in names]
    header += ["end_header"]

    out = np.zeros((n, len(names)), dtype="<f4")
    out[:, 0:3] = scene.means
    out[:, 6:9] = scene.color_sh[:, 0, :]
    if rest_count:
        # channel-major: all higher-order coeffs of R, then G, then B
        rest = np.transpose(scene.color_sh[:, 1:, :], (0, 2, 1)).reshape(n, rest_count)
        out[:, 9:9 + rest_count] = rest
    base = 9 + rest_count
    out[:, base] = scene.opacity_logits
    out[:, base + 1:base + 4] = scene.log_scales
    out[:, base + 4:base + 8] = scene.rotations
    out[:, base + 8] = scene.intensity_logits
    out[:, base + 9:base + 9 + SEG_BITS] = scene.seg_bit_logits

    with open(path, "wb") as f:
        f.write(("\n".join(header) + "\n").encode("ascii"))
        f.write(out.tobytes())

    if scene.label_names:
        sidecar = path.with_name(path.stem + ".labels.json")
        sidecar.write_text(json.dumps({str(k_): v for k_, v in sorted(scene.label_names.items())},
                                      indent=2) + "\n")
