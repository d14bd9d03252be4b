"""Length-prefixed binary protocol for out-of-process consumers.

A client spawns ``fdapipe serve`` and speaks frames over stdin/stdout.
Each frame is a 4-byte little-endian header length, a JSON header, then
the raw bytes of every buffer the header declares (C-order, little-
endian, ``dtype`` of ``f8`` or ``i4``).  The server greets with a hello
frame carrying the ABI string; clients must refuse to proceed on a
mismatch.

Requests (``op`` field):

* ``ping`` -> ``{ok}``
* ``schedule_beta`` ``{cfg, seed, epoch}`` -> ``{ok, beta}``
* ``transform`` ``{cfg, epoch, sample_index}`` + buffers src, tgt[, mask]
  -> ``{ok, meta}`` + buffers image[, mask]
* ``augmix`` ``{policy, seed, epoch, sample_index}`` + buffers img[, mask]
  -> ``{ok, meta}`` + buffers image[, mask]
* ``corrupt`` ``{kind, severity, seed}`` + buffer img -> ``{ok}`` + buffer
* ``shutdown`` -> ``{ok}`` and the server exits

All randomness stays on this side of the boundary, derived from the seed
lineage fields, so results are bit-identical to the in-process pipeline.
"""

from __future__ import annotations

import json
import struct
import sys

import numpy as np

from . import ABI_VERSION, __version__
from .augmix import AugPolicy, MixCoefficients, chained_augmix
from .config import from_mapping
from .corruptions import KINDS, CorruptionSpec, corrupt
from .curriculum import CurriculumConfig, schedule_beta
from .errors import ValidationError
from .pipeline import transform_sample
from .rng import corruption_rng, epoch_rng, sample_rng

_DTYPES = {"f8": np.dtype("<f8"), "i4": np.dtype("<i4")}


def read_exact(stream, n: int) -> bytes | None:
    chunks = []
    remaining = n
    while remaining:
        chunk = stream.read(remaining)
        if not chunk:
            return None
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def read_frame(stream):
    raw_len = read_exact(stream, 4)
    if raw_len is None:
        return None
    (header_len,) = struct.unpack("<I", raw_len)
    header = json.loads(read_exact(stream, header_len))
    buffers = []
    for desc in header.get("buffers", []):
        dtype = _DTYPES[desc["dtype"]]
        count = int(np.prod(desc["shape"], dtype=np.int64)) if desc["shape"] else 1
        data = read_exact(stream, count * dtype.itemsize)
        if data is None:
            return None
        buffers.append(np.frombuffer(data, dtype=dtype).reshape(desc["shape"]).copy())
    return header, buffers


def write_frame(stream, header: dict, arrays=()) -> None:
    arrays = [np.ascontiguousarray(a) for a in arrays]
    header = dict(header)
    header["buffers"] = [
        {
            "dtype": "i4" if a.dtype.kind == "i" else "f8",
            "shape": list(a.shape),
        }
        for a in arrays
    ]
    payload = json.dumps(header).encode("utf-8")
    stream.write(struct.pack("<I", len(payload)))
    stream.write(payload)
    for a in arrays:
        dtype = _DTYPES["i4" if a.dtype.kind == "i" else "f8"]
        stream.write(a.astype(dtype, copy=False).tobytes())
    stream.flush()


def serve(stdin=None, stdout=None) -> int:
    stdin = stdin or sys.stdin.buffer
    stdout = stdout or sys.stdout.buffer
    write_frame(
        stdout,
        {"hello": {"name": "fdapipe", "abi": ABI_VERSION, "version": __version__}},
    )
    while True:
        frame = read_frame(stdin)
        if frame is None:
            return 0
        header, buffers = frame
        op = header.get("op")
        try:
            if op == "shutdown":
                write_frame(stdout, {"ok": True})
                return 0
            reply, arrays = _dispatch(op, header, buffers)
            write_frame(stdout, reply, arrays)
        except ValidationError as exc:
            write_frame(stdout, {"ok": False, "error": str(exc)})
        except Exception as exc:  # report, keep serving
            write_frame(stdout, {"ok": False, "error": f"{type(exc).__name__}: {exc}"})


def _dispatch(op, header, buffers):
    if op == "ping":
        return {"ok": True}, []

    if op == "schedule_beta":
        c = header["cfg"]
        cfg = CurriculumConfig(
            beta_opt=float(c["beta_opt"]),
            epoch_ratio=float(c["epoch_ratio"]),
            total_epochs=int(c["epochs"]),
            kind=str(c.get("kind", "linear")),
            exp_curvature=float(c.get("gamma", 5.0)),
        )
        epoch = int(header["epoch"])
        rng = epoch_rng(int(header["seed"]), epoch)
        return {"ok": True, "beta": schedule_beta(cfg, epoch, rng)}, []

    if op == "transform":
        cfg = from_mapping(dict(header["cfg"]))
        if len(buffers) < 2:
            raise ValidationError("transform expects src and tgt buffers")
        src, tgt = buffers[0], buffers[1]
        mask = buffers[2] if len(buffers) > 2 else None
        coefficients = None
        if header.get("coefficients") is not None:  # test hook, mirrors in-process
            c = header["coefficients"]
            coefficients = MixCoefficients(
                m=float(c["m"]), w=tuple(float(x) for x in c["w"])
            )
        out, out_mask, meta = transform_sample(
            src, mask, tgt, cfg, int(header["epoch"]), int(header["sample_index"]),
            coefficients=coefficients,
        )
        arrays = [out] if out_mask is None else [out, out_mask]
        return {"ok": True, "meta": meta}, arrays

    if op == "augmix":
        p = header.get("policy", {})
        policy = AugPolicy(
            num_chains=int(p.get("chains", 3)),
            max_ops_per_chain=int(p.get("depth", 3)),
            magnitude_level=int(p.get("level", 3)),
        )
        if not buffers:
            raise ValidationError("augmix expects an image buffer")
        mask = buffers[1] if len(buffers) > 1 else None
        rng = sample_rng(
            int(header["seed"]),
            int(header.get("epoch", 0)),
            int(header.get("sample_index", 0)),
        )
        out, out_mask, meta = chained_augmix(buffers[0], mask, policy, rng)
        arrays = [out] if out_mask is None else [out, out_mask]
        return {"ok": True, "meta": meta}, arrays

    if op == "corrupt":
        if not buffers:
            raise ValidationError("corrupt expects an image buffer")
        spec = CorruptionSpec(str(header["kind"]), int(header["severity"]))
        rng = corruption_rng(
            int(header["seed"]), "", KINDS.index(spec.kind), spec.severity
        )
        return {"ok": True}, [corrupt(buffers[0], spec, rng)]

    raise ValidationError(f"unknown op {op!r}")
