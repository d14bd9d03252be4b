"""Exercises the stdio frame protocol through a real subprocess."""

import json
import struct
import subprocess
import sys

import numpy as np
import pytest

from fdapipe import ABI_VERSION, AugPolicy, chained_augmix, transform_sample
from fdapipe.config import from_mapping
from fdapipe.corruptions import KINDS, CorruptionSpec, corrupt
from fdapipe.rng import corruption_rng, sample_rng
from oracles import seeded_image

_DTYPES = {"f8": np.dtype("<f8"), "i4": np.dtype("<i4")}


class Client:
    def __init__(self):
        self.proc = subprocess.Popen(
            [sys.executable, "-m", "fdapipe.cli", "serve"],
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
        )
        self.hello, _ = self.read()

    def send(self, header, arrays=()):
        arrays = [np.ascontiguousarray(a) for a in arrays]
        header = dict(header)
        header["buffers"] = [
            {"dtype": "i4" if a.dtype.kind == "i" else "f8", "shape": list(a.shape)}
            for a in arrays
        ]
        payload = json.dumps(header).encode()
        self.proc.stdin.write(struct.pack("<I", len(payload)))
        self.proc.stdin.write(payload)
        for a in arrays:
            dtype = _DTYPES["i4" if a.dtype.kind == "i" else "f8"]
            self.proc.stdin.write(a.astype(dtype, copy=False).tobytes())
        self.proc.stdin.flush()
        return self.read()

    def read(self):
        raw = self.proc.stdout.read(4)
        (n,) = struct.unpack("<I", raw)
        header = json.loads(self.proc.stdout.read(n))
        buffers = []
        for desc in header.get("buffers", []):
            dtype = _DTYPES[desc["dtype"]]
            count = int(np.prod(desc["shape"])) if desc["shape"] else 1
            data = self.proc.stdout.read(count * dtype.itemsize)
            buffers.append(np.frombuffer(data, dtype=dtype).reshape(desc["shape"]))
        return header, buffers

    def close(self):
        self.send({"op": "shutdown"})
        self.proc.stdin.close()
        self.proc.wait(timeout=10)


@pytest.fixture(scope="module")
def client():
    c = Client()
    yield c
    c.close()


def test_hello_carries_abi(client):
    assert client.hello["hello"]["abi"] == ABI_VERSION


def test_ping(client):
    header, _ = client.send({"op": "ping"})
    assert header["ok"] is True


def test_schedule_beta_matches_in_process(client):
    header, _ = client.send(
        {
            "op": "schedule_beta",
            "cfg": {"beta_opt": 0.006, "epoch_ratio": 0.5, "epochs": 100},
            "seed": 1,
            "epoch": 25,
        }
    )
    assert header["ok"] and header["beta"] == 0.003


def test_transform_parity_is_exact(client):
    cfg_map = {
        "seed": 11,
        "epochs": 8,
        "epoch_ratio": 0.5,
        "scheduler": "linear",
        "beta_opt": 0.4,
        "alpha": 0.8,
        "aug_level": 3,
        "image_height": 20,
        "image_width": 20,
    }
    src = seeded_image(31, 20, 20)
    tgt = seeded_image(32, 20, 20)
    mask = (seeded_image(33, 20, 20)[:, :, 0] > 0.5).astype(np.int32)
    header, buffers = client.send(
        {"op": "transform", "cfg": cfg_map, "epoch": 3, "sample_index": 2},
        [src, tgt, mask],
    )
    assert header["ok"], header
    expected, expected_mask, meta = transform_sample(
        src, mask, tgt, from_mapping(cfg_map), 3, 2
    )
    assert np.array_equal(buffers[0], expected)
    assert np.array_equal(buffers[1], expected_mask)
    assert header["meta"] == meta


def test_augmix_parity_is_exact(client):
    img = seeded_image(41, 24, 24)
    header, buffers = client.send(
        {
            "op": "augmix",
            "policy": {"chains": 3, "depth": 3, "level": 3},
            "seed": 7,
            "epoch": 1,
            "sample_index": 4,
        },
        [img],
    )
    assert header["ok"]
    expected, _, meta = chained_augmix(img, None, AugPolicy(), sample_rng(7, 1, 4))
    assert np.array_equal(buffers[0], expected)
    assert header["meta"] == meta


def test_corrupt_parity_is_exact(client):
    img = seeded_image(51, 24, 24)
    header, buffers = client.send(
        {"op": "corrupt", "kind": "gaussian_noise", "severity": 2, "seed": 13},
        [img],
    )
    assert header["ok"]
    rng = corruption_rng(13, "", KINDS.index("gaussian_noise"), 2)
    expected = corrupt(img, CorruptionSpec("gaussian_noise", 2), rng)
    assert np.array_equal(buffers[0], expected)


def test_unknown_op_reports_error(client):
    header, _ = client.send({"op": "raze"})
    assert header["ok"] is False and "unknown op" in header["error"]


def test_validation_error_keeps_serving(client):
    header, _ = client.send(
        {"op": "corrupt", "kind": "rain", "severity": 1, "seed": 0},
        [seeded_image(61, 8, 8)],
    )
    assert header["ok"] is False
    header, _ = client.send({"op": "ping"})
    assert header["ok"] is True
