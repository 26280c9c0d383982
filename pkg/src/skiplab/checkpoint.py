"""Checkpoint files: JSON manifest + concatenated little-endian float64 payload.

Layout: 8-byte magic "SKIPLAB1", uint32-LE header length, UTF-8 JSON header,
raw payload.  The header records the run config, every tensor's name, shape
and byte offset, and the rng state, so save -> load -> save is byte-identical
and training can resume step-for-step.
"""

import json

import numpy as np

from .errors import ConfigurationError, DataError
from .network import SkipNet
from .runconfig import RunConfig

MAGIC = b"SKIPLAB1"
FORMAT_VERSION = 1


def _state_arrays(net):
    """All persistent arrays in a stable order: params, bn buffers, momenta."""
    out = []
    for name, p in net.params.items():
        out.append((f"param/{name}", p.data))
    for prefix in sorted(net.bn_states):
        st = net.bn_states[prefix]
        out.append((f"bnmean/{prefix}", st.running_mean))
        out.append((f"bnvar/{prefix}", st.running_var))
    for name in net.params.names():
        out.append((f"momentum/{name}", net.params.momentum_buffer(name)))
    return out


def _rng_state_to_json(rng):
    if rng is None:
        return None
    st = rng.bit_generator.state
    return json.loads(json.dumps(st, default=int))


def _rng_from_json(state):
    rng = np.random.default_rng(0)
    st = dict(state)
    st["state"] = {k: int(v) for k, v in state["state"].items()}
    rng.bit_generator.state = st
    return rng


def checkpoint_save(net, run_config, path, rng=None, extra=None):
    arrays = _state_arrays(net)
    tensors = []
    offset = 0
    for name, arr in arrays:
        nbytes = arr.size * 8
        tensors.append(
            {"name": name, "shape": list(arr.shape), "offset": offset, "nbytes": nbytes}
        )
        offset += nbytes
    header = {
        "format_version": FORMAT_VERSION,
        "config": run_config.to_dict(),
        "tensors": tensors,
        "rng_state": _rng_state_to_json(rng),
        "extra": extra or {},
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(np.uint32(len(blob)).tobytes())
        f.write(blob)
        for _, arr in arrays:
            f.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def read_header(path):
    with open(path, "rb") as f:
        magic = f.read(8)
        if magic != MAGIC:
            raise DataError(f"{path}: bad checkpoint magic {magic!r}")
        (hlen,) = np.frombuffer(f.read(4), dtype="<u4")
        raw = f.read(int(hlen))
        if len(raw) != hlen:
            raise DataError(f"{path}: truncated header")
        try:
            header = json.loads(raw.decode())
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise DataError(f"{path}: unparseable checkpoint header: {e}")
        if header.get("format_version") != FORMAT_VERSION:
            raise DataError(
                f"{path}: format version {header.get('format_version')} "
                f"(this build reads {FORMAT_VERSION})"
            )
        payload = f.read()
    return header, payload


def checkpoint_load(path, expect_config=None):
    """Rebuild the network (and rng) recorded at ``path``.

    With ``expect_config`` given, every architecture field must match; the
    error lists the differing fields.
    """
    header, payload = read_header(path)
    run_config = RunConfig.from_dict(header["config"])
    if expect_config is not None:
        arch_fields = ("n", "group_widths", "gate_kind", "num_classes",
                       "input_geometry", "gate_hidden")
        diffs = [
            f"{k}: checkpoint={getattr(run_config, k)!r} config={getattr(expect_config, k)!r}"
            for k in arch_fields
            if getattr(run_config, k) != getattr(expect_config, k)
        ]
        if diffs:
            raise ConfigurationError(
                "checkpoint architecture differs from config: " + "; ".join(diffs)
            )

    net = SkipNet(run_config.network_config(), seed=run_config.seed)
    expected = _state_arrays(net)
    by_name = {name: arr for name, arr in expected}
    if len(header["tensors"]) != len(expected):
        raise DataError(
            f"{path}: checkpoint holds {len(header['tensors'])} tensors, "
            f"architecture needs {len(expected)}"
        )
    for t in header["tensors"]:
        name, shape, off, nbytes = t["name"], tuple(t["shape"]), t["offset"], t["nbytes"]
        if name not in by_name:
            raise DataError(f"{path}: unexpected tensor {name!r}")
        target = by_name[name]
        if target.shape != shape:
            raise ConfigurationError(
                f"{path}: tensor {name} has shape {shape}, expected {target.shape}"
            )
        if off + nbytes > len(payload):
            raise DataError(
                f"{path}: truncated payload (tensor {name} ends at byte "
                f"{off + nbytes}, payload has {len(payload)})"
            )
        target[...] = np.frombuffer(
            payload[off : off + nbytes], dtype="<f8"
        ).reshape(shape)

    rng = _rng_from_json(header["rng_state"]) if header.get("rng_state") else None
    return net, run_config, rng, header.get("extra", {})
