"""Policy snapshot files.

Layout: 8-byte magic ``SWEEPRL1``, little-endian uint32 header length, a JSON
header (architecture, observation spec, algorithm, free-form meta), then the
flat parameter vector as little-endian float64.  The header carries
``num_params`` so a short payload is detected instead of silently loading
garbage.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ArchMismatchError, BadMagicError, TruncatedFileError
from .neural import NetSpec
from .percept import ObservationSpec

MAGIC = b"SWEEPRL1"
FORMAT_VERSION = 1


@dataclass
class PolicyBundle:
    """Everything needed to run a saved policy."""

    flat: np.ndarray
    net: NetSpec
    obs_spec: ObservationSpec
    algo: str
    meta: dict


def save_policy(path, flat: np.ndarray, net: NetSpec, obs_spec: ObservationSpec,
                algo: str, meta: dict | None = None) -> None:
    flat = np.ascontiguousarray(flat, dtype=np.float64)
    if flat.shape != (net.num_params,):
        raise ArchMismatchError(
            f"parameter vector {flat.shape} does not fit net with {net.num_params} params")
    header = {
        "format": FORMAT_VERSION,
        "algo": algo,
        "net": {"input_size": net.input_size, "hidden": list(net.hidden), "head": net.head},
        "obs": {"mode": obs_spec.mode, "include_dnut": obs_spec.include_dnut,
                "include_heading": obs_spec.include_heading, "dnut_cap": obs_spec.dnut_cap},
        "num_params": int(flat.shape[0]),
        "meta": meta or {},
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        f.write(flat.astype("<f8").tobytes())


def load_policy(path) -> PolicyBundle:
    data = Path(path).read_bytes()
    if len(data) < len(MAGIC) or data[:len(MAGIC)] != MAGIC:
        raise BadMagicError(f"{path}: not a policy file (magic mismatch)")
    off = len(MAGIC)
    if len(data) < off + 4:
        raise TruncatedFileError(f"{path}: missing header length")
    (hlen,) = struct.unpack_from("<I", data, off)
    off += 4
    if len(data) < off + hlen:
        raise TruncatedFileError(f"{path}: header cut short")
    try:
        header = json.loads(data[off:off + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise TruncatedFileError(f"{path}: unreadable header: {e}") from e
    off += hlen
    n = int(header["num_params"])
    payload = data[off:]
    if len(payload) < n * 8:
        raise TruncatedFileError(
            f"{path}: payload holds {len(payload) // 8} floats, header says {n}")
    flat = np.frombuffer(payload[:n * 8], dtype="<f8").astype(np.float64)
    net = NetSpec(input_size=int(header["net"]["input_size"]),
                  hidden=tuple(header["net"]["hidden"]),
                  head=str(header["net"]["head"]))
    if net.num_params != n:
        raise ArchMismatchError(
            f"{path}: header claims {n} params but architecture needs {net.num_params}")
    o = header["obs"]
    obs_spec = ObservationSpec(mode=str(o["mode"]), include_dnut=bool(o["include_dnut"]),
                               include_heading=bool(o["include_heading"]),
                               dnut_cap=float(o["dnut_cap"]))
    return PolicyBundle(flat=flat, net=net, obs_spec=obs_spec,
                        algo=str(header.get("algo", "ppo")),
                        meta=dict(header.get("meta", {})))
