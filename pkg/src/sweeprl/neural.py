"""Tiny MLP over a single flat float64 parameter vector.

Layout of the flat vector (all row-major, weights stored as (n_in, n_out)):

    trunk:   W0, b0, W1, b1, ...          tanh activations
    pv head: Wp (hl, 8), bp (8), Wv (hl,), bv (1,)   -> logits + state value
    q head:  Wq (hl, 8), bq (8)                      -> action values
    dueling: Wv (hl,), bv (1,), Wa (hl, 8), ba (8)   -> V + A - mean(A)

Keeping parameters flat makes saving, finite-difference checking, and the
Adam update trivially uniform; views via offsets recover the matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels as K
from .errors import ShapeMismatchError

HEADS = {"pv": K.HEAD_PV, "q": K.HEAD_Q, "dueling": K.HEAD_DUELING}
N_ACTIONS = 8


@dataclass(frozen=True)
class NetSpec:
    """Architecture description: input width, hidden widths, head type."""

    input_size: int
    hidden: tuple[int, ...] = (64, 64)
    head: str = "pv"

    def __post_init__(self):
        if self.input_size < 1:
            raise ValueError("input_size must be >= 1")
        if any(h < 1 for h in self.hidden):
            raise ValueError("hidden widths must be >= 1")
        if self.head not in HEADS:
            raise ValueError(f"head must be one of {sorted(HEADS)}, got {self.head!r}")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))

    @property
    def head_kind(self) -> int:
        return HEADS[self.head]

    @property
    def sizes(self) -> np.ndarray:
        """Trunk layout [input, h1, ...] as int64, the form kernels expect."""
        return np.array((self.input_size,) + self.hidden, dtype=np.int64)

    @property
    def last_width(self) -> int:
        return self.hidden[-1] if self.hidden else self.input_size

    def layout(self) -> list[tuple[str, int, tuple[int, ...]]]:
        """(name, offset, shape) of every parameter block in the flat vector."""
        blocks = []
        off = 0
        dims = (self.input_size,) + self.hidden
        for i in range(len(dims) - 1):
            blocks.append((f"w{i}", off, (dims[i], dims[i + 1])))
            off += dims[i] * dims[i + 1]
            blocks.append((f"b{i}", off, (dims[i + 1],)))
            off += dims[i + 1]
        hl = self.last_width
        if self.head == "pv":
            blocks.append(("w_pi", off, (hl, N_ACTIONS)))
            off += hl * N_ACTIONS
            blocks.append(("b_pi", off, (N_ACTIONS,)))
            off += N_ACTIONS
            blocks.append(("w_v", off, (hl,)))
            off += hl
            blocks.append(("b_v", off, (1,)))
            off += 1
        elif self.head == "q":
            blocks.append(("w_q", off, (hl, N_ACTIONS)))
            off += hl * N_ACTIONS
            blocks.append(("b_q", off, (N_ACTIONS,)))
            off += N_ACTIONS
        else:
            blocks.append(("w_v", off, (hl,)))
            off += hl
            blocks.append(("b_v", off, (1,)))
            off += 1
            blocks.append(("w_a", off, (hl, N_ACTIONS)))
            off += hl * N_ACTIONS
            blocks.append(("b_a", off, (N_ACTIONS,)))
            off += N_ACTIONS
        return blocks

    @property
    def num_params(self) -> int:
        name, off, shape = self.layout()[-1]
        return off + int(np.prod(shape))

    def view(self, flat: np.ndarray, name: str) -> np.ndarray:
        """Named parameter block as a reshaped view into the flat vector."""
        for bname, off, shape in self.layout():
            if bname == name:
                return flat[off:off + int(np.prod(shape))].reshape(shape)
        raise KeyError(name)


def check_params(spec: NetSpec, flat: np.ndarray) -> np.ndarray:
    flat = np.asarray(flat, dtype=np.float64)
    if flat.ndim != 1 or flat.shape[0] != spec.num_params:
        raise ShapeMismatchError(
            f"parameter vector has {flat.shape} but spec needs ({spec.num_params},)")
    return flat


def init_params(spec: NetSpec, rng: np.random.Generator) -> np.ndarray:
    """Scaled-uniform fan-in init; policy logits head shrunk 100x so the
    initial policy is near-uniform and early exploration is broad."""
    flat = np.zeros(spec.num_params)
    for name, off, shape in spec.layout():
        if name.startswith("b"):
            continue
        nin = shape[0]
        bound = 1.0 / np.sqrt(nin)
        block = rng.uniform(-bound, bound, size=int(np.prod(shape)))
        if name == "w_pi":
            block *= 0.01
        flat[off:off + block.shape[0]] = block
    return flat


def policy_value(spec: NetSpec, flat: np.ndarray, obs: np.ndarray) -> tuple[np.ndarray, float]:
    """Logits (8,) and state value for one observation."""
    logits, value = K.pv_forward_single(flat, spec.sizes, np.ascontiguousarray(obs, dtype=np.float64))
    return logits, float(value)


def action_values(spec: NetSpec, flat: np.ndarray, obs: np.ndarray) -> np.ndarray:
    """Q values (8,) for one observation (plain or dueling head)."""
    return K.q_forward_single(flat, spec.sizes, spec.head_kind,
                              np.ascontiguousarray(obs, dtype=np.float64))


def softmax(logits: np.ndarray) -> np.ndarray:
    out = np.empty(N_ACTIONS)
    K.softmax8(np.ascontiguousarray(logits, dtype=np.float64), out)
    return out


@dataclass
class AdamState:
    """First/second moment buffers plus step counter for one flat vector."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, flat: np.ndarray, **kw) -> "AdamState":
        return cls(m=np.zeros_like(flat), v=np.zeros_like(flat), **kw)

    def step(self, flat: np.ndarray, grad: np.ndarray, lr: float):
        """Apply one bias-corrected update in place."""
        if grad.shape != flat.shape:
            raise ShapeMismatchError(f"grad shape {grad.shape} != params {flat.shape}")
        self.t = int(K.adam_step_inplace(flat, grad, self.m, self.v,
                                         self.t, lr, self.beta1, self.beta2, self.eps))
