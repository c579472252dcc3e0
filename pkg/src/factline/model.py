"""The verification model: per-event classifier, order classifier over
Bi-LSTM sequence summaries, and the final claim classifier.

All trainable state lives in a flat name -> Tensor dict inside ModelParams,
so the optimizer, the checkpoint writer, and the gradient checker can treat
parameters uniformly. The forward pass builds an autodiff graph; inference
paths wrap it in ``no_grad``.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import autodiff as ad
from .attention import attention_graph, top_k_row
from .autodiff import Tensor
from .core import (
    Claim,
    EvidencePool,
    ProbDist,
    VerificationResult,
    label_from_dist,
)
from .encode import EventEncoderHandle, EventEncoding, encode_event
from .errors import (
    ConfigurationError,
    DivergenceError,
    NoTemporalAnchor,
    ValidationError,
)
from .extract import score_evidence
from .temporal import DEFAULT_TIME_SCALE, _sort_key, earliest_reference
from .text import stable_seed

CHECKPOINT_MAGIC = b"FLCK"
CHECKPOINT_VERSION = 1

#: External-reorderer adapter: evidence events in, a permutation of their
#: indices out. Replaces the built-in chronological sort when supplied.
Reorderer = Callable[[list], Sequence[int]]


@dataclass(frozen=True)
class ModelDims:
    """Sizes and structural switches of the model."""

    embed_dim: int = 64
    fc_hidden: int = 192
    lstm_hidden: int = 32
    n_max: int = 8
    top_k: int = 3
    seq_k: int = 3
    arity: int = 2
    use_attention: bool = True
    use_event_head: bool = True
    use_order_head: bool = True

    def __post_init__(self) -> None:
        if self.arity not in (2, 3):
            raise ConfigurationError(f"label arity must be 2 or 3, got {self.arity}")
        for name in ("embed_dim", "fc_hidden", "lstm_hidden", "n_max", "top_k", "seq_k"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1")

    @property
    def claim_input_width(self) -> int:
        width = self.n_max * self.embed_dim + self.seq_k * self.embed_dim
        if self.use_event_head:
            width += self.n_max * self.arity
        if self.use_order_head:
            width += 2
        return width


def _param_specs(dims: ModelDims) -> list[tuple[str, tuple[int, ...], bool]]:
    """(name, shape, is_bias) for every parameter, in declared order."""
    specs: list[tuple[str, tuple[int, ...], bool]] = []
    d, f, h = dims.embed_dim, dims.fc_hidden, dims.lstm_hidden
    if dims.use_attention:
        for level in ("token", "event", "time"):
            specs.append((f"proj.{level}", (d, d), False))
    if dims.use_event_head:
        specs += [
            ("event_head.w1", ((dims.top_k + 1) * d, f), False),
            ("event_head.b1", (1, f), True),
            ("event_head.w2", (f, dims.arity), False),
            ("event_head.b2", (1, dims.arity), True),
        ]
    if dims.use_order_head:
        for side in ("claim", "ev"):
            for layer in (0, 1):
                in_dim = d if layer == 0 else 2 * h
                for direction in ("f", "b"):
                    prefix = f"lstm.{side}.{layer}.{direction}"
                    specs += [
                        (f"{prefix}.wx", (in_dim, 4 * h), False),
                        (f"{prefix}.wh", (h, 4 * h), False),
                        (f"{prefix}.b", (1, 4 * h), True),
                    ]
        specs += [
            ("order_head.w1", (4 * h, f), False),
            ("order_head.b1", (1, f), True),
            ("order_head.w2", (f, 2), False),
            ("order_head.b2", (1, 2), True),
        ]
    specs += [
        ("claim_head.w1", (dims.claim_input_width, f), False),
        ("claim_head.b1", (1, f), True),
        ("claim_head.w2", (f, dims.arity), False),
        ("claim_head.b2", (1, dims.arity), True),
    ]
    return specs


@dataclass
class ModelParams:
    """All trainable parameters plus the dims they were built for."""

    dims: ModelDims
    seed: int
    tensors: dict[str, Tensor]
    dtype: np.dtype = np.dtype(np.float32)

    @classmethod
    def init(cls, dims: ModelDims, seed: int, dtype=np.float32) -> "ModelParams":
        """Seeded init: weights uniform in +-1/sqrt(fan_in), biases zero.

        Each parameter draws from its own named stream, so values do not
        depend on which other parameters exist (ablations stay comparable).
        """
        tensors: dict[str, Tensor] = {}
        for name, shape, is_bias in _param_specs(dims):
            if is_bias:
                data = np.zeros(shape, dtype=dtype)
            else:
                bound = 1.0 / np.sqrt(shape[0])
                rng = np.random.default_rng(stable_seed("param", seed, name))
                data = rng.uniform(-bound, bound, size=shape).astype(dtype)
            tensors[name] = ad.parameter(data)
        return cls(dims=dims, seed=seed, tensors=tensors, dtype=np.dtype(dtype))

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def zero_grads(self) -> None:
        for t in self.tensors.values():
            t.grad = None

    def clone(self) -> "ModelParams":
        return ModelParams(
            dims=self.dims,
            seed=self.seed,
            tensors={k: ad.parameter(v.data.copy()) for k, v in self.tensors.items()},
            dtype=self.dtype,
        )

    def astype(self, dtype) -> "ModelParams":
        return ModelParams(
            dims=self.dims,
            seed=self.seed,
            tensors={
                k: ad.parameter(v.data.astype(dtype)) for k, v in self.tensors.items()
            },
            dtype=np.dtype(dtype),
        )


# --------------------------------------------------------------------------
# Checkpoint I/O: versioned binary, float32 little-endian, trailing CRC32.
# --------------------------------------------------------------------------

def save_checkpoint(params: ModelParams, path: str) -> None:
    d = params.dims
    flags = (
        (1 if d.use_attention else 0)
        | (2 if d.use_event_head else 0)
        | (4 if d.use_order_head else 0)
    )
    buf = bytearray()
    buf += struct.pack(
        "<4sI7IBQ",
        CHECKPOINT_MAGIC,
        CHECKPOINT_VERSION,
        d.embed_dim,
        d.fc_hidden,
        d.lstm_hidden,
        d.n_max,
        d.top_k,
        d.seq_k,
        d.arity,
        flags,
        params.seed,
    )
    names = [name for name, _, _ in _param_specs(d)]
    buf += struct.pack("<I", len(names))
    for name in names:
        data = params.tensors[name].data
        raw = name.encode("utf-8")
        buf += struct.pack("<H", len(raw))
        buf += raw
        buf += struct.pack("<B", data.ndim)
        buf += struct.pack(f"<{data.ndim}I", *data.shape)
        buf += np.asarray(data, dtype="<f4").tobytes()
    buf += struct.pack("<I", zlib.crc32(bytes(buf)) & 0xFFFFFFFF)
    with open(path, "wb") as fh:
        fh.write(bytes(buf))


def load_checkpoint(path: str, dtype=np.float32) -> ModelParams:
    with open(path, "rb") as fh:
        blob = fh.read()
    (stored_crc,) = struct.unpack_from("<I", blob, len(blob) - 4)
    if zlib.crc32(blob[:-4]) & 0xFFFFFFFF != stored_crc:
        raise ValidationError(f"checkpoint {path!r} failed its checksum")
    magic, version, e, f, h, n_max, top_k, seq_k, arity, flags, seed = struct.unpack_from(
        "<4sI7IBQ", blob, 0
    )
    if magic != CHECKPOINT_MAGIC:
        raise ValidationError(f"{path!r} is not a checkpoint file")
    if version != CHECKPOINT_VERSION:
        raise ValidationError(f"unsupported checkpoint version {version}")
    dims = ModelDims(
        embed_dim=e,
        fc_hidden=f,
        lstm_hidden=h,
        n_max=n_max,
        top_k=top_k,
        seq_k=seq_k,
        arity=arity,
        use_attention=bool(flags & 1),
        use_event_head=bool(flags & 2),
        use_order_head=bool(flags & 4),
    )
    pos = struct.calcsize("<4sI7IBQ")
    (count,) = struct.unpack_from("<I", blob, pos)
    pos += 4
    tensors: dict[str, Tensor] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", blob, pos)
        pos += 2
        name = blob[pos : pos + name_len].decode("utf-8")
        pos += name_len
        (ndim,) = struct.unpack_from("<B", blob, pos)
        pos += 1
        shape = struct.unpack_from(f"<{ndim}I", blob, pos)
        pos += 4 * ndim
        size = int(np.prod(shape))
        data = np.frombuffer(blob, dtype="<f4", count=size, offset=pos).reshape(shape)
        pos += 4 * size
        tensors[name] = ad.parameter(data.astype(dtype))
    return ModelParams(dims=dims, seed=seed, tensors=tensors, dtype=np.dtype(dtype))


# --------------------------------------------------------------------------
# Sequence representations and the Bi-LSTM stacks
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SequenceReps:
    """Claim and evidence sequences fed to the order and claim heads.

    seq_claim holds CLS vectors in claim chronological order; seq_evidence
    holds relevance-weighted CLS vectors in evidence chronological order.
    Mask entries mark real rows; padded rows are ignored entirely.
    """

    seq_claim: np.ndarray  # [rows, dim]
    seq_evidence: np.ndarray  # [rows, dim]
    claim_mask: np.ndarray  # [rows] bool
    evidence_mask: np.ndarray  # [rows] bool

    def __post_init__(self) -> None:
        if len(self.claim_mask) != self.seq_claim.shape[0]:
            raise ValidationError("claim mask does not align with claim rows")
        if len(self.evidence_mask) != self.seq_evidence.shape[0]:
            raise ValidationError("evidence mask does not align with evidence rows")
        if not self.claim_mask.any():
            raise ValidationError("claim sequence is empty after masking")


def _lstm_run(
    rows: Sequence[Tensor], params: ModelParams, prefix: str
) -> list[Tensor]:
    hidden = params.dims.lstm_hidden
    zeros = np.zeros((1, hidden), dtype=params.dtype)
    h, c = ad.constant(zeros), ad.constant(zeros)
    wx, wh, b = params[f"{prefix}.wx"], params[f"{prefix}.wh"], params[f"{prefix}.b"]
    out = []
    for x in rows:
        h, c = ad.lstm_cell(x, h, c, wx, wh, b)
        out.append(h)
    return out


def _bilstm_pool(rows: Sequence[Tensor], params: ModelParams, side: str) -> Tensor:
    """Two stacked Bi-LSTM layers; returns [1, 2*hidden] = final fwd + final bwd."""
    steps = len(rows)
    l0f = _lstm_run(rows, params, f"lstm.{side}.0.f")
    l0b = _lstm_run(list(reversed(rows)), params, f"lstm.{side}.0.b")
    combined = [
        ad.concat([l0f[t], l0b[steps - 1 - t]], axis=1) for t in range(steps)
    ]
    l1f = _lstm_run(combined, params, f"lstm.{side}.1.f")
    l1b = _lstm_run(list(reversed(combined)), params, f"lstm.{side}.1.b")
    return ad.concat([l1f[-1], l1b[-1]], axis=1)


def _fc_head(x: Tensor, params: ModelParams, prefix: str) -> Tensor:
    hidden = ad.relu(x @ params[f"{prefix}.w1"] + params[f"{prefix}.b1"])
    return ad.softmax(hidden @ params[f"{prefix}.w2"] + params[f"{prefix}.b2"], axis=1)


# --------------------------------------------------------------------------
# Forward pass
# --------------------------------------------------------------------------

@dataclass
class ForwardPass:
    """Graph outputs of one claim; tensors stay alive for backward."""

    event_dists: Optional[Tensor]  # [n, arity] or None when the head is off
    order_dist: Optional[Tensor]  # [1, 2] or None when the head is off
    claim_dist: Tensor  # [1, arity]
    omega: Optional[Tensor]  # [n, m]
    relevance: Optional[Tensor]  # [1, m]
    topk: list[list[int]]
    evidence_sequence: list[int]
    flags: list[str]


def forward_claim(
    claim_encs: Sequence[EventEncoding],
    ev_encs: Sequence[EventEncoding],
    ev_keys: Sequence[tuple],
    params: ModelParams,
) -> ForwardPass:
    """Run the full model on encoded events.

    claim_encs must be in claim surface order (the claim's asserted
    chronology); ev_keys are the chronological sort keys of the evidence
    events, used to order the selected top evidence.
    """
    dims = params.dims
    dt = params.dtype
    n, m = len(claim_encs), len(ev_encs)
    if n < 1:
        raise ValidationError("claim has no encoded events")
    if n > dims.n_max:
        raise ConfigurationError(f"{n} claim events exceed n_max={dims.n_max}")
    flags: list[str] = []

    claim_rows = [ad.constant(e.cls[None, :], dt) for e in claim_encs]
    ev_rows = [ad.constant(e.cls[None, :], dt) for e in ev_encs]

    omega: Optional[Tensor] = None
    relevance: Optional[Tensor] = None
    if m == 0:
        flags.append("empty_evidence")
    elif dims.use_attention:
        graph = attention_graph(
            claim_encs,
            ev_encs,
            params["proj.token"],
            params["proj.event"],
            params["proj.time"],
            dtype=dt,
        )
        omega, relevance = graph.omega, graph.relevance
        flags.extend(graph.flags)
    else:
        omega = ad.constant(np.ones((n, m), dtype=dt))
        relevance = ad.tanh(omega.sum(axis=0, keepdims=True))
        flags.append("attention_disabled")

    zero_block = ad.constant(np.zeros((1, dims.embed_dim), dtype=dt))

    event_dists: Optional[Tensor] = None
    topk: list[list[int]] = []
    if dims.use_event_head:
        u_rows = []
        for i in range(n):
            selected = top_k_row(omega.data[i], dims.top_k) if m else []
            topk.append(selected)
            parts = [claim_rows[i]]
            for j in selected:
                parts.append(omega[i : i + 1, j : j + 1] * ev_rows[j])
            parts.extend([zero_block] * (dims.top_k - len(selected)))
            u_rows.append(ad.concat(parts, axis=1))
        u_matrix = ad.concat(u_rows, axis=0)
        event_dists = _fc_head(u_matrix, params, "event_head")
    else:
        topk = [[] for _ in range(n)]
        flags.append("event_head_disabled")

    if m > 0:
        selected = top_k_row(relevance.data[0], dims.seq_k)
        if dims.use_order_head:
            selected = sorted(selected, key=lambda j: ev_keys[j])
        seq_ev_rows = [
            relevance[0:1, j : j + 1] * ev_rows[j] for j in selected
        ]
        evidence_sequence = list(selected)
    else:
        seq_ev_rows = []
        evidence_sequence = []

    order_dist: Optional[Tensor] = None
    if dims.use_order_head:
        pooled_claim = _bilstm_pool(claim_rows, params, "claim")
        if seq_ev_rows:
            pooled_ev = _bilstm_pool(seq_ev_rows, params, "ev")
        else:
            pooled_ev = ad.constant(np.zeros((1, 2 * dims.lstm_hidden), dtype=dt))
            flags.append("empty_evidence_sequence")
        order_dist = _fc_head(ad.concat([pooled_claim, pooled_ev], axis=1), params, "order_head")
    else:
        flags.append("order_head_disabled")

    blocks = list(claim_rows) + [zero_block] * (dims.n_max - n)
    blocks += seq_ev_rows + [zero_block] * (dims.seq_k - len(seq_ev_rows))
    if dims.use_event_head:
        for i in range(n):
            blocks.append(event_dists[i : i + 1, :])
        if n < dims.n_max:
            blocks.append(
                ad.constant(np.zeros((1, (dims.n_max - n) * dims.arity), dtype=dt))
            )
    if dims.use_order_head:
        blocks.append(order_dist)
    claim_dist = _fc_head(ad.concat(blocks, axis=1), params, "claim_head")

    return ForwardPass(
        event_dists=event_dists,
        order_dist=order_dist,
        claim_dist=claim_dist,
        omega=omega,
        relevance=relevance,
        topk=topk,
        evidence_sequence=evidence_sequence,
        flags=flags,
    )


# --------------------------------------------------------------------------
# Plain-array head API
# --------------------------------------------------------------------------

def _check_finite(arr: np.ndarray, where: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise DivergenceError(f"non-finite activation in {where}")


def build_u(
    c: EventEncoding,
    topk: Sequence[EventEncoding],
    weights: Sequence[float],
    k: int,
) -> np.ndarray:
    """Concatenate the claim CLS with weighted top evidence CLS vectors.

    Result has length (k+1)*dim; absent evidence slots are zero.
    """
    if len(topk) > k:
        raise ValidationError(f"{len(topk)} evidence encodings for k={k}")
    if len(weights) != len(topk):
        raise ValidationError("weights do not align with evidence encodings")
    parts = [c.cls]
    for w, enc in zip(weights, topk):
        parts.append(w * enc.cls)
    parts.extend([np.zeros(c.dim)] * (k - len(topk)))
    return np.concatenate(parts)


def claim_event_head(u: np.ndarray, params: ModelParams) -> ProbDist:
    """Distribution over event verdicts for one assembled input vector."""
    dims = params.dims
    want = (dims.top_k + 1) * dims.embed_dim
    if u.shape != (want,):
        raise ValidationError(f"event head input has shape {u.shape}, want ({want},)")
    with ad.no_grad():
        z = _fc_head(ad.constant(u[None, :], params.dtype), params, "event_head")
    _check_finite(z.data, "claim_event_head")
    return ProbDist.of(z.data[0])


def order_head(seq: SequenceReps, params: ModelParams) -> ProbDist:
    """Order-consistency distribution from the two Bi-LSTM summaries.

    An empty evidence sequence is tolerated: the evidence summary is zero.
    """
    dims = params.dims
    claim_rows = [
        ad.constant(seq.seq_claim[t][None, :], params.dtype)
        for t in range(seq.seq_claim.shape[0])
        if seq.claim_mask[t]
    ]
    ev_rows = [
        ad.constant(seq.seq_evidence[t][None, :], params.dtype)
        for t in range(seq.seq_evidence.shape[0])
        if seq.evidence_mask[t]
    ]
    with ad.no_grad():
        pooled_claim = _bilstm_pool(claim_rows, params, "claim")
        if ev_rows:
            pooled_ev = _bilstm_pool(ev_rows, params, "ev")
        else:
            pooled_ev = ad.constant(
                np.zeros((1, 2 * dims.lstm_hidden), dtype=params.dtype)
            )
        z = _fc_head(
            ad.concat([pooled_claim, pooled_ev], axis=1), params, "order_head"
        )
    _check_finite(z.data, "order_head")
    return ProbDist.of(z.data[0])


def claim_head(
    seq: SequenceReps,
    event_dists: Sequence[ProbDist],
    order_dist: Optional[ProbDist],
    params: ModelParams,
) -> ProbDist:
    """Overall claim distribution from sequences plus head distributions."""
    dims = params.dims
    n = int(seq.claim_mask.sum())
    if n > dims.n_max:
        raise ConfigurationError(f"{n} claim events exceed n_max={dims.n_max}")
    if dims.use_event_head and len(event_dists) != n:
        raise ValidationError(f"{len(event_dists)} event dists for {n} events")
    dt = params.dtype
    claim_block = np.zeros((dims.n_max, dims.embed_dim))
    claim_block[:n] = seq.seq_claim[seq.claim_mask][:n]
    ev_rows = seq.seq_evidence[seq.evidence_mask]
    ev_block = np.zeros((dims.seq_k, dims.embed_dim))
    ev_block[: len(ev_rows)] = ev_rows[: dims.seq_k]
    parts = [claim_block.reshape(-1), ev_block.reshape(-1)]
    if dims.use_event_head:
        dist_block = np.zeros((dims.n_max, dims.arity))
        for i, dist in enumerate(event_dists):
            if dist.arity != dims.arity:
                raise ValidationError("event distribution arity mismatch")
            dist_block[i] = dist.probs
        parts.append(dist_block.reshape(-1))
    if dims.use_order_head:
        if order_dist is None:
            raise ValidationError("order distribution is required but missing")
        parts.append(np.asarray(order_dist.probs))
    full = np.concatenate(parts)
    with ad.no_grad():
        z = _fc_head(ad.constant(full[None, :], dt), params, "claim_head")
    _check_finite(z.data, "claim_head")
    return ProbDist.of(z.data[0])


# --------------------------------------------------------------------------
# End-to-end pipeline
# --------------------------------------------------------------------------

def encode_claim_and_pool(
    claim: Claim,
    pool: EvidencePool,
    handle: EventEncoderHandle,
    time_scale: float = DEFAULT_TIME_SCALE,
    reorderer: Optional[Reorderer] = None,
) -> tuple[list[EventEncoding], list[EventEncoding], list[tuple]]:
    """Encode all events against the shared earliest reference day.

    An external reorderer (events in, permutation out) may replace the
    built-in chronological keys; the returned keys then rank evidence by the
    adapter's ordering.
    """
    try:
        reference = earliest_reference(claim.events, pool.events)
    except NoTemporalAnchor:
        reference = 0  # nothing is dated, so the reference never matters
    claim_encs = [
        encode_event(ev, handle, reference, time_scale) for ev in claim.events
    ]
    ev_encs = [encode_event(ev, handle, reference, time_scale) for ev in pool.events]
    if reorderer is not None:
        permutation = list(reorderer(list(pool.events)))
        if sorted(permutation) != list(range(len(pool.events))):
            raise ValidationError("reorderer did not return a permutation")
        ranks = [0] * len(permutation)
        for rank, idx in enumerate(permutation):
            ranks[idx] = rank
        ev_keys: list[tuple] = [(rank,) for rank in ranks]
    else:
        ev_keys = [_sort_key(ev) for ev in pool.events]
    return claim_encs, ev_encs, ev_keys


def verify_claim(
    claim: Claim,
    pool: EvidencePool,
    params: ModelParams,
    handle: EventEncoderHandle,
    budget: int = 30,
    time_scale: float = DEFAULT_TIME_SCALE,
    reorderer: Optional[Reorderer] = None,
) -> VerificationResult:
    """Full pipeline: evidence pre-scoring, encoding, attention, three heads.

    evidence_order and relevance are reported in the frame of the pool the
    caller passed in; events pruned by the pre-scoring budget get relevance
    0.0 and are flagged.
    """
    scored = score_evidence(claim.events, pool, handle, budget) if pool.events else pool
    claim_encs, ev_encs, ev_keys = encode_claim_and_pool(
        claim, scored, handle, time_scale, reorderer
    )
    with ad.no_grad():
        fwd = forward_claim(claim_encs, ev_encs, ev_keys, params)
    _check_finite(fwd.claim_dist.data, "claim head")

    arity = params.dims.arity
    n = len(claim.events)
    if fwd.event_dists is not None:
        event_dists = tuple(ProbDist.of(fwd.event_dists.data[i]) for i in range(n))
    else:
        event_dists = tuple(
            ProbDist.of(np.full(arity, 1.0 / arity)) for _ in range(n)
        )
    if fwd.order_dist is not None:
        order_dist = ProbDist.of(fwd.order_dist.data[0])
    else:
        order_dist = ProbDist.of([0.5, 0.5])
    claim_dist = ProbDist.of(fwd.claim_dist.data[0])

    original_index = {ev.id: i for i, ev in enumerate(pool.events)}
    flags = list(fwd.flags)
    relevance = [0.0] * len(pool.events)
    if fwd.relevance is not None:
        for j, value in enumerate(fwd.relevance.data[0]):
            relevance[original_index[scored.events[j].id]] = float(value)
        if len(scored.events) < len(pool.events):
            flags.append("evidence_pruned")
    evidence_order = tuple(
        original_index[scored.events[j].id] for j in fwd.evidence_sequence
    )
    return VerificationResult(
        event_dists=event_dists,
        event_labels=tuple(label_from_dist(d) for d in event_dists),
        order_dist=order_dist,
        order_label=label_from_dist(order_dist),
        claim_dist=claim_dist,
        claim_label=label_from_dist(claim_dist),
        evidence_order=evidence_order,
        relevance=tuple(relevance),
        flags=tuple(flags),
    )
