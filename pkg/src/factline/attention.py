"""Multi-level attention: token/event/time cosine scores, their average, and
the tanh relevance of each evidence event.

Scores are raw cosine similarities after a per-level learned linear
projection; they are averaged with equal weights, falling back to the two
text levels for pairs where either event lacks a date. The same computation
serves inference (plain arrays) and training (autodiff graph), so there is a
single source of truth for the formulas.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .encode import EventEncoding
from .errors import ConfigurationError, ValidationError

_NORM_EPS = 1e-24


@dataclass(frozen=True)
class AttentionProjection:
    """Learned square projections applied before each level's cosine."""

    token: np.ndarray
    event: np.ndarray
    time: np.ndarray

    def __post_init__(self) -> None:
        for name, m in (("token", self.token), ("event", self.event), ("time", self.time)):
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValidationError(f"{name} projection is not square: {m.shape}")
            if not np.all(np.isfinite(m)):
                raise ValidationError(f"{name} projection has non-finite entries")

    @classmethod
    def identity(cls, dim: int) -> "AttentionProjection":
        eye = np.eye(dim)
        return cls(eye, eye.copy(), eye.copy())


@dataclass(frozen=True)
class AttentionMatrix:
    """All pairwise scores for one claim/evidence pairing."""

    alpha: np.ndarray  # [n, m] token-level
    beta: np.ndarray   # [n, m] event-level
    gamma: np.ndarray  # [n, m] time-level, 0 where not defined
    time_present: np.ndarray  # [n, m] bool
    omega: np.ndarray  # [n, m] averaged score
    relevance: np.ndarray  # [m]
    flags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        n, m = self.alpha.shape
        levels = 2.0 + self.time_present
        expect = (self.alpha + self.beta + self.gamma * self.time_present) / levels
        if np.max(np.abs(expect - self.omega)) > 1e-6:
            raise ValidationError("omega is not the mean of the available levels")
        if np.max(np.abs(np.tanh(self.omega.sum(axis=0)) - self.relevance)) > 1e-6:
            raise ValidationError("relevance does not match tanh of column sums")

    @property
    def n(self) -> int:
        return self.alpha.shape[0]

    @property
    def m(self) -> int:
        return self.alpha.shape[1]


# --------------------------------------------------------------------------
# Graph-level computation (differentiable w.r.t. the projections)
# --------------------------------------------------------------------------

def _normalize_rows(m: Tensor) -> Tensor:
    sq = (m * m).sum(axis=1, keepdims=True)
    return m / ad.sqrt(sq + _NORM_EPS)


def _cosine_matrix(rows_a: Tensor, rows_b: Tensor, proj: Tensor) -> Tensor:
    return _normalize_rows(rows_a @ proj) @ _normalize_rows(rows_b @ proj).T


def _block_average(counts: Sequence[int], dtype) -> np.ndarray:
    total = sum(counts)
    out = np.zeros((len(counts), total), dtype=dtype)
    offset = 0
    for i, c in enumerate(counts):
        out[i, offset : offset + c] = 1.0 / c
        offset += c
    return out


@dataclass
class AttentionGraph:
    alpha: Tensor
    beta: Tensor
    gamma: Tensor
    time_present: np.ndarray
    omega: Tensor
    relevance: Tensor  # [1, m]
    flags: list[str]


def attention_graph(
    claims: Sequence[EventEncoding],
    evidence: Sequence[EventEncoding],
    proj_token: Tensor,
    proj_event: Tensor,
    proj_time: Tensor,
    dtype=np.float64,
) -> AttentionGraph:
    """Differentiable multi-level attention over all (claim, evidence) pairs."""
    if not claims or not evidence:
        raise ValidationError("attention needs at least one claim and one evidence event")
    flags: list[str] = []

    tok_c = ad.constant(np.vstack([e.tokens for e in claims]), dtype)
    tok_e = ad.constant(np.vstack([e.tokens for e in evidence]), dtype)
    pair_cos = _cosine_matrix(tok_c, tok_e, proj_token)
    avg_c = ad.constant(_block_average([e.tokens.shape[0] for e in claims], dtype))
    avg_e = ad.constant(_block_average([e.tokens.shape[0] for e in evidence], dtype))
    alpha = avg_c @ pair_cos @ avg_e.T
    for side, tok in (("claim", tok_c), ("evidence", tok_e)):
        norms = np.linalg.norm(tok.data @ proj_token.data, axis=1)
        if np.any(norms < 1e-12):
            flags.append(f"zero_norm_projected_token:{side}")

    cls_c = ad.constant(np.vstack([e.cls for e in claims]), dtype)
    cls_e = ad.constant(np.vstack([e.cls for e in evidence]), dtype)
    beta = _cosine_matrix(cls_c, cls_e, proj_event)

    has_c = np.array([e.date is not None for e in claims])
    has_e = np.array([e.date is not None for e in evidence])
    time_present = np.outer(has_c, has_e)
    dim = claims[0].dim
    date_c = ad.constant(
        np.vstack([e.date if e.date is not None else np.zeros(dim) for e in claims]),
        dtype,
    )
    date_e = ad.constant(
        np.vstack([e.date if e.date is not None else np.zeros(dim) for e in evidence]),
        dtype,
    )
    gamma_full = _cosine_matrix(date_c, date_e, proj_time)
    mask = ad.constant(time_present.astype(dtype))
    gamma = gamma_full * mask
    if not time_present.all():
        flags.append("two_level_fallback")

    omega = (alpha + beta + gamma) / ad.constant(2.0 + time_present.astype(dtype))
    relevance = ad.tanh(omega.sum(axis=0, keepdims=True))
    return AttentionGraph(alpha, beta, gamma, time_present, omega, relevance, flags)


# --------------------------------------------------------------------------
# Plain-array API
# --------------------------------------------------------------------------

def _as_tensors(proj: AttentionProjection) -> tuple[Tensor, Tensor, Tensor]:
    return ad.constant(proj.token), ad.constant(proj.event), ad.constant(proj.time)


def multi_level_scores(
    claims: Sequence[EventEncoding],
    evidence: Sequence[EventEncoding],
    proj: AttentionProjection,
) -> AttentionMatrix:
    """Score every (claim event, evidence event) pair and derive relevance."""
    with ad.no_grad():
        g = attention_graph(claims, evidence, *_as_tensors(proj))
    return AttentionMatrix(
        alpha=g.alpha.data,
        beta=g.beta.data,
        gamma=g.gamma.data,
        time_present=g.time_present,
        omega=g.omega.data,
        relevance=g.relevance.data[0],
        flags=tuple(g.flags),
    )


def token_level(c: EventEncoding, e: EventEncoding, proj: AttentionProjection) -> float:
    """Mean cosine over all (claim token, evidence token) pairs."""
    return float(multi_level_scores([c], [e], proj).alpha[0, 0])


def event_level(c: EventEncoding, e: EventEncoding, proj: AttentionProjection) -> float:
    """Cosine of the projected CLS vectors."""
    return float(multi_level_scores([c], [e], proj).beta[0, 0])


def time_level(
    c: EventEncoding, e: EventEncoding, proj: AttentionProjection
) -> Optional[float]:
    """Cosine of the projected date vectors; None if either date is missing."""
    if c.date is None or e.date is None:
        return None
    return float(multi_level_scores([c], [e], proj).gamma[0, 0])


def top_k(matrix: AttentionMatrix, claim_index: int, k: int) -> list[int]:
    """Indices of the k largest scores in a claim row, descending.

    Ties break to the lower evidence index; fewer than k evidence events
    returns all of them.
    """
    if k < 1:
        raise ConfigurationError(f"k must be >= 1, got {k}")
    return top_k_row(matrix.omega[claim_index], k)


def top_k_row(row: np.ndarray, k: int) -> list[int]:
    order = np.argsort(-row, kind="stable")
    return [int(i) for i in order[: min(k, len(row))]]


def dump_attention_csv(matrix: AttentionMatrix, fh) -> None:
    """Per-pair score dump for manual attention audits."""
    fh.write("claim_event,evidence_event,alpha,beta,gamma,time_present,omega\n")
    for i in range(matrix.n):
        for j in range(matrix.m):
            gamma = matrix.gamma[i, j] if matrix.time_present[i, j] else ""
            fh.write(
                f"{i},{j},{matrix.alpha[i, j]:.6f},{matrix.beta[i, j]:.6f},"
                f"{gamma if gamma == '' else format(gamma, '.6f')},"
                f"{int(matrix.time_present[i, j])},{matrix.omega[i, j]:.6f}\n"
            )
