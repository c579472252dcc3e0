"""Training objective: summed cross-entropy over the three prediction levels,
plus a consistency loss that pulls the claim distribution toward the fuzzy
(min/max) aggregation of the event and order distributions.

The aggregation softens the hard rule "claim is supported iff every event is
supported and the order is consistent": the supported mass is the minimum of
the supported probabilities, the refuted mass the maximum of the refuted
ones, and (in 3-class mode) the remainder goes to not-enough-info, clamped
and renormalized. The consistency loss is the KL divergence from the
aggregated distribution to the predicted one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .core import GoldLabels, Label, Label2, Label3, ProbDist
from .errors import ConfigurationError, ValidationError
from .model import ForwardPass

EPSILON = 1e-6
DEFAULT_MU = 0.3


@dataclass(frozen=True)
class LossBreakdown:
    """One step's loss terms; total = (1-mu)*l_cross + mu*l_soft."""

    l_cross: float
    l_soft: float
    total: float
    mu: float

    def __post_init__(self) -> None:
        want = (1.0 - self.mu) * self.l_cross + self.mu * self.l_soft
        if abs(want - self.total) > 1e-6:
            raise ValidationError("loss total does not match its parts")


def _label_index(g: Label, arity: int) -> int:
    if arity == 2 and not isinstance(g, Label2):
        raise ValidationError(f"label {g} does not fit a 2-class distribution")
    if arity == 3 and not isinstance(g, Label3):
        raise ValidationError(f"label {g} does not fit a 3-class distribution")
    return g.value


def cross_entropy(g: Label, z: ProbDist, eps: float = EPSILON) -> float:
    """-log of the probability assigned to the gold label, floored at eps."""
    idx = _label_index(g, z.arity)
    return float(-np.log(max(z.probs[idx], eps)))


def loss_cross(
    golds: GoldLabels,
    event_dists: Sequence[ProbDist],
    order_dist: ProbDist,
    claim_dist: ProbDist,
) -> float:
    """Sum of the per-event, order, and claim cross-entropies."""
    if golds is None:
        raise ValidationError("gold labels are required for the cross loss")
    if len(golds.event_labels) != len(event_dists):
        raise ValidationError(
            f"{len(golds.event_labels)} gold event labels for "
            f"{len(event_dists)} distributions"
        )
    total = sum(cross_entropy(g, z) for g, z in zip(golds.event_labels, event_dists))
    total += cross_entropy(golds.order_label, order_dist)
    total += cross_entropy(golds.claim_label, claim_dist)
    return float(total)


def aggregate_masses(sup: float, ref: float, arity: int) -> ProbDist:
    """Turn aggregated supported/refuted masses into a distribution.

    In 3-class mode the remainder 1 - sup - ref becomes the NEI mass,
    clamped to [0, 1] (the remainder can go negative only for inputs that
    are not distributions themselves); the result is renormalized.
    """
    if arity == 2:
        total = sup + ref
        if total <= 0:
            return ProbDist.of([0.5, 0.5])
        return ProbDist.of([sup / total, ref / total])
    nei = min(max(1.0 - sup - ref, 0.0), 1.0)
    total = sup + ref + nei
    return ProbDist.of([sup / total, ref / total, nei / total])


def godel_aggregate(
    event_dists: Sequence[ProbDist], order_dist: ProbDist
) -> ProbDist:
    """Fuzzy min/max aggregation of event and order distributions.

    Supported mass = min over supported entries, refuted mass = max over
    refuted entries; the remainder handling lives in aggregate_masses.
    """
    if not event_dists:
        raise ValidationError("aggregation needs at least one event distribution")
    if order_dist.arity != 2:
        raise ValidationError("order distribution must be 2-class")
    arity = event_dists[0].arity
    if any(d.arity != arity for d in event_dists):
        raise ValidationError("event distributions disagree on arity")
    sup = min(min(d[0] for d in event_dists), order_dist[0])
    ref = max(max(d[1] for d in event_dists), order_dist[1])
    return aggregate_masses(sup, ref, arity)


def kl_divergence(z: ProbDist, z_soft: ProbDist, eps: float = EPSILON) -> float:
    """KL(z || z_soft) with both distributions floored at eps."""
    if z.arity != z_soft.arity:
        raise ValidationError("KL arity mismatch")
    p = np.maximum(np.asarray(z.probs), eps)
    q = np.maximum(np.asarray(z_soft.probs), eps)
    return float(np.sum(p * (np.log(p) - np.log(q))))


def total_loss(l_cross: float, l_soft: float, mu: float = DEFAULT_MU) -> LossBreakdown:
    if not 0.0 <= mu <= 1.0:
        raise ConfigurationError(f"mu must lie in [0, 1], got {mu}")
    return LossBreakdown(
        l_cross=float(l_cross),
        l_soft=float(l_soft),
        total=(1.0 - mu) * float(l_cross) + mu * float(l_soft),
        mu=mu,
    )


def hard_rule_label(event_indices: Sequence[int], order_index: int, arity: int) -> int:
    """Index of the label the hard aggregation rule implies.

    Any refuted part refutes the claim; all supported parts support it;
    anything else (3-class only) is NEI.
    """
    parts = list(event_indices) + [order_index]
    if any(i == 1 for i in parts):
        return 1
    if all(i == 0 for i in parts):
        return 0
    return 2 if arity == 3 else 1


# --------------------------------------------------------------------------
# Graph-side loss assembly
# --------------------------------------------------------------------------

def cross_entropy_graph(z_row: Tensor, gold_index: int, eps: float = EPSILON) -> Tensor:
    """-log z[gold] for a [1, arity] distribution row."""
    picked = z_row[0:1, gold_index : gold_index + 1]
    return -ad.log(ad.maximum(picked, eps))


def godel_graph(
    event_dists: Optional[Tensor],
    order_dist: Optional[Tensor],
    arity: int,
) -> Optional[Tensor]:
    """Differentiable min/max aggregation; None when no head contributes."""
    sup_parts, ref_parts = [], []
    if event_dists is not None:
        sup_parts.append(event_dists[:, 0:1])
        ref_parts.append(event_dists[:, 1:2])
    if order_dist is not None:
        sup_parts.append(order_dist[:, 0:1])
        ref_parts.append(order_dist[:, 1:2])
    if not sup_parts:
        return None
    sup = ad.reduce_min(ad.concat(sup_parts, axis=0))
    ref = ad.reduce_max(ad.concat(ref_parts, axis=0))
    if arity == 2:
        raw = ad.concat([sup, ref], axis=1)
    else:
        nei = ad.relu(1.0 - sup - ref)
        raw = ad.concat([sup, ref, nei], axis=1)
    return raw / raw.sum(axis=1, keepdims=True)


def kl_graph(z: Tensor, z_soft: Tensor, eps: float = EPSILON) -> Tensor:
    zf = ad.maximum(z, eps)
    sf = ad.maximum(z_soft, eps)
    return (zf * (ad.log(zf) - ad.log(sf))).sum(axis=1, keepdims=True)


def claim_loss_graph(
    fwd: ForwardPass,
    gold_event_indices: Sequence[int],
    gold_order_index: Optional[int],
    gold_claim_index: int,
    mu: float,
    arity: int,
) -> tuple[Tensor, float, float]:
    """Total loss tensor for one claim plus the scalar cross/soft parts.

    Heads absent from the forward pass contribute no cross-entropy terms and
    drop out of the aggregation.
    """
    if not 0.0 <= mu <= 1.0:
        raise ConfigurationError(f"mu must lie in [0, 1], got {mu}")
    terms: list[Tensor] = []
    if fwd.event_dists is not None:
        if len(gold_event_indices) != fwd.event_dists.data.shape[0]:
            raise ValidationError("gold event labels do not cover every event")
        for i, gold in enumerate(gold_event_indices):
            terms.append(cross_entropy_graph(fwd.event_dists[i : i + 1, :], gold))
    if fwd.order_dist is not None:
        if gold_order_index is None:
            raise ValidationError("gold order label is missing")
        terms.append(cross_entropy_graph(fwd.order_dist, gold_order_index))
    terms.append(cross_entropy_graph(fwd.claim_dist, gold_claim_index))
    l_cross = terms[0]
    for term in terms[1:]:
        l_cross = l_cross + term

    z_soft = godel_graph(fwd.event_dists, fwd.order_dist, arity)
    if z_soft is not None:
        l_soft = kl_graph(fwd.claim_dist, z_soft)
    else:
        l_soft = ad.constant(np.zeros((1, 1), dtype=fwd.claim_dist.data.dtype))
    total = l_cross * (1.0 - mu) + l_soft * mu
    return total, l_cross.item(), l_soft.item()


# --------------------------------------------------------------------------
# Optimizer
# --------------------------------------------------------------------------

@dataclass
class AdamState:
    """First/second moment estimates per parameter name."""

    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0


def optimize_step(
    params: Mapping[str, Tensor],
    grads: Mapping[str, np.ndarray],
    state: AdamState,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> bool:
    """One Adam update in place; returns False (and changes nothing) when any
    gradient is non-finite."""
    for g in grads.values():
        if g is not None and not np.all(np.isfinite(g)):
            return False
    state.t += 1
    bc1 = 1.0 - beta1**state.t
    bc2 = 1.0 - beta2**state.t
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(p.data)
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p.data = p.data - lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
    return True
