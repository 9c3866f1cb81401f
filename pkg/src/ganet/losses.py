"""Loss primitives shared by the goal and trajectory heads."""
from __future__ import annotations

import torch
from torch import Tensor

MARGIN = 0.2


def smooth_l1(z: Tensor) -> Tensor:
    """Elementwise 0.5 z^2 for |z| < 1, |z| - 0.5 otherwise."""
    a = z.abs()
    return torch.where(a < 1.0, 0.5 * z * z, a - 0.5)


def reg(z: Tensor) -> Tensor:
    """Sum of smooth L1 over the last (coordinate) axis."""
    return smooth_l1(z).sum(-1)


def nearest_index(candidates: Tensor, target: Tensor) -> Tensor:
    """Index of the candidate closest to ``target`` in L2; ties go to the lowest index.

    candidates: (N, C, 2), target: (N, 2) -> (N,)
    """
    d = torch.linalg.vector_norm(candidates.detach() - target.detach()[:, None], dim=-1)
    # argmin returns the first minimum on CPU; make it explicit for equal distances
    best = d.min(dim=1, keepdim=True).values
    first = (d == best).to(torch.int64)
    return torch.argmax(first, dim=1)


def max_margin(scores: Tensor, positive: Tensor, margin: float = MARGIN) -> Tensor:
    """``1/(N(C-1)) sum_n sum_{c != pos} max(0, s_c + margin - s_pos)``.

    scores: (N, C) unnormalized, positive: (N,). Returns 0 for N == 0 or C < 2.
    """
    n, c = scores.shape
    if n == 0 or c < 2:
        return scores.sum() * 0.0
    pos = scores.gather(1, positive[:, None])
    hinge = torch.clamp(scores + margin - pos, min=0.0)
    keep = torch.ones_like(hinge, dtype=torch.bool).scatter(1, positive[:, None], False)
    return (hinge * keep).sum() / (n * (c - 1))
