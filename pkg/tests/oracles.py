"""Straight-line reference implementations used as test oracles.

Written with plain Python loops and ``math`` only, so they share no code path
with the vectorized torch / numpy implementations they check.
"""
import math

import numpy as np
import torch


def d(z):
    return 0.5 * z * z if abs(z) < 1.0 else abs(z) - 0.5


def reg(vec):
    return sum(d(v) for v in vec)


def argmin_first(values):
    best, idx = math.inf, 0
    for i, v in enumerate(values):
        if v < best:
            best, idx = v, i
    return idx


def argmax_first(values):
    best, idx = -math.inf, 0
    for i, v in enumerate(values):
        if v > best:
            best, idx = v, i
    return idx


def dist(a, b):
    return math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2)


def positive_index(cands, target):
    return argmin_first([dist(c, target) for c in cands])


def margin_loss(scores, positives, eps=0.2):
    n, e = len(scores), len(scores[0])
    total = 0.0
    for row, p in zip(scores, positives):
        for k in range(e):
            if k != p:
                total += max(0.0, row[k] + eps - row[p])
    return total / (n * (e - 1))


def goal_reg_loss(goals, positives, gt_end):
    return sum(reg([g[p][0] - t[0], g[p][1] - t[1]]) for g, p, t in zip(goals, positives, gt_end)) / len(goals)


def mid_reg_loss(mid, gt_mid):
    return sum(reg([m[0] - t[0], m[1] - t[1]]) for m, t in zip(mid, gt_mid)) / len(mid)


def stage1(cls_end, reg_end, reg_mid):
    return 1.0 * cls_end + 0.2 * reg_end + 0.1 * reg_mid


def traj_reg_loss(trajs, positives, gt):
    n, t = len(trajs), len(gt[0])
    total = 0.0
    for a in range(n):
        for s in range(t):
            p = trajs[a][positives[a]][s]
            total += reg([p[0] - gt[a][s][0], p[1] - gt[a][s][1]])
    return total / (n * t)


def traj_end_loss(trajs, positives, gt):
    total = 0.0
    for a in range(len(trajs)):
        p = trajs[a][positives[a]][-1]
        total += reg([p[0] - gt[a][-1][0], p[1] - gt[a][-1][1]])
    return total / len(trajs)


def stage2(cls, reg_, end):
    return 2.0 * cls + 1.0 * reg_ + 1.0 * end


def topk_order(scores, k):
    idx = list(range(len(scores)))
    idx.sort(key=lambda i: (-scores[i], i))
    return idx[:k]


def min_fde(trajs, scores, gt, k):
    return min(dist(trajs[i][-1], gt[-1]) for i in topk_order(scores, k))


def min_ade(trajs, scores, gt, k):
    best = math.inf
    for i in topk_order(scores, k):
        ade = sum(dist(p, q) for p, q in zip(trajs[i], gt)) / len(gt)
        best = min(best, ade)
    return best


def brier(trajs, scores, gt, k):
    order = topk_order(scores, k)
    fdes = [dist(trajs[i][-1], gt[-1]) for i in order]
    j = argmin_first(fdes)
    m = max(scores[i] for i in order)
    ex = [math.exp(scores[i] - m) for i in order]
    p = ex[j] / sum(ex)
    return fdes[j] + (1 - p) ** 2


def miss_rate(cases, k, thr=2.0):
    misses = 0
    for trajs, scores, gt in cases:
        if all(dist(trajs[i][-1], gt[-1]) > thr for i in topk_order(scores, k)):
            misses += 1
    return misses / len(cases)


# ---------------------------------------------------------------- GoICrop


def _matvec(x, w):
    """Row vector x times a torch Linear weight (out, in): sum_k x_k W[o][k]."""
    return [sum(x[k] * w[o][k] for k in range(len(x))) for o in range(len(w))]


def _linear(x, lin):
    w = lin.weight.detach().tolist()
    y = _matvec(x, w)
    if lin.bias is not None:
        y = [a + b for a, b in zip(y, lin.bias.detach().tolist())]
    return y


def _ln_relu(x, ln):
    n = len(x)
    mu = sum(x) / n
    var = sum((v - mu) ** 2 for v in x) / n
    g, b = ln.weight.detach().tolist(), ln.bias.detach().tolist()
    return [max(0.0, (v - mu) / math.sqrt(var + ln.eps) * gi + bi) for v, gi, bi in zip(x, g, b)]


def goicrop_formula(crop, x_i, v_i, neighbors):
    """Evaluate x'_i for one query from the module's weights.

    neighbors: list of (v_j, y_j) pairs.
    """
    lin1, ln1, lin2, ln2 = crop.delta[0], crop.delta[1][0], crop.delta[2], crop.delta[3][0]
    acc = _matvec(x_i, crop.w0.weight.detach().tolist())
    q = _matvec(x_i, crop.w1.weight.detach().tolist())
    for v_j, y_j in neighbors:
        rel = [v_i[0] - v_j[0], v_i[1] - v_j[1]]
        delta = _ln_relu(_linear(_ln_relu(_linear(rel, lin1), ln1), lin2), ln2)
        h = _ln_relu(_matvec(q + delta + list(y_j), crop.w2.weight.detach().tolist()), crop.phi2[0])
        acc = [a + b for a, b in zip(acc, h)]
    return _matvec(_ln_relu(acc, crop.phi1[0]), crop.w3.weight.detach().tolist())


# ---------------------------------------------------------------- graphs


def s_hop_reachable(adj1, i, s):
    """Endpoints of all successor walks of exactly ``s`` hops from ``i`` (explicit enumeration)."""
    found = set()

    def walk(node, left):
        if left == 0:
            found.add(node)
            return
        for nxt in adj1[node]:
            walk(nxt, left - 1)

    walk(i, s)
    return found


def hop_distance(adj_undirected, src):
    """BFS hop counts from ``src`` on an undirected adjacency list."""
    dist_ = {src: 0}
    frontier = [src]
    while frontier:
        nxt = []
        for u in frontier:
            for v in adj_undirected[u]:
                if v not in dist_:
                    dist_[v] = dist_[u] + 1
                    nxt.append(v)
        frontier = nxt
    return dist_


# ---------------------------------------------------------------- gradients


def directional_fd_check(fn, tensors, h=1e-6, seed=0, joint=False):
    """Relative error between autograd and central differences along a random direction.

    fn: closure returning a scalar; tensors: leaf tensors (float64) with
    requires_grad. Returns the worst relative error over tensors, or with
    ``joint`` the error of one direction spanning all tensors at once (the
    directional form of a norm-wise check, robust to tensors whose gradient
    is tiny next to the value of ``fn``). ``h`` may be a tuple of steps;
    the best agreement over them is returned.
    """
    if isinstance(h, (tuple, list)):
        # Piecewise-smooth nets (ReLU, max pool): a step that straddles a kink
        # spoils one estimate, while a wrong gradient disagrees at every step.
        return min(directional_fd_check(fn, tensors, x, seed, joint) for x in h)
    return _directional(fn, tensors, h, seed, joint)


def _directional(fn, tensors, h, seed, joint):
    gen = torch.Generator().manual_seed(seed)
    for t in tensors:
        if t.grad is not None:
            t.grad = None
    out = fn()
    grads = torch.autograd.grad(out, tensors, allow_unused=True)
    dirs = [torch.randn(t.shape, generator=gen, dtype=t.dtype) for t in tensors]
    groups = [list(range(len(tensors)))] if joint else [[k] for k in range(len(tensors))]
    worst = 0.0
    for grp in groups:
        with torch.no_grad():
            for k in grp:
                tensors[k].add_(h * dirs[k])
            fp = float(fn())
            for k in grp:
                tensors[k].sub_(2 * h * dirs[k])
            fm = float(fn())
            for k in grp:
                tensors[k].add_(h * dirs[k])
        fd = (fp - fm) / (2 * h)
        ad = sum(0.0 if grads[k] is None else float((grads[k] * dirs[k]).sum()) for k in grp)
        scale = max(abs(fd), abs(ad))
        err = abs(fd - ad) / scale if scale > 1e-10 else abs(fd - ad)
        worst = max(worst, err)
    return worst


def elementwise_fd_check(fn, t, h=1e-6):
    """Relative (norm-wise) error of the full gradient of ``fn`` w.r.t. ``t``."""
    out = fn()
    (g,) = torch.autograd.grad(out, [t])
    fd = torch.zeros_like(t)
    flat = t.view(-1)
    with torch.no_grad():
        for k in range(flat.numel()):
            old = float(flat[k])
            flat[k] = old + h
            fp = float(fn())
            flat[k] = old - h
            fm = float(fn())
            flat[k] = old
            fd.view(-1)[k] = (fp - fm) / (2 * h)
    num = float(torch.linalg.vector_norm(fd - g))
    den = max(float(torch.linalg.vector_norm(fd)), float(torch.linalg.vector_norm(g)))
    return num / den if den > 1e-12 else num


def as_lists(a):
    return np.asarray(a, dtype=np.float64).tolist()
