"""Ground metrics, relaxed transport loss, moments, palette, and an exact
Earth Mover's Distance oracle.

The relaxed loss keeps only the cheapest match per row and per column and
takes the worse of the two one-sided averages; it lower-bounds the exact
transport cost under uniform marginals.  The exact solver is a
transportation-problem network simplex (Dantzig pricing with a Bland's-rule
anti-cycling fallback) cross-checked by a dense LP.

Cost-matrix entries can be marked forbidden by guidance; forbidden entries
are carried as an explicit boolean mask, never as sentinel floats, so
gradients stay finite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .features import FeatureSample
from .image import OPPONENT_BASIS


class TransportError(ValueError):
    pass


@dataclass
class DistanceMatrix:
    """Pairwise ground-metric costs; ``values`` may be a graph tensor."""

    values: ad.Tensor
    metric: str  # "cosine" | "euclidean"
    forbidden: np.ndarray | None = None  # bool n x m, True = excluded
    guidance_conflicts: int = 0  # rows/cols whose exclusions were relaxed

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape  # type: ignore[return-value]


@dataclass
class TransportPlan:
    flows: np.ndarray  # n x m, nonnegative

    def row_sums(self) -> np.ndarray:
        return self.flows.sum(axis=1)

    def col_sums(self) -> np.ndarray:
        return self.flows.sum(axis=0)


def _sample_matrix(a) -> ad.Tensor:
    if isinstance(a, FeatureSample):
        return a.vectors
    if isinstance(a, ad.Tensor):
        return a
    return ad.Tensor(np.asarray(a, dtype=np.float64))


def cosine_distance_matrix(a, b, center: bool = False) -> DistanceMatrix:
    """C_ij = 1 - cos(a_i, b_j), optionally after zero-centering each side
    by its own mean vector."""
    av, bv = _sample_matrix(a), _sample_matrix(b)
    if av.shape[1] != bv.shape[1]:
        raise TransportError(f"feature dim mismatch {av.shape} vs {bv.shape}")
    if center:
        av = ad.sub(av, ad.tmean(av, axis=0))
        bv = ad.sub(bv, ad.tmean(bv, axis=0))
    an = ad.sqrt(ad.tsum(ad.mul(av, av), axis=1))
    bn = ad.sqrt(ad.tsum(ad.mul(bv, bv), axis=1))
    if float(np.min(an.data)) < 1e-12 or float(np.min(bn.data)) < 1e-12:
        raise TransportError("zero-norm feature vector in cosine distance")
    dots = ad.matmul(av, ad.transpose(bv))
    denom = ad.mul(ad.reshape(an, (an.shape[0], 1)), ad.reshape(bn, (1, bn.shape[0])))
    sim = ad.div(dots, denom)
    return DistanceMatrix(ad.sub(1.0, sim), "cosine")


def euclidean_distance_matrix(a, b) -> DistanceMatrix:
    """C_ij = ||a_i - b_j||_2.

    Low-dimensional samples (colors) use exact pairwise differences, so
    identical points are at distance exactly zero; high-dimensional ones
    fall back to the quadratic expansion to bound memory.
    """
    av, bv = _sample_matrix(a), _sample_matrix(b)
    if av.shape[1] != bv.shape[1]:
        raise TransportError(f"feature dim mismatch {av.shape} vs {bv.shape}")
    n, d = av.shape
    m = bv.shape[0]
    if d <= 16:
        diff = ad.sub(ad.reshape(av, (n, 1, d)), ad.reshape(bv, (1, m, d)))
        sq = ad.tsum(ad.mul(diff, diff), axis=2)
        return DistanceMatrix(ad.sqrt_grad0(sq), "euclidean")
    a2 = ad.tsum(ad.mul(av, av), axis=1)
    b2 = ad.tsum(ad.mul(bv, bv), axis=1)
    cross = ad.matmul(av, ad.transpose(bv))
    sq = ad.add(
        ad.sub(ad.reshape(a2, (n, 1)), ad.mul(cross, 2.0)), ad.reshape(b2, (1, m))
    )
    # clamp tiny negatives from cancellation before the sqrt
    safe = ad.mul(ad.add(sq, ad.absolute(sq)), 0.5)
    return DistanceMatrix(ad.sqrt_grad0(safe), "euclidean")


def _masked_argmins(c: DistanceMatrix) -> tuple[np.ndarray, np.ndarray]:
    vals = c.values.data
    if c.forbidden is not None:
        masked = np.where(c.forbidden, np.inf, vals)
        if np.isinf(masked.min(axis=1)).any():
            raise TransportError("a row of the cost matrix is fully forbidden")
        if np.isinf(masked.min(axis=0)).any():
            raise TransportError("a column of the cost matrix is fully forbidden")
    else:
        masked = vals
    return masked.argmin(axis=1), masked.argmin(axis=0)


def remd(c: DistanceMatrix, selections: list | None = None) -> ad.Tensor:
    """Relaxed EMD: max of the row-min average and the column-min average.

    Forbidden entries are excluded from both argmin passes, so no gradient
    ever flows through them.  ``selections`` optionally collects the chosen
    (row, col) index arrays for instrumentation.
    """
    n, m = c.shape
    row_pick, col_pick = _masked_argmins(c)
    if selections is not None:
        selections.append((row_pick.copy(), col_pick.copy()))
    r_a = ad.tmean(ad.take_pairs(c.values, np.arange(n), row_pick))
    r_b = ad.tmean(ad.take_pairs(c.values, col_pick, np.arange(m)))
    return ad.maximum_scalar(r_a, r_b)


def moment_loss(a, b) -> ad.Tensor:
    """First and second moment mismatch: mean L1 plus covariance L1,
    weighted 1/d and 1/d^2.  Covariances are biased (1/n)."""
    av, bv = _sample_matrix(a), _sample_matrix(b)
    if av.shape[1] != bv.shape[1]:
        raise TransportError("feature dim mismatch in moment loss")
    d = av.shape[1]

    def stats(v: ad.Tensor):
        mu = ad.tmean(v, axis=0)
        centered = ad.sub(v, mu)
        cov = ad.mul(ad.matmul(ad.transpose(centered), centered), 1.0 / v.shape[0])
        return mu, cov

    mu_a, cov_a = stats(av)
    mu_b, cov_b = stats(bv)
    term_mu = ad.mul(ad.tsum(ad.absolute(ad.sub(mu_a, mu_b))), 1.0 / d)
    term_cov = ad.mul(ad.tsum(ad.absolute(ad.sub(cov_a, cov_b))), 1.0 / (d * d))
    return ad.add(term_mu, term_cov)


def palette_loss(out_pixels, style_pixels) -> ad.Tensor:
    """Relaxed EMD between pixel colors in the opponent basis, Euclidean
    ground metric."""
    ov, sv = _sample_matrix(out_pixels), _sample_matrix(style_pixels)
    if ov.shape[1] != 3 or sv.shape[1] != 3:
        raise TransportError("palette loss expects Nx3 color samples")
    basis = ad.Tensor(OPPONENT_BASIS.T)
    return remd(euclidean_distance_matrix(ad.matmul(ov, basis), ad.matmul(sv, basis)))


# ---- guidance ---------------------------------------------------------------


def apply_guidance_costs(
    c: DistanceMatrix,
    region_pairs: list[tuple[np.ndarray, np.ndarray]],
    beta: float = 5.0,
) -> DistanceMatrix:
    """Rescale and forbid cost entries according to paired index sets.

    Each pair is (rows_in_output_region, cols_in_style_region) as boolean
    masks over the n sampled rows and m sampled columns.  Entries between a
    paired region get scaled by beta; entries pairing a constrained row with
    a column outside its partner region become forbidden.

    Contradictory annotations (a row or column whose constraints forbid
    every partner, e.g. a point pair landing inside a region whose style
    area excludes the point's style cell) cannot be honored as stated: the
    exclusions of exactly those rows/columns are dropped, the beta scaling
    stays, and the count is reported via ``guidance_conflicts``.
    """
    n, m = c.shape
    scale = np.ones((n, m))
    forbidden = (
        c.forbidden.copy() if c.forbidden is not None else np.zeros((n, m), dtype=bool)
    )
    for rows, cols in region_pairs:
        rows = np.asarray(rows, dtype=bool)
        cols = np.asarray(cols, dtype=bool)
        if rows.shape != (n,) or cols.shape != (m,):
            raise TransportError("guidance mask size does not match the cost matrix")
        if rows.any() and not cols.any():
            raise TransportError("guidance pair has an empty style region")
        scale[np.ix_(rows, cols)] = beta
        forbidden[np.ix_(rows, ~cols)] = True
    conflicts = 0
    if forbidden.any():
        bad_rows = forbidden.all(axis=1)
        if bad_rows.any():
            conflicts += int(bad_rows.sum())
            forbidden[bad_rows] = False
        bad_cols = forbidden.all(axis=0)
        if bad_cols.any():
            conflicts += int(bad_cols.sum())
            forbidden[:, bad_cols] = False
    values = ad.mul(c.values, ad.Tensor(scale)) if region_pairs else c.values
    return DistanceMatrix(values, c.metric, forbidden if forbidden.any() else None, conflicts)


def expand_point_guidance(
    points: list[tuple[tuple[float, float], tuple[float, float]]],
    spacing: float,
    src_shape: tuple[int, int],
    dst_shape: tuple[int, int],
) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    """Expand each clicked pair into a 3x3 lattice of singleton pairs.

    Offsets are applied to both sides, clamped to bounds; duplicate pairs
    after clamping are dropped.  Coordinates are (row, col) pixels.
    """
    out = []
    seen = set()
    offs = [(dy * spacing, dx * spacing) for dy in (-1, 0, 1) for dx in (-1, 0, 1)]
    for (sy, sx), (dy_, dx_) in points:
        for oy, ox in offs:
            a = (
                int(np.clip(round(sy + oy), 0, src_shape[0] - 1)),
                int(np.clip(round(sx + ox), 0, src_shape[1] - 1)),
            )
            b = (
                int(np.clip(round(dy_ + oy), 0, dst_shape[0] - 1)),
                int(np.clip(round(dx_ + ox), 0, dst_shape[1] - 1)),
            )
            if (a, b) not in seen:
                seen.add((a, b))
                out.append((a, b))
    return out


# ---- exact EMD ---------------------------------------------------------------


@dataclass
class EmdResult:
    cost: float
    plan: TransportPlan
    row_potentials: np.ndarray
    col_potentials: np.ndarray
    pivots: int


def exact_emd(c: DistanceMatrix | np.ndarray) -> EmdResult:
    """Exact uniform-marginal transport cost via network simplex.

    Row marginals are 1/n, column marginals 1/m.  Forbidden entries are not
    supported here: the oracle needs a complete cost matrix.
    """
    if isinstance(c, DistanceMatrix):
        if c.forbidden is not None and c.forbidden.any():
            raise TransportError("exact_emd does not accept forbidden entries")
        cost = c.values.data
    else:
        cost = np.asarray(c, dtype=np.float64)
    n, m = cost.shape
    if n * m > 1_000_000:
        raise TransportError(f"instance {n}x{m} exceeds the oracle size cap")
    return _network_simplex(cost)


def _northwest_corner(n: int, m: int) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Initial basic feasible solution; returns flows and n+m-1 basic arcs."""
    supply = np.full(n, 1.0 / n)
    demand = np.full(m, 1.0 / m)
    flows = np.zeros((n, m))
    basis: list[tuple[int, int]] = []
    i = j = 0
    while i < n and j < m:
        q = max(min(supply[i], demand[j]), 0.0)
        flows[i, j] = q
        basis.append((i, j))
        supply[i] -= q
        demand[j] -= q
        # advance one side only, keeping the basis a spanning tree even on
        # degenerate ties
        if supply[i] <= demand[j] and i < n - 1:
            i += 1
        elif j < m - 1:
            j += 1
        else:
            i += 1
    return flows, basis


class _Tree:
    """Spanning tree over n sources + m sinks (sink j is node n + j)."""

    def __init__(self, n: int, m: int, basis: list[tuple[int, int]]):
        self.n, self.m = n, m
        self.adj: list[set[int]] = [set() for _ in range(n + m)]
        for i, j in basis:
            self.adj[i].add(n + j)
            self.adj[n + j].add(i)
        self.parent = np.full(n + m, -1, dtype=np.int64)
        self.depth = np.zeros(n + m, dtype=np.int64)
        self._rebuild_from(0, -1)

    def _rebuild_from(self, root: int, parent: int) -> list[int]:
        """(Re)assign parent/depth over the component containing root."""
        order = [root]
        self.parent[root] = parent
        self.depth[root] = 0 if parent < 0 else self.depth[parent] + 1
        stack = [root]
        while stack:
            u = stack.pop()
            for w in self.adj[u]:
                if w != self.parent[u]:
                    self.parent[w] = u
                    self.depth[w] = self.depth[u] + 1
                    order.append(w)
                    stack.append(w)
        return order

    def path_to_root(self, u: int) -> list[int]:
        path = [u]
        while self.parent[u] >= 0:
            u = self.parent[u]
            path.append(u)
        return path

    def cycle_with(self, u: int, w: int) -> list[int]:
        """Node cycle closed by the non-tree arc (u, w), starting at u."""
        pu, pw = self.path_to_root(u), self.path_to_root(w)
        su, sw = set(pu), set(pw)
        # lowest common ancestor
        lca = next(x for x in pu if x in sw)
        cu = pu[: pu.index(lca) + 1]
        cw = pw[: pw.index(lca)]
        return cu + cw[::-1]

    def replace(self, drop: tuple[int, int], add: tuple[int, int]) -> list[int]:
        """Swap arcs and return the nodes of the re-rooted subtree."""
        a, b = drop
        self.adj[a].discard(b)
        self.adj[b].discard(a)
        u, w = add
        self.adj[u].add(w)
        self.adj[w].add(u)
        # the side of the cut not containing the root hangs off the new arc
        child = b if self.parent[b] == a else a
        hook = u if self._reaches(u, child) else w
        other = w if hook == u else u
        return self._rebuild_from(hook, other)

    def _reaches(self, u: int, target: int) -> bool:
        # walk up: after the cut, parent pointers inside the severed
        # component still describe it, so climbing from u either hits the
        # target (u is in the severed part) or the root
        while u >= 0:
            if u == target:
                return True
            u = self.parent[u]
        return False


def _network_simplex(cost: np.ndarray, max_pivots: int | None = None) -> EmdResult:
    n, m = cost.shape
    flows, basis = _northwest_corner(n, m)
    tree = _Tree(n, m, basis)
    in_basis = np.zeros((n, m), dtype=bool)
    for i, j in basis:
        in_basis[i, j] = True

    u = np.zeros(n)
    v = np.zeros(m)
    _recompute_potentials(cost, tree, u, v)

    if max_pivots is None:
        max_pivots = 200 * (n + m) + 1000
    stall_limit = 20 * (n + m) + 200
    bland = False
    stall = 0
    pivots = 0
    while True:
        red = cost - u[:, None] - v[None, :]
        if bland:
            cand = np.flatnonzero((red < -1e-11).reshape(-1))
            if cand.size == 0:
                break
            flat = cand[0]
        else:
            flat = int(np.argmin(red))
            if red.reshape(-1)[flat] >= -1e-11:
                break
        ei, ej = divmod(flat, m)
        pivots += 1
        if pivots > max_pivots:
            raise TransportError("network simplex failed to terminate")

        # tree arcs along the path ei -> ... -> ej; the entering arc closes
        # the cycle and carries +delta, so signs alternate starting at minus
        nodes = tree.cycle_with(ei, n + ej)
        arcs = []
        for a, b in zip(nodes[:-1], nodes[1:]):
            i, j = (a, b - n) if a < n else (b, a - n)
            arcs.append((i, j))
        minus = arcs[0::2]  # arcs traversed against their flow direction
        delta = min(flows[i, j] for i, j in minus)
        leave = min(
            (arc for arc in minus if flows[arc] <= delta + 1e-18),
            key=lambda arc: arc[0] * m + arc[1],
        )

        sign = -1.0
        for arc in arcs:
            flows[arc] += sign * delta
            sign = -sign
        flows[ei, ej] += delta
        flows[leave] = max(flows[leave], 0.0)

        in_basis[leave] = False
        in_basis[ei, ej] = True
        moved = tree.replace((leave[0], n + leave[1]), (ei, n + ej))
        _update_potentials(cost, tree, u, v, moved)

        if delta <= 1e-18:
            stall += 1
            if stall > stall_limit:
                bland = True
        else:
            stall = 0

    total = float(np.sum(flows * cost))
    return EmdResult(total, TransportPlan(flows), u.copy(), v.copy(), pivots)


def _recompute_potentials(cost, tree: _Tree, u, v) -> None:
    n = tree.n
    order = tree._rebuild_from(0, -1)
    u[0] = 0.0
    for node in order[1:]:
        p = tree.parent[node]
        if node < n:
            u[node] = cost[node, p - n] - v[p - n]
        else:
            v[node - n] = cost[p, node - n] - u[p]


def _update_potentials(cost, tree: _Tree, u, v, moved: list[int]) -> None:
    n = tree.n
    for node in moved:
        p = tree.parent[node]
        if p < 0:
            continue
        if node < n:
            u[node] = cost[node, p - n] - v[p - n]
        else:
            v[node - n] = cost[p, node - n] - u[p]


def exact_emd_lp(c: DistanceMatrix | np.ndarray) -> float:
    """Dense-LP second oracle for small instances (independent of the
    network simplex)."""
    from scipy.optimize import linprog

    cost = c.values.data if isinstance(c, DistanceMatrix) else np.asarray(c, dtype=np.float64)
    n, m = cost.shape
    if max(n, m) > 64:
        raise TransportError("LP oracle handles small instances only")
    a_eq = np.zeros((n + m, n * m))
    for i in range(n):
        a_eq[i, i * m : (i + 1) * m] = 1.0
    for j in range(m):
        a_eq[n + j, j::m] = 1.0
    b_eq = np.concatenate([np.full(n, 1.0 / n), np.full(m, 1.0 / m)])
    res = linprog(cost.reshape(-1), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if not res.success:
        raise TransportError(f"LP oracle failed: {res.message}")
    return float(res.fun)
