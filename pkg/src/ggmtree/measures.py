"""Finite-volume marginals of pinned gradient measures and their mixtures.

Two equivalent representations are implemented for the measure pinned to a
mod-q class at a vertex: the edge-by-edge product of layer-kernel factors,
and the boundary-law form (boundary factors times bare edge weights, divided
by a partition sum). Mixing the pinned measure over the stationary layer
distribution gives the homogeneous gradient measure; an alternative form sums
the boundary-law weight over a global class shift instead.

All normalizers are computed exactly by a depth-first pass that keeps one
vector per vertex indexed by the mod-q layer, so no configuration enumeration
is needed; enumeration helpers are provided for cross-checks and conditional
computations on small volumes.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Mapping

import numpy as np

from .chains import FuzzyChain, LayerKernel
from .errors import PinInsideInner, VolumeTooLarge
from .model import (
    FiniteTreeVolume,
    GradientConfiguration,
    IncrementWindow,
    PeriodicBoundaryLaw,
    TransferOperator,
    eval_q,
    vertex_heights,
    vertex_layers,
    wrapped_row,
)

__all__ = [
    "PinnedMeasureSpec",
    "GGMSpec",
    "pinned_prob_product",
    "pinned_prob_bl",
    "ggm_prob",
    "alt_ggm_prob",
    "coupling_expectation",
    "sample_ggm",
    "sample_ggm_batch",
    "check_consistency",
    "check_homogeneity",
    "check_restricted_dlr",
    "max_dual_gap_pinned",
    "max_dual_gap_ggm",
    "windowed_configs",
    "windowed_mass",
    "event_prob_pinned",
    "event_prob_ggm",
    "single_bond_marginal",
    "two_bond_marginal",
]


@dataclass(frozen=True, eq=False)
class PinnedMeasureSpec:
    """A layer kernel on a volume with the pin vertex and its class."""

    kernel: LayerKernel
    volume: FiniteTreeVolume
    pin_vertex: int
    pin_class: int

    def __post_init__(self):
        if self.pin_vertex not in self.volume.interior:
            raise ValueError("pin vertex must be an interior vertex of the volume")
        if not 0 <= self.pin_class < self.kernel.q:
            raise ValueError("pin class must lie in 0 .. q-1")


@dataclass(frozen=True, eq=False)
class GGMSpec:
    """A layer kernel, its fuzzy chain, and the volume to evaluate on."""

    kernel: LayerKernel
    chain: FuzzyChain
    volume: FiniteTreeVolume

    def __post_init__(self):
        if self.kernel.q != self.chain.q:
            raise ValueError("kernel and chain periods disagree")


# ---------------------------------------------------------------------------
# the two pinned representations


def _product_prob(kernel: LayerKernel, volume: FiniteTreeVolume, pin: int,
                  s: int, zeta) -> float:
    q = kernel.q
    layer = [0] * volume.n_vertices
    layer[pin] = s % q
    p = 1.0
    for e, src, dst, sign in volume.orientation_from(pin):
        z = sign * int(zeta[e])
        p *= kernel.prob(layer[src], z)
        layer[dst] = (layer[src] + z) % q
    return p


def pinned_prob_product(spec: PinnedMeasureSpec, zeta: GradientConfiguration) -> float:
    """Probability of a full edge configuration as a product of kernel factors
    along the edges oriented away from the pin."""
    return _product_prob(spec.kernel, spec.volume, spec.pin_vertex,
                         spec.pin_class, zeta.increments)


@lru_cache(maxsize=None)
def _bl_partition(kernel: LayerKernel, volume: FiniteTreeVolume, pin: int) -> np.ndarray:
    """Partition sums of the boundary-law weight over all integer
    configurations, as a vector over the pin class.

    One pass away from the pin: each vertex carries a vector over its layer,
    leaves start from the boundary-law values (or ones when interior), and an
    edge contracts its child vector with the wrapped interaction matrix.
    """
    q = kernel.q
    a = kernel.law.as_array()
    C = kernel.circulant
    f = [a.copy() if v in volume.boundary else np.ones(q)
         for v in range(volume.n_vertices)]
    for e, src, dst, sign in reversed(volume.orientation_from(pin)):
        f[src] = f[src] * (C @ f[dst])
    return f[pin]


def _bl_weight(kernel: LayerKernel, volume: FiniteTreeVolume, pin: int,
               s: int, zeta) -> float:
    q = kernel.q
    a = kernel.law.a
    heights = vertex_heights(volume, pin, s, zeta)
    w = 1.0
    for y in volume.boundary:
        w *= a[int(heights[y]) % q]
    for e in range(volume.n_edges):
        w *= eval_q(kernel.op, int(zeta[e]))
    return w


def pinned_prob_bl(spec: PinnedMeasureSpec, zeta: GradientConfiguration) -> float:
    """Probability of a full edge configuration in the boundary-law form:
    boundary factors at the outer layer times bare edge weights, normalized by
    the exact partition sum."""
    if not spec.volume.full:
        raise ValueError("the boundary-law form needs a closed regular volume")
    z = _bl_partition(spec.kernel, spec.volume, spec.pin_vertex)[spec.pin_class]
    return _bl_weight(spec.kernel, spec.volume, spec.pin_vertex,
                      spec.pin_class, zeta.increments) / z


# ---------------------------------------------------------------------------
# homogeneous mixtures


def ggm_prob(spec: GGMSpec, zeta: GradientConfiguration, pin: int | None = None) -> float:
    """Mixture of pinned product probabilities over the stationary layer
    distribution; the pin vertex is arbitrary (homogeneity is a testable
    property, not an input)."""
    w = 0 if pin is None else pin
    alpha = spec.chain.alpha
    return float(sum(
        alpha[s] * _product_prob(spec.kernel, spec.volume, w, s, zeta.increments)
        for s in range(spec.kernel.q)
    ))


def alt_ggm_prob(kernel: LayerKernel, volume: FiniteTreeVolume,
                 zeta: GradientConfiguration) -> float:
    """Class-summed boundary-law form of the homogeneous measure, which never
    references the stationary distribution."""
    if not volume.full:
        raise ValueError("the boundary-law form needs a closed regular volume")
    parts = _bl_partition(kernel, volume, 0)
    num = sum(_bl_weight(kernel, volume, 0, k, zeta.increments)
              for k in range(kernel.q))
    return float(num / parts.sum())


# ---------------------------------------------------------------------------
# coupling of layers and gradients


def coupling_expectation(spec: GGMSpec, func: Callable[[GradientConfiguration, dict], float],
                         config_budget: int = 10**7) -> float:
    """Expectation of a bounded function of (gradient configuration, layer
    labels) under the joint measure that draws the pin class from the
    stationary distribution and the increments from the kernel.

    The labels handed to ``func`` are exactly the classes reached from the
    drawn pin class, so label and gradient arguments are always compatible.
    """
    volume = spec.volume
    alpha = spec.chain.alpha
    q = spec.kernel.q
    total = 0.0
    for arr in windowed_configs(volume, spec.kernel.window, config_budget):
        cfg = GradientConfiguration(volume, tuple(int(v) for v in arr))
        for s in range(q):
            p = alpha[s] * _product_prob(spec.kernel, volume, 0, s, arr)
            if p == 0.0:
                continue
            labels = dict(enumerate(vertex_layers(volume, q, 0, s, arr)))
            total += p * func(cfg, labels)
    return float(total)


# ---------------------------------------------------------------------------
# sampling


def sample_ggm_batch(spec: GGMSpec, n: int, seed: int) -> np.ndarray:
    """n independent configurations as an (n, n_edges) array.

    Counter-based generator keyed by the seed: the same (seed, n) always
    yields the same batch, independent of how the caller schedules work.
    """
    volume = spec.volume
    kernel = spec.kernel
    q = kernel.q
    rng = np.random.default_rng(np.random.Philox(key=int(seed) & (2**64 - 1)))
    out = np.empty((n, volume.n_edges), dtype=np.int64)
    if n == 0:
        return out
    alpha_cdf = np.cumsum(spec.chain.alpha)
    layers = np.empty((n, volume.n_vertices), dtype=np.int64)
    layers[:, 0] = np.minimum(
        np.searchsorted(alpha_cdf, rng.random(n), side="right"), q - 1)
    cdf = kernel.sampling_cdf()
    offs = kernel.offsets
    top = len(offs) - 1
    for e, src, dst, sign in volume.orientation_from(0):
        u = rng.random(n)
        z = np.empty(n, dtype=np.int64)
        t_src = layers[:, src]
        for t in range(q):
            mask = t_src == t
            if mask.any():
                idx = np.minimum(np.searchsorted(cdf[t], u[mask], side="right"), top)
                z[mask] = offs[idx]
        out[:, e] = z
        layers[:, dst] = (t_src + z) % q
    return out


def sample_ggm(spec: GGMSpec, seed: int) -> GradientConfiguration:
    """One configuration, deterministic in the seed."""
    arr = sample_ggm_batch(spec, 1, seed)[0]
    return GradientConfiguration(spec.volume, tuple(int(v) for v in arr))


# ---------------------------------------------------------------------------
# enumeration helpers


def windowed_configs(volume: FiniteTreeVolume, window: IncrementWindow,
                     config_budget: int = 10**7) -> Iterator[np.ndarray]:
    """All increment assignments with every entry in the window."""
    count = (2 * window.cutoff + 1) ** volume.n_edges
    if count > config_budget:
        raise VolumeTooLarge(f"{count} configurations exceed the budget {config_budget}")
    rng = range(-window.cutoff, window.cutoff + 1)
    for combo in itertools.product(rng, repeat=volume.n_edges):
        yield np.array(combo, dtype=np.int64)


def windowed_mass(spec: PinnedMeasureSpec) -> float:
    """Total product-form probability of the windowed configuration space,
    computed by the layer pass (equals one minus the truncated tail)."""
    kernel = spec.kernel
    volume = spec.volume
    q = kernel.q
    offs = kernel.offsets
    W = np.zeros((q, q))
    for t in range(q):
        for z in offs:
            W[t, (t + int(z)) % q] += kernel.prob(t, int(z))
    f = [np.ones(q) for _ in range(volume.n_vertices)]
    for e, src, dst, sign in reversed(volume.orientation_from(spec.pin_vertex)):
        f[src] = f[src] * (W @ f[dst])
    return float(f[spec.pin_vertex][spec.pin_class])


# ---------------------------------------------------------------------------
# event probabilities on sub-volumes


def event_prob_pinned(kernel: LayerKernel, volume: FiniteTreeVolume,
                      vertices: Iterable[int], anchor: int, s: int,
                      zeta: Mapping[tuple[int, int], int]) -> float:
    """Probability that the edges induced by ``vertices`` carry exactly the
    given increments, under the measure pinned to class s at ``anchor``.

    ``anchor`` must belong to the (connected) vertex set, so all layers along
    the induced edges are determined inside it.
    """
    vs = set(vertices)
    if anchor not in vs:
        raise ValueError("anchor must belong to the event's vertex set")
    q = kernel.q
    layer = {anchor: s % q}
    p = 1.0
    queue = [anchor]
    seen = {anchor}
    while queue:
        src = queue.pop(0)
        for dst in volume.neighbors(src):
            if dst in seen or dst not in vs:
                continue
            seen.add(dst)
            if (src, dst) in volume.edge_index:
                z = int(zeta[(src, dst)])
            else:
                z = -int(zeta[(dst, src)])
            p *= kernel.prob(layer[src], z)
            layer[dst] = (layer[src] + z) % q
            queue.append(dst)
    return p


def event_prob_ggm(kernel: LayerKernel, chain: FuzzyChain, volume: FiniteTreeVolume,
                   vertices: Iterable[int], anchor: int,
                   zeta: Mapping[tuple[int, int], int]) -> float:
    return float(sum(
        chain.alpha[s] * event_prob_pinned(kernel, volume, vertices, anchor, s, zeta)
        for s in range(kernel.q)
    ))


def single_bond_marginal(op: TransferOperator, law: PeriodicBoundaryLaw,
                         window: IncrementWindow) -> np.ndarray:
    """Exact one-edge marginal of the homogeneous measure over the window:
    proportional to Q(z) * sum_s l(s) l(s + z)."""
    q = law.q
    a = law.as_array()
    overlap = np.array([float(np.dot(a, np.roll(a, -r))) for r in range(q)])
    z_total = float(np.dot(wrapped_row(op, q), overlap))
    offs = window.offsets
    vals = np.array([eval_q(op, int(z)) * overlap[int(z) % q] for z in offs])
    return vals / z_total


def two_bond_marginal(kernel: LayerKernel, chain: FuzzyChain) -> np.ndarray:
    """Exact joint marginal of two successive edges over the window."""
    offs = kernel.offsets
    K = len(offs)
    q = kernel.q
    out = np.zeros((K, K))
    for i, z1 in enumerate(offs):
        for s in range(q):
            p1 = chain.alpha[s] * kernel.prob(s, int(z1))
            t = (s + int(z1)) % q
            for j, z2 in enumerate(offs):
                out[i, j] += p1 * kernel.prob(t, int(z2))
    return out


# ---------------------------------------------------------------------------
# verification: consistency, homogeneity, restricted conditional structure


def _interior_set(volume: FiniteTreeVolume, inner) -> set[int]:
    if isinstance(inner, FiniteTreeVolume):
        ids = inner.interior
    else:
        ids = set(int(v) for v in inner)
    if not ids <= volume.interior:
        raise ValueError("inner vertices must be interior vertices of the volume")
    return set(ids)


def _hanging_factors(kernel: LayerKernel, volume: FiniteTreeVolume, pin: int,
                     boundary_of_inner: Iterable[int]) -> dict[int, np.ndarray]:
    """For each vertex on the inner boundary, the summed weight of the part of
    the volume hanging below it (away from the pin), as a vector over its
    layer. Equals the boundary law itself exactly when the law solves the
    fixed-point equation."""
    q = kernel.q
    a = kernel.law.as_array()
    C = kernel.circulant
    f = [a.copy() if v in volume.boundary else np.ones(q)
         for v in range(volume.n_vertices)]
    for e, src, dst, sign in reversed(volume.orientation_from(pin)):
        f[src] = f[src] * (C @ f[dst])
    return {v: f[v] for v in boundary_of_inner}


def check_consistency(spec: PinnedMeasureSpec, inner,
                      mixture: bool = False, chain: FuzzyChain | None = None,
                      config_budget: int = 10**7) -> float:
    """Marginalize the volume's boundary-law measure onto a smaller closed
    volume and compare with the directly computed smaller-volume measure.

    ``inner`` is the interior vertex set of the smaller volume (or a volume
    object, in which case its interior is used); it must contain the pin.
    With ``mixture=True`` both sides are averaged over the stationary layer
    distribution of ``chain``.
    """
    volume = spec.volume
    kernel = spec.kernel
    if not volume.full:
        raise ValueError("consistency checks need a closed regular volume")
    q = kernel.q
    ids = _interior_set(volume, inner)
    if spec.pin_vertex not in ids:
        raise ValueError("the pin vertex must belong to the inner volume")
    inner_edges = volume.edges_touching(ids)
    inner_edge_set = set(inner_edges)
    inner_boundary = volume.adjacent_outside(ids)
    hang = _hanging_factors(kernel, volume, spec.pin_vertex, inner_boundary)
    a = kernel.law.as_array()
    C = kernel.circulant
    z_big = _bl_partition(kernel, volume, spec.pin_vertex)

    # exact partition of the directly computed inner measure, by the same
    # layer pass restricted to the inner edges
    f = [a.copy() if v in inner_boundary else np.ones(q)
         for v in range(volume.n_vertices)]
    for e, src, dst, sign in reversed(volume.orientation_from(spec.pin_vertex)):
        if e in inner_edge_set:
            f[src] = f[src] * (C @ f[dst])
    z_inner = f[spec.pin_vertex]

    if mixture and chain is None:
        raise ValueError("mixture comparison needs the fuzzy chain")
    s_values = range(q) if mixture else [spec.pin_class]
    s_weights = chain.alpha if mixture else None

    count = (2 * kernel.window.cutoff + 1) ** len(inner_edges)
    if count > config_budget:
        raise VolumeTooLarge(f"{count} inner configurations exceed {config_budget}")

    rng = range(-kernel.window.cutoff, kernel.window.cutoff + 1)
    combos = list(itertools.product(rng, repeat=len(inner_edges)))
    layers_cache = []
    qprod_cache = []
    for combo in combos:
        arr = np.zeros(volume.n_edges, dtype=np.int64)
        for e, z in zip(inner_edges, combo):
            arr[e] = z
        heights = vertex_heights(volume, spec.pin_vertex, 0, arr)
        layers_cache.append({v: int(heights[v]) for v in inner_boundary})
        qprod_cache.append(float(np.prod([eval_q(kernel.op, z) for z in combo])))

    worst = 0.0
    for lay, qp in zip(layers_cache, qprod_cache):
        marg = 0.0
        direct = 0.0
        for s in s_values:
            w = 1.0 if s_weights is None else float(s_weights[s])
            m = qp * float(np.prod([hang[v][(lay[v] + s) % q] for v in inner_boundary]))
            p = qp * float(np.prod([a[(lay[v] + s) % q] for v in inner_boundary]))
            marg += w * m / z_big[s]
            direct += w * p / z_inner[s]
        worst = max(worst, abs(marg - direct))
    return worst


def check_homogeneity(spec: GGMSpec, pins: Iterable[int], n_configs: int = 256,
                      seed: int = 7, enumerate_budget: int = 4096) -> float:
    """Evaluate the mixture probability with several pin vertices on identical
    configurations; returns the largest pairwise difference.

    All windowed configurations are used when there are few enough, otherwise
    a seeded sample.
    """
    volume = spec.volume
    kernel = spec.kernel
    pins = list(pins)
    total = (2 * kernel.window.cutoff + 1) ** volume.n_edges
    if total <= enumerate_budget:
        configs = [arr for arr in windowed_configs(volume, kernel.window, enumerate_budget)]
    else:
        # typical configurations, so the compared probabilities carry mass
        configs = list(sample_ggm_batch(spec, n_configs, seed))
        configs.append(np.zeros(volume.n_edges, dtype=np.int64))
    alpha = spec.chain.alpha
    worst = 0.0
    for arr in configs:
        probs = [
            float(sum(alpha[s] * _product_prob(kernel, volume, w, s, arr)
                      for s in range(kernel.q)))
            for w in pins
        ]
        worst = max(worst, max(probs) - min(probs))
    return worst


def check_restricted_dlr(spec: PinnedMeasureSpec, inner,
                         outside: Mapping[int, int] | None = None,
                         reference: Mapping[int, int] | None = None,
                         mixture: bool = False, chain: FuzzyChain | None = None,
                         config_budget: int = 10**7) -> float:
    """Conditional law inside a sub-volume away from the pin, given the outside
    increments and the relative boundary heights, against the bare-weight
    prediction: proportional to the product of Q factors over configurations
    in the same boundary-height class.

    ``outside`` fixes increments on edges outside the sub-volume;
    ``reference`` chooses the inner configuration whose boundary-height class
    is conditioned on (default all zeros).
    """
    volume = spec.volume
    kernel = spec.kernel
    ids = _interior_set(volume, inner)
    if spec.pin_vertex in ids:
        raise PinInsideInner("conditioning volume must avoid the pin vertex")
    inner_edges = volume.edges_touching(ids)
    inner_boundary = sorted(volume.adjacent_outside(ids))
    anchor = inner_boundary[0]

    base = np.zeros(volume.n_edges, dtype=np.int64)
    if outside is not None:
        for e, z in outside.items():
            if e in inner_edges:
                raise ValueError("outside assignment hit an inner edge")
            base[e] = int(z)
    if reference is not None:
        for e, z in reference.items():
            if e not in inner_edges:
                raise ValueError("reference assignment must live on inner edges")
            base[e] = int(z)

    def boundary_class(arr: np.ndarray) -> tuple[int, ...]:
        h = vertex_heights(volume, spec.pin_vertex, 0, arr)
        return tuple(int(h[v] - h[anchor]) for v in inner_boundary)

    target = boundary_class(base)

    count = (2 * kernel.window.cutoff + 1) ** len(inner_edges)
    if count > config_budget:
        raise VolumeTooLarge(f"{count} inner configurations exceed {config_budget}")

    if mixture and chain is None:
        raise ValueError("mixture comparison needs the fuzzy chain")

    joint = []
    bare = []
    rng = range(-kernel.window.cutoff, kernel.window.cutoff + 1)
    for combo in itertools.product(rng, repeat=len(inner_edges)):
        arr = base.copy()
        for e, z in zip(inner_edges, combo):
            arr[e] = z
        if boundary_class(arr) != target:
            continue
        if mixture:
            p = sum(chain.alpha[s] * _product_prob(kernel, volume, spec.pin_vertex, s, arr)
                    for s in range(kernel.q))
        else:
            p = _product_prob(kernel, volume, spec.pin_vertex, spec.pin_class, arr)
        joint.append(float(p))
        bare.append(float(np.prod([eval_q(kernel.op, int(arr[e])) for e in inner_edges])))
    joint = np.array(joint)
    bare = np.array(bare)
    if joint.sum() == 0.0:
        raise ValueError("conditioning event has zero probability")
    return float(np.max(np.abs(joint / joint.sum() - bare / bare.sum())))


# ---------------------------------------------------------------------------
# exact extremes of the representation gap


def _residue_layers(volume: FiniteTreeVolume, pin: int, q: int,
                    residues) -> list[int]:
    layer = [0] * volume.n_vertices
    for e, src, dst, sign in volume.orientation_from(pin):
        layer[dst] = (layer[src] + sign * residues[e]) % q
    return layer


def _max_q_per_residue(kernel: LayerKernel) -> np.ndarray:
    q = kernel.q
    best = np.zeros(q)
    for z in kernel.offsets:
        w = eval_q(kernel.op, int(z))
        r = int(z) % q
        best[r] = max(best[r], w)
    return best


def max_dual_gap_pinned(spec: PinnedMeasureSpec, residue_budget: int = 2**21) -> float:
    """Exact maximum of |product form - boundary-law form| over every windowed
    configuration.

    Both forms share the bare product of Q factors; the remaining parts depend
    on the increments only through their residues mod q. The maximum therefore
    splits as (residue-class gap) times (largest Q product within the class),
    and scanning the q**edges residue vectors is exhaustive.
    """
    volume = spec.volume
    kernel = spec.kernel
    if not volume.full:
        raise ValueError("the boundary-law form needs a closed regular volume")
    q = kernel.q
    if q ** volume.n_edges > residue_budget:
        raise VolumeTooLarge("residue scan exceeds its budget")
    a = kernel.law.as_array()
    norms = kernel.norms
    maxq = _max_q_per_residue(kernel)
    z_pin = _bl_partition(kernel, volume, spec.pin_vertex)[spec.pin_class]
    orient = volume.orientation_from(spec.pin_vertex)
    boundary = sorted(volume.boundary)
    worst = 0.0
    for residues in itertools.product(range(q), repeat=volume.n_edges):
        layer = [0] * volume.n_vertices
        layer[spec.pin_vertex] = spec.pin_class
        h1 = 1.0
        wmax = 1.0
        for e, src, dst, sign in orient:
            t = layer[src]
            t2 = (t + sign * residues[e]) % q
            h1 *= a[t2] / norms[t]
            layer[dst] = t2
            wmax *= maxq[residues[e]]
        h2 = float(np.prod([a[layer[y]] for y in boundary])) / z_pin
        worst = max(worst, abs(h1 - h2) * wmax)
    return worst


def max_dual_gap_ggm(spec: GGMSpec, residue_budget: int = 2**21) -> float:
    """Exact maximum of |mixture form - class-summed boundary-law form| over
    every windowed configuration, by the same residue-class argument."""
    volume = spec.volume
    kernel = spec.kernel
    if not volume.full:
        raise ValueError("the boundary-law form needs a closed regular volume")
    q = kernel.q
    if q ** volume.n_edges > residue_budget:
        raise VolumeTooLarge("residue scan exceeds its budget")
    a = kernel.law.as_array()
    norms = kernel.norms
    alpha = spec.chain.alpha
    maxq = _max_q_per_residue(kernel)
    parts = _bl_partition(kernel, volume, 0)
    z_alt = float(parts.sum())
    orient = volume.orientation_from(0)
    boundary = sorted(volume.boundary)
    worst = 0.0
    for residues in itertools.product(range(q), repeat=volume.n_edges):
        base_layer = _residue_layers(volume, 0, q, residues)
        wmax = float(np.prod([maxq[r] for r in residues]))
        h1 = 0.0
        for s in range(q):
            term = alpha[s]
            layer = [(t + s) % q for t in base_layer]
            cur = [0] * volume.n_vertices
            cur[0] = s
            for e, src, dst, sign in orient:
                t = cur[src]
                t2 = (t + sign * residues[e]) % q
                term *= a[t2] / norms[t]
                cur[dst] = t2
            h1 += term
        h2 = sum(
            float(np.prod([a[(base_layer[y] + k) % q] for y in boundary]))
            for k in range(q)
        ) / z_alt
        worst = max(worst, abs(h1 - h2) * wmax)
    return worst
