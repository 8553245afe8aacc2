"""Sufficient-condition certificates for multiplex PI consensus.

Three scalars summarise a heterogeneous network:

* ``mu``, the spread of the node dynamics around an anchor node:
  ``lambda_max(sum_k (A'_k - A'_anchor)^2)`` over the non-anchor nodes,
  where ``A' = A + A^T``;
* ``eta``, the ``lambda_max`` of the symmetric part of the averaged dynamics
  (negative when the average is dissipative); stored signed, displayed
  as magnitude;
* ``rho``, the worst single-node expansion rate ``max_k lambda_max(A'_k)``.

The proportional coupling certifies consensus when

    sigma_P * lambda_2(L_P) + sigma * lambda_2(L_C) > (mu / (N |eta|) + rho) / 2

together with a nonsingular, dissipative-average condition and a connected
integral layer. The checks here evaluate those inequalities with explicit
margins; they are sufficient only, never necessary.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError, NotApplicableError
from .graph import LayerGraph, algebraic_connectivity, is_connected, laplacian

#: Eigenvalue strictly below -HURWITZ_TOL counts as stable; smallest singular
#: value above SINGULAR_RTOL * ||matrix||_2 counts as nonsingular.
HURWITZ_TOL = 1e-9
SINGULAR_RTOL = 1e-9


@dataclass(frozen=True)
class NodeDynamics:
    """One agent: ``x' = A x + b`` plus diffusive control inputs."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if a.shape[0] != a.shape[1]:
            raise DimensionError(f"A must be square, got {a.shape}")
        if b.shape != (a.shape[0],):
            raise DimensionError(f"b has shape {b.shape}, expected ({a.shape[0]},)")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class MultiplexSystem:
    """Heterogeneous agents coupled through three shared-node layers.

    ``layer_c`` is the open-loop coupling (gain ``sigma``), ``layer_p`` the
    static proportional control layer (gain ``sigma_p``), ``layer_i`` the
    integral layer (gain ``sigma_i``). Optional per-node ``local_feedback``
    matrices are added to the A_i before any analysis or simulation.

    The modelling assumption that at least one bias is nonzero (otherwise the
    all-stable problem is trivial) is documented, not enforced: zero-bias
    systems are legitimate test articles.
    """

    nodes: tuple[NodeDynamics, ...]
    layer_c: LayerGraph
    layer_p: LayerGraph
    layer_i: LayerGraph
    sigma: float = 0.0
    sigma_p: float = 1.0
    sigma_i: float = 1.0
    local_feedback: tuple[np.ndarray, ...] | None = None

    def __post_init__(self):
        nodes = tuple(self.nodes)
        if len(nodes) < 2:
            raise DimensionError("a multiplex system needs at least 2 nodes")
        dim = nodes[0].dim
        if any(nd.dim != dim for nd in nodes):
            raise DimensionError("all agents must share one state dimension")
        for name in ("layer_c", "layer_p", "layer_i"):
            layer: LayerGraph = getattr(self, name)
            if layer.node_count != len(nodes):
                raise DimensionError(
                    f"{name} has {layer.node_count} nodes, system has {len(nodes)}"
                )
        for name in ("sigma", "sigma_p", "sigma_i"):
            if getattr(self, name) < 0.0:
                raise DimensionError(f"{name} must be non-negative")
        if self.local_feedback is not None:
            fb = tuple(np.asarray(h, dtype=float) for h in self.local_feedback)
            if len(fb) != len(nodes):
                raise DimensionError("local_feedback must list one matrix per node")
            for k, h in enumerate(fb):
                if h.shape != (dim, dim):
                    raise DimensionError(
                        f"local feedback {k + 1} has shape {h.shape}, expected ({dim}, {dim})"
                    )
                h.setflags(write=False)
            object.__setattr__(self, "local_feedback", fb)
        object.__setattr__(self, "nodes", nodes)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def state_dim(self) -> int:
        return self.nodes[0].dim

    def effective_a(self) -> list[np.ndarray]:
        """Node matrices with any local feedback folded in."""
        if self.local_feedback is None:
            return [nd.A for nd in self.nodes]
        return [nd.A + h for nd, h in zip(self.nodes, self.local_feedback)]

    def stacked_bias(self) -> np.ndarray:
        return np.concatenate([nd.b for nd in self.nodes])

    def with_gains(self, sigma_p: float | None = None, sigma_i: float | None = None) -> "MultiplexSystem":
        updates = {}
        if sigma_p is not None:
            updates["sigma_p"] = float(sigma_p)
        if sigma_i is not None:
            updates["sigma_i"] = float(sigma_i)
        return dataclasses.replace(self, **updates)


@dataclass(frozen=True)
class StabilityReport:
    """Outcome of the sufficient conditions, with signed margins.

    ``threshold`` is the right-hand side that the coupling term must exceed;
    ``coupling`` the left-hand side actually achieved (its form depends on
    ``mode``). ``eta`` is stored signed; display ``abs(eta)``.
    """

    mu: float
    eta: float
    rho: float
    lambda2_c: float
    lambda2_p: float
    lambda2_i: float
    threshold: float
    coupling: float
    condition_i: bool
    condition_ii: bool
    condition_iii: bool
    margin_i: float
    margin_ii: float
    margin_iii: float
    psi11_nonsingular: bool
    psi11_hurwitz: bool
    x_infinity: np.ndarray | None
    mode: str
    anchor: int

    @property
    def passed(self) -> bool:
        return self.condition_i and self.condition_ii and self.condition_iii


def certificates(a_list: Sequence[np.ndarray], anchor: int = 1) -> tuple[float, float, float]:
    """(mu, eta, rho) for the given dynamics, anchored at node ``anchor``."""
    mats = [np.asarray(a, dtype=float) for a in a_list]
    if len(mats) < 2:
        raise DimensionError("certificates need at least 2 nodes")
    dim = mats[0].shape[0]
    for a in mats:
        if a.shape != (dim, dim):
            raise DimensionError("dynamics matrices must share one square shape")
    if not 1 <= anchor <= len(mats):
        raise DimensionError(f"anchor {anchor} outside 1..{len(mats)}")

    sym = [a + a.T for a in mats]
    ref = sym[anchor - 1]
    spread = np.zeros((dim, dim))
    for k, s in enumerate(sym):
        if k != anchor - 1:
            diff = s - ref
            spread += diff @ diff
    mu = float(np.linalg.eigvalsh(spread)[-1])
    eta = float(np.linalg.eigvalsh(sum(sym) / len(mats))[-1])
    rho = max(float(np.linalg.eigvalsh(s)[-1]) for s in sym)
    return mu, eta, rho


def best_anchor(a_list: Sequence[np.ndarray]) -> tuple[int, float]:
    """Anchor choice minimising mu (ties broken towards the lowest index).

    Relabelling which node plays the anchor role tightens the coupling
    threshold; eta and rho are anchor-invariant.
    """
    best = (1, np.inf)
    for anchor in range(1, len(a_list) + 1):
        mu, _, _ = certificates(a_list, anchor)
        if mu < best[1]:
            best = (anchor, mu)
    return best


def consensusability_fold(
    sys: MultiplexSystem, h_list: Sequence[np.ndarray]
) -> MultiplexSystem:
    """Return the system with local feedback gains absorbed into the A_i.

    Subsequent checks and simulations see ``A_i + H_i``; the consensus point
    moves accordingly since the averaged dynamics change.
    """
    mats = [np.asarray(h, dtype=float) for h in h_list]
    if len(mats) != sys.n_nodes:
        raise DimensionError(f"expected {sys.n_nodes} feedback matrices, got {len(mats)}")
    dim = sys.state_dim
    for k, h in enumerate(mats):
        if h.shape != (dim, dim):
            raise DimensionError(
                f"feedback matrix {k + 1} has shape {h.shape}, expected ({dim}, {dim})"
            )
    nodes = tuple(NodeDynamics(nd.A + h, nd.b) for nd, h in zip(sys.nodes, mats))
    return dataclasses.replace(sys, nodes=nodes, local_feedback=None)


def _homogeneous(mats: Sequence[np.ndarray]) -> bool:
    return all(np.array_equal(a, mats[0]) for a in mats[1:])


def weighted_projection_laplacian(sys: MultiplexSystem) -> np.ndarray:
    """sigma * L_C + sigma_P * L_P, the gain-weighted merged coupling."""
    return sys.sigma * laplacian(sys.layer_c) + sys.sigma_p * laplacian(sys.layer_p)


def _weighted_projection_connected(sys: MultiplexSystem) -> bool:
    edges = []
    if sys.sigma > 0.0:
        edges += [(i, j, sys.sigma * w) for i, j, w in sys.layer_c.edges]
    if sys.sigma_p > 0.0:
        for i, j, w in sys.layer_p.edges:
            edges.append((i, j, sys.sigma_p * w))
    merged: dict[tuple[int, int], float] = {}
    for i, j, w in edges:
        merged[(i, j)] = merged.get((i, j), 0.0) + w
    graph = LayerGraph(sys.n_nodes, tuple((i, j, w) for (i, j), w in merged.items()))
    return is_connected(graph)


def _evaluate(sys: MultiplexSystem, anchor: int, mode: str) -> StabilityReport:
    a_eff = sys.effective_a()
    n_nodes = sys.n_nodes
    mu, eta, rho = certificates(a_eff, anchor)

    psi11 = sum(a_eff) / n_nodes
    sv = np.linalg.svd(psi11, compute_uv=False)
    nonsingular = bool(sv[-1] > SINGULAR_RTOL * sv[0])
    hurwitz = bool(eta < -HURWITZ_TOL)
    condition_i = nonsingular and hurwitz

    if mu == 0.0:
        spread_term = 0.0
    elif eta == 0.0:
        spread_term = np.inf
    else:
        spread_term = mu / (n_nodes * abs(eta))
    threshold = 0.5 * (spread_term + rho)

    lam2_c = algebraic_connectivity(sys.layer_c)
    lam2_p = algebraic_connectivity(sys.layer_p)
    lam2_i = algebraic_connectivity(sys.layer_i)

    if mode == "projection":
        coupling = float(np.linalg.eigvalsh(weighted_projection_laplacian(sys))[1])
        condition_ii = _weighted_projection_connected(sys) and coupling > threshold
    else:
        coupling = sys.sigma * lam2_c + sys.sigma_p * lam2_p
        condition_ii = coupling > threshold

    condition_iii = is_connected(sys.layer_i) and sys.sigma_i > 0.0

    x_inf = None
    if nonsingular:
        x_inf = -np.linalg.solve(psi11, sum(nd.b for nd in sys.nodes) / n_nodes)
        x_inf.setflags(write=False)

    return StabilityReport(
        mu=mu,
        eta=eta,
        rho=rho,
        lambda2_c=lam2_c,
        lambda2_p=lam2_p,
        lambda2_i=lam2_i,
        threshold=threshold,
        coupling=coupling,
        condition_i=condition_i,
        condition_ii=condition_ii,
        condition_iii=condition_iii,
        margin_i=-eta,
        margin_ii=coupling - threshold,
        margin_iii=min(lam2_i, sys.sigma_i),
        psi11_nonsingular=nonsingular,
        psi11_hurwitz=hurwitz,
        x_infinity=x_inf,
        mode=_label(mode, a_eff, condition_i),
        anchor=anchor,
    )


def _label(mode: str, a_eff: Sequence[np.ndarray], condition_i: bool) -> str:
    if _homogeneous(a_eff) and condition_i:
        return "homogeneous"
    return "direct" if mode == "direct" else "projection"


def check_theorem(sys: MultiplexSystem, anchor: int = 1) -> StabilityReport:
    """Evaluate the three sufficient conditions on a multiplex system.

    When the open-loop layer is connected the coupling term is
    ``sigma lambda_2(L_C) + sigma_P lambda_2(L_P)``; when it is not (including
    the common sigma = 0 case) the check falls back to the merged-layer form,
    requiring the gain-weighted projection of C and P to be connected.
    """
    if is_connected(sys.layer_c) and sys.sigma > 0.0:
        return _evaluate(sys, anchor, "direct")
    return _evaluate(sys, anchor, "projection")


def check_projection(sys: MultiplexSystem, anchor: int = 1) -> StabilityReport:
    """Merged-layer variant: lambda_2 of sigma L_C + sigma_P L_P must clear
    the threshold. Raises when that projection is disconnected."""
    if not _weighted_projection_connected(sys):
        raise NotApplicableError(
            "gain-weighted projection of layers C and P is not connected"
        )
    return _evaluate(sys, anchor, "projection")
