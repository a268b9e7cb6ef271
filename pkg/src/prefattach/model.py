"""Growth of the undirected preferential attachment graph.

Stage ``n`` has nodes ``1..n``.  Node 1 starts with a self-loop (degree 2).
At each step the new node ``n + 1`` attaches to an existing ``v`` with
probability ``(D_n(v) + delta) / (n(2 + delta) + 1 + delta)``, or to itself
with probability ``(1 + delta) / (n(2 + delta) + 1 + delta)``.

Only degrees are stored.  Sampling writes ``D(v) + delta`` as
``(1 + delta) + (D(v) - 1)``: one uniform chooses among a uniform node
(mass ``n(1 + delta)``), a uniform entry of the excess-endpoint list, in which
``v`` appears ``D(v) - 1`` times (mass ``n``), and a self-loop (mass
``1 + delta``).  This is exact for every ``delta > -1`` and costs O(1) per step.

Random streams
--------------
Replica streams come from :func:`stream_rng`: a PCG64 generator seeded by
``numpy.random.SeedSequence(entropy=seed, spawn_key=(stream_id,))``.  A stream
depends only on ``(seed, stream_id)``, so any parallel schedule reproduces the
same replicas.  Each growth step consumes exactly one ``Generator.random()``
double.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Literal

import numpy as np

from . import _kernels
from .theory import check_delta

__all__ = [
    "ModelParams",
    "GraphState",
    "StepOutcome",
    "DegreeCensus",
    "stream_rng",
    "init_graph",
    "attachment_distribution",
    "grow_step",
    "grow_to",
    "degree_census",
    "census_trajectory",
    "replica_censuses",
]

_U64 = 2**64
_CHUNK = 1 << 20


def stream_rng(seed: int, stream_id: int = 0) -> np.random.Generator:
    """Independent generator for replica ``stream_id`` under master ``seed``."""
    for name, value in (("seed", seed), ("stream_id", stream_id)):
        if not 0 <= int(value) < _U64:
            raise ValueError(f"{name} must be an unsigned 64-bit integer, got {value}")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream_id),))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class ModelParams:
    """Model parameter and seeding policy.

    ``delta`` just above -1 is legal but numerically stressed: the uniform-node
    and self-loop regions then carry almost no mass.
    """

    delta: float
    seed: int = 0
    stream_id: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "delta", check_delta(self.delta))
        for name in ("seed", "stream_id"):
            value = getattr(self, name)
            if not 0 <= int(value) < _U64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {value}")

    def rng(self) -> np.random.Generator:
        return stream_rng(self.seed, self.stream_id)


@dataclass(frozen=True)
class StepOutcome:
    kind: Literal["attached_to_existing", "self_loop"]
    new_stage: int
    target_node: int | None = None
    target_old_degree: int | None = None


@dataclass
class DegreeCensus:
    """Counts N_n(k) for k = 1..k_max; ``counts[k - 1]`` is N_n(k)."""

    stage: int
    counts: np.ndarray
    overflow: int = 0
    overflow_mass: int = 0

    @property
    def k_max(self) -> int:
        return len(self.counts)

    def __getitem__(self, k: int) -> int:
        if k < 1:
            raise IndexError("degrees start at 1")
        return int(self.counts[k - 1]) if k <= self.k_max else 0

    def check(self) -> None:
        ks = np.arange(1, self.k_max + 1)
        if int(self.counts.sum()) + self.overflow != self.stage:
            raise AssertionError("node count mismatch")
        if int(ks @ self.counts) + self.overflow_mass != 2 * self.stage:
            raise AssertionError("degree mass mismatch")

    def to_dict(self) -> dict:
        return {
            "stage": self.stage,
            "counts": [int(c) for c in self.counts],
            "overflow": int(self.overflow),
        }


class GraphState:
    """Degree sequence and excess-endpoint list of the graph at stage ``n``.

    Arrays are over-allocated; only the first ``n`` entries are live.
    """

    __slots__ = ("delta", "n", "_degrees", "_excess")

    def __init__(self, delta: float, capacity: int = 16):
        self.delta = check_delta(delta)
        capacity = max(int(capacity), 1)
        self.n = 1
        self._degrees = np.zeros(capacity, dtype=np.int64)
        self._excess = np.zeros(capacity, dtype=np.int64)
        self._degrees[0] = 2
        self._excess[0] = 0

    @classmethod
    def from_degrees(cls, degrees: Iterable[int], delta: float) -> "GraphState":
        """Build a state with the given degree sequence (node ``i + 1`` gets ``degrees[i]``).

        The sum of degrees must be twice the number of nodes; labels beyond
        the degree sequence do not affect any distribution the model defines.
        """
        degs = np.asarray(list(degrees), dtype=np.int64)
        n = len(degs)
        if n < 1 or degs.min() < 1 or int(degs.sum()) != 2 * n:
            raise ValueError("degrees must be positive and sum to twice the node count")
        state = cls(delta, capacity=n)
        state.n = n
        state._degrees[:n] = degs
        state._excess[:n] = np.repeat(np.arange(n, dtype=np.int64), degs - 1)
        return state

    def reserve(self, capacity: int) -> None:
        if capacity <= len(self._degrees):
            return
        for name in ("_degrees", "_excess"):
            old = getattr(self, name)
            new = np.zeros(capacity, dtype=np.int64)
            new[: self.n] = old[: self.n]
            setattr(self, name, new)

    def copy(self) -> "GraphState":
        other = GraphState.__new__(GraphState)
        other.delta = self.delta
        other.n = self.n
        other._degrees = self._degrees[: self.n].copy()
        other._excess = self._excess[: self.n].copy()
        return other

    @property
    def degrees(self) -> np.ndarray:
        """Read-only view; ``degrees[v - 1]`` is D_n(v)."""
        view = self._degrees[: self.n]
        view.flags.writeable = False
        return view

    @property
    def excess_endpoints(self) -> np.ndarray:
        """Node ids (1-based), node v repeated D_n(v) - 1 times."""
        return self._excess[: self.n] + 1

    @property
    def census(self) -> dict[int, int]:
        counts = np.bincount(self._degrees[: self.n])
        return {int(k): int(c) for k, c in enumerate(counts) if c}

    def attach(self, target: int | None) -> StepOutcome:
        """Add node n+1 attached to ``target`` (1-based) or, for ``None``, to itself."""
        n = self.n
        self.reserve(max(2 * n, n + 1))
        if target is None:
            self._degrees[n] = 2
            self._excess[n] = n
            self.n = n + 1
            return StepOutcome("self_loop", n + 1)
        if not 1 <= target <= n:
            raise ValueError(f"target {target} not in 1..{n}")
        old = int(self._degrees[target - 1])
        self._degrees[target - 1] = old + 1
        self._degrees[n] = 1
        self._excess[n] = target - 1
        self.n = n + 1
        return StepOutcome("attached_to_existing", n + 1, target, old)

    def __repr__(self) -> str:
        return f"GraphState(n={self.n}, delta={self.delta})"


def init_graph(params: ModelParams | float) -> GraphState:
    delta = params.delta if isinstance(params, ModelParams) else params
    return GraphState(delta)


def attachment_distribution(state: GraphState, delta: float | None = None) -> tuple[np.ndarray, float]:
    """Exact next-step probabilities.

    Returns ``(p_nodes, p_self)`` where ``p_nodes[v - 1]`` is the chance that
    node ``n + 1`` attaches to ``v``.
    """
    d = state.delta if delta is None else check_delta(delta)
    n = state.n
    denom = n * (2.0 + d) + 1.0 + d
    return (state.degrees + d) / denom, (1.0 + d) / denom


def _select(state: GraphState, u: float) -> int | None:
    v = _kernels.select_target(state._excess, state.n, u, state.delta)
    return None if v < 0 else int(v) + 1


def grow_step(state: GraphState, rng: np.random.Generator) -> StepOutcome:
    """Advance one stage, drawing one uniform from ``rng``."""
    return state.attach(_select(state, rng.random()))


def grow_to(state: GraphState, n_target: int, rng: np.random.Generator) -> GraphState:
    """Grow ``state`` in place to stage ``n_target``; returns the same object.

    Consumes one uniform per step, so the result equals repeated
    :func:`grow_step` calls on the same generator.
    """
    if n_target < state.n:
        raise ValueError(f"n_target={n_target} is below the current stage {state.n}")
    state.reserve(n_target)
    while state.n < n_target:
        steps = min(_CHUNK, n_target - state.n)
        u = rng.random(steps)
        state.n = int(_kernels.grow(state._degrees, state._excess, state.n, u, state.delta))
    return state


def degree_census(state: GraphState, k_max: int) -> DegreeCensus:
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    bc = np.bincount(state._degrees[: state.n], minlength=k_max + 1)
    tail = bc[k_max + 1 :]
    mass = int(np.arange(k_max + 1, len(bc)) @ tail) if len(tail) else 0
    return DegreeCensus(state.n, bc[1 : k_max + 1].astype(np.int64), int(tail.sum()), mass)


def census_trajectory(params: ModelParams, n: int, k_max: int) -> np.ndarray:
    """Counts N_m(k), k <= k_max, for every stage m = 1..n of one path.

    Row ``m - 1`` is the census at stage ``m``.  Uses the stream of
    ``params``, so the final row matches ``grow_to`` on the same stream.
    """
    if n < 1 or k_max < 1:
        raise ValueError("need n >= 1 and k_max >= 1")
    rng = params.rng()
    state = init_graph(params)
    state.reserve(n)
    counts = np.zeros(k_max, dtype=np.int64)
    if k_max >= 2:
        counts[1] = 1
    out = np.empty((n, k_max), dtype=np.int64)
    out[0] = counts
    row = 1
    while state.n < n:
        steps = min(_CHUNK, n - state.n)
        u = rng.random(steps)
        state.n = int(
            _kernels.grow_tracked(
                state._degrees, state._excess, state.n, u, state.delta, counts, out[row : row + steps]
            )
        )
        row += steps
    return out


def replica_censuses(
    delta: float, n: int, k_max: int, seed: int, stream_ids: Iterable[int]
) -> np.ndarray:
    """Final census N_n(1..k_max) of one independent replica per stream id."""
    delta = check_delta(delta)
    ids = list(stream_ids)
    steps = n - 1
    if steps < 0:
        raise ValueError("n must be >= 1")
    out = np.empty((len(ids), k_max), dtype=np.int64)
    if not ids:
        return out
    rows_per_batch = max(1, min(len(ids), (8 << 20) // max(steps, 1)))
    for start in range(0, len(ids), rows_per_batch):
        block = ids[start : start + rows_per_batch]
        u = np.empty((len(block), steps))
        for r, sid in enumerate(block):
            u[r] = stream_rng(seed, sid).random(steps)
        out[start : start + len(block)] = _kernels.batch_census(u, delta, k_max)
    return out

