"""Message Plan Module - MACCM plan of messages, message reduction and permutation sets"""

from dataclasses import dataclass, field, replace
from itertools import permutations, product
from typing import Dict, FrozenSet, Iterator, Optional, Tuple

from rich.console import Console

from src.errors import BadParamsError
from src.network_model import ConnectivityReport, NetworkTopology, sorted_ids

console = Console(stderr=True)


def _delta_key(delta: FrozenSet[int]) -> Tuple[int, Tuple[int, ...]]:
    return len(delta), tuple(sorted(delta))


@dataclass(frozen=True)
class MaccmPlan:
    """
    Nodes are the nonempty message sets M_Delta, one per transmitter subset that
    owns a message; columns group them by |Delta|. An edge Delta2 -> Delta1 means
    Delta2 is a strict subset of Delta1 with exactly one more transmitter.
    """

    columns: Dict[int, Tuple[FrozenSet[int], ...]]
    nodes: Dict[FrozenSet[int], Tuple[str, ...]]
    edges: Tuple[Tuple[FrozenSet[int], FrozenSet[int]], ...]

    def to_dict(self) -> Dict:
        return {
            "columns": {str(size): [sorted(d) for d in deltas] for size, deltas in sorted(self.columns.items())},
            "nodes": [
                {"delta": sorted(d), "messages": list(msgs)}
                for d, msgs in sorted(self.nodes.items(), key=lambda kv: _delta_key(kv[0]))
            ],
            "edges": [[sorted(a), sorted(b)] for a, b in self.edges],
        }


@dataclass(frozen=True)
class ReductionResult:
    """Outcome of the reduction: theta per Delta, the reduced set M~ and the M* stage"""

    topology: NetworkTopology
    theta: Dict[FrozenSet[int], int]
    selected: Dict[FrozenSet[int], str]
    m_tilde: FrozenSet[str]
    m_tilde_per_receiver: Dict[int, FrozenSet[str]]
    effective_demands: Dict[int, FrozenSet[str]]
    m_star: Optional[FrozenSet[str]] = None
    m_star_per_receiver: Optional[Dict[int, FrozenSet[str]]] = None

    def to_dict(self) -> Dict:
        per_receiver = {}
        for j in self.topology.receivers:
            entry = {
                "m_tilde": sorted_ids(self.m_tilde_per_receiver[j]),
                "effective": sorted_ids(self.effective_demands[j]),
            }
            if self.m_star_per_receiver is not None:
                entry["m_star"] = sorted_ids(self.m_star_per_receiver[j])
            per_receiver[str(j)] = entry
        return {
            "theta": {",".join(map(str, sorted(d))): t for d, t in sorted(self.theta.items(), key=lambda kv: _delta_key(kv[0]))},
            "m_tilde": sorted_ids(self.m_tilde),
            "m_star": sorted_ids(self.m_star) if self.m_star is not None else None,
            "per_receiver": per_receiver,
        }


@dataclass(frozen=True)
class PermutationPlan:
    """lambdas[j] lists lambda_j(1), ..., lambda_j(j-1); sets[j][theta] is M^theta_{lambda_j}"""

    lambdas: Dict[int, Tuple[int, ...]]
    sets: Dict[int, Dict[int, FrozenSet[str]]] = field(default_factory=dict)

    @classmethod
    def identity(cls, k2: int) -> "PermutationPlan":
        return cls({j: tuple(range(1, j)) for j in range(2, k2 + 1)})

    @classmethod
    def from_params(cls, k2: int, raw: Optional[Dict]) -> "PermutationPlan":
        """Missing receivers fall back to the identity permutation"""
        lambdas = dict(cls.identity(k2).lambdas)
        for key, value in (raw or {}).items():
            lambdas[int(key)] = tuple(int(v) for v in value)
        return cls(lambdas)

    def validate(self, k2: int) -> None:
        for j in range(2, k2 + 1):
            perm = self.lambdas.get(j)
            if perm is None or sorted(perm) != list(range(1, j)):
                raise BadParamsError(f"lambda_{j} must be a permutation of 1..{j - 1}, got {perm}")
        extra = sorted(j for j in self.lambdas if not 2 <= j <= k2)
        if extra:
            raise BadParamsError(f"permutations given for receivers without one {extra}")

    def position_of(self, j: int, receiver: int) -> int:
        """theta with lambda_j(theta) == receiver"""
        return self.lambdas[j].index(receiver) + 1

    def to_dict(self) -> Dict:
        return {
            "lambdas": {str(j): list(p) for j, p in sorted(self.lambdas.items())},
            "sets": {
                str(j): {str(t): sorted_ids(s) for t, s in sorted(by_theta.items())}
                for j, by_theta in sorted(self.sets.items())
            },
        }


def build_plan(topology: NetworkTopology) -> MaccmPlan:
    nodes = {}
    for message in topology.messages:
        nodes.setdefault(message.label.delta, []).append(message.id)
    nodes = {d: tuple(sorted_ids(ids)) for d, ids in nodes.items()}

    columns = {}
    for delta in sorted(nodes, key=_delta_key):
        columns.setdefault(len(delta), []).append(delta)

    edges = []
    for small in sorted(nodes, key=_delta_key):
        for big in sorted(nodes, key=_delta_key):
            if small < big and len(big) == len(small) + 1:
                edges.append((small, big))
    return MaccmPlan({k: tuple(v) for k, v in columns.items()}, nodes, tuple(edges))


def reduce_messages(topology: NetworkTopology) -> ReductionResult:
    """
    Keep one message per transmitter subset Delta

    theta_Delta is the smallest max(nabla) among the messages sharing Delta; the
    kept message has max(nabla) == theta_Delta, ties broken by the
    lexicographically smallest nabla.

    Args:
        topology: Validated network topology

    Returns:
        ReductionResult with theta, M~ and per-receiver M~_Yj filled in
    """
    by_delta = {}
    for message in topology.messages:
        by_delta.setdefault(message.label.delta, []).append(message)

    theta, selected = {}, {}
    for delta, group in by_delta.items():
        theta[delta] = min(max(m.label.nabla) for m in group)
        keep = min(
            (m for m in group if max(m.label.nabla) == theta[delta]),
            key=lambda m: tuple(sorted(m.label.nabla)),
        )
        selected[delta] = keep.id

    m_tilde = frozenset(selected.values())
    return ReductionResult(
        topology=topology,
        theta=theta,
        selected=selected,
        m_tilde=m_tilde,
        m_tilde_per_receiver={j: topology.demanded_by(j) & m_tilde for j in topology.receivers},
        effective_demands=topology.effective_demands(),
    )


def star_messages(reduction: ReductionResult) -> ReductionResult:
    """M*_Yj for j = K2 down to 1, then M* as their union"""
    topology = reduction.topology
    later = frozenset()
    per_receiver = {}
    for j in reversed(topology.receivers):
        pool = reduction.m_tilde - later
        candidates = reduction.m_tilde_per_receiver[j] - later
        per_receiver[j] = frozenset(
            mid for mid in candidates
            if not any(topology.label_of(mid).delta < topology.label_of(other).delta for other in pool)
        )
        later |= reduction.m_tilde_per_receiver[j]

    m_star = frozenset().union(*per_receiver.values()) if per_receiver else frozenset()
    return replace(reduction, m_star=m_star, m_star_per_receiver=per_receiver)


def reduce_and_star(topology: NetworkTopology) -> ReductionResult:
    return star_messages(reduce_messages(topology))


def lambda_sets(reduction: ReductionResult, report: ConnectivityReport,
                lambdas: PermutationPlan) -> PermutationPlan:
    """M^theta_{lambda_j}: effective demands of Y_j unconnected to Y_lambda_j(1..theta)"""
    k2 = reduction.topology.k2
    lambdas.validate(k2)
    sets = {}
    for j in range(2, k2 + 1):
        current = reduction.effective_demands[j]
        sets[j] = {}
        for theta, receiver in enumerate(lambdas.lambdas[j], start=1):
            current = current & report.unconnected_messages(receiver)
            sets[j][theta] = current
    return PermutationPlan(dict(lambdas.lambdas), sets)


def nesting_holds(plan: PermutationPlan, reduction: ReductionResult) -> bool:
    for j, by_theta in plan.sets.items():
        chain = [reduction.effective_demands[j]] + [by_theta[t] for t in sorted(by_theta)]
        if any(not later <= earlier for earlier, later in zip(chain, chain[1:])):
            return False
    return True


def all_permutation_plans(k2: int, max_receiver: int = 4) -> Iterator[PermutationPlan]:
    """Every combination of lambda_j for j <= max_receiver, identity beyond it"""
    swept = range(2, min(k2, max_receiver) + 1)
    fixed = {j: tuple(range(1, j)) for j in range(max_receiver + 1, k2 + 1)}
    for combo in product(*(permutations(range(1, j)) for j in swept)):
        lambdas = dict(zip(swept, (tuple(p) for p in combo)))
        lambdas.update(fixed)
        yield PermutationPlan(lambdas)
