"""Rates Module - Sum-rate expression trees, outer bounds, achievable schemes and evaluation"""

from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from rich.console import Console

from src.errors import BadParamsError, SchemeMismatchError
from src.info_measures import Q_NAME, JointPmf, cond_mutual_information, input_name, output_name
from src.message_plan import PermutationPlan, ReductionResult, lambda_sets
from src.network_model import ConnectivityReport, NetworkTopology, sorted_ids

console = Console(stderr=True)

OUTER_IDS = ("T2A", "T2B", "T3", "T4", "T5", "T6", "T7", "COR2", "T8", "T9", "M2O")
SCHEME_IDS = ("SUCCESSIVE", "SUCCESSIVE_JOINT", "TIN")
MAX_JOINT_SUBSETS = 10


class NodeKind(str, Enum):
    SUM = "SUM"
    MIN = "MIN"
    ATOM = "ATOM"


def _fmt(names: Iterable[str]) -> str:
    return ",".join(sorted_ids(names))


@dataclass(frozen=True)
class Atom:
    """I(A;B|C) over roster variable names"""

    a: FrozenSet[str]
    b: FrozenSet[str]
    c: FrozenSet[str] = frozenset()

    @classmethod
    def of(cls, a: Iterable[str], b: Iterable[str], c: Iterable[str] = ()) -> "Atom":
        a, b, c = frozenset(a), frozenset(b), frozenset(c)
        if a & b:
            raise BadParamsError(f"atom sides overlap on {sorted_ids(a & b)}")
        # I(A;B|C) = I(A-C;B-C|C)
        return cls(a - c, b - c, c)

    def is_empty(self) -> bool:
        return not self.a or not self.b

    def key(self) -> Tuple[Tuple[str, ...], Tuple[str, ...], Tuple[str, ...]]:
        return tuple(sorted_ids(self.a)), tuple(sorted_ids(self.b)), tuple(sorted_ids(self.c))

    def variables(self) -> FrozenSet[str]:
        return self.a | self.b | self.c

    def substitute(self, mapping: Dict[str, str]) -> "Atom":
        def swap(names):
            return frozenset(mapping.get(n, n) for n in names)
        return Atom.of(swap(self.a), swap(self.b), swap(self.c))

    def __str__(self) -> str:
        cond = f"|{_fmt(self.c)}" if self.c else ""
        return f"I({_fmt(self.a)};{_fmt(self.b)}{cond})"


def _chain_merge(atoms: List[Atom]) -> List[Atom]:
    """Fold I(A;Y|C) + I(B;Y|C,A) into I(A,B;Y|C) until no pair matches"""
    atoms = list(atoms)
    merged = True
    while merged:
        merged = False
        for x_pos, x in enumerate(atoms):
            for y_pos, y in enumerate(atoms):
                if x_pos == y_pos or x.b != y.b or y.c != x.c | x.a:
                    continue
                atoms[x_pos] = Atom.of(x.a | y.a, x.b, x.c)
                del atoms[y_pos]
                merged = True
                break
            if merged:
                break
    return atoms


@dataclass(frozen=True)
class SumRateExpression:
    kind: NodeKind
    children: Tuple["SumRateExpression", ...] = ()
    atom: Optional[Atom] = None
    source: str = ""

    @classmethod
    def atom_of(cls, a: Iterable[str], b: Iterable[str], c: Iterable[str] = (), source: str = "") -> "SumRateExpression":
        return cls(NodeKind.ATOM, atom=Atom.of(a, b, c), source=source)

    @classmethod
    def sum_of(cls, children: Iterable["SumRateExpression"], source: str = "") -> "SumRateExpression":
        """Flattens nested sums, drops empty atoms and merges chain-rule pairs"""
        flat = []
        for child in children:
            if child.kind == NodeKind.SUM:
                flat.extend(child.children)
            elif not (child.kind == NodeKind.ATOM and child.atom.is_empty()):
                flat.append(child)
        atoms = _chain_merge([c.atom for c in flat if c.kind == NodeKind.ATOM])
        rest = [c for c in flat if c.kind != NodeKind.ATOM]
        parts = tuple(cls(NodeKind.ATOM, atom=a) for a in atoms) + tuple(rest)
        if len(parts) == 1:
            return parts[0]
        return cls(NodeKind.SUM, parts, source=source)

    @classmethod
    def min_of(cls, children: Iterable["SumRateExpression"], source: str = "") -> "SumRateExpression":
        children = tuple(children)
        if not children:
            raise BadParamsError("MIN node needs at least one branch")
        if len(children) == 1:
            return children[0]
        return cls(NodeKind.MIN, children, source=source)

    def canonical(self):
        """Order-free structural key; two expressions with equal keys are the same term multiset"""
        if self.kind == NodeKind.ATOM:
            return None if self.atom.is_empty() else ("I", self.atom.key())
        parts = []
        for child in self.children:
            key = child.canonical()
            if key is None:
                continue
            if key[0] == self.kind.value:
                parts.extend(key[1])
            else:
                parts.append(key)
        if self.kind == NodeKind.MIN:
            parts = sorted(set(parts))
        else:
            parts = sorted(parts)
        if not parts:
            return None
        if len(parts) == 1:
            return parts[0]
        return (self.kind.value, tuple(parts))

    def atoms(self) -> List[Atom]:
        if self.kind == NodeKind.ATOM:
            return [self.atom]
        return [a for child in self.children for a in child.atoms()]

    def variables(self) -> FrozenSet[str]:
        out = frozenset()
        for atom in self.atoms():
            out |= atom.variables()
        return out

    def substitute(self, mapping: Dict[str, str]) -> "SumRateExpression":
        if self.kind == NodeKind.ATOM:
            return SumRateExpression(NodeKind.ATOM, atom=self.atom.substitute(mapping), source=self.source)
        children = [child.substitute(mapping) for child in self.children]
        if self.kind == NodeKind.SUM:
            return SumRateExpression.sum_of(children, source=self.source)
        return SumRateExpression.min_of(children, source=self.source)

    def to_dict(self) -> Dict:
        if self.kind == NodeKind.ATOM:
            data = {"kind": "ATOM", "a": sorted_ids(self.atom.a), "b": sorted_ids(self.atom.b),
                    "c": sorted_ids(self.atom.c)}
        else:
            data = {"kind": self.kind.value, "children": [child.to_dict() for child in self.children]}
        if self.source:
            data["source"] = self.source
        return data

    def __str__(self) -> str:
        if self.kind == NodeKind.ATOM:
            return str(self.atom)
        inner = (" + " if self.kind == NodeKind.SUM else ", ").join(str(c) for c in self.children)
        return f"({inner})" if self.kind == NodeKind.SUM else f"min{{{inner}}}"


def expand_branches(expr: SumRateExpression) -> SumRateExpression:
    """Distribute sums over mins so the result is one MIN of chain-merged sums"""
    def branches(node) -> List[List[SumRateExpression]]:
        if node.kind == NodeKind.ATOM:
            return [[node]]
        if node.kind == NodeKind.MIN:
            return [b for child in node.children for b in branches(child)]
        out = [[]]
        for child in node.children:
            out = [left + right for left in out for right in branches(child)]
        return out

    summed = [SumRateExpression.sum_of(parts) for parts in branches(expr)]
    unique = {}
    for branch in summed:
        unique.setdefault(branch.canonical(), branch)
    return SumRateExpression.min_of(list(unique.values()), source=expr.source or "expanded")


@dataclass
class ExpressionEvaluation:
    value: float
    active_branches: Dict[str, int] = field(default_factory=dict)
    branch_values: Dict[str, List[float]] = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return {
            "value": self.value,
            "active_branches": dict(sorted(self.active_branches.items())),
            "branch_values": dict(sorted(self.branch_values.items())),
        }


class DiscreteBackend:
    """Atom evaluator over a finite joint pmf"""

    def __init__(self, joint: JointPmf):
        self.joint = joint

    def atom_value(self, atom: Atom) -> float:
        return cond_mutual_information(self.joint, atom.a, atom.b, atom.c)


def eval_expression(expr: SumRateExpression, backend) -> ExpressionEvaluation:
    """
    Bottom-up evaluation of an expression tree

    Args:
        expr: Expression to evaluate
        backend: Object with atom_value(Atom) -> float (DiscreteBackend or GaussianEvalContext)

    Returns:
        ExpressionEvaluation with the active branch of every MIN node, keyed by tree path
    """
    result = ExpressionEvaluation(0.0)
    cache: Dict[Tuple, float] = {}

    def visit(node: SumRateExpression, path: str) -> float:
        if node.kind == NodeKind.ATOM:
            if node.atom.is_empty():
                return 0.0
            key = node.atom.key()
            if key not in cache:
                cache[key] = backend.atom_value(node.atom)
            return cache[key]
        values = [visit(child, f"{path}/{k}") for k, child in enumerate(node.children)]
        if node.kind == NodeKind.SUM:
            return float(sum(values))
        label = f"{node.source or 'min'}@{path or '/'}"
        active = min(range(len(values)), key=lambda k: values[k])
        result.active_branches[label] = active
        result.branch_values[label] = values
        return values[active]

    result.value = visit(expr, "")
    return result


def input_substitution(topology: NetworkTopology) -> Dict[str, str]:
    """Message -> input map, defined when each transmitter carries exactly one message of its own"""
    mapping = {}
    for i in topology.transmitters:
        known = topology.known_at(i)
        if len(known) != 1:
            raise SchemeMismatchError(f"transmitter {i} knows {len(known)} messages; input form needs exactly one")
        (mid,) = tuple(known)
        if len(topology.label_of(mid).delta) != 1:
            raise SchemeMismatchError(f"message {mid} is shared by several transmitters")
        mapping[mid] = input_name(i)
    return mapping


def to_input_form(expr: SumRateExpression, topology: NetworkTopology) -> SumRateExpression:
    return expr.substitute(input_substitution(topology))


@dataclass(frozen=True)
class ReceiverGrouping:
    blocks: Tuple[Tuple[int, ...], ...]

    @classmethod
    def singletons(cls, k2: int) -> "ReceiverGrouping":
        return cls(tuple((j,) for j in range(1, k2 + 1)))

    @classmethod
    def from_params(cls, k2: int, raw) -> "ReceiverGrouping":
        if raw is None:
            return cls.singletons(k2)
        grouping = cls(tuple(tuple(int(j) for j in block) for block in raw))
        grouping.validate(k2)
        return grouping

    def validate(self, k2: int) -> None:
        flat = [j for block in self.blocks for j in block]
        if any(not block for block in self.blocks):
            raise BadParamsError("receiver groups must be nonempty")
        if sorted(flat) != list(range(1, k2 + 1)):
            raise BadParamsError(f"receiver groups {self.blocks} must partition 1..{k2}")

    def to_dict(self) -> List[List[int]]:
        return [list(b) for b in self.blocks]


@dataclass(frozen=True)
class OrderingSchedule:
    """Receiver permutation lambda and cut points j_1 < ... < j_mu = K2"""

    order: Tuple[int, ...]
    cuts: Tuple[int, ...]

    @classmethod
    def from_params(cls, k2: int, raw: Optional[Dict]) -> "OrderingSchedule":
        raw = raw or {}
        order = tuple(int(j) for j in raw.get("schedule", range(1, k2 + 1)))
        cuts = tuple(int(j) for j in raw.get("cuts", range(1, k2 + 1)))
        schedule = cls(order, cuts)
        schedule.validate(k2)
        return schedule

    def validate(self, k2: int) -> None:
        if sorted(self.order) != list(range(1, k2 + 1)):
            raise BadParamsError(f"schedule {list(self.order)} is not a permutation of 1..{k2}")
        if not self.cuts or self.cuts[-1] != k2:
            raise BadParamsError(f"cut points must end at {k2}")
        if any(b <= a for a, b in zip(self.cuts, self.cuts[1:])) or self.cuts[0] < 1:
            raise BadParamsError(f"cut points {list(self.cuts)} must be strictly increasing from 1")

    def receiver(self, position: int) -> int:
        """lambda(position), 1-based"""
        return self.order[position - 1]

    def group_messages(self, topology: NetworkTopology) -> List[FrozenSet[str]]:
        """M_{j_theta}: demands of lambda(j_{theta-1}+1..j_theta)"""
        out, start = [], 1
        for cut in self.cuts:
            out.append(topology.demand_union(self.receiver(p) for p in range(start, cut + 1)))
            start = cut + 1
        return out

    def to_dict(self) -> Dict:
        return {"schedule": list(self.order), "cuts": list(self.cuts)}


def schedules_from_params(k2: int, params: Dict) -> List[OrderingSchedule]:
    if "schedules" in params:
        raw = params["schedules"]
        if not isinstance(raw, list) or not raw:
            raise BadParamsError("'schedules' must be a nonempty list")
        return [OrderingSchedule.from_params(k2, item) for item in raw]
    return [OrderingSchedule.from_params(k2, params)]


class DemandView:
    """Receiver demand sets, optionally restricted to the M* messages"""

    def __init__(self, topology: NetworkTopology, reduction: Optional[ReductionResult] = None,
                 use_m_star: bool = False):
        self.topology = topology
        self.keep = topology.all_messages
        if use_m_star:
            if reduction is None or reduction.m_star is None:
                raise BadParamsError("M* substitution requested without a starred reduction")
            self.keep = reduction.m_star

    def demand(self, j: int) -> FrozenSet[str]:
        return self.topology.demanded_by(j) & self.keep

    def later(self, j: int) -> FrozenSet[str]:
        out = frozenset()
        for l in range(j + 1, self.topology.k2 + 1):
            out |= self.demand(l)
        return out

    def effective(self, j: int) -> FrozenSet[str]:
        return self.demand(j) - self.later(j)

    def group(self, receivers: Iterable[int]) -> FrozenSet[str]:
        out = frozenset()
        for j in receivers:
            out |= self.demand(j)
        return out


def _outputs(receivers: Iterable[int]) -> FrozenSet[str]:
    return frozenset(output_name(j) for j in receivers)


def _with_q(names: Iterable[str]) -> FrozenSet[str]:
    return frozenset(names) | {Q_NAME}


def _chain_bound(view: DemandView, source: str) -> SumRateExpression:
    """sum_j I(M_Yj; Y_j | M_Y(j+1..K2), Q)"""
    terms = [
        SumRateExpression.atom_of(view.effective(j), _outputs([j]), _with_q(view.later(j)))
        for j in view.topology.receivers
    ]
    return SumRateExpression.sum_of(terms, source=source)


def _grouped_bound(view: DemandView, grouping: ReceiverGrouping, source: str) -> SumRateExpression:
    terms, later = [], frozenset()
    for block in reversed(grouping.blocks):
        msgs = view.group(block)
        terms.append(SumRateExpression.atom_of(msgs - later, _outputs(block), _with_q(later)))
        later |= msgs
    return SumRateExpression.sum_of(list(reversed(terms)), source=source)


def _schedule_bound(topology: NetworkTopology, schedule: OrderingSchedule, source: str) -> SumRateExpression:
    groups = schedule.group_messages(topology)
    terms = []
    for theta, cut in enumerate(schedule.cuts):
        later = frozenset().union(*groups[theta + 1:]) if theta + 1 < len(groups) else frozenset()
        terms.append(SumRateExpression.atom_of(groups[theta] - later, _outputs([schedule.receiver(cut)]), _with_q(later)))
    return SumRateExpression.sum_of(terms, source=source)


def _require_two_receivers(topology: NetworkTopology, which: str) -> None:
    if topology.k2 != 2:
        raise BadParamsError(f"{which} applies to two-receiver networks, got K2={topology.k2}")


def build_outer_expression(topology: NetworkTopology, connectivity: Optional[ConnectivityReport],
                           reduction: Optional[ReductionResult], which: str,
                           params: Optional[Dict] = None) -> SumRateExpression:
    """
    Sum-rate outer bound of the named theorem

    Args:
        topology: Network topology, receivers in less-noisy order
        connectivity: Connectivity report (kept for signature symmetry with the achievable builder)
        reduction: Starred reduction, needed when params['use_m_star'] is set
        which: Outer bound id
        params: grouping / schedule(s) / use_m_star

    Returns:
        SumRateExpression tagged with the bound id
    """
    params = params or {}
    which = which.upper()
    view = DemandView(topology, reduction, bool(params.get("use_m_star")))

    if which in ("T2A", "T3"):
        _require_two_receivers(topology, which)
        return _chain_bound(view, which)
    if which == "T2B":
        _require_two_receivers(topology, which)
        return SumRateExpression.atom_of(view.group([1, 2]), _outputs([1]), {Q_NAME}, source=which)
    if which == "T4":
        _require_two_receivers(topology, which)
        return SumRateExpression.min_of(
            [_chain_bound(view, "T4.split"),
             SumRateExpression.atom_of(view.group([1, 2]), _outputs([1]), {Q_NAME}, source="T4.joint")],
            source=which,
        )
    if which in ("T5", "T6", "T7", "COR2"):
        return _chain_bound(view, which)
    if which == "T8":
        bounds = [_schedule_bound(topology, s, f"T8[{','.join(map(str, s.order))}]")
                  for s in schedules_from_params(topology.k2, params)]
        return SumRateExpression.min_of(bounds, source=which)
    if which == "T9":
        grouping = ReceiverGrouping.from_params(topology.k2, params.get("grouping"))
        return _grouped_bound(view, grouping, which)
    if which == "M2O":
        grouping = ReceiverGrouping.from_params(topology.k2, params.get("grouping") or many_to_one_grouping(topology.k2))
        return _grouped_bound(view, grouping, which)
    raise BadParamsError(f"unknown outer bound id '{which}' (expected one of {', '.join(OUTER_IDS)})")


def many_to_one_grouping(k2: int) -> List[List[int]]:
    if k2 < 2:
        raise BadParamsError("many-to-one grouping needs at least two receivers")
    return [list(range(1, k2)), [k2]]


def _ordered(ids: Iterable[str], order: Sequence[str]) -> List[str]:
    rank = {mid: k for k, mid in enumerate(order)}
    natural = {mid: k for k, mid in enumerate(sorted_ids(ids))}
    return sorted(ids, key=lambda mid: (rank.get(mid, len(rank)), natural[mid]))


def _successive(topology: NetworkTopology, connectivity: ConnectivityReport,
                view: DemandView, plan: PermutationPlan, order: Sequence[str]) -> SumRateExpression:
    """
    Successive decoding with the permutation plan

    Receiver j decodes its effective demands layer by layer, starting with the
    messages unconnected to the most receivers; every other receiver connected to a
    message also decodes it, so each message step is a MIN over its decoders.
    """
    steps = []
    for j in reversed(topology.receivers):
        later = view.later(j)
        chain = {0: view.effective(j), j: frozenset()}
        for theta in range(1, j):
            chain[theta] = plan.sets[j][theta] & view.keep
        for t in range(j - 1, -1, -1):
            context = later | chain[t + 1]
            decoded = frozenset()
            for mid in _ordered(chain[t] - chain[t + 1], order):
                decoders = [j] + [
                    plan.lambdas[j][theta - 1] for theta in range(t + 1, j)
                    if mid not in connectivity.unconnected_messages(plan.lambdas[j][theta - 1])
                ]
                cond = _with_q(context | decoded)
                steps.append(SumRateExpression.min_of(
                    [SumRateExpression.atom_of({mid}, _outputs([d]), cond) for d in decoders],
                    source=f"decode {mid}",
                ))
                decoded |= {mid}
    return SumRateExpression.sum_of(steps, source="SUCCESSIVE")


def _successive_joint(topology: NetworkTopology, view: DemandView) -> SumRateExpression:
    _require_two_receivers(topology, "SUCCESSIVE_JOINT")
    own, shared = view.effective(1), view.demand(2)
    if len(shared) > MAX_JOINT_SUBSETS:
        raise BadParamsError(f"successive-joint decoding enumerates 2^{len(shared)} subsets; cap is 2^{MAX_JOINT_SUBSETS}")
    branches = []
    ids = sorted_ids(shared)
    for size in range(len(ids) + 1):
        for omega in combinations(ids, size):
            omega = frozenset(omega)
            rest = shared - omega
            branches.append(SumRateExpression.sum_of([
                SumRateExpression.atom_of(own | omega, _outputs([1]), _with_q(rest)),
                SumRateExpression.atom_of(rest, _outputs([2]), _with_q(omega)),
            ], source=f"omega={{{_fmt(omega)}}}"))
    return SumRateExpression.min_of(branches, source="SUCCESSIVE_JOINT")


def _tin(topology: NetworkTopology, view: DemandView) -> SumRateExpression:
    seen = frozenset()
    for j in topology.receivers:
        if view.demand(j) & seen:
            raise SchemeMismatchError("treating interference as noise needs pairwise disjoint demand sets")
        seen |= view.demand(j)
    return SumRateExpression.sum_of(
        [SumRateExpression.atom_of(view.demand(j), _outputs([j]), {Q_NAME}) for j in topology.receivers],
        source="TIN",
    )


def build_achievable_expression(topology: NetworkTopology, connectivity: ConnectivityReport,
                                reduction: ReductionResult, scheme: str,
                                params: Optional[Dict] = None) -> SumRateExpression:
    """
    Achievable sum-rate of a decoding scheme

    Args:
        topology: Network topology
        connectivity: Connectivity report (drives which receivers skip which messages)
        reduction: Reduction result holding effective demands (and M* if starred)
        scheme: SUCCESSIVE, SUCCESSIVE_JOINT or TIN
        params: lambdas (per-receiver permutations), decode_order (message ids), use_m_star

    Returns:
        SumRateExpression of the scheme
    """
    params = params or {}
    scheme = scheme.upper()
    view = DemandView(topology, reduction, bool(params.get("use_m_star")))
    if scheme == "SUCCESSIVE":
        plan = lambda_sets(reduction, connectivity,
                           PermutationPlan.from_params(topology.k2, params.get("lambdas")))
        order = [str(m) for m in params.get("decode_order", [])]
        topology.check_ids(order)
        return _successive(topology, connectivity, view, plan, order)
    if scheme == "SUCCESSIVE_JOINT":
        return _successive_joint(topology, view)
    if scheme == "TIN":
        return _tin(topology, view)
    raise SchemeMismatchError(f"unknown scheme '{scheme}' (expected one of {', '.join(SCHEME_IDS)})")

