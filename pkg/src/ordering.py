"""Ordering Module - Less-noisy condition sets, Gaussian certificates and argmax comparisons"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from rich.console import Console

from src.errors import BadParamsError, EmptyArgmaxError
from src.gaussian import ratio_certificate
from src.info_measures import Q_NAME, input_name, output_name
from src.message_plan import PermutationPlan, ReductionResult, all_permutation_plans, lambda_sets
from src.network_model import ConnectivityReport, GaussianChannel, NetworkTopology, inputs_for, sorted_ids
from src.rates import Atom, OrderingSchedule, ReceiverGrouping, many_to_one_grouping, schedules_from_params

console = Console(stderr=True)

GAP_TOLERANCE = 1e-9

CONDITION_IDS = ("T2A", "T2B", "T3", "T4", "T5", "T6", "T7", "COR2", "T8", "T9",
                 "M2O", "M2O_WEAK", "L5", "SI3")


class Family(str, Enum):
    PRODUCT = "PRODUCT"      # free inputs (and U) jointly distributed, conditioned inputs independent
    THEOREM6 = "THEOREM6"    # every input independent, U drawn given all inputs


class Status(str, Enum):
    HOLDS = "HOLDS"
    VIOLATED = "VIOLATED"
    UNKNOWN = "UNKNOWN"


@dataclass(frozen=True)
class LessNoisyQuery:
    """
    I(left; Y_weaker | X_C) <= I(left; Y_stronger | X_C) for every joint of the family

    left is U together with extra_left_inputs when with_u is set, otherwise every
    input outside X_C. stronger and weaker are receiver tuples; a tuple of several
    receivers is read as one vector output.
    """

    stronger: Tuple[int, ...]
    weaker: Tuple[int, ...]
    conditioned_inputs: FrozenSet[int]
    family: Family = Family.PRODUCT
    with_u: bool = True
    u_cardinality_cap: Optional[int] = None
    extra_left_inputs: FrozenSet[int] = frozenset()
    label: str = ""

    def __post_init__(self):
        if self.conditioned_inputs & self.extra_left_inputs:
            raise BadParamsError("conditioned inputs overlap the extra left-side inputs")
        if set(self.stronger) & set(self.weaker):
            raise BadParamsError(f"receiver groups {self.stronger} and {self.weaker} overlap")

    def free_inputs(self, k1: int) -> List[int]:
        return [i for i in range(1, k1 + 1) if i not in self.conditioned_inputs]

    def left_names(self, k1: int) -> List[str]:
        if self.with_u:
            return ["U"] + [input_name(i) for i in sorted(self.extra_left_inputs)]
        return [input_name(i) for i in self.free_inputs(k1)]

    def describe(self) -> str:
        def group(receivers):
            return ",".join(output_name(j) for j in receivers)
        cond = ",".join(input_name(i) for i in sorted(self.conditioned_inputs)) or "-"
        left = "U" if self.with_u else "X"
        if self.extra_left_inputs:
            left += "," + ",".join(input_name(i) for i in sorted(self.extra_left_inputs))
        return f"I({left};{group(self.weaker)}|{cond}) <= I({left};{group(self.stronger)}|{cond})"

    def to_dict(self) -> Dict:
        return {
            "label": self.label,
            "stronger": list(self.stronger),
            "weaker": list(self.weaker),
            "conditioned_inputs": sorted(self.conditioned_inputs),
            "extra_left_inputs": sorted(self.extra_left_inputs),
            "family": self.family.value,
            "with_u": self.with_u,
            "u_cardinality_cap": self.u_cardinality_cap,
            "condition": self.describe(),
        }


@dataclass
class ConditionVerdict:
    status: Status
    certificate: Optional[Dict] = None
    witness: Optional[Dict] = None
    best_gap: Optional[float] = None
    alternative_holds: Dict[str, bool] = field(default_factory=dict)
    query: Optional[LessNoisyQuery] = None

    def to_dict(self) -> Dict:
        out = {
            "status": self.status.value,
            "certificate": self.certificate,
            "witness": self.witness,
            "best_gap": self.best_gap,
        }
        if self.alternative_holds:
            out["alternative_holds"] = self.alternative_holds
        if self.query is not None:
            out["query"] = self.query.to_dict()
        return out


def merge_verdicts(verdicts: Sequence[ConditionVerdict]) -> ConditionVerdict:
    """VIOLATED beats HOLDS beats UNKNOWN; ties keep the first verdict"""
    rank = {Status.VIOLATED: 0, Status.HOLDS: 1, Status.UNKNOWN: 2}
    if not verdicts:
        return ConditionVerdict(Status.UNKNOWN)
    best = min(verdicts, key=lambda v: rank[v.status])
    gaps = [v.best_gap for v in verdicts if v.best_gap is not None]
    if best.status == Status.UNKNOWN and gaps:
        best.best_gap = max(gaps)
    return best


def check_query_gaussian(channel: GaussianChannel, query: LessNoisyQuery) -> ConditionVerdict:
    """
    Proportional-gain certificate for a Gaussian query

    HOLDS when the weaker receiver's gains on the free inputs are alpha times the
    gains of one stronger receiver with |alpha| <= 1. Anything else is UNKNOWN:
    the ratio test is sufficient, not necessary.
    """
    free = query.free_inputs(channel.k1)
    cols = [i - 1 for i in free]
    if len(query.weaker) != 1:
        return ConditionVerdict(Status.UNKNOWN, best_gap=None, query=query,
                                certificate={"reason": "ratio test needs a single weaker receiver"})
    weaker_row = channel.gains[query.weaker[0] - 1, cols]
    reasons = []
    for s in query.stronger:
        result = ratio_certificate(channel.gains[s - 1, cols], weaker_row)
        if result["holds"]:
            return ConditionVerdict(
                Status.HOLDS,
                certificate={"kind": "gain_ratio", "alpha": result["alpha"], "via_receiver": s,
                             "free_inputs": free},
                query=query,
            )
        reasons.append(f"Y{s}: {result['reason']}")
    return ConditionVerdict(Status.UNKNOWN, certificate={"reason": "; ".join(reasons)}, query=query)


# ---------------------------------------------------------------------------
# Condition sets


class _Builder:
    """Shared state while emitting the queries of one theorem"""

    def __init__(self, topology: NetworkTopology, params: Dict):
        self.topology = topology
        self.u_cap = params.get("u_cap")
        self.queries: List[LessNoisyQuery] = []

    def demand(self, receivers: Iterable[int]) -> FrozenSet[str]:
        return self.topology.demand_union(receivers)

    def inputs(self, messages: Iterable[str]) -> FrozenSet[int]:
        return inputs_for(self.topology, messages)

    def add(self, weaker, stronger, conditioned, label: str, family: Family = Family.PRODUCT,
            with_u: bool = True, extra: Iterable[int] = ()) -> None:
        weaker = tuple(sorted(weaker)) if not isinstance(weaker, int) else (weaker,)
        stronger = tuple(sorted(stronger)) if not isinstance(stronger, int) else (stronger,)
        conditioned = frozenset(conditioned)
        query = LessNoisyQuery(
            stronger=stronger,
            weaker=weaker,
            conditioned_inputs=conditioned,
            family=family,
            with_u=with_u,
            u_cardinality_cap=self.u_cap,
            extra_left_inputs=frozenset(extra) - conditioned,
            label=label,
        )
        key = (query.stronger, query.weaker, query.conditioned_inputs, query.family, query.with_u,
               query.extra_left_inputs)
        seen = {(q.stronger, q.weaker, q.conditioned_inputs, q.family, q.with_u, q.extra_left_inputs)
                for q in self.queries}
        if key not in seen:
            self.queries.append(query)


def _two_receiver(topology: NetworkTopology, which: str) -> None:
    if topology.k2 != 2:
        raise BadParamsError(f"{which} applies to two-receiver networks, got K2={topology.k2}")


def _t2a(b: _Builder) -> None:
    b.add(2, 1, b.inputs(b.demand([2])), "T2A")


def _t2b(b: _Builder) -> None:
    b.add(2, 1, b.inputs(b.demand([1])), "T2B", with_u=False)


def _chain(b: _Builder, label: str, family: Family) -> None:
    k2 = b.topology.k2
    for j in range(2, k2 + 1):
        b.add(j, j - 1, b.inputs(b.demand(range(j, k2 + 1))), f"{label}[j={j}]", family=family)


def _permutation(b: _Builder, plan: PermutationPlan, reduction: ReductionResult, label: str) -> None:
    """Conditions attached to a permutation plan lambda_2..lambda_K2"""
    k2 = b.topology.k2
    for j in range(2, k2 + 1):
        later = b.demand(range(j + 1, k2 + 1))
        effective = reduction.effective_demands[j]
        for theta, receiver in enumerate(plan.lambdas[j], start=1):
            m_theta = plan.sets[j][theta]
            if m_theta != effective:
                b.add(j, receiver, b.inputs(later | m_theta), f"{label}[j={j},theta={theta}]")
        previous = plan.position_of(j, j - 1)
        if plan.sets[j][previous] == effective:
            b.add(j, j - 1, b.inputs(b.demand(range(j, k2 + 1))), f"{label}[j={j},previous]")


def _pairwise(b: _Builder) -> None:
    k2 = b.topology.k2
    for j in range(2, k2 + 1):
        cond = b.inputs(b.demand(range(j + 1, k2 + 1)))
        for l in range(1, j):
            b.add(j, l, cond, f"COR2[j={j},l={l}]")


def _schedule(b: _Builder, schedule: OrderingSchedule) -> None:
    k2 = b.topology.k2
    lam = schedule.receiver
    cuts = schedule.cuts
    tag = ",".join(str(r) for r in schedule.order)

    def tail(position: int) -> FrozenSet[int]:
        return b.inputs(b.demand(lam(p) for p in range(position, k2 + 1)))

    for omega in range(1, cuts[0]):
        b.add(lam(omega), lam(omega + 1), tail(omega + 1), f"T8[{tag}]first[{omega}]", with_u=False)
    for theta in range(len(cuts) - 1):
        start = cuts[theta]
        for omega in range(1, cuts[theta + 1] - start):
            cond = tail(start + omega + 1)
            b.add(lam(start + omega), lam(start + omega + 1), cond,
                  f"T8[{tag}]group{theta + 2}[{omega}]", extra=tail(start + 1) - cond)
    for theta in range(1, len(cuts)):
        b.add(lam(cuts[theta]), lam(cuts[theta - 1]), tail(cuts[theta - 1] + 1), f"T8[{tag}]cut[{theta + 1}]")


def _grouped(b: _Builder, grouping: ReceiverGrouping, label: str, family: Family) -> None:
    blocks = grouping.blocks
    for j in range(1, len(blocks)):
        cond = b.inputs(b.demand(r for block in blocks[j:] for r in block))
        b.add(blocks[j], blocks[j - 1], cond, f"{label}[{j + 1}]", family=family)


def _lemma5(b: _Builder, params: Dict) -> None:
    try:
        a, bb = int(params["a"]), int(params["b"])
    except (KeyError, TypeError, ValueError):
        raise BadParamsError("L5 needs integer receivers 'a' and 'b'")
    topo = b.topology
    if not (1 <= a <= topo.k2 and 1 <= bb <= topo.k2) or a == bb:
        raise BadParamsError(f"L5 receivers must be distinct in 1..{topo.k2}")
    c = topo.check_ids(str(m) for m in params.get("c", []))
    cond = b.inputs(b.demand([bb]) | c)
    everything = b.inputs(b.demand([a, bb]) | c)
    if everything == frozenset(topo.transmitters):
        b.add(a, bb, cond, "L5", with_u=False)
    else:
        b.add(a, bb, cond, "L5", extra=everything - cond)


def _strong_interference3(b: _Builder) -> None:
    if b.topology.k2 != 3:
        raise BadParamsError(f"SI3 applies to three-receiver networks, got K2={b.topology.k2}")
    cond = b.inputs(b.demand([1]))
    b.add(2, 1, cond, "SI3[a]", extra=b.inputs(b.demand([2])) - cond)
    b.add(3, 1, b.inputs(b.demand([1, 2])), "SI3[b]", with_u=False)


def build_condition_set(topology: NetworkTopology, connectivity: Optional[ConnectivityReport],
                        reduction: Optional[ReductionResult], theorem_id: str,
                        params: Optional[Dict] = None) -> List[LessNoisyQuery]:
    """
    Less-noisy queries of a theorem

    Args:
        topology: Network topology, receivers in less-noisy order
        connectivity: Connectivity report (T3/T7 permutation sets)
        reduction: Reduction result (T3/T7 effective demands)
        theorem_id: One of CONDITION_IDS
        params: lambdas, schedule(s)/cuts, grouping, a/b/c (L5), u_cap

    Returns:
        Queries in emission order, duplicates removed
    """
    params = params or {}
    which = theorem_id.upper()
    b = _Builder(topology, params)

    if which in ("T2A", "T2B", "T4"):
        _two_receiver(topology, which)
        if which in ("T2A", "T4"):
            _t2a(b)
        if which in ("T2B", "T4"):
            _t2b(b)
    elif which in ("T3", "T7"):
        if which == "T3":
            _two_receiver(topology, which)
        if connectivity is None or reduction is None:
            raise BadParamsError(f"{which} needs the connectivity report and the reduction")
        plan = lambda_sets(reduction, connectivity, PermutationPlan.from_params(topology.k2, params.get("lambdas")))
        _permutation(b, plan, reduction, which)
    elif which == "T5":
        _chain(b, which, Family.PRODUCT)
    elif which == "T6":
        _chain(b, which, Family.THEOREM6)
    elif which == "COR2":
        _pairwise(b)
    elif which == "T8":
        for schedule in schedules_from_params(topology.k2, params):
            _schedule(b, schedule)
    elif which == "T9":
        _grouped(b, ReceiverGrouping.from_params(topology.k2, params.get("grouping")), which, Family.PRODUCT)
    elif which in ("M2O", "M2O_WEAK"):
        grouping = ReceiverGrouping.from_params(topology.k2, params.get("grouping") or many_to_one_grouping(topology.k2))
        family = Family.THEOREM6 if which == "M2O_WEAK" else Family.PRODUCT
        _grouped(b, grouping, which, family)
    elif which == "L5":
        _lemma5(b, params)
    elif which == "SI3":
        _strong_interference3(b)
    else:
        raise BadParamsError(f"unknown theorem id '{theorem_id}' (expected one of {', '.join(CONDITION_IDS)})")
    return b.queries


def permutation_condition_sets(topology: NetworkTopology, connectivity: ConnectivityReport,
                               reduction: ReductionResult, params: Optional[Dict] = None
                               ) -> List[Tuple[PermutationPlan, List[LessNoisyQuery]]]:
    """Condition sets of every permutation plan, for the sweep_lambdas option"""
    out = []
    for plan in all_permutation_plans(topology.k2, int((params or {}).get("max_receiver", 4))):
        raw = {str(j): list(p) for j, p in plan.lambdas.items()}
        out.append((plan, build_condition_set(topology, connectivity, reduction, "T7",
                                              {**(params or {}), "lambdas": raw})))
    return out


# ---------------------------------------------------------------------------
# Argmax comparisons


@dataclass(frozen=True)
class CmiComparison:
    """lhs <= rhs, both single CMI atoms"""

    lhs: Atom
    rhs: Atom
    label: str = ""

    def reversed(self, label: str = "") -> "CmiComparison":
        return CmiComparison(self.rhs, self.lhs, label or self.label)

    def __str__(self) -> str:
        return f"{self.lhs} <= {self.rhs}"


def _atom(a: Iterable[str], receiver: int, given: Iterable[str] = ()) -> Atom:
    return Atom.of(a, {output_name(receiver)}, set(given) | {Q_NAME})


def main_argmax_comparisons(topology: NetworkTopology, reduction: ReductionResult
                            ) -> Tuple[List[CmiComparison], Dict[str, List[CmiComparison]]]:
    """
    Decoding-at-Y1-is-cheaper comparisons for a two-receiver network

    One comparison I(m;Y2|Q) <= I(m;Y1|M*_Y2 - {m},Q) per starred message m.

    Returns:
        (primary, alternatives); primary is empty when M*_Y2 has at most one
        message, in which case no argmax check is needed. The alternatives hold
        every comparison reversed ("both_reversed" for two messages, "all_reversed"
        otherwise) and, for two messages, the one-reversed patterns.
    """
    _two_receiver(topology, "argmax comparisons")
    if reduction.m_star_per_receiver is None:
        raise BadParamsError("argmax comparisons need the starred reduction")
    shared = sorted_ids(reduction.m_star_per_receiver[2])
    if len(shared) <= 1:
        return [], {}
    primary = [
        CmiComparison(_atom({m}, 2), _atom({m}, 1, set(shared) - {m}), f"{m}@Y1")
        for m in shared
    ]
    reversed_all = [c.reversed(f"{m}@Y2") for m, c in zip(shared, primary)]
    if len(shared) > 2:
        return primary, {"all_reversed": reversed_all}
    a, b = shared
    alternatives = {
        "both_reversed": reversed_all,
        f"reversed_{b}": [
            reversed_all[1],
            CmiComparison(_atom({a}, 1), _atom({a}, 2, {b}), f"{a}@Y2|{b}"),
        ],
        f"reversed_{a}": [
            reversed_all[0],
            CmiComparison(_atom({b}, 1), _atom({b}, 2, {a}), f"{b}@Y2|{a}"),
        ],
    }
    return primary, alternatives


def cic3_relaxation_comparisons() -> List[CmiComparison]:
    """Relaxation inequalities of the three-user CIC, stated on the inputs"""
    return [
        CmiComparison(_atom({"X2"}, 1, {"X3"}), _atom({"X2"}, 2, {"X3"}), "X2@Y2|X3"),
        CmiComparison(_atom({"X3"}, 1), _atom({"X3"}, 2), "X3@Y2"),
    ]


def _atom_value(backend, atom: Atom, mapping: Optional[Dict[str, str]]) -> float:
    return backend.atom_value(atom.substitute(mapping) if mapping else atom)


def _holds_everywhere(comparisons: Sequence[CmiComparison], backends: Sequence, tolerance: float,
                      mapping: Optional[Dict[str, str]]) -> Tuple[bool, float, int]:
    worst, where = -np.inf, -1
    for k, backend in enumerate(backends):
        for comparison in comparisons:
            gap = _atom_value(backend, comparison.lhs, mapping) - _atom_value(backend, comparison.rhs, mapping)
            if gap > worst:
                worst, where = gap, k
    return worst <= tolerance, float(worst), where


def check_argmax_conditions(inequalities: Sequence[CmiComparison], argmax_set: Sequence,
                            tolerance: float = GAP_TOLERANCE,
                            alternatives: Optional[Dict[str, Sequence[CmiComparison]]] = None,
                            mapping: Optional[Dict[str, str]] = None) -> ConditionVerdict:
    """
    Check comparisons at every member of an argmax set

    Args:
        inequalities: Primary comparisons lhs <= rhs
        argmax_set: Evaluation backends (anything with atom_value), one per optimizer
        tolerance: Slack allowed on every comparison
        alternatives: Named alternative certificates, each a list of comparisons
        mapping: Optional message-to-input substitution applied before evaluation

    Returns:
        HOLDS when every primary comparison holds at every member, VIOLATED otherwise;
        alternative_holds reports each alternative separately
    """
    if not argmax_set:
        raise EmptyArgmaxError("argmax set is empty")
    ok, worst, where = _holds_everywhere(inequalities, argmax_set, tolerance, mapping)
    alt = {
        name: _holds_everywhere(comps, argmax_set, tolerance, mapping)[0]
        for name, comps in (alternatives or {}).items()
    }
    if not inequalities:
        worst = 0.0
    status = Status.HOLDS if ok else Status.VIOLATED
    return ConditionVerdict(
        status=status,
        certificate={"comparisons": [str(c) for c in inequalities], "members": len(argmax_set)} if ok else None,
        witness=None if ok else {"member": where, "gap": worst},
        best_gap=worst,
        alternative_holds=alt,
    )
