"""Network Model Module - Message topologies, channels and connectivity analysis"""

import re
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from rich.console import Console

from src.errors import DimensionMismatchError, UnknownMessageError

console = Console(stderr=True)

CONNECTIVITY_THRESHOLD = 1e-12
SLICE_TOLERANCE = 1e-12

# names the probability engine reserves for Q, U, inputs and outputs
RESERVED_NAME = re.compile(r"^(Q|U|[XY]\d+)$")


@dataclass(frozen=True)
class MessageLabel:
    """Transmitter set delta that knows a message and receiver set nabla that decodes it"""

    delta: FrozenSet[int]
    nabla: FrozenSet[int]

    @classmethod
    def of(cls, delta: Iterable[int], nabla: Iterable[int]) -> "MessageLabel":
        return cls(frozenset(int(i) for i in delta), frozenset(int(j) for j in nabla))

    def problems(self, k1: int, k2: int) -> List[str]:
        issues = []
        if not self.delta:
            issues.append("empty transmitter set")
        if not self.nabla:
            issues.append("empty receiver set")
        bad_tx = sorted(i for i in self.delta if not 1 <= i <= k1)
        bad_rx = sorted(j for j in self.nabla if not 1 <= j <= k2)
        if bad_tx:
            issues.append(f"transmitter index out of range {bad_tx}")
        if bad_rx:
            issues.append(f"receiver index out of range {bad_rx}")
        return issues

    def __str__(self) -> str:
        tx = ",".join(str(i) for i in sorted(self.delta))
        rx = ",".join(str(j) for j in sorted(self.nabla))
        return f"M_{{{tx}}}^{{{rx}}}"


@dataclass(frozen=True)
class Message:
    id: str
    label: MessageLabel


@dataclass(frozen=True)
class NetworkTopology:
    """
    K1 transmitters, K2 receivers and the labelled message set

    Derived sets are computed once: knowledge sets per transmitter and demand
    sets per receiver. Receivers are indexed in their intended less-noisy order,
    Y_1 strongest.
    """

    k1: int
    k2: int
    messages: Tuple[Message, ...]
    _known: Dict[int, FrozenSet[str]] = field(init=False, repr=False, compare=False)
    _demanded: Dict[int, FrozenSet[str]] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        known = {i: set() for i in range(1, self.k1 + 1)}
        demanded = {j: set() for j in range(1, self.k2 + 1)}
        for message in self.messages:
            for i in message.label.delta:
                known.setdefault(i, set()).add(message.id)
            for j in message.label.nabla:
                demanded.setdefault(j, set()).add(message.id)
        object.__setattr__(self, "_known", {i: frozenset(s) for i, s in known.items()})
        object.__setattr__(self, "_demanded", {j: frozenset(s) for j, s in demanded.items()})

    @classmethod
    def build(cls, k1: int, k2: int, messages: Iterable[Tuple[str, Iterable[int], Iterable[int]]]) -> "NetworkTopology":
        """Convenience constructor from (id, delta, nabla) triples"""
        return cls(k1, k2, tuple(Message(str(mid), MessageLabel.of(d, n)) for mid, d, n in messages))

    @property
    def message_ids(self) -> Tuple[str, ...]:
        return tuple(m.id for m in self.messages)

    @property
    def all_messages(self) -> FrozenSet[str]:
        return frozenset(self.message_ids)

    @property
    def transmitters(self) -> Tuple[int, ...]:
        return tuple(range(1, self.k1 + 1))

    @property
    def receivers(self) -> Tuple[int, ...]:
        return tuple(range(1, self.k2 + 1))

    def label_of(self, message_id: str) -> MessageLabel:
        for message in self.messages:
            if message.id == message_id:
                return message.label
        raise UnknownMessageError(f"unknown message id '{message_id}'")

    def known_at(self, transmitter: int) -> FrozenSet[str]:
        """M_Xi: messages known at transmitter i"""
        return self._known.get(transmitter, frozenset())

    def demanded_by(self, receiver: int) -> FrozenSet[str]:
        """M_Yj: messages decoded at receiver j"""
        return self._demanded.get(receiver, frozenset())

    def demand_union(self, receivers: Iterable[int]) -> FrozenSet[str]:
        out = frozenset()
        for j in receivers:
            out |= self.demanded_by(j)
        return out

    def knowledge_union(self, transmitters: Iterable[int]) -> FrozenSet[str]:
        out = frozenset()
        for i in transmitters:
            out |= self.known_at(i)
        return out

    def effective_demands(self) -> Dict[int, FrozenSet[str]]:
        """M_Yj minus everything demanded by later receivers"""
        return {
            j: self.demanded_by(j) - self.demand_union(range(j + 1, self.k2 + 1))
            for j in self.receivers
        }

    def check_ids(self, ids: Iterable[str]) -> FrozenSet[str]:
        ids = frozenset(ids)
        unknown = sorted(ids - self.all_messages)
        if unknown:
            raise UnknownMessageError(f"unknown message id(s) {unknown}")
        return ids

    def permute_receivers(self, order: Sequence[int]) -> "NetworkTopology":
        """New receiver j is old receiver order[j-1]"""
        order = _check_order(order, self.k2)
        old_to_new = {old: new for new, old in enumerate(order, start=1)}
        return NetworkTopology(
            self.k1,
            self.k2,
            tuple(
                Message(m.id, MessageLabel(m.label.delta, frozenset(old_to_new[j] for j in m.label.nabla)))
                for m in self.messages
            ),
        )


@dataclass(frozen=True, eq=False)
class DiscreteChannel:
    """Finite-alphabet transition tensor P(y_1..y_K2 | x_1..x_K1), inputs first"""

    input_alphabets: Tuple[int, ...]
    output_alphabets: Tuple[int, ...]
    transition: np.ndarray
    kind: str = "discrete"

    @property
    def k1(self) -> int:
        return len(self.input_alphabets)

    @property
    def k2(self) -> int:
        return len(self.output_alphabets)

    def slice_problems(self, tolerance: float = SLICE_TOLERANCE) -> List[str]:
        expected = tuple(self.input_alphabets) + tuple(self.output_alphabets)
        if self.transition.shape != expected:
            return [f"transition shape {self.transition.shape} does not match alphabets {expected}"]
        issues = []
        if np.any(self.transition < 0):
            issues.append("transition has negative entries")
        out_axes = tuple(range(self.k1, self.k1 + self.k2))
        sums = self.transition.sum(axis=out_axes)
        for x in zip(*np.nonzero(np.abs(sums - 1.0) > tolerance)):
            issues.append(f"transition row {list(map(int, x))} sums to {float(sums[x]):.12g}")
        return issues

    def receiver_marginal(self, receivers: Sequence[int]) -> np.ndarray:
        """P(y_R | x) keeping one axis per listed receiver, in the listed order"""
        keep = [self.k1 + j - 1 for j in receivers]
        drop = tuple(self.k1 + j for j in range(self.k2) if self.k1 + j not in keep)
        marginal = self.transition.sum(axis=drop) if drop else self.transition
        remaining = [ax for ax in range(self.k1, self.k1 + self.k2) if ax not in drop]
        perm = list(range(self.k1)) + [self.k1 + remaining.index(ax) for ax in keep]
        return np.transpose(marginal, perm)

    def permute_receivers(self, order: Sequence[int]) -> "DiscreteChannel":
        order = _check_order(order, self.k2)
        perm = list(range(self.k1)) + [self.k1 + old - 1 for old in order]
        return DiscreteChannel(
            self.input_alphabets,
            tuple(self.output_alphabets[old - 1] for old in order),
            np.transpose(self.transition, perm).copy(),
        )


@dataclass(frozen=True, eq=False)
class GaussianChannel:
    """Y_j = sum_i a_ji X_i + Z_j with unit noise and power P_i at transmitter i"""

    gains: np.ndarray
    powers: np.ndarray
    kind: str = "gaussian"

    @property
    def k1(self) -> int:
        return self.gains.shape[1]

    @property
    def k2(self) -> int:
        return self.gains.shape[0]

    def permute_receivers(self, order: Sequence[int]) -> "GaussianChannel":
        order = _check_order(order, self.k2)
        return GaussianChannel(self.gains[[old - 1 for old in order], :].copy(), self.powers.copy())

    def scaled(self, factor: float) -> "GaussianChannel":
        return GaussianChannel(self.gains, self.powers * float(factor))


Channel = Union[DiscreteChannel, GaussianChannel]


@dataclass(frozen=True)
class ReceiverConnectivity:
    connected_transmitters: FrozenSet[int]
    unconnected_transmitters: FrozenSet[int]
    unconnected_messages: FrozenSet[str]
    connected_messages: FrozenSet[str]


@dataclass(frozen=True)
class ConnectivityReport:
    receivers: Dict[int, ReceiverConnectivity]

    def unconnected_messages(self, receiver: int) -> FrozenSet[str]:
        return self.receivers[receiver].unconnected_messages

    def unconnected_transmitters(self, receiver: int) -> FrozenSet[int]:
        return self.receivers[receiver].unconnected_transmitters

    def is_fully_connected(self) -> bool:
        return all(not r.unconnected_transmitters for r in self.receivers.values())

    def to_dict(self) -> Dict[str, Dict[str, List]]:
        return {
            str(j): {
                "connected_transmitters": sorted(r.connected_transmitters),
                "unconnected_transmitters": sorted(r.unconnected_transmitters),
                "unconnected_messages": sorted(r.unconnected_messages),
                "connected_messages": sorted(r.connected_messages),
            }
            for j, r in sorted(self.receivers.items())
        }


@dataclass
class ValidationResult:
    ok: bool
    violations: List[str]


def _check_order(order: Sequence[int], k2: int) -> List[int]:
    order = [int(j) for j in order]
    if sorted(order) != list(range(1, k2 + 1)):
        raise DimensionMismatchError(f"receiver order {order} is not a permutation of 1..{k2}")
    return order


def check_dimensions(topology: NetworkTopology, channel: Channel) -> None:
    if channel.k1 != topology.k1 or channel.k2 != topology.k2:
        raise DimensionMismatchError(
            f"channel is {channel.k1}x{channel.k2} (transmitters x receivers) "
            f"but the topology declares {topology.k1}x{topology.k2}"
        )


def _discrete_links(channel: DiscreteChannel, threshold: float) -> np.ndarray:
    """Boolean k2 x k1 matrix; True when some fixing of the other inputs lets x_i move P(y_j|x)"""
    links = np.zeros((channel.k2, channel.k1), dtype=bool)
    for j in range(1, channel.k2 + 1):
        marginal = channel.receiver_marginal([j])
        for i in range(channel.k1):
            moved = np.moveaxis(marginal, i, 0)
            total_variation = 0.5 * np.abs(moved - moved[0:1]).sum(axis=-1)
            links[j - 1, i] = bool(total_variation.max(initial=0.0) > threshold)
    return links


def link_matrix(channel: Channel, threshold: float = CONNECTIVITY_THRESHOLD) -> np.ndarray:
    if channel.kind == "gaussian":
        return np.abs(channel.gains) > threshold
    return _discrete_links(channel, threshold)


def connectivity(topology: NetworkTopology, channel: Channel,
                 threshold: float = CONNECTIVITY_THRESHOLD) -> ConnectivityReport:
    """
    Connected and unconnected transmitters and messages for every receiver

    Args:
        topology: Network message topology
        channel: Discrete or Gaussian channel with matching dimensions
        threshold: Gain magnitude (Gaussian) or total variation (discrete) below
            which a transmitter counts as unconnected

    Returns:
        ConnectivityReport; unconnected messages are those known at unconnected
        transmitters and at no connected one
    """
    check_dimensions(topology, channel)
    links = link_matrix(channel, threshold)
    receivers = {}
    for j in topology.receivers:
        connected = frozenset(i for i in topology.transmitters if links[j - 1, i - 1])
        unconnected = frozenset(topology.transmitters) - connected
        connected_msgs = topology.knowledge_union(connected)
        receivers[j] = ReceiverConnectivity(
            connected_transmitters=connected,
            unconnected_transmitters=unconnected,
            unconnected_messages=topology.knowledge_union(unconnected) - connected_msgs,
            connected_messages=connected_msgs,
        )
    return ConnectivityReport(receivers)


def validate_topology(topology: NetworkTopology, channel: Optional[Channel] = None,
                      threshold: float = CONNECTIVITY_THRESHOLD) -> ValidationResult:
    """Collect every violated structural invariant; violations are returned, not raised"""
    violations = []
    ids = topology.message_ids
    duplicates = sorted({mid for mid in ids if ids.count(mid) > 1})
    if duplicates:
        violations.append(f"duplicate message ids {duplicates}")
    for mid in ids:
        if RESERVED_NAME.match(mid):
            violations.append(f"message id '{mid}' clashes with a reserved variable name")

    seen = {}
    for message in topology.messages:
        for issue in message.label.problems(topology.k1, topology.k2):
            violations.append(f"message {message.id}: {issue}")
        key = (message.label.delta, message.label.nabla)
        if key in seen:
            violations.append(f"messages {seen[key]} and {message.id} share the label {message.label}")
        seen.setdefault(key, message.id)

    all_msgs = topology.all_messages
    for mid in sorted(all_msgs - topology.knowledge_union(topology.transmitters)):
        violations.append(f"knowledge union: message {mid} is known at no transmitter")
    for mid in sorted(all_msgs - topology.demand_union(topology.receivers)):
        violations.append(f"demand union: message {mid} is demanded by no receiver")

    if channel is not None:
        try:
            report = connectivity(topology, channel, threshold)
        except DimensionMismatchError as e:
            violations.append(str(e))
        else:
            for j in topology.receivers:
                stranded = topology.demanded_by(j) & report.unconnected_messages(j)
                for mid in sorted(stranded):
                    violations.append(
                        f"message {mid} demanded by receiver {j} is known only at transmitters unconnected to it"
                    )

    return ValidationResult(ok=not violations, violations=violations)


def inputs_for(topology: NetworkTopology, omega: Iterable[str]) -> FrozenSet[int]:
    """X_omega: transmitters whose whole knowledge set lies inside omega"""
    omega = topology.check_ids(omega)
    return frozenset(i for i in topology.transmitters if topology.known_at(i) <= omega)


def sorted_ids(ids: Iterable[str]) -> List[str]:
    """Message ids in natural order (M2 before M10)"""
    return sorted(ids, key=lambda s: [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", s)])
