"""Info Measures Module - Joint pmfs, conditional mutual information and the CK identity"""

from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from rich.console import Console

from src.errors import BadParamsError, CapExceededError, DimensionMismatchError
from src.network_model import DiscreteChannel, NetworkTopology, sorted_ids

console = Console(stderr=True)

PMF_TOLERANCE = 1e-12
MAX_JOINT_CELLS = 2 ** 20

Q_NAME = "Q"
U_NAME = "U"


def input_name(i: int) -> str:
    return f"X{i}"


def output_name(j: int) -> str:
    return f"Y{j}"


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str  # q | message | input | output | aux
    size: int


class JointPmf:
    """Dense probability tensor with one named axis per variable"""

    def __init__(self, variables: Sequence[Variable], tensor: np.ndarray, tolerance: float = PMF_TOLERANCE):
        """
        Initialize joint pmf

        Args:
            variables: Roster, one entry per tensor axis
            tensor: Nonnegative array summing to one
            tolerance: Allowed deviation of the total mass from one
        """
        self.variables = tuple(variables)
        self.tensor = np.asarray(tensor, dtype=float)
        shape = tuple(v.size for v in self.variables)
        if self.tensor.shape != shape:
            raise DimensionMismatchError(f"tensor shape {self.tensor.shape} does not match roster {shape}")
        if np.any(self.tensor < 0):
            raise BadParamsError("joint pmf has negative entries")
        total = float(self.tensor.sum())
        if abs(total - 1.0) > tolerance:
            raise BadParamsError(f"joint pmf sums to {total:.15g}")
        self._axis = {v.name: k for k, v in enumerate(self.variables)}
        if len(self._axis) != len(self.variables):
            raise BadParamsError("duplicate variable names in roster")
        self._entropy_cache: Dict[FrozenSet[str], float] = {}

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def has(self, name: str) -> bool:
        return name in self._axis

    def size_of(self, name: str) -> int:
        return self.variables[self._axis[name]].size

    def _axes(self, names: Iterable[str]) -> List[int]:
        axes = []
        for name in names:
            if name not in self._axis:
                raise BadParamsError(f"unknown variable '{name}'")
            axes.append(self._axis[name])
        return axes

    def marginal(self, names: Sequence[str]) -> np.ndarray:
        """Marginal tensor with axes in the order of `names`"""
        keep = self._axes(names)
        drop = tuple(k for k in range(self.tensor.ndim) if k not in keep)
        reduced = self.tensor.sum(axis=drop) if drop else self.tensor
        order = sorted(keep)
        return np.transpose(reduced, [order.index(k) for k in keep])

    def entropy(self, names: Iterable[str]) -> float:
        key = frozenset(names)
        if not key:
            return 0.0
        if key not in self._entropy_cache:
            p = self.marginal(sorted(key)).ravel()
            nz = p[p > 0]
            self._entropy_cache[key] = float(-np.sum(nz * np.log2(nz)))
        return self._entropy_cache[key]

    def to_dict(self) -> Dict:
        return {
            "variables": [{"name": v.name, "kind": v.kind, "size": v.size} for v in self.variables],
            "tensor": self.tensor.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "JointPmf":
        variables = [Variable(v["name"], v["kind"], int(v["size"])) for v in data["variables"]]
        return cls(variables, np.asarray(data["tensor"], dtype=float), tolerance=1e-9)


def cond_mutual_information(joint: JointPmf, a: Iterable[str], b: Iterable[str], c: Iterable[str] = ()) -> float:
    """
    I(A;B|C) in bits, with 0 log 0 = 0

    Args:
        joint: Joint pmf holding every named variable
        a, b, c: Pairwise disjoint variable-name sets

    Returns:
        Nonnegative conditional mutual information
    """
    a, b, c = frozenset(a), frozenset(b), frozenset(c)
    if a & b or a & c or b & c:
        raise BadParamsError(f"overlapping variable sets {sorted(a)}, {sorted(b)}, {sorted(c)}")
    joint._axes(a | b | c)
    if not a or not b:
        return 0.0
    value = joint.entropy(a | c) + joint.entropy(b | c) - joint.entropy(a | b | c) - joint.entropy(c)
    return max(value, 0.0)


@dataclass(eq=False)
class EncoderSpec:
    """
    Time-sharing pmf, independent message pmfs and deterministic encoders

    encoders[i] is an integer array indexed by the values of the messages known at
    transmitter i (natural id order) followed by the value of Q; its entries are
    input symbols of X_i.
    """

    q_pmf: np.ndarray
    message_pmfs: Dict[str, np.ndarray]
    encoders: Dict[int, np.ndarray]

    def message_sizes(self) -> Dict[str, int]:
        return {mid: len(p) for mid, p in self.message_pmfs.items()}

    def validate(self, topology: NetworkTopology, channel: DiscreteChannel) -> None:
        pmfs = [("Q", self.q_pmf)] + list(self.message_pmfs.items())
        for name, pmf in pmfs:
            pmf = np.asarray(pmf, dtype=float)
            if pmf.ndim != 1 or np.any(pmf < 0) or abs(pmf.sum() - 1.0) > PMF_TOLERANCE:
                raise BadParamsError(f"pmf of {name} is not normalized")
        missing = sorted(topology.all_messages - set(self.message_pmfs))
        if missing:
            raise DimensionMismatchError(f"no pmf for messages {missing}")
        sizes = self.message_sizes()
        for i in topology.transmitters:
            enc = self.encoders.get(i)
            args = sorted_ids(topology.known_at(i))
            expected = tuple(sizes[m] for m in args) + (len(self.q_pmf),)
            if enc is None or np.shape(enc) != expected:
                raise DimensionMismatchError(f"encoder of X{i} must have shape {expected}")
            if np.any(enc < 0) or np.any(enc >= channel.input_alphabets[i - 1]):
                raise DimensionMismatchError(f"encoder of X{i} leaves the input alphabet")

    def to_dict(self) -> Dict:
        return {
            "q_pmf": np.asarray(self.q_pmf).tolist(),
            "message_pmfs": {m: np.asarray(p).tolist() for m, p in sorted(self.message_pmfs.items())},
            "encoders": {f"X{i}": np.asarray(e).tolist() for i, e in sorted(self.encoders.items())},
        }


def network_roster(topology: NetworkTopology, channel: DiscreteChannel, q_size: int,
                   message_sizes: Dict[str, int]) -> List[Variable]:
    roster = [Variable(Q_NAME, "q", q_size)]
    roster += [Variable(mid, "message", message_sizes[mid]) for mid in topology.message_ids]
    roster += [Variable(input_name(i), "input", channel.input_alphabets[i - 1]) for i in topology.transmitters]
    roster += [Variable(output_name(j), "output", channel.output_alphabets[j - 1]) for j in topology.receivers]
    return roster


def induced_joint(topology: NetworkTopology, channel: DiscreteChannel, encoder: EncoderSpec,
                  max_cells: int = MAX_JOINT_CELLS) -> JointPmf:
    """
    Joint pmf of (Q, messages, inputs, outputs) induced by an encoder spec

    P(q, m, x, y) = P(q) prod_k P(m_k) 1[x = f(m, q)] P(y | x)
    """
    encoder.validate(topology, channel)
    sizes = encoder.message_sizes()
    roster = network_roster(topology, channel, len(encoder.q_pmf), sizes)
    cells = int(np.prod([v.size for v in roster], dtype=object))
    if cells > max_cells:
        raise CapExceededError(f"joint pmf needs {cells} cells (cap {max_cells})", estimate=cells)

    head = [len(encoder.q_pmf)] + [sizes[m] for m in topology.message_ids]
    grid = np.indices(head)
    p_head = np.asarray(encoder.q_pmf, dtype=float)
    for mid in topology.message_ids:
        p_head = np.multiply.outer(p_head, np.asarray(encoder.message_pmfs[mid], dtype=float))

    position = {mid: k + 1 for k, mid in enumerate(topology.message_ids)}
    x_index = []
    for i in topology.transmitters:
        args = tuple(grid[position[m]] for m in sorted_ids(topology.known_at(i))) + (grid[0],)
        x_index.append(np.asarray(encoder.encoders[i])[args])

    outputs = channel.transition[tuple(x_index)]
    tensor = np.zeros([v.size for v in roster])
    tensor[tuple(grid) + tuple(x_index)] = p_head.reshape(p_head.shape + (1,) * channel.k2) * outputs
    return JointPmf(roster, tensor, tolerance=1e-9)


def random_pmf(rng: np.random.Generator, shape: Sequence[int], concentration: float = 1.0) -> np.ndarray:
    """Dirichlet-distributed pmf over a tensor of the given shape"""
    size = int(np.prod(shape))
    return rng.dirichlet(np.full(size, concentration)).reshape(tuple(shape))


def sequence_joint(rng: np.random.Generator, n: int, alphabet_a: int, alphabet_b: int,
                   side: Optional[int] = None, concentration: float = 1.0) -> JointPmf:
    """Random joint of Y_A^n, Y_B^n (named A1..An, B1..Bn) and optional side variable S"""
    roster = [Variable(f"A{t}", "output", alphabet_a) for t in range(1, n + 1)]
    roster += [Variable(f"B{t}", "output", alphabet_b) for t in range(1, n + 1)]
    if side:
        roster.append(Variable("S", "aux", side))
    return JointPmf(roster, random_pmf(rng, [v.size for v in roster], concentration), tolerance=1e-9)


def ck_identity_residual(joint: JointPmf, n: int, a_prefix: str = "A", b_prefix: str = "B",
                         side: Optional[str] = None) -> float:
    """
    Residual of the Csiszar-Korner sum identity for two length-n sequences

    |sum_t I(B_{t+1..n}; A_t | A^{t-1}, S) - sum_t I(A^{t-1}; B_t | B_{t+1..n}, S)|
    """
    if n < 1:
        raise BadParamsError("sequence length must be at least 1")
    s = [side] if side else []
    a = [f"{a_prefix}{t}" for t in range(1, n + 1)]
    b = [f"{b_prefix}{t}" for t in range(1, n + 1)]
    forward = sum(cond_mutual_information(joint, b[t:], [a[t - 1]], a[:t - 1] + s) for t in range(1, n + 1))
    backward = sum(cond_mutual_information(joint, a[:t - 1], [b[t - 1]], b[t:] + s) for t in range(1, n + 1))
    return abs(forward - backward)
