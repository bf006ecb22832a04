"""Grid Search Module - Exhaustive encoder and simplex-grid maximization of sum-rate expressions"""

from dataclasses import dataclass, field
from multiprocessing.pool import ThreadPool
from typing import Dict, Iterator, List, Sequence

import numpy as np
from rich.console import Console
from rich.progress import track

from src.errors import CapExceededError, EmptyArgmaxError
from src.info_measures import MAX_JOINT_CELLS, EncoderSpec, induced_joint
from src.network_model import DiscreteChannel, NetworkTopology, sorted_ids
from src.rates import DiscreteBackend, SumRateExpression, eval_expression

console = Console(stderr=True)

BLOCK_SIZE = 512


@dataclass
class SearchCaps:
    """Grid resolution, cardinalities and enumeration limits"""

    grid: int = 16
    q_card: int = 1
    max_evaluations: int = 250_000
    max_cells: int = MAX_JOINT_CELLS
    jobs: int = 1
    argmax_tolerance: float = 1e-6
    max_argmax: int = 32
    message_cards: Dict[str, int] = field(default_factory=dict)
    quiet: bool = False


def simplex_grid(size: int, resolution: int) -> np.ndarray:
    """All pmfs over `size` symbols with entries in multiples of 1/resolution"""
    def compositions(total: int, parts: int) -> Iterator[List[int]]:
        if parts == 1:
            yield [total]
            return
        for first in range(total, -1, -1):
            for rest in compositions(total - first, parts - 1):
                yield [first] + rest

    return np.array(list(compositions(resolution, size)), dtype=float) / resolution


class GridSpace:
    """
    Mixed-radix index space over (Q pmf, message pmfs, deterministic encoders)

    Point k decodes to one EncoderSpec; the encoder digits vary fastest so
    neighbouring indices share their pmfs.
    """

    def __init__(self, topology: NetworkTopology, channel: DiscreteChannel, caps: SearchCaps):
        self.topology = topology
        self.channel = channel
        self.caps = caps
        self.cards = {}
        for mid in topology.message_ids:
            default = max(channel.input_alphabets[i - 1] for i in topology.label_of(mid).delta)
            self.cards[mid] = int(caps.message_cards.get(mid, default))
        self.q_points = simplex_grid(caps.q_card, caps.grid)
        self.msg_points = {mid: simplex_grid(self.cards[mid], caps.grid) for mid in topology.message_ids}
        self.args = {i: sorted_ids(topology.known_at(i)) for i in topology.transmitters}
        self.shapes = {
            i: tuple(self.cards[m] for m in self.args[i]) + (caps.q_card,) for i in topology.transmitters
        }
        self.alphabets = {i: channel.input_alphabets[i - 1] for i in topology.transmitters}

        radices = [len(self.q_points)] + [len(self.msg_points[m]) for m in topology.message_ids]
        for i in topology.transmitters:
            radices.append(self.alphabets[i] ** int(np.prod(self.shapes[i])))
        self.radices = radices
        self.size = 1
        for r in radices:
            self.size *= int(r)
        if self.size > caps.max_evaluations:
            raise CapExceededError(
                f"grid search needs {self.size} evaluations (cap {caps.max_evaluations})", estimate=self.size
            )
        cells = caps.q_card
        for mid in topology.message_ids:
            cells *= self.cards[mid]
        for size in list(channel.input_alphabets) + list(channel.output_alphabets):
            cells *= size
        if cells > caps.max_cells:
            raise CapExceededError(f"joint pmf needs {cells} cells (cap {caps.max_cells})", estimate=cells)

    def _encoder(self, i: int, choice: int) -> np.ndarray:
        shape = self.shapes[i]
        base = self.alphabets[i]
        digits = []
        for _ in range(int(np.prod(shape))):
            digits.append(choice % base)
            choice //= base
        return np.array(digits, dtype=int).reshape(shape)

    def point(self, index: int) -> EncoderSpec:
        digits = []
        for radix in reversed(self.radices):
            digits.append(index % radix)
            index //= radix
        digits.reverse()
        q_choice, rest = digits[0], digits[1:]
        n_msg = len(self.topology.message_ids)
        message_pmfs = {
            mid: self.msg_points[mid][rest[k]] for k, mid in enumerate(self.topology.message_ids)
        }
        encoders = {
            i: self._encoder(i, rest[n_msg + k]) for k, i in enumerate(self.topology.transmitters)
        }
        return EncoderSpec(self.q_points[q_choice], message_pmfs, encoders)


@dataclass
class GridResult:
    value: float
    argmax: List[EncoderSpec]
    argmax_indices: List[int]
    argmax_truncated: bool
    evaluations: int
    values: np.ndarray

    def to_dict(self) -> Dict:
        return {
            "value": self.value,
            "argmax": [spec.to_dict() for spec in self.argmax[:1]],
            "argmax_count": len(self.argmax_indices),
            "argmax_truncated": self.argmax_truncated,
            "evaluations": self.evaluations,
            "certification": "grid-certified only",
        }


def _evaluate_block(space: GridSpace, expressions: Sequence[SumRateExpression], start: int, stop: int) -> np.ndarray:
    out = np.zeros((stop - start, len(expressions)))
    for row, index in enumerate(range(start, stop)):
        joint = induced_joint(space.topology, space.channel, space.point(index), space.caps.max_cells)
        backend = DiscreteBackend(joint)
        for col, expr in enumerate(expressions):
            out[row, col] = eval_expression(expr, backend).value
    return out


def grid_values(topology: NetworkTopology, channel: DiscreteChannel,
                expressions: Sequence[SumRateExpression], caps: SearchCaps) -> np.ndarray:
    """
    Evaluate several expressions on the same grid

    Args:
        topology: Network topology
        channel: Discrete channel
        expressions: Expressions sharing the grid
        caps: Search caps (grid resolution, |Q|, jobs)

    Returns:
        Array of shape (grid points, expressions); row k belongs to GridSpace.point(k)
    """
    space = GridSpace(topology, channel, caps)
    blocks = [(s, min(s + BLOCK_SIZE, space.size)) for s in range(0, space.size, BLOCK_SIZE)]
    if not caps.quiet:
        console.print(f"[bold]Grid search:[/bold] {space.size:,} points in {len(blocks)} block(s), jobs={caps.jobs}")

    def worker(block):
        return _evaluate_block(space, expressions, *block)

    if caps.jobs > 1:
        pool = ThreadPool(caps.jobs)
        try:
            parts = pool.map(worker, blocks)
        finally:
            pool.close()
            pool.join()
    else:
        iterator = blocks if caps.quiet else track(blocks, description="Evaluating grid...", console=console)
        parts = [worker(block) for block in iterator]
    if not parts:
        return np.zeros((0, len(expressions)))
    return np.vstack(parts)


def argmax_indices(values: np.ndarray, tolerance: float) -> List[int]:
    if values.size == 0:
        raise EmptyArgmaxError("grid is empty")
    best = float(values.max())
    return [int(k) for k in np.nonzero(values >= best - tolerance)[0]]


def grid_result(topology: NetworkTopology, channel: DiscreteChannel, values: np.ndarray,
                caps: SearchCaps) -> GridResult:
    """GridResult of one column of grid_values"""
    indices = argmax_indices(values, caps.argmax_tolerance)
    space = GridSpace(topology, channel, caps)
    kept = indices[: caps.max_argmax]
    return GridResult(
        value=float(values.max()),
        argmax=[space.point(k) for k in kept],
        argmax_indices=indices,
        argmax_truncated=len(indices) > len(kept),
        evaluations=int(values.size),
        values=values,
    )


def brute_force_max(topology: NetworkTopology, channel: DiscreteChannel,
                    expression: SumRateExpression, caps: SearchCaps) -> GridResult:
    """Maximum of an expression over deterministic encoders and the pmf grid"""
    result = grid_result(topology, channel, grid_values(topology, channel, [expression], caps)[:, 0], caps)
    if not caps.quiet:
        console.print(f"[green]✓[/green] Grid maximum {result.value:.6f} bits "
                      f"({len(result.argmax_indices)} point(s) within {caps.argmax_tolerance:g})")
    return result
