"""Falsifier Module - Degradedness certificates and randomized search for less-noisy violations"""

from itertools import product
from multiprocessing.pool import ThreadPool
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from rich.console import Console
from rich.progress import track
from rich.table import Table
from scipy.optimize import nnls

from src.errors import CapExceededError
from src.info_measures import (MAX_JOINT_CELLS, U_NAME, JointPmf, Variable, cond_mutual_information,
                               input_name, output_name, random_pmf)
from src.network_model import DiscreteChannel, NetworkTopology, check_dimensions
from src.ordering import GAP_TOLERANCE, ConditionVerdict, Family, LessNoisyQuery, Status

console = Console(stderr=True)

FEASIBILITY_TOLERANCE = 1e-9
BLOCK_SIZE = 256
CONCENTRATIONS = (1.0, 0.1)


def degrading_matrix(p_strong: np.ndarray, p_weak: np.ndarray) -> Tuple[np.ndarray, float]:
    """
    Row-stochastic T with p_strong @ T = p_weak, found by nonnegative least squares

    Args:
        p_strong: (rows, |Y_s|) conditional pmfs of the stronger output
        p_weak: (rows, |Y_w|) conditional pmfs of the weaker output

    Returns:
        (T of shape (|Y_s|, |Y_w|), residual norm)
    """
    s, w = p_strong.shape[1], p_weak.shape[1]
    # unknowns are T.T.ravel(): y_w major, y_s minor
    a = np.vstack([np.kron(np.eye(w), p_strong), np.kron(np.ones((1, w)), np.eye(s))])
    b = np.concatenate([p_weak.T.ravel(), np.ones(s)])
    t, residual = nnls(a, b)
    return t.reshape(w, s).T, float(residual)


class ConditionFalsifier:
    """Checks less-noisy queries on a discrete channel"""

    def __init__(self, channel: DiscreteChannel, topology: NetworkTopology, seed: int = 0,
                 budget: int = 2000, u_cap: Optional[int] = None, jobs: int = 1,
                 max_cells: int = MAX_JOINT_CELLS, quiet: bool = False):
        """
        Initialize falsifier

        Args:
            channel: Discrete channel
            topology: Topology with matching dimensions
            seed: Root seed of the sampler
            budget: Number of random joints drawn per query
            u_cap: |U| override; a query's own cap wins over this one
            jobs: ThreadPool workers for the sampling blocks
            max_cells: Largest joint tensor allowed
            quiet: Suppress console output
        """
        check_dimensions(topology, channel)
        self.channel = channel
        self.topology = topology
        self.seed = int(seed)
        self.budget = int(budget)
        self.u_cap = u_cap
        self.jobs = max(1, int(jobs))
        self.max_cells = max_cells
        self.quiet = quiet
        self.verdicts: List[ConditionVerdict] = []

    # -- channel views -------------------------------------------------

    def _marginal(self, query: LessNoisyQuery) -> np.ndarray:
        return self.channel.receiver_marginal(list(query.stronger) + list(query.weaker))

    def _slices(self, query: LessNoisyQuery):
        """Yield (conditioned values, P(y_s|x_free), P(y_w|x_free)) per conditioned-input value"""
        k1 = self.channel.k1
        marginal = self._marginal(query)
        n_s = len(query.stronger)
        alph = self.channel.input_alphabets
        out_shape = marginal.shape[k1:]
        s_size = int(np.prod(out_shape[:n_s]))
        w_size = int(np.prod(out_shape[n_s:]))
        cond = sorted(query.conditioned_inputs)
        free = query.free_inputs(k1)
        moved = np.transpose(marginal, [i - 1 for i in cond + free] + list(range(k1, marginal.ndim)))
        rows = int(np.prod([alph[i - 1] for i in free]))
        for values in product(*(range(alph[i - 1]) for i in cond)):
            block = moved[values].reshape(rows, s_size, w_size)
            yield dict(zip((input_name(i) for i in cond), values)), block.sum(axis=2), block.sum(axis=1)

    def sufficiency(self, query: LessNoisyQuery) -> Optional[Dict]:
        """Degrading-matrix certificate, one matrix per conditioned-input value, or None"""
        slices = []
        for values, p_strong, p_weak in self._slices(query):
            matrix, residual = degrading_matrix(p_strong, p_weak)
            if residual > FEASIBILITY_TOLERANCE:
                return None
            slices.append({"conditioned": values, "matrix": matrix.tolist(), "residual": residual})
        return {"kind": "degrading_matrix", "slices": slices}

    # -- sampling ------------------------------------------------------

    def u_cardinality(self, query: LessNoisyQuery) -> int:
        if query.u_cardinality_cap:
            return int(query.u_cardinality_cap)
        if self.u_cap:
            return int(self.u_cap)
        alph = self.channel.input_alphabets
        return int(np.prod([alph[i - 1] for i in query.free_inputs(self.channel.k1)])) + 1

    def roster(self, query: LessNoisyQuery) -> List[Variable]:
        roster = [Variable(U_NAME, "aux", self.u_cardinality(query))] if query.with_u else []
        roster += [Variable(input_name(i), "input", a) for i, a in enumerate(self.channel.input_alphabets, start=1)]
        for j in list(query.stronger) + list(query.weaker):
            roster.append(Variable(output_name(j), "output", self.channel.output_alphabets[j - 1]))
        cells = int(np.prod([v.size for v in roster], dtype=object))
        if cells > self.max_cells:
            raise CapExceededError(f"falsifier joint needs {cells} cells (cap {self.max_cells})", estimate=cells)
        return roster

    def _input_joint(self, rng: np.random.Generator, query: LessNoisyQuery, u: int,
                     concentration: float, independent_u: bool) -> np.ndarray:
        """P(u, x_1..x_K1) of the query's family; the U axis is present only with_u"""
        k1 = self.channel.k1
        alph = self.channel.input_alphabets
        if independent_u:
            # every input independent, U drawn given all of them
            joint = np.ones(())
            for a in alph:
                joint = np.multiply.outer(joint, random_pmf(rng, [a], concentration))
            if not query.with_u:
                return joint
            u_given_x = rng.dirichlet(np.full(u, concentration), size=int(np.prod(alph))).reshape(tuple(alph) + (u,))
            return np.moveaxis(joint[..., None] * u_given_x, -1, 0)

        cond = sorted(query.conditioned_inputs)
        free = query.free_inputs(k1)
        head = ([u] if query.with_u else []) + [alph[i - 1] for i in free]
        joint = random_pmf(rng, head, concentration)
        for i in cond:
            joint = np.multiply.outer(joint, random_pmf(rng, [alph[i - 1]], concentration))
        offset = 1 if query.with_u else 0
        axes_now = free + cond
        order = list(range(offset)) + [offset + axes_now.index(i) for i in range(1, k1 + 1)]
        return np.transpose(joint, order)

    def gap(self, joint: JointPmf, query: LessNoisyQuery) -> Tuple[float, float, float]:
        """(lhs - rhs, lhs, rhs) with lhs on the weaker side"""
        left = query.left_names(self.channel.k1)
        cond = [input_name(i) for i in sorted(query.conditioned_inputs)]
        lhs = cond_mutual_information(joint, left, [output_name(j) for j in query.weaker], cond)
        rhs = cond_mutual_information(joint, left, [output_name(j) for j in query.stronger], cond)
        return lhs - rhs, lhs, rhs

    def _sample_block(self, query: LessNoisyQuery, roster: List[Variable], marginal: np.ndarray,
                      seed: np.random.SeedSequence, count: int) -> Tuple[float, Optional[JointPmf]]:
        rng = np.random.default_rng(seed)
        u = self.u_cardinality(query) if query.with_u else 0
        best, best_joint = -np.inf, None
        for k in range(count):
            concentration = CONCENTRATIONS[k % len(CONCENTRATIONS)]
            # every fourth PRODUCT draw uses the independent-input family, whose witnesses also refute PRODUCT
            independent_u = query.family == Family.THEOREM6 or (query.with_u and k % 4 == 3)
            inputs = self._input_joint(rng, query, u, concentration, independent_u)
            tensor = inputs.reshape(inputs.shape + (1,) * (marginal.ndim - self.channel.k1)) * marginal
            joint = JointPmf(roster, tensor / tensor.sum(), tolerance=1e-9)
            value = self.gap(joint, query)[0]
            if value > best:
                best, best_joint = value, joint
        return float(best), best_joint

    def falsify(self, query: LessNoisyQuery) -> Tuple[float, Optional[JointPmf]]:
        """
        Seeded search over the query's family

        Returns:
            (gap, joint) of the first block, in block order, holding a gap above
            tolerance; otherwise the overall best gap and its joint
        """
        roster = self.roster(query)
        marginal = self._marginal(query)
        n_blocks = max(1, -(-self.budget // BLOCK_SIZE))
        seeds = np.random.SeedSequence(self.seed).spawn(n_blocks)
        sizes = [min(BLOCK_SIZE, self.budget - b * BLOCK_SIZE) for b in range(n_blocks)]
        if self.budget <= 0:
            return -np.inf, None

        def worker(b: int):
            return self._sample_block(query, roster, marginal, seeds[b], sizes[b])

        best = (-np.inf, None)
        if self.jobs > 1:
            pool = ThreadPool(self.jobs)
            try:
                results = pool.map(worker, range(n_blocks))
            finally:
                pool.close()
                pool.join()
            for result in results:
                if result[0] > GAP_TOLERANCE:
                    return result
                if result[0] > best[0]:
                    best = result
            return best

        blocks = range(n_blocks)
        if not self.quiet and n_blocks > 1:
            blocks = track(blocks, description=f"Sampling {query.label or 'query'}...", console=console)
        for b in blocks:
            result = worker(b)
            if result[0] > GAP_TOLERANCE:
                return result
            if result[0] > best[0]:
                best = result
        return best

    # -- verdicts ------------------------------------------------------

    def check(self, query: LessNoisyQuery) -> ConditionVerdict:
        certificate = self.sufficiency(query)
        if certificate is not None:
            verdict = ConditionVerdict(Status.HOLDS, certificate=certificate, query=query)
        else:
            gap, joint = self.falsify(query)
            if gap > GAP_TOLERANCE and joint is not None:
                _, lhs, rhs = self.gap(joint, query)
                verdict = ConditionVerdict(
                    Status.VIOLATED,
                    witness={"joint": joint.to_dict(), "gap": gap, "lhs": lhs, "rhs": rhs},
                    best_gap=gap,
                    query=query,
                )
            else:
                verdict = ConditionVerdict(Status.UNKNOWN, best_gap=None if joint is None else gap, query=query)
        if not self.quiet:
            self._log(verdict)
        return verdict

    def _log(self, verdict: ConditionVerdict) -> None:
        name = verdict.query.label if verdict.query else "query"
        if verdict.status == Status.HOLDS:
            console.print(f"  [green]✓[/green] {name}: HOLDS (degrading matrix)")
        elif verdict.status == Status.VIOLATED:
            console.print(f"  [red]✗[/red] {name}: VIOLATED (gap {verdict.best_gap:.3g})")
        else:
            console.print(f"  [yellow]⚠[/yellow] {name}: UNKNOWN after {self.budget} samples")

    def check_all(self, queries: Sequence[LessNoisyQuery]) -> List[ConditionVerdict]:
        if not self.quiet:
            console.print(f"\n[bold cyan]Checking {len(queries)} less-noisy condition(s)...[/bold cyan]")
        self.verdicts = [self.check(q) for q in queries]
        return self.verdicts

    def display_verdicts_table(self) -> None:
        """Verdict summary as a rich table"""
        if self.quiet or not self.verdicts:
            return
        table = Table(title="Less-Noisy Conditions", show_header=True, header_style="bold magenta")
        table.add_column("Label", style="cyan")
        table.add_column("Condition", style="white")
        table.add_column("Family", style="white")
        table.add_column("Status", style="green")
        table.add_column("Gap", style="yellow")
        for verdict in self.verdicts:
            query = verdict.query
            gap = "" if verdict.best_gap is None else f"{verdict.best_gap:.3g}"
            table.add_row(query.label, query.describe(), query.family.value, verdict.status.value, gap)
        console.print(table)


def check_query_discrete(channel: DiscreteChannel, topology: NetworkTopology, query: LessNoisyQuery,
                         seed: int = 0, budget: int = 2000, u_cap: Optional[int] = None,
                         jobs: int = 1, quiet: bool = True) -> ConditionVerdict:
    """Sufficiency pass, then falsification pass, for one query"""
    return ConditionFalsifier(channel, topology, seed, budget, u_cap, jobs, quiet=quiet).check(query)
