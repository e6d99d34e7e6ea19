"""
Change point detection by dynamic programming.

A change index c starts a new phase at state c, so I = {c_1 < ... < c_k}
splits states 0..N-1 into [0, c_1-1], [c_1, c_2-1], ..., [c_k, N-1]. The
objective is the summed phase cost, plus ``penalty * |I|`` in penalized
mode. Objective values within TIE_TOL are ties, resolved towards fewer
change points and then the lexicographically smallest index set.
"""
import itertools
import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from segment.distance import phase_cost
from segment.params import SegParams
from trajcore.errors import ArgumentError, RefusalError
from trajcore.motion import delta_matrix
from trajcore.types import Trajectory

logger = logging.getLogger(__name__)

TIE_TOL = 1e-9
BRUTEFORCE_MAX_LEN = 16


@dataclass(frozen=True)
class SegmentationResult:
    change_indices: Tuple[int, ...]
    phase_costs: Tuple[float, ...]
    total_cost: float
    length: int

    def phases(self) -> List[Tuple[int, int]]:
        starts = [0, *self.change_indices]
        ends = [c - 1 for c in self.change_indices] + [self.length - 1]
        return list(zip(starts, ends))

    def to_record(self, traj_id: int, params: SegParams) -> dict:
        return {
            "traj_id": traj_id,
            "change_indices": list(self.change_indices),
            "total_cost": self.total_cost,
            "params_echo": params.echo(),
        }


def _unit_rows(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    return np.divide(x, norms, out=np.zeros_like(x), where=norms > 0)


def _prefix(x: np.ndarray) -> np.ndarray:
    """P[k] = sum of rows 0..k-1, with P[0] = 0."""
    return np.concatenate([np.zeros((1,) + x.shape[1:]), np.cumsum(x, axis=0)])


def _directional_sums(endpoints: np.ndarray, unit_prefix: np.ndarray) -> np.ndarray:
    """
    S[t1, t2] = sum_{i=t1}^{t2-1} cos(e[t2] - e[t1], unit_i), via
    (phase / |phase|) . (U[t2] - U[t1]).
    """
    phase = endpoints[None, :, :] - endpoints[:, None, :]
    summed = unit_prefix[None, :, :] - unit_prefix[:, None, :]
    norm = np.linalg.norm(phase, axis=2)
    dot = np.sum(phase * summed, axis=2)
    return np.divide(dot, norm, out=np.zeros_like(dot), where=norm > 0)


class PhaseCostTable:
    """
    All phase costs c[t1, t2] of one trajectory, built from prefix sums of
    unit adjacent motions and sign counts in O(N^2 * D).
    """

    def __init__(self, traj: Trajectory, params: SegParams):
        self.n = len(traj)
        self.params = params
        if params.distance_mode == "cotpc":
            self.costs = self._cotpc(traj)
        else:
            self.costs = self._gap(traj)

    def _gap(self, traj: Trajectory) -> np.ndarray:
        p = self.params
        deltas = delta_matrix(traj)
        dim_p, dim_theta = traj.dim_p, traj.dim_theta
        cost = -_directional_sums(traj.positions, _prefix(_unit_rows(deltas[:, :dim_p])))
        if dim_theta:
            unit_theta = _unit_rows(deltas[:, dim_p:dim_p + dim_theta])
            cost -= p.alpha * _directional_sums(traj.orientations, _prefix(unit_theta))
        step_sign = np.sign(deltas[:, -1])
        counts = {s: _prefix((step_sign == s).astype(np.float64)) for s in (-1.0, 0.0, 1.0)}
        phase_sign = np.sign(traj.openings[None, :] - traj.openings[:, None])
        matches = np.zeros((self.n, self.n))
        for s, prefix in counts.items():
            between = prefix[None, :] - prefix[:, None]
            matches = np.where(phase_sign == s, between, matches)
        cost -= p.beta * matches
        if p.mismatch_penalty:
            length = np.arange(self.n)[None, :] - np.arange(self.n)[:, None]
            cost += p.beta * (length - matches)
        return cost

    def _cotpc(self, traj: Trajectory) -> np.ndarray:
        actions = traj.actions
        sums = _prefix(actions)[:self.n]
        unit = _prefix(_unit_rows(actions))[:self.n]
        total = sums[None, :, :] - sums[:, None, :]
        summed = unit[None, :, :] - unit[:, None, :]
        length = (np.arange(self.n)[None, :] - np.arange(self.n)[:, None]).astype(np.float64)
        norm = np.linalg.norm(total, axis=2)
        dot = np.sum(total * summed, axis=2)
        cos_sum = np.divide(dot, norm, out=np.zeros_like(dot), where=norm > 0)
        return length - cos_sum

    def __call__(self, t1: int, t2: int) -> float:
        return float(self.costs[t1, t2])


def _check_feasible(n: int, params: SegParams) -> None:
    length = params.min_phase_len
    if params.k_changes is not None:
        if n < (params.k_changes + 1) * length:
            raise ArgumentError(f"trajectory of length {n} cannot hold {params.k_changes} "
                                f"change points with min_phase_len={length}")
    elif n < length:
        raise ArgumentError(f"trajectory of length {n} is shorter than min_phase_len={length}")


def objective_value(traj: Trajectory, change_indices: Sequence[int], params: SegParams) -> float:
    """Objective of an index set, recomputed term by term."""
    result = _result_from_indices(traj, change_indices, params)
    return result.total_cost


def _result_from_indices(traj, change_indices, params) -> SegmentationResult:
    n = len(traj)
    indices = tuple(int(c) for c in change_indices)
    bounds = list(zip([0, *indices], [c - 1 for c in indices] + [n - 1]))
    costs = tuple(phase_cost(traj, a, b, params) for a, b in bounds)
    total = float(sum(costs))
    if params.penalized:
        total += params.penalty * len(indices)
    return SegmentationResult(indices, costs, total, n)


def segment_dp(traj: Trajectory, params: SegParams) -> SegmentationResult:
    """Globally optimal change indices in O(N^2 * K)."""
    n = len(traj)
    _check_feasible(n, params)
    length = params.min_phase_len
    cost = PhaseCostTable(traj, params).costs
    k_max = n // length - 1
    if params.k_changes is not None:
        k_max = params.k_changes

    # best[j][s]: cheapest split of states s..n-1 into j + 1 phases
    best = np.full((k_max + 1, n + 1), np.inf)
    best[0, :n - length + 1] = cost[np.arange(n - length + 1), n - 1]
    for j in range(1, k_max + 1):
        for s in range(0, n - (j + 1) * length + 1):
            c = np.arange(s + length, n - j * length + 1)
            best[j, s] = np.min(cost[s, c - 1] + best[j - 1, c])

    if params.k_changes is not None:
        k = params.k_changes
    else:
        totals = best[:, 0] + params.penalty * np.arange(k_max + 1)
        k = int(np.flatnonzero(totals <= np.min(totals) + TIE_TOL)[0])

    indices = []
    s = 0
    for j in range(k, 0, -1):
        c = np.arange(s + length, n - j * length + 1)
        values = cost[s, c - 1] + best[j - 1, c]
        s = int(c[np.flatnonzero(values <= best[j, s] + TIE_TOL)[0]])
        indices.append(s)
    result = _result_from_indices(traj, indices, params)
    logger.debug("segmented N=%d into %d phases (cost %.6f)", n, k + 1, result.total_cost)
    return result


def _feasible_sets(n: int, k: int, length: int):
    for combo in itertools.combinations(range(1, n), k):
        bounds = [0, *combo, n]
        if all(b - a >= length for a, b in zip(bounds[:-1], bounds[1:])):
            yield combo


def segment_bruteforce(traj: Trajectory, params: SegParams) -> SegmentationResult:
    """Exhaustive search with the same objective and tie-breaking as segment_dp."""
    n = len(traj)
    if n > BRUTEFORCE_MAX_LEN:
        raise RefusalError(f"brute force refuses N={n} > {BRUTEFORCE_MAX_LEN}")
    _check_feasible(n, params)
    length = params.min_phase_len
    ks = [params.k_changes] if params.k_changes is not None else range(n // length)
    candidates = [(objective_value(traj, combo, params), combo)
                  for k in ks for combo in _feasible_sets(n, k, length)]
    lowest = min(value for value, _ in candidates)
    chosen = next(combo for value, combo in candidates if value <= lowest + TIE_TOL)
    return _result_from_indices(traj, chosen, params)
