import numpy as np

from segment.params import SegParams
from trajcore.errors import ArgumentError
from trajcore.motion import motion_between
from trajcore.types import Motion, Trajectory


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity; 0 whenever either vector has zero norm."""
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def _sign_term(dg_phase: float, dg_step: float, params: SegParams) -> float:
    # sgn(0) = 0, and 0 == 0 counts as a match
    if np.sign(dg_phase) == np.sign(dg_step):
        return -params.beta
    return params.beta if params.mismatch_penalty else 0.0


def motion_distance(phase: Motion, step: Motion, params: SegParams) -> float:
    """
    Motion-consistency distance between a phase motion and one adjacent motion:
    d = -cos(dp) - alpha * cos(dtheta) - beta * [sgn(dg) match].
    The orientation term is dropped when there is no orientation.
    """
    if phase.dp.shape != step.dp.shape or phase.dtheta.shape != step.dtheta.shape:
        raise ArgumentError("phase and step motions must share dimensionality")
    d = -cosine(phase.dp, step.dp)
    if phase.has_theta:
        d -= params.alpha * cosine(phase.dtheta, step.dtheta)
    return d + _sign_term(phase.dg, step.dg, params)


def cotpc_distance(a1: np.ndarray, a2: np.ndarray) -> float:
    """Cosine distance between two action vectors."""
    a1 = np.asarray(a1, dtype=np.float64)
    a2 = np.asarray(a2, dtype=np.float64)
    if a1.shape != a2.shape:
        raise ArgumentError(f"action dimensions differ: {a1.shape} vs {a2.shape}")
    return 1.0 - cosine(a1, a2)


def check_phase_range(n: int, t1: int, t2: int, params: SegParams) -> None:
    if not (0 <= t1 < t2 <= n - 1):
        raise ArgumentError(f"need 0 <= t1 < t2 <= {n - 1}, got t1={t1}, t2={t2}")
    if t2 - t1 < params.min_phase_len - 1:
        raise ArgumentError(f"phase [{t1}, {t2}] is shorter than min_phase_len="
                            f"{params.min_phase_len}")


def phase_cost(traj: Trajectory, t1: int, t2: int, params: SegParams) -> float:
    """
    Motion inconsistency of the phase covering states t1..t2, summed term by
    term over the adjacent motions m_{i:i+1}, i = t1..t2-1.
    """
    check_phase_range(len(traj), t1, t2, params)
    if params.distance_mode == "cotpc":
        actions = traj.actions[t1:t2]
        representative = actions.mean(axis=0)
        return float(sum(cotpc_distance(representative, a) for a in actions))
    phase = motion_between(traj, t1, t2)
    return float(sum(motion_distance(phase, motion_between(traj, i, i + 1), params)
                     for i in range(t1, t2)))
