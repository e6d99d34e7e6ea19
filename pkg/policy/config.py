from dataclasses import asdict, dataclass, replace
from typing import Optional, Tuple

from nnkit.optim import OPTIMIZERS
from trajcore.errors import ArgumentError, ConfigError

POLICY_MODES = ("vision_only", "concat")
TRAIN_MODES = ("vision", "concat", "gap", "mask", "fixed", "smooth")
RHO_SOURCES = ("learned", "smooth", "fixed", "none")
ADJUST_RULES = ("literal", "one_minus_lambda_rho")


@dataclass(frozen=True)
class PolicyConfig:
    """Architecture of the two-branch policy; head_hidden = 0 gives a linear head."""

    mode: str = "concat"
    H: int = 2
    L: int = 1
    vision_hidden: int = 64
    proprio_hidden: int = 32
    head_hidden: int = 64

    def __post_init__(self):
        if self.mode not in POLICY_MODES:
            raise ArgumentError(f"policy mode must be one of {POLICY_MODES}, got {self.mode!r}")
        if self.H < 1 or self.L < 1:
            raise ArgumentError(f"H and L must be at least 1, got H={self.H}, L={self.L}")
        if self.vision_hidden < 1 or self.proprio_hidden < 1 or self.head_hidden < 0:
            raise ArgumentError("layer sizes must be positive")

    @property
    def uses_proprio(self) -> bool:
        return self.mode == "concat"


@dataclass(frozen=True)
class TrainConfig:
    """
    Behavior-cloning settings. Gradient adjustment is active whenever
    ``rho_source`` is not "none", for epochs j < gap_epochs.
    """

    epochs: int = 100
    gap_epochs: Optional[int] = None
    lam: float = 0.3
    batch_size: int = 64
    lr: float = 1e-3
    optimizer: str = "adam"
    seed: int = 0
    rho_source: str = "none"
    mask_prob: float = 0.0
    adjust_rule: str = "literal"
    per_sample_rho: bool = False
    adjust_head_proprio: bool = False
    log_every: int = 10

    def __post_init__(self):
        if self.gap_epochs is None:
            object.__setattr__(self, "gap_epochs", self.epochs // 2)
        if self.epochs < 1 or self.batch_size < 1:
            raise ArgumentError("epochs and batch_size must be positive")
        if not 0 <= self.gap_epochs <= self.epochs:
            raise ArgumentError(f"gap_epochs must lie in [0, {self.epochs}], got {self.gap_epochs}")
        if self.lam <= 0:
            raise ArgumentError(f"lambda must be positive, got {self.lam}")
        if not 0.0 <= self.mask_prob <= 1.0:
            raise ArgumentError(f"mask_prob must lie in [0, 1], got {self.mask_prob}")
        if self.rho_source not in RHO_SOURCES:
            raise ArgumentError(f"rho_source must be one of {RHO_SOURCES}")
        if self.adjust_rule not in ADJUST_RULES:
            raise ArgumentError(f"adjust_rule must be one of {ADJUST_RULES}")
        if self.optimizer not in OPTIMIZERS:
            raise ArgumentError(f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")

    @property
    def adjusted(self) -> bool:
        return self.rho_source != "none"

    def multiplier(self, rho):
        """Proprio gradient multiplier for a (mean or per-sample) rho."""
        if self.adjust_rule == "literal":
            return self.lam * (1.0 - rho)
        return 1.0 - self.lam * rho

    def echo(self) -> dict:
        return asdict(self)


def configure_mode(mode: str, policy_cfg: PolicyConfig,
                   train_cfg: TrainConfig) -> Tuple[PolicyConfig, TrainConfig]:
    """Map a training mode name onto the policy/train settings it implies."""
    if mode not in TRAIN_MODES:
        raise ConfigError(f"unknown training mode {mode!r}; expected one of {TRAIN_MODES}")
    arch = "vision_only" if mode == "vision" else "concat"
    rho_source = {"gap": "learned", "fixed": "fixed", "smooth": "smooth"}.get(mode, "none")
    mask_prob = train_cfg.mask_prob if mode == "mask" else 0.0
    return (replace(policy_cfg, mode=arch),
            replace(train_cfg, rho_source=rho_source, mask_prob=mask_prob))
