"""
Plug-in registry for training regimes, plus the records they exchange.

Any regime must implement::

    class MyRegime:
        name: str = "unique-key"
        def __call__(self, net, transition, cfg, *, teacher=None) -> RunRecord:
            ...

Regimes train *net* in place and return its evaluation history.
"""

from __future__ import annotations

__all__ = [
    "RegimeKind",
    "Supervision",
    "TaskSpec",
    "RegimeConfig",
    "EvalRow",
    "RunRecord",
    "Regime",
    "register",
    "get_regime",
    "list_regimes",
]

from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Dict, Mapping, Protocol

from altm.errors import ParameterError, UsageError
from altm.losses import LossKind
from altm.network import Network, TeacherSnapshot
from datagen.environment import LabelKind

if TYPE_CHECKING:
    from datagen.transition import TransitionSpec


class RegimeKind(str, Enum):
    SEQUENTIAL = "sequential"
    INTERLEAVED = "interleaved"
    MULTITASK = "multitask"
    ALTM_NAIVE = "altm-naive"
    ALTM_REPLAY = "altm-replay"

    @property
    def is_altm(self) -> bool:
        return self in (RegimeKind.ALTM_NAIVE, RegimeKind.ALTM_REPLAY)


class Supervision(str, Enum):
    TEACHER = "teacher"
    LABELS = "labels"


@dataclass(frozen=True, slots=True)
class TaskSpec:
    """A head trained on one label field of an environment."""

    head: str
    labels: LabelKind = LabelKind.SEMANTIC

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", LabelKind(self.labels))
        if not self.head:
            raise ParameterError("task head id must be non-empty")


@dataclass(frozen=True, slots=True)
class RegimeConfig:
    """
    Everything a regime needs besides the network and the environments.

    Attributes:
        kind: which protocol to run.
        old_tasks: tasks trained on the old environment.
        new_tasks: tasks trained on the new environment.
        phase_epochs: epochs per phase.  Sequential alternates env1/env2
            phases; interleaved and multitask spend the sum; A-LTM develops
            its teacher for the first entry and matures for the last.
        interleave_period: epochs per interleaved block.
        lr: learning rate per phase (a single value applies to all).
        batch_size: examples per batch, None for full batch.
        task_loss: loss applied against true labels.
        old_weight: weight of old-task terms; None resolves to 0.1 for A-LTM
            and 1.0 otherwise.
        new_weight: weight of new-task terms.
        term_weights: per-head overrides of the two weights above.
        sigma: Gaussian init scale of heads attached during the run.
        seed: root of every random stream the run uses.
        eval_every: evaluation stride in epochs.
        replay_cap: uniform subsample size of the retained old environment.
        supervision: old-task targets for A-LTM, teacher logits or labels.
        name: run label used for artifacts (defaults to the kind).
    """

    kind: RegimeKind
    old_tasks: tuple[TaskSpec, ...] = (TaskSpec("old"),)
    new_tasks: tuple[TaskSpec, ...] = (TaskSpec("new"),)
    phase_epochs: tuple[int, ...] = (500, 500)
    interleave_period: int = 50
    lr: tuple[float, ...] = (0.05,)
    batch_size: int | None = None
    task_loss: LossKind = LossKind.CROSS_ENTROPY
    old_weight: float | None = None
    new_weight: float = 1.0
    term_weights: Mapping[str, float] = field(default_factory=dict)
    sigma: float = 0.1
    seed: int = 0
    eval_every: int = 1
    replay_cap: int | None = None
    supervision: Supervision = Supervision.TEACHER
    name: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", RegimeKind(self.kind))
        object.__setattr__(self, "task_loss", LossKind(self.task_loss))
        object.__setattr__(self, "supervision", Supervision(self.supervision))
        object.__setattr__(self, "old_tasks", tuple(self.old_tasks))
        object.__setattr__(self, "new_tasks", tuple(self.new_tasks))
        object.__setattr__(self, "phase_epochs", tuple(int(e) for e in self.phase_epochs))
        object.__setattr__(self, "lr", tuple(float(v) for v in self.lr))
        object.__setattr__(self, "term_weights", dict(self.term_weights))
        self._validate()

    def _validate(self) -> None:
        if not self.phase_epochs:
            raise ParameterError("phase_epochs must list at least one phase")
        if self.phase_epochs[0] < 1 or any(e < 0 for e in self.phase_epochs):
            raise ParameterError(f"phase_epochs must be >= 0 with a first phase >= 1, got {list(self.phase_epochs)}")
        if self.interleave_period < 1:
            raise ParameterError(f"interleave_period must be >= 1, got {self.interleave_period}")
        if len(self.lr) not in (1, len(self.phase_epochs)):
            raise ParameterError(f"lr needs 1 or {len(self.phase_epochs)} values, got {len(self.lr)}")
        if any(not v > 0.0 for v in self.lr):
            raise ParameterError(f"learning rates must be positive, got {list(self.lr)}")
        if self.batch_size is not None and self.batch_size < 1:
            raise ParameterError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.sigma > 0.0:
            raise ParameterError(f"sigma must be positive, got {self.sigma}")
        if self.eval_every < 1:
            raise ParameterError(f"eval_every must be >= 1, got {self.eval_every}")
        if self.replay_cap is not None and self.replay_cap < 1:
            raise ParameterError(f"replay_cap must be >= 1, got {self.replay_cap}")
        for w in (self.old_weight, self.new_weight, *self.term_weights.values()):
            if w is not None and not w >= 0.0:
                raise ParameterError(f"loss weights must be >= 0, got {w}")
        if self.task_loss is LossKind.L2_DISTILL:
            raise ParameterError("task_loss must compare against labels, not l2-distill")

        heads = [t.head for t in (*self.old_tasks, *self.new_tasks)]
        if not self.old_tasks:
            raise ParameterError("at least one old task is required")
        if len(set(heads)) != len(heads):
            raise ParameterError(f"head ids must be unique across tasks, got {heads}")
        unknown = set(self.term_weights) - set(heads)
        if unknown:
            raise ParameterError(f"term_weights name unknown heads {sorted(unknown)}")
        if self.kind is not RegimeKind.SEQUENTIAL and not self.new_tasks:
            raise ParameterError(f"{self.kind.value} needs at least one new task")
        if self.supervision is Supervision.LABELS and self.kind is RegimeKind.ALTM_NAIVE:
            raise ParameterError("label supervision needs the replayed old environment (altm-replay)")

    # ------------------------------------------------------------------
    @property
    def label(self) -> str:
        return self.name or self.kind.value

    @property
    def total_epochs(self) -> int:
        return sum(self.phase_epochs)

    @property
    def resolved_old_weight(self) -> float:
        if self.old_weight is not None:
            return self.old_weight
        return 0.1 if self.kind.is_altm else 1.0

    def lr_for(self, phase: int) -> float:
        """Learning rate of 1-based *phase*."""
        return self.lr[0] if len(self.lr) == 1 else self.lr[phase - 1]

    def weight_for(self, task: TaskSpec) -> float:
        if task.head in self.term_weights:
            return self.term_weights[task.head]
        return self.resolved_old_weight if task in self.old_tasks else self.new_weight


@dataclass(frozen=True, slots=True)
class EvalRow:
    """Metrics of every resident head at one evaluation point."""

    phase: int
    epoch: int
    losses: Mapping[str, float]
    accuracies: Mapping[str, float]
    wall_time: float = 0.0

    def numeric(self) -> tuple:
        return (
            self.phase,
            self.epoch,
            tuple(sorted(self.losses.items())),
            tuple(sorted(self.accuracies.items())),
        )


@dataclass(slots=True, eq=False)
class RunRecord:
    """
    Evaluation history of one run.

    Attributes:
        regime: the config's label.
        rows: evaluations ordered by (phase, epoch).
        network: the trained network.
        teacher: the frozen teacher, for A-LTM runs.
        tasks: head id -> task, for every evaluated head.
    """

    regime: str
    rows: list[EvalRow]
    network: Network
    teacher: TeacherSnapshot | None = None
    tasks: dict[str, TaskSpec] = field(default_factory=dict)

    def append(self, row: EvalRow) -> None:
        if self.rows:
            last = self.rows[-1]
            if (row.phase, row.epoch) <= (last.phase, last.epoch):
                raise UsageError(
                    f"evaluation rows out of order: ({row.phase}, {row.epoch}) after ({last.phase}, {last.epoch})"
                )
        self.rows.append(row)

    def numeric_rows(self) -> list[tuple]:
        """Rows without wall time, for determinism checks."""
        return [row.numeric() for row in self.rows]

    def series(self, head: str, metric: str = "loss") -> list[tuple[int, float]]:
        """``(epoch, value)`` pairs for *head*, in row order."""
        field_name = {"loss": "losses", "accuracy": "accuracies"}[metric]
        return [
            (row.epoch, getattr(row, field_name)[head])
            for row in self.rows
            if head in getattr(row, field_name)
        ]

    @property
    def final(self) -> EvalRow:
        if not self.rows:
            raise UsageError(f"run {self.regime!r} has no evaluation rows")
        return self.rows[-1]


# ------------------------------------------------------------------
# Registry
# ------------------------------------------------------------------
class Regime(Protocol):
    """A training schedule: trains *net* on a transition and returns its history."""

    name: str

    def __call__(
        self,
        net: Network,
        transition: "TransitionSpec",
        cfg: RegimeConfig,
        *,
        teacher: TeacherSnapshot | None = None,
    ) -> RunRecord: ...


_REGIMES: Dict[str, Regime] = {}


def register(cls: type[Regime]) -> type[Regime]:
    """
    Make a regime class reachable through :func:`get_regime`.

    The class is instantiated once, without arguments, and stored under its
    ``name``.  The class itself is returned unchanged.

    Raises:
        ValueError: if another regime already uses that name.
    """
    inst = cls()
    key = inst.name
    if key in _REGIMES:
        raise ValueError(f"regime {key!r} is registered twice")
    _REGIMES[key] = inst
    return cls


def get_regime(name: RegimeKind | str) -> Regime:
    """
    Raises:
        KeyError: if no regime is registered under *name*.
    """
    key = name.value if isinstance(name, RegimeKind) else name
    try:
        return _REGIMES[key]
    except KeyError as exc:
        raise KeyError(f"unknown regime {key!r}; known: {list_regimes()}") from exc


def list_regimes() -> list[str]:
    """Registered regime names, sorted."""
    return sorted(_REGIMES)
