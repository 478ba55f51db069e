"""Command execution: resolves a RunConfig, runs the workflow, writes the echo.

Every command creates its output directory, executes the matching workflow,
and leaves a resolved_config.txt echo beside the artifacts. Interrupted or
failed runs leave an INCOMPLETE marker naming the error category.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .config import RunConfig
from .errors import ConfigurationError, HoikitError
from .sweeps import run_sweep
from .workflows import (
    detect_keypoints_workflow,
    eval_workflow,
    gen_data_workflow,
    predict_workflow,
    train_hoi_workflow,
    train_keypoints_workflow,
)

COMMANDS = (
    "gen-data",
    "train-keypoints",
    "detect-keypoints",
    "train-hoi",
    "predict",
    "eval",
    "sweep",
)


@dataclass
class CommandResult:
    command: str
    outputs: dict = field(default_factory=dict)
    messages: list[str] = field(default_factory=list)


def _sweep_workflow(cfg: RunConfig, out_dir: Path) -> dict:
    values = list(cfg.sweep_values)
    rows = run_sweep(cfg.sweep_axis, values, cfg, out_dir / "sweep")
    return {
        "sweep_csv": str(out_dir / "sweep" / "sweep.csv"),
        "rows": rows,
        "axis": cfg.sweep_axis,
    }


_WORKFLOWS = {
    "gen-data": gen_data_workflow,
    "train-keypoints": train_keypoints_workflow,
    "detect-keypoints": detect_keypoints_workflow,
    "train-hoi": train_hoi_workflow,
    "predict": predict_workflow,
    "eval": eval_workflow,
    "sweep": _sweep_workflow,
}


def run_command(command: str, cfg: RunConfig) -> CommandResult:
    """Execute one command; raises categorized HoikitError subclasses on failure."""
    if command not in COMMANDS:
        raise ConfigurationError(f"unknown command {command!r}; expected one of {COMMANDS}")
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "resolved_config.txt").write_text(cfg.echo_text(), encoding="utf-8")
    marker = out_dir / "INCOMPLETE"
    marker.write_text("run in progress\n", encoding="utf-8")
    try:
        outputs = _WORKFLOWS[command](cfg, out_dir)
    except HoikitError as exc:
        marker.write_text(f"failed: category {exc.exit_category}: {exc}\n", encoding="utf-8")
        raise
    except BaseException:
        marker.write_text("interrupted: partial outputs\n", encoding="utf-8")
        raise
    marker.unlink()
    messages = [f"{command}: ok"]
    if not cfg.deterministic:
        messages.append("throughput mode: thread-order determinism relaxed")
    return CommandResult(command=command, outputs=outputs, messages=messages)
