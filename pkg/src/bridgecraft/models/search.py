"""Hyperparameter search: one-parameter-at-a-time, then combinations.

A full grid is usually too expensive, so each parameter is swept alone
from a base configuration to find its promising values, and only the
cross product of those survivors is tried. Selection is by validation
MAE; every trial lands on the leaderboard.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

Config = dict


@dataclass(frozen=True)
class Trial:
    config: Config
    val_mae: float


def save_leaderboard(leaderboard: Sequence[Trial], path: str | Path) -> None:
    payload = [{"config": t.config, "val_mae": t.val_mae} for t in leaderboard]
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def hyperparam_search(
    grid: Mapping[str, Sequence],
    evaluate_config: Callable[[Config], float],
    *,
    top_k: int = 2,
    leaderboard_path: str | Path | None = None,
) -> tuple[Config, list[Trial]]:
    """Coordinate-wise sweep, then combination sweep over promising values.

    ``evaluate_config`` maps a config to its validation MAE; results are
    cached by config so repeated combinations never retrain.
    """
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise ValueError("grid must name at least one value per parameter")

    cache: dict[tuple, Trial] = {}

    def run(config: Config) -> Trial:
        key = tuple(sorted(config.items()))
        if key not in cache:
            cache[key] = Trial(config=dict(config), val_mae=float(evaluate_config(config)))
        return cache[key]

    base = {name: values[0] for name, values in grid.items()}
    promising: dict[str, list] = {}
    for name, values in grid.items():
        scored = []
        for value in values:
            trial = run({**base, name: value})
            scored.append((trial.val_mae, values.index(value), value))
        scored.sort(key=lambda t: (t[0], t[1]))
        promising[name] = [value for _, _, value in scored[:top_k]]

    names = list(grid)
    for combo in itertools.product(*(promising[name] for name in names)):
        run(dict(zip(names, combo)))

    leaderboard = sorted(cache.values(), key=lambda t: (t.val_mae, repr(sorted(t.config.items()))))
    if leaderboard_path is not None:
        save_leaderboard(leaderboard, leaderboard_path)
    return dict(leaderboard[0].config), leaderboard
