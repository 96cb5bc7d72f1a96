"""Attack path enumeration over the top layer."""

from __future__ import annotations

from .errors import PathLimitExceeded
from .model import AttackPath, GoalSpec, HagModel

DEFAULT_MAX_PATHS = 10_000


def enumerate_paths(model: HagModel, target: str, max_paths: int = DEFAULT_MAX_PATHS) -> list[AttackPath]:
    """All simple directed paths from any entry node to ``target``.

    Paths are returned sorted lexicographically by their node-name sequence.
    Exceeding ``max_paths`` raises rather than truncating, since network-level
    sums need the complete path set.
    """
    model.node(target)
    found: list[tuple[str, ...]] = []
    succ = model.successors
    for entry in model.entries:
        # explicit stack of (path, on_path set, next-successor index)
        stack = [((entry,), {entry}, 0)]
        while stack:
            path, on_path, k = stack.pop()
            head = path[-1]
            if k == 0 and head == target:
                found.append(path)
                if len(found) > max_paths:
                    raise PathLimitExceeded(f"more than {max_paths} attack paths to {target}")
                continue
            nexts = succ.get(head, ())
            while k < len(nexts) and nexts[k] in on_path:
                k += 1
            if k == len(nexts):
                continue
            stack.append((path, on_path, k + 1))
            nxt = nexts[k]
            stack.append((path + (nxt,), on_path | {nxt}, 0))
    found.sort()
    return [AttackPath(p) for p in found]


def covering_paths(model: HagModel, goals: GoalSpec, max_paths: int = DEFAULT_MAX_PATHS) -> dict[str, list[AttackPath]]:
    return {t: enumerate_paths(model, t, max_paths) for t in goals.targets}
