"""Turn a Pareto front into small per-module suggestions and render them."""
from __future__ import annotations

import json
from dataclasses import dataclass

from .metrics import Evaluator
from .model import New, Solution, apply_solution, module_key, normalize_solution

DEFAULT_CAP = 10


@dataclass(frozen=True)
class SuggestionGroup:
    source: str
    moves: tuple
    intra_md_delta: float
    inter_md_delta: int
    ebccb_delta: float
    solution_id: str
    emptied: bool = False

    def __len__(self):
        return len(self.moves)

    @property
    def solution(self) -> Solution:
        return Solution(self.moves)


def group_by_module(front, snapshot, evaluator: Evaluator) -> list:
    """Split every solution's moves by source module and score each part alone.

    ``front`` yields ``(solution_id, Solution)`` pairs. A group produced by
    several solutions is kept once, under the first id seen.
    """
    groups, seen = [], set()
    for sid, solution in front:
        parts = {}
        for mv in solution.moves:
            parts.setdefault(snapshot.assignment[mv.cls], []).append(mv)
        for source in sorted(parts):
            sub = normalize_solution(parts[source], snapshot)
            if not sub.moves or sub in seen:
                continue
            seen.add(sub)
            vec = evaluator(sub)
            emptied = source in apply_solution(snapshot, sub).emptied
            groups.append(SuggestionGroup(
                source, sub.moves, vec.intra_md_delta, vec.inter_md_delta,
                vec.ebccb_delta, str(sid), emptied,
            ))
    return groups


def passes(intra: float, inter: float, ebccb: float, size: int, cap: int = DEFAULT_CAP) -> bool:
    """Keep 1..cap moves improving two of three metrics without worsening the third.

    InterMD alone may worsen when EBCCB improves.
    """
    if not 1 <= size <= cap:
        return False
    deltas = {"intra": intra, "inter": inter, "ebccb": ebccb}
    if sum(v < 0 for v in deltas.values()) < 2:
        return False
    worse = [k for k, v in deltas.items() if v > 0]
    return not worse or (worse == ["inter"] and ebccb < 0)


def filter_suggestions(groups, cap: int = DEFAULT_CAP) -> list:
    return [
        g for g in groups
        if passes(g.intra_md_delta, g.inter_md_delta, g.ebccb_delta, len(g), cap)
    ]


def _ordered(groups):
    return sorted(groups, key=lambda g: (g.ebccb_delta, g.source, str(g.solution)))


def _target_label(target) -> str:
    return f"NEW MODULE {target.tag}" if isinstance(target, New) else target


def render_report(groups, snapshot=None, fmt: str = "text") -> str:
    """Deterministic report, ordered by EBCCB delta then source module."""
    groups = _ordered(groups)
    if fmt == "json":
        doc = {
            "suggestions": [
                {
                    "source": g.source,
                    "solution_id": g.solution_id,
                    "source_emptied": g.emptied,
                    "moves": [
                        {"class": m.cls, "new_module": m.target.tag} if isinstance(m.target, New)
                        else {"class": m.cls, "module": m.target}
                        for m in g.moves
                    ],
                    "intra_md_delta": g.intra_md_delta,
                    "inter_md_delta": g.inter_md_delta,
                    "ebccb_delta": g.ebccb_delta,
                }
                for g in groups
            ]
        }
        return json.dumps(doc, indent=2) + "\n"
    if fmt != "text":
        raise ValueError(f"unknown report format {fmt!r}")

    if not groups:
        return "Refactoring suggestions\n\nno suggestions passed filters\n"
    lines = [f"Refactoring suggestions ({len(groups)})", ""]
    for n, g in enumerate(groups, 1):
        lines.append(f"[{n}] module {g.source} (from solution {g.solution_id})")
        for m in sorted(g.moves, key=lambda m: (module_key(m.target), m.cls)):
            lines.append(f"    move {m.cls} -> {_target_label(m.target)}")
        if g.emptied:
            lines.append(f"    note: module {g.source} emptied (deleted)")
        lines.append(f"    intra_md_delta: {g.intra_md_delta:+.6f}")
        lines.append(f"    inter_md_delta: {g.inter_md_delta:+d}")
        lines.append(f"    ebccb_delta:    {g.ebccb_delta:+.6f}")
        lines.append("")
    return "\n".join(lines)
