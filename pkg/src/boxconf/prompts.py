"""Prompt templates, loaded verbatim from packaged text assets.

The templates are stored as files (not Python strings) so their exact bytes
are easy to inspect and diff. Placeholders are substituted with
``str.replace`` because the templates themselves contain literal braces
(``\\boxed{}``), which rules out ``str.format``.
"""

from __future__ import annotations

from importlib import resources


def _load(name: str) -> str:
    return resources.files(__package__).joinpath("templates", name).read_text(encoding="utf-8")


ZERO_SHOT_TEMPLATE = _load("zero_shot.txt")
JUDGE_TEMPLATE = _load("judge.txt")
VERIFIER_TEMPLATE = _load("verifier.txt")


def render_zero_shot(instruction: str) -> str:
    """Step-by-step solving prompt; asks for the final answer in \\boxed{}."""
    return ZERO_SHOT_TEMPLATE.replace("{instruction}", instruction)


def render_judge(question: str, response: str) -> str:
    """Additive 5-point scoring prompt; ends with ``Score: \\boxed{N}``."""
    return JUDGE_TEMPLATE.replace("{question}", question).replace("{response}", response)


def render_verifier(question: str, solution: str) -> str:
    """Step-by-step grading prompt; ends with ``Verification: \\boxed{Yes|No}``."""
    return VERIFIER_TEMPLATE.replace("{question}", question).replace("{solution}", solution)
