"""Command-line interface.

One subcommand per pipeline; no hidden multi-step orchestration. Iterative
self-training is explicit: each iteration is one ``build-pairs`` invocation
against the next model endpoint.

Exit codes: 0 success, 1 validation/config error, 2 backend failure.
Every run writes a manifest (config snapshot + SHA-256 digests of the input
files) into the output directory.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
from pathlib import Path
from typing import Optional

from .backend import SCORE, HttpBackend, MockBackend
from .cache import ResponseCache
from .config import RunConfig, build_config
from .datasets import (
    load_bench,
    load_external_solutions,
    load_points,
    load_questions,
    load_samples,
    sample_to_record,
    write_jsonl,
)
from .dominance import check_requirement, load_toy_models
from .errors import (
    AllAnswerlessError,
    BackendError,
    BoxconfError,
    CapabilityError,
    ConfigError,
    MismatchedSupportError,
    NoValidRewardError,
)
from .answers import answers_equivalent
from .pipelines import (
    build_dpo_pairs,
    collect_samples,
    correlation_report,
    eval_reward_bench,
    filter_data,
    select_answer,
)
from .rewards import ScoredSolution, compute_reward, score_external_solution

REWARD_FLAG_TO_METHOD = {
    "confidence": "confidence",
    "perplexity": "perplexity",
    "genver": "generative_verifier",
    "judge": "judge",
}
STRATEGY_FLAG_TO_NAME = {"sc": "sc", "sc-reward": "sc_reward", "bon": "bon"}


def _reward_method(cfg: "RunConfig") -> str:
    # config files may carry either the flag spelling or the method name
    if cfg.reward in REWARD_FLAG_TO_METHOD:
        return REWARD_FLAG_TO_METHOD[cfg.reward]
    if cfg.reward in REWARD_FLAG_TO_METHOD.values():
        return cfg.reward
    raise ConfigError(f"unknown reward method {cfg.reward!r}")


def _strategy_name(value: str) -> str:
    name = STRATEGY_FLAG_TO_NAME.get(value, value)
    if name not in ("sc", "sc_reward", "bon"):
        raise ConfigError(f"unknown strategy {value!r}")
    return name


def _sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(out_dir: Path, command: str, cfg: RunConfig, inputs: list[Optional[str]]) -> None:
    manifest = {
        "command": command,
        "config": dataclasses.asdict(cfg),
        "inputs": {str(p): _sha256_file(p) for p in inputs if p},
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def _check_inputs_exist(*paths: Optional[str]) -> None:
    for path in paths:
        if path and not Path(path).exists():
            raise ConfigError(f"input file not found: {path}")


def make_backend(cfg: RunConfig):
    if cfg.mock_fixture:
        return MockBackend.from_file(cfg.mock_fixture, capabilities=tuple(cfg.capabilities))
    if not cfg.backend_url or not cfg.model:
        raise ConfigError("need --backend-url and --model (or --mock <fixture>)")
    cache = ResponseCache(cfg.cache_dir) if cfg.cache_dir else None
    return HttpBackend(
        base_url=cfg.backend_url,
        model=cfg.model,
        api_key=cfg.api_key(),
        api=cfg.api,
        capabilities=tuple(cfg.capabilities),
        cache=cache,
        parallelism=cfg.parallelism,
    )


# ---------------------------------------------------------------------------
# Command handlers
# ---------------------------------------------------------------------------


def _cmd_sample(args, cfg: RunConfig, with_reward: bool) -> int:
    _check_inputs_exist(args.questions, cfg.mock_fixture)
    questions = load_questions(args.questions)
    backend = make_backend(cfg)
    methods = [_reward_method(cfg)] if with_reward else []
    collected = collect_samples(
        questions,
        backend,
        n=cfg.n,
        temperature=cfg.temperature,
        max_tokens=cfg.max_tokens,
        seed=cfg.seed,
        reward_methods=methods,
        parallelism=cfg.parallelism,
    )
    out = Path(cfg.out_dir)
    _write_manifest(out, "reward" if with_reward else "sample", cfg, [args.questions, cfg.mock_fixture])
    samples = [rec for qs in collected for rec in qs.sample_records()]
    errors = [
        {"question_id": qs.question.id, "error": qs.error} for qs in collected if qs.error
    ]
    write_jsonl(out / "samples.jsonl", samples)
    write_jsonl(out / "errors.jsonl", errors)
    (out / "summary.txt").write_text(
        f"questions = {len(questions)}\nsamples = {len(samples)}\nfailed_questions = {len(errors)}\n",
        encoding="utf-8",
    )
    print(f"wrote {len(samples)} samples for {len(questions)} questions to {out}")
    return 0


def _cmd_score_solutions(args, cfg: RunConfig) -> int:
    _check_inputs_exist(args.questions, args.solutions, cfg.mock_fixture)
    questions = {q.id: q for q in load_questions(args.questions)}
    solutions = load_external_solutions(args.solutions)
    backend = make_backend(cfg)
    method = _reward_method(cfg)
    if SCORE not in getattr(backend, "capabilities", frozenset()):
        raise CapabilityError("score-solutions needs a backend with the 'score' capability")
    out = Path(cfg.out_dir)
    _write_manifest(out, "score-solutions", cfg, [args.questions, args.solutions, cfg.mock_fixture])
    records = []
    for rec in solutions:
        question = questions.get(rec["question_id"])
        if question is None:
            raise ConfigError(f"solution references unknown question {rec['question_id']!r}")
        sol = score_external_solution(backend, question, rec["text"])
        sol.sample_index = rec["sample_index"]
        score = compute_reward(method, backend, question, sol)
        correct = (
            sol.answer is not None
            and question.gold_answer is not None
            and answers_equivalent(sol.answer, question.gold_answer)
        )
        records.append(
            sample_to_record(
                question_id=question.id,
                sample_index=sol.sample_index,
                text=sol.text,
                correct=correct,
                answer_raw=sol.answer_span.raw if sol.answer_span else None,
                answer_canonical=sol.answer.text if sol.answer else None,
                rewards={method: score},
            )
        )
    write_jsonl(out / "samples.jsonl", records)
    (out / "summary.txt").write_text(
        f"solutions = {len(records)}\nreward_method = {method}\n", encoding="utf-8"
    )
    print(f"scored {len(records)} external solutions to {out}")
    return 0


def _cmd_select(args, cfg: RunConfig, strategy: str) -> int:
    _check_inputs_exist(args.questions, args.samples)
    questions = load_questions(args.questions)
    samples = load_samples(args.samples)
    method = _reward_method(cfg)
    by_qid: dict[str, list] = {}
    for sample in samples:
        by_qid.setdefault(sample.question_id, []).append(sample)
    out = Path(cfg.out_dir)
    _write_manifest(out, strategy, cfg, [args.questions, args.samples])
    selections = []
    for question in questions:
        records = sorted(by_qid.get(question.id, []), key=lambda s: s.sample_index)
        if not records:
            selections.append(
                {"question_id": question.id, "strategy": strategy, "correct": False, "error": "no_samples"}
            )
            continue
        sols = []
        rewards = []
        for record in records:
            sols.append(
                ScoredSolution(
                    question_id=record.question_id,
                    text=record.text,
                    sample_index=record.sample_index,
                    answer=record.answer(),
                )
            )
            if strategy in ("sc_reward", "bon"):
                if method not in record.rewards:
                    raise ConfigError(
                        f"sample {record.question_id!r}/{record.sample_index} lacks reward "
                        f"{method!r}; run the reward step first"
                    )
                rewards.append(record.rewards[method])
        try:
            selections.append(
                select_answer(question, sols, rewards if rewards else None, strategy)
            )
        except (AllAnswerlessError, NoValidRewardError) as exc:
            selections.append(
                {
                    "question_id": question.id,
                    "strategy": strategy,
                    "correct": False,
                    "error": f"{type(exc).__name__}: {exc}",
                }
            )
    accuracy = sum(rec["correct"] for rec in selections) / len(selections)
    write_jsonl(out / "selections.jsonl", selections)
    (out / "summary.txt").write_text(
        f"strategy = {strategy}\nquestions = {len(selections)}\naccuracy = {accuracy:.6f}\n",
        encoding="utf-8",
    )
    print(f"{strategy}: accuracy {accuracy:.4f} over {len(selections)} questions -> {out}")
    return 0


def _cmd_eval_bench(args, cfg: RunConfig) -> int:
    _check_inputs_exist(args.bench, cfg.mock_fixture)
    expected = args.candidates if args.candidates > 0 else None
    items = load_bench(args.bench, expected_candidates=expected)
    backend = make_backend(cfg)
    method = _reward_method(cfg)
    report = eval_reward_bench(items, method, backend=backend, parallelism=cfg.parallelism)
    out = Path(cfg.out_dir)
    _write_manifest(out, "eval-bench", cfg, [args.bench, cfg.mock_fixture])
    report.write(out)
    print(f"eval-bench[{method}]: accuracy {report.accuracy:.4f} over {len(items)} items -> {out}")
    return 0


def _cmd_build_pairs(args, cfg: RunConfig) -> int:
    _check_inputs_exist(args.questions, cfg.mock_fixture)
    questions = load_questions(args.questions)
    backend = make_backend(cfg)
    result = build_dpo_pairs(
        questions,
        backend,
        n=cfg.n,
        k=cfg.k,
        temperature=cfg.temperature,
        max_tokens=cfg.max_tokens,
        seed=cfg.seed,
        iteration=cfg.iteration,
        parallelism=cfg.parallelism,
    )
    out = Path(cfg.out_dir)
    _write_manifest(out, "build-pairs", cfg, [args.questions, cfg.mock_fixture])
    result.write(out)
    print(
        f"build-pairs: {len(result.pairs)} pairs "
        f"({len(result.skipped)} questions skipped) -> {out}"
    )
    return 0


def _cmd_filter(args, cfg: RunConfig) -> int:
    _check_inputs_exist(args.questions, args.samples)
    questions = load_questions(args.questions)
    samples = load_samples(args.samples)
    result = filter_data(questions, samples, mode=args.mode)
    out = Path(cfg.out_dir)
    _write_manifest(out, "filter", cfg, [args.questions, args.samples])
    result.write(out)
    print(
        f"filter[{args.mode}]: {len(result.records)} records "
        f"({len(result.skipped)} questions skipped) -> {out}"
    )
    return 0


def _cmd_theory_check(args, cfg: RunConfig) -> int:
    _check_inputs_exist(args.models)
    models = load_toy_models(args.models)
    out = Path(cfg.out_dir)
    _write_manifest(out, "theory-check", cfg, [args.models])
    records = []
    lines = [f"models = {len(models)}"]
    for i in range(len(models)):
        for j in range(len(models)):
            if i == j:
                continue
            try:
                report = check_requirement(models[i], models[j])
            except MismatchedSupportError as exc:
                records.append({"m1": i, "m2": j, "error": str(exc)})
                continue
            records.append(
                {
                    "m1": i,
                    "m2": j,
                    "p_correct_1": float(report.p_correct_1),
                    "p_correct_2": float(report.p_correct_2),
                    "e_plus_diff": float(report.e_plus_diff),
                    "e_minus_diff": float(report.e_minus_diff),
                    "hypothesis_holds": report.hypothesis_holds,
                    "requirement_holds": report.requirement_holds,
                }
            )
            lines.append(
                f"m{i} vs m{j}: p1={float(report.p_correct_1):.6f} "
                f"p2={float(report.p_correct_2):.6f} "
                f"hypothesis={report.hypothesis_holds} requirement={report.requirement_holds}"
            )
    write_jsonl(out / "dominance.jsonl", records)
    (out / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print("\n".join(lines))
    return 0


def _cmd_report(args, cfg: RunConfig) -> int:
    _check_inputs_exist(args.points)
    points, labels = load_points(args.points)
    report = correlation_report(points, labels)
    out = Path(cfg.out_dir)
    _write_manifest(out, "report", cfg, [args.points])
    report.write(out)
    print(report.table, end="")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on usage errors; here 2 means backend
    failure, so usage problems are rethrown as config errors (exit 1)."""

    def error(self, message):
        raise ConfigError(message)


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override its keys")
    parser.add_argument("--backend-url", dest="backend_url", help="OpenAI-compatible base URL")
    parser.add_argument("--model", help="model id for the endpoint")
    parser.add_argument("--api-key-env", dest="api_key_env", help="env var holding the API key")
    parser.add_argument("--api", choices=["completions", "chat"], help="endpoint flavor")
    parser.add_argument("--mock", dest="mock_fixture", help="JSONL fixture for the mock backend")
    parser.add_argument("--cache-dir", dest="cache_dir", help="response cache directory")
    parser.add_argument("--out", dest="out_dir", help="output directory (default: out)")
    parser.add_argument("--n", type=int, help="samples per question")
    parser.add_argument("--temperature", type=float, help="sampling temperature")
    parser.add_argument("--max-tokens", dest="max_tokens", type=int, help="max completion tokens")
    parser.add_argument("--seed", type=int, help="base sampling seed (per-sample seeds derive from it)")
    parser.add_argument("--reward", choices=sorted(REWARD_FLAG_TO_METHOD), help="reward method")
    parser.add_argument("--k", type=int, help="pairs kept per question")
    parser.add_argument("--iteration", type=int, help="self-training iteration tag for emitted pairs")
    parser.add_argument("--parallelism", type=int, help="max in-flight backend requests")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="boxconf",
        description="Training-free confidence rewards over boxed answers: "
        "sampling, voting, best-of-N, reward benchmarking, preference pairs.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sample", help="sample n solutions per question")
    p.add_argument("--questions", required=True)
    _add_common_flags(p)

    p = sub.add_parser("score-solutions", help="teacher-force externally supplied solutions")
    p.add_argument("--questions", required=True)
    p.add_argument("--solutions", required=True)
    _add_common_flags(p)

    p = sub.add_parser("reward", help="sample (replaying a warm cache) and compute rewards")
    p.add_argument("--questions", required=True)
    _add_common_flags(p)

    p = sub.add_parser("vote", help="(reward-weighted) self-consistency over a samples file")
    p.add_argument("--questions", required=True)
    p.add_argument("--samples", required=True)
    p.add_argument("--strategy", choices=sorted(STRATEGY_FLAG_TO_NAME), default=None)
    _add_common_flags(p)

    p = sub.add_parser("bon", help="best-of-N over a samples file")
    p.add_argument("--questions", required=True)
    p.add_argument("--samples", required=True)
    _add_common_flags(p)

    p = sub.add_parser("eval-bench", help="pick-best-candidate benchmark for a reward method")
    p.add_argument("--bench", required=True)
    p.add_argument("--candidates", type=int, default=10, help="expected candidates per item (0 disables the check)")
    _add_common_flags(p)

    p = sub.add_parser("build-pairs", help="construct a confidence-gap preference dataset")
    p.add_argument("--questions", required=True)
    _add_common_flags(p)

    p = sub.add_parser("filter", help="keep one correct solution per question by confidence")
    p.add_argument("--questions", required=True)
    p.add_argument("--samples", required=True)
    p.add_argument("--mode", choices=["highest", "lowest"], required=True)
    _add_common_flags(p)

    p = sub.add_parser("theory-check", help="exact dominance checks on toy-model fixtures")
    p.add_argument("--models", required=True)
    _add_common_flags(p)

    p = sub.add_parser("report", help="correlation table from model-level score points")
    p.add_argument("--points", required=True)
    _add_common_flags(p)

    return parser


_COMMAND_DEFAULTS = {
    "build-pairs": {"n": 30, "k": 10, "temperature": 1.0},
}

_CONFIG_FLAG_KEYS = (
    "backend_url",
    "model",
    "api_key_env",
    "api",
    "mock_fixture",
    "cache_dir",
    "out_dir",
    "n",
    "temperature",
    "max_tokens",
    "seed",
    "reward",
    "k",
    "iteration",
    "parallelism",
)


def _dispatch(args) -> int:
    overrides = {key: getattr(args, key, None) for key in _CONFIG_FLAG_KEYS}
    cfg = build_config(args.config, overrides, _COMMAND_DEFAULTS.get(args.command))
    if args.command == "sample":
        return _cmd_sample(args, cfg, with_reward=False)
    if args.command == "reward":
        return _cmd_sample(args, cfg, with_reward=True)
    if args.command == "score-solutions":
        return _cmd_score_solutions(args, cfg)
    if args.command == "vote":
        return _cmd_select(args, cfg, _strategy_name(args.strategy or cfg.strategy))
    if args.command == "bon":
        return _cmd_select(args, cfg, "bon")
    if args.command == "eval-bench":
        return _cmd_eval_bench(args, cfg)
    if args.command == "build-pairs":
        return _cmd_build_pairs(args, cfg)
    if args.command == "filter":
        return _cmd_filter(args, cfg)
    if args.command == "theory-check":
        return _cmd_theory_check(args, cfg)
    if args.command == "report":
        return _cmd_report(args, cfg)
    raise ConfigError(f"unknown command {args.command!r}")


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _dispatch(args)
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 2
    except (BoxconfError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
