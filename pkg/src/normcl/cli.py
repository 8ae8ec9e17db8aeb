"""Command-line workflow: embed, score, train, evaluate, compare.

Every command echoes its effective merged configuration into the output
directory, so a run directory is self-describing.  All artifacts are
deterministic functions of (inputs, seed): reports are sorted-key JSON,
traces are CSV with repr-round-trip floats, and no output embeds wall
clock or hostnames, which is what makes byte-identical reruns possible.

Trace convention: the row for update t records the competence that was
used to SAMPLE update t (so the first row is exactly c0) and the m_t
column holds the monotone norm driver the schedule consumed at that
moment.  Recomputing the schedule formula offline from a row's own
step/m_t therefore reproduces the competence column exactly.
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .bleu import bleu_report
from .config import (
    CurriculumConfig, RunConfig, apply_overrides, config_hash,
    load_config_file, require_file, run_config_from_dict, run_config_to_dict,
)
from .corpus import (
    UNK_ID, MergeTable, ParallelCorpus, Vocabulary, build_vocab,
    detokenize_subwords, learn_merges, load_parallel, read_lines, tokenize,
)
from .curriculum import (
    CompetenceSchedule, DifficultyProfile, SamplerState, competence_norm,
    competence_time, sample_batch, sentence_weight,
)
from .decoding import decode_corpus
from .embedding import EmbeddingTable, train_sgns
from .errors import ConfigError, DataError, NormclError
from .model import Transformer, build_batch
from .optim import AdamState, lr_schedule
from .trainer import (
    TrainerState, load_checkpoint, save_checkpoint, token_accuracy, train_step,
)

__all__ = ["main", "cmd_embed", "cmd_score", "cmd_train", "cmd_evaluate",
           "cmd_compare", "cmd_schedule_dump"]

VECTORS_FILE = "vectors.txt"
NORMS_FILE = "norms.tsv"
VOCAB_SRC_FILE = "vocab.src.tsv"
VOCAB_TGT_FILE = "vocab.tgt.tsv"
MERGES_SRC_FILE = "merges.src.txt"
MERGES_TGT_FILE = "merges.tgt.txt"
DIFFICULTY_FILE = "difficulty.tsv"
TRACE_FILE = "trace.csv"
CKPT_LAST = "checkpoint-last.ckpt"
CKPT_BEST = "checkpoint-best.ckpt"
CONFIG_ECHO = "config.json"
TRAIN_REPORT = "train_report.json"
EVAL_REPORT = "eval_report.json"
TRANSLATIONS_FILE = "translations.txt"
COMPARE_REPORT = "compare_report.json"

TRACE_HEADER = "step,m_t,competence,eligible_fraction,mean_weight,loss,lr"


def _fmt(x) -> str:
    return repr(float(x))


def _write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _prepare_out(config: RunConfig) -> Path:
    out = config.resolved_out_dir()
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / CONFIG_ECHO, run_config_to_dict(config))
    return out


# ---------------------------------------------------------------------------
# Shared corpus preparation
# ---------------------------------------------------------------------------

def _prepare_side(path, merges_count: int):
    tokenized = [tokenize(line) for line in read_lines(path)]
    merges = None
    units = tokenized
    if merges_count > 0:
        merges = learn_merges(tokenized, merges_count)
        units = [merges.apply(toks) for toks in tokenized]
    return units, merges


def _prepare_corpus(config: RunConfig):
    ccfg = config.corpus
    require_file(ccfg.source, "corpus.source")
    require_file(ccfg.target, "corpus.target")
    src_units, merges_src = _prepare_side(ccfg.source, ccfg.merges)
    tgt_units, merges_tgt = _prepare_side(ccfg.target, ccfg.merges)
    vocab_src = build_vocab(src_units, ccfg.min_count)
    vocab_tgt = build_vocab(tgt_units, ccfg.min_count)
    corpus = load_parallel(ccfg.source, ccfg.target, vocab_src, vocab_tgt,
                           ccfg.max_len, merges_src, merges_tgt)
    return vocab_src, vocab_tgt, merges_src, merges_tgt, corpus


def _load_run_vocabs(out: Path):
    vocab_src = Vocabulary.load(
        require_file(out / VOCAB_SRC_FILE, "source vocabulary (run train first)"))
    vocab_tgt = Vocabulary.load(
        require_file(out / VOCAB_TGT_FILE, "target vocabulary (run train first)"))
    merges_src = merges_tgt = None
    if (out / MERGES_SRC_FILE).is_file():
        merges_src = MergeTable.load(out / MERGES_SRC_FILE)
    if (out / MERGES_TGT_FILE).is_file():
        merges_tgt = MergeTable.load(out / MERGES_TGT_FILE)
    return vocab_src, vocab_tgt, merges_src, merges_tgt


# ---------------------------------------------------------------------------
# embed
# ---------------------------------------------------------------------------

def cmd_embed(config: RunConfig) -> Path:
    out = _prepare_out(config)
    ccfg = config.corpus
    require_file(ccfg.source, "corpus.source")
    src_units, merges_src = _prepare_side(ccfg.source, ccfg.merges)
    vocab = build_vocab(src_units, ccfg.min_count)

    # one vocabulary serves both the encoder and the difficulty vectors:
    # the module-level min_count knob collapses into the corpus threshold
    # here, and out-of-vocabulary tokens never enter the stream (their
    # difficulty comes from the max-norm unknown rule instead)
    sgns_cfg = replace(config.sgns, min_count=ccfg.min_count)
    lines = [[i for i in vocab.encode(toks) if i != UNK_ID] for toks in src_units]
    workers = 1 if config.deterministic else config.workers
    table = train_sgns(lines, sgns_cfg, vocab.tokens, workers=workers)

    vocab.save(out / VOCAB_SRC_FILE)
    if merges_src is not None:
        merges_src.save(out / MERGES_SRC_FILE)
    table.save_vectors(out / VECTORS_FILE)
    table.save_norms(out / NORMS_FILE)
    print(f"embed: {len(vocab)} vectors of dim {sgns_cfg.dim} -> {out / VECTORS_FILE}")
    return out


# ---------------------------------------------------------------------------
# score
# ---------------------------------------------------------------------------

def cmd_score(config: RunConfig, vectors: str | None = None) -> Path:
    out = _prepare_out(config)
    vocab_src, _, _, _, corpus = _prepare_corpus(config)
    cur = config.curriculum
    table = None
    if cur.criterion == "norm":
        vpath = require_file(vectors or out / VECTORS_FILE,
                             "vectors file for criterion=norm (run embed first)")
        table = EmbeddingTable.load_vectors(vpath)
        if list(table.tokens) != vocab_src.tokens:
            raise DataError(
                f"vectors in {vpath} do not match the corpus vocabulary"
            )
    profile = DifficultyProfile.build(corpus, cur.criterion, table=table,
                                      vocab=vocab_src, invert=cur.invert)
    profile.save(out / DIFFICULTY_FILE)
    print(f"score: {len(profile)} sentences by {cur.criterion} "
          f"-> {out / DIFFICULTY_FILE}")
    return out


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------

def _dev_pairs(config: RunConfig, vocab_src, vocab_tgt, merges_src, merges_tgt,
               corpus: ParallelCorpus):
    ccfg = config.corpus
    if ccfg.dev_source and ccfg.dev_target:
        require_file(ccfg.dev_source, "corpus.dev_source")
        require_file(ccfg.dev_target, "corpus.dev_target")
        dev = load_parallel(ccfg.dev_source, ccfg.dev_target, vocab_src,
                            vocab_tgt, ccfg.max_len, merges_src, merges_tgt)
        return dev.pairs
    return corpus.pairs[: min(200, len(corpus))]


def _build_schedule(cur: CurriculumConfig) -> CompetenceSchedule | None:
    if cur.kind == "none":
        return None
    if cur.kind == "time_sqrt":
        return CompetenceSchedule("time_sqrt", c0=cur.c0, lambda_t=cur.lambda_t,
                                  lambda_m=cur.lambda_m)
    return CompetenceSchedule("norm_based", c0=cur.c0, lambda_m=cur.lambda_m)


def cmd_train(config: RunConfig, resume: bool = False,
              checkpoint: str | None = None,
              difficulty: str | None = None) -> Path:
    out = _prepare_out(config)
    vocab_src, vocab_tgt, merges_src, merges_tgt, corpus = _prepare_corpus(config)
    vocab_src.save(out / VOCAB_SRC_FILE)
    vocab_tgt.save(out / VOCAB_TGT_FILE)
    if merges_src is not None:
        merges_src.save(out / MERGES_SRC_FILE)
    if merges_tgt is not None:
        merges_tgt.save(out / MERGES_TGT_FILE)
    dev_pairs = _dev_pairs(config, vocab_src, vocab_tgt, merges_src,
                           merges_tgt, corpus)

    cur = config.curriculum
    profile = None
    if cur.kind != "none":
        dpath = require_file(difficulty or out / DIFFICULTY_FILE,
                             "difficulty file (run score first)")
        profile = DifficultyProfile.load(dpath)
        if len(profile) != len(corpus):
            raise DataError(
                f"difficulty file covers {len(profile)} sentences, "
                f"corpus has {len(corpus)}"
            )
        if profile.criterion != cur.criterion:
            raise ConfigError(
                f"difficulty file was scored with criterion "
                f"{profile.criterion!r}, config says {cur.criterion!r}"
            )

    chash = config_hash(config)
    sampler = SamplerState(corpus, profile, cur.token_budget, cur.min_pool,
                           seed=(config.seed, 2),
                           natural_order=(cur.kind == "none"))
    trace_path = out / TRACE_FILE

    if resume:
        ckpt = require_file(checkpoint or out / CKPT_LAST,
                            "checkpoint to resume from")
        state = load_checkpoint(ckpt)
        if state.config_snapshot.get("hash") != chash:
            raise ConfigError(
                "refusing to resume: the checkpoint was produced under a "
                "different configuration (hash "
                f"{state.config_snapshot.get('hash')} != {chash})"
            )
        if "sampler_rng" in state.extra_state:
            sampler.set_rng_state(state.extra_state["sampler_rng"])
        peak_m = float(state.extra_state.get("peak_m", state.m0))
        evals = list(state.extra_state.get("evals", []))
        fresh_trace = not trace_path.exists()
    else:
        model = Transformer(config.model, len(vocab_src), len(vocab_tgt))
        state = TrainerState(
            model=model, adam=AdamState(model.params),
            schedule=_build_schedule(cur), matrix_norm_mode=cur.matrix_norm,
            config_snapshot={"hash": chash},
        )
        state.capture_anchor()
        peak_m = float(state.m0)
        evals = []
        fresh_trace = True

    schedule = state.schedule
    best_acc = max((e["token_accuracy"] for e in evals), default=float("-inf"))
    start_step = state.step + 1
    n = len(corpus)

    with open(trace_path, "w" if fresh_trace else "a", encoding="utf-8") as trace:
        if fresh_trace:
            trace.write(TRACE_HEADER + "\n")
        for t in range(start_step, config.total_steps + 1):
            if cur.kind == "none":
                c_used = 1.0
                driver_before = peak_m
            else:
                c_used = schedule.competence(state.step)
                driver_before = (schedule.driver if cur.kind == "norm_based"
                                 else peak_m)
            pairs = sample_batch(sampler, corpus, c_used)
            if cur.kind == "none":
                weights = None
            else:
                weights = np.array([
                    sentence_weight(float(profile.cdf[p.id]), c_used, cur.lambda_w)
                    for p in pairs
                ])
            lr = lr_schedule(t, config.optimizer.warmup, config.optimizer.peak_lr)
            metrics = train_step(state, build_batch(pairs), weights, lr)
            if schedule is not None:
                schedule.observe_norm(metrics["m_t"])
            peak_m = max(peak_m, float(metrics["m_t"]))

            if t == start_step or t % config.log_interval == 0 \
                    or t == config.total_steps:
                frac = sampler.eligible_count(c_used) / n
                mean_w = 1.0 if weights is None else float(np.mean(weights))
                trace.write(
                    f"{t},{_fmt(driver_before)},{_fmt(c_used)},{_fmt(frac)},"
                    f"{_fmt(mean_w)},{_fmt(metrics['loss'])},{_fmt(lr)}\n"
                )
            if t % config.eval_interval == 0 or t == config.total_steps:
                acc = token_accuracy(state.model, dev_pairs)
                evals.append({"step": t, "token_accuracy": float(acc),
                              "loss": float(metrics["loss"])})
                state.extra_state = {
                    "sampler_rng": sampler.rng_state(),
                    "peak_m": peak_m,
                    "evals": evals,
                }
                save_checkpoint(state, out / CKPT_LAST)
                if acc > best_acc:
                    best_acc = acc
                    save_checkpoint(state, out / CKPT_BEST)

    best = max(evals, key=lambda e: e["token_accuracy"])
    report = {
        "config_hash": chash,
        "kind": cur.kind,
        "criterion": cur.criterion,
        "m0": float(state.m0),
        "final_step": state.step,
        "final_accuracy": evals[-1]["token_accuracy"],
        "best": best,
        "evals": evals,
    }
    _write_json(out / TRAIN_REPORT, report)
    print(f"train: {state.step} steps, final dev token accuracy "
          f"{evals[-1]['token_accuracy']:.4f} -> {out}")
    return out


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------

def cmd_evaluate(config: RunConfig, test_source: str, test_target: str,
                 checkpoint: str | None = None) -> dict:
    out = _prepare_out(config)
    if checkpoint:
        ckpt = require_file(checkpoint, "checkpoint")
    elif (out / CKPT_BEST).is_file():
        ckpt = out / CKPT_BEST
    else:
        ckpt = require_file(out / CKPT_LAST, "checkpoint (run train first)")
    state = load_checkpoint(ckpt)
    vocab_src, vocab_tgt, merges_src, merges_tgt = _load_run_vocabs(out)

    src_lines = list(read_lines(require_file(test_source, "test source file")))
    tgt_lines = list(read_lines(require_file(test_target, "test target file")))
    if not src_lines or not tgt_lines:
        raise ConfigError("empty test file")
    if len(src_lines) != len(tgt_lines):
        raise DataError(
            f"test line counts differ: {len(src_lines)} vs {len(tgt_lines)}"
        )

    sources = []
    for i, line in enumerate(src_lines):
        toks = tokenize(line)
        if merges_src is not None:
            toks = merges_src.apply(toks)
        if not toks:
            raise DataError(f"test source line {i + 1} is empty")
        sources.append(vocab_src.encode(toks))

    hyps = decode_corpus(state.model, sources, config.eval.beam_config())
    hyp_words = []
    for h in hyps:
        words = vocab_tgt.decode(h.tokens)
        if merges_tgt is not None:
            words = detokenize_subwords(words)
        hyp_words.append(words)
    with open(out / TRANSLATIONS_FILE, "w", encoding="utf-8") as fh:
        for words in hyp_words:
            fh.write(" ".join(words) + "\n")

    refs = [tokenize(line) for line in tgt_lines]
    report = bleu_report(hyp_words, refs, smooth=config.eval.smooth_bleu)
    _write_json(out / EVAL_REPORT, report)
    truncated = sum(1 for h in hyps if h.truncated)
    print(f"evaluate: BLEU {report['bleu']:.2f} on {report['n_sentences']} "
          f"sentences ({truncated} truncated) -> {out / EVAL_REPORT}")
    return report


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------

def _reseeded(data: dict, seed: int, out_dir: Path) -> RunConfig:
    d = json.loads(json.dumps(data))
    d["seed"] = seed
    d.setdefault("sgns", {})["seed"] = seed
    d.setdefault("model", {})["seed"] = seed
    d["out_dir"] = str(out_dir)
    return run_config_from_dict(d)


def _run_arm(config: RunConfig) -> dict:
    if config.curriculum.kind != "none":
        if config.curriculum.criterion == "norm":
            cmd_embed(config)
        cmd_score(config)
    out = cmd_train(config)
    with open(out / TRAIN_REPORT, encoding="utf-8") as fh:
        return json.load(fh)


def _steps_to_target(evals, target: float):
    for e in evals:
        if e["token_accuracy"] >= target:
            return e["step"]
    return None


def cmd_compare(config_a: dict, config_b: dict, seeds, out_root: Path,
                target_accuracy: float | None = None,
                target_fraction: float = 0.9) -> dict:
    a_probe = run_config_from_dict(config_a)
    b_probe = run_config_from_dict(config_b)
    if config_a.get("corpus") != config_b.get("corpus"):
        raise ConfigError("compare arms must share the corpus block")
    if replace(a_probe.model, seed=0) != replace(b_probe.model, seed=0):
        raise ConfigError("compare arms must share model dimensions")

    out_root.mkdir(parents=True, exist_ok=True)
    rows = []
    for seed in seeds:
        arm_a = _run_arm(_reseeded(config_a, seed, out_root / f"seed{seed}" / "a"))
        arm_b = _run_arm(_reseeded(config_b, seed, out_root / f"seed{seed}" / "b"))
        target = (target_accuracy if target_accuracy is not None
                  else target_fraction * arm_b["final_accuracy"])
        steps_a = _steps_to_target(arm_a["evals"], target)
        steps_b = _steps_to_target(arm_b["evals"], target)
        row = {
            "seed": seed,
            "target_accuracy": float(target),
            "steps_a": steps_a if steps_a is not None else "not reached",
            "steps_b": steps_b if steps_b is not None else "not reached",
        }
        if steps_a is not None and steps_b is not None:
            row["ratio"] = steps_b / steps_a
        rows.append(row)

    reached_a = [r["steps_a"] for r in rows if isinstance(r["steps_a"], int)]
    reached_b = [r["steps_b"] for r in rows if isinstance(r["steps_b"], int)]
    median_row = {
        "seed": "median",
        "steps_a": statistics.median(reached_a) if reached_a else "not reached",
        "steps_b": statistics.median(reached_b) if reached_b else "not reached",
    }
    if reached_a and reached_b:
        median_row["ratio"] = median_row["steps_b"] / median_row["steps_a"]
    rows.append(median_row)

    report = {"target_metric": "token_accuracy", "rows": rows}
    _write_json(out_root / COMPARE_REPORT, report)
    print(f"compare: {len(seeds)} seeds -> {out_root / COMPARE_REPORT}")
    return report


# ---------------------------------------------------------------------------
# schedule-dump
# ---------------------------------------------------------------------------

def cmd_schedule_dump(args, out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "schedule.csv"
    lines = []
    if args.kind == "time_sqrt":
        if args.lambda_t is None:
            raise ConfigError("schedule-dump with kind=time_sqrt needs --lambda-t")
        lines.append("step,competence")
        for t in range(0, args.t_max + 1, args.t_step):
            lines.append(f"{t},{_fmt(competence_time(t, args.c0, args.lambda_t))}")
    else:
        if args.m0 is None:
            raise ConfigError("schedule-dump with kind=norm_based needs --m0")
        if args.m0 <= 0:
            raise ConfigError(f"--m0 must be positive, got {args.m0}")
        lines.append("m_t,competence")
        m = args.m0
        stop = args.m_max if args.m_max is not None else args.m0 * (1 + args.lambda_m)
        while m <= stop + 1e-12:
            c = competence_norm(m, args.m0, args.c0, args.lambda_m)
            lines.append(f"{_fmt(m)},{_fmt(c)}")
            m += args.m_step
    text = "\n".join(lines) + "\n"
    path.write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return path


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="override the run seed")
    common.add_argument("--deterministic", action="store_true",
                        help="force single-worker, byte-stable outputs")
    common.add_argument("--out", help="output directory (default: "
                        "$NORMCL_OUT or the working directory)")
    common.add_argument("--set", action="append", dest="overrides",
                        metavar="KEY=VALUE",
                        help="override any config field, e.g. curriculum.kind=none")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog="normcl",
        description="Curriculum-ordered seq2seq training driven by "
                    "word-vector norms.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("embed", parents=[common],
                   help="train difficulty word vectors on the source side")

    p = sub.add_parser("score", parents=[common],
                       help="write per-sentence difficulty (raw + cdf)")
    p.add_argument("--vectors", help="vectors file (default: <out>/vectors.txt)")

    p = sub.add_parser("train", parents=[common], help="run the training loop")
    p.add_argument("--resume", action="store_true",
                   help="continue from the latest checkpoint in the output dir")
    p.add_argument("--checkpoint", help="explicit checkpoint to resume from")
    p.add_argument("--difficulty",
                   help="difficulty file (default: <out>/difficulty.tsv)")

    p = sub.add_parser("evaluate", parents=[common],
                       help="decode a test set and report corpus BLEU")
    p.add_argument("--test-source", required=True)
    p.add_argument("--test-target", required=True)
    p.add_argument("--checkpoint",
                   help="checkpoint to load (default: best, then last)")

    p = sub.add_parser("compare", parents=[common],
                       help="train two configurations across seeds and "
                            "report steps-to-target")
    p.add_argument("--config-a", required=True, help="method configuration")
    p.add_argument("--config-b", required=True, help="baseline configuration")
    p.add_argument("--seeds", default="0,1,2",
                   help="comma-separated seed list (default 0,1,2)")
    p.add_argument("--target-accuracy", type=float,
                   help="explicit token-accuracy target")
    p.add_argument("--target-fraction", type=float, default=0.9,
                   help="target as a fraction of arm B's final accuracy "
                        "(default 0.9)")

    p = sub.add_parser("schedule-dump", parents=[common],
                       help="emit a competence curve without training")
    p.add_argument("--kind", required=True, choices=("time_sqrt", "norm_based"))
    p.add_argument("--c0", type=float, default=0.01)
    p.add_argument("--lambda-t", type=int, dest="lambda_t")
    p.add_argument("--lambda-m", type=float, dest="lambda_m", default=2.5)
    p.add_argument("--m0", type=float)
    p.add_argument("--t-max", type=int, dest="t_max", default=1000)
    p.add_argument("--t-step", type=int, dest="t_step", default=10)
    p.add_argument("--m-max", type=float, dest="m_max")
    p.add_argument("--m-step", type=float, dest="m_step", default=1.0)
    return parser


def _assemble_config(args) -> RunConfig:
    data = load_config_file(args.config) if args.config else {}
    data = apply_overrides(data, args.overrides)
    if args.seed is not None:
        data["seed"] = args.seed
    if args.deterministic:
        data["deterministic"] = True
    if args.out:
        data["out_dir"] = args.out
    return run_config_from_dict(data)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "embed":
            cmd_embed(_assemble_config(args))
        elif args.command == "score":
            cmd_score(_assemble_config(args), vectors=args.vectors)
        elif args.command == "train":
            cmd_train(_assemble_config(args), resume=args.resume,
                      checkpoint=args.checkpoint, difficulty=args.difficulty)
        elif args.command == "evaluate":
            cmd_evaluate(_assemble_config(args), args.test_source,
                         args.test_target, checkpoint=args.checkpoint)
        elif args.command == "compare":
            config_a = apply_overrides(load_config_file(args.config_a),
                                       args.overrides)
            config_b = apply_overrides(load_config_file(args.config_b),
                                       args.overrides)
            seeds = [int(s) for s in args.seeds.split(",") if s.strip() != ""]
            if not seeds:
                raise ConfigError("--seeds must list at least one seed")
            out_root = Path(args.out) if args.out else \
                run_config_from_dict({}).resolved_out_dir()
            cmd_compare(config_a, config_b, seeds, out_root,
                        target_accuracy=args.target_accuracy,
                        target_fraction=args.target_fraction)
        elif args.command == "schedule-dump":
            out = Path(args.out) if args.out else \
                run_config_from_dict({}).resolved_out_dir()
            cmd_schedule_dump(args, out)
        else:  # pragma: no cover - argparse enforces the choices
            raise ConfigError(f"unknown command {args.command!r}")
    except NormclError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
