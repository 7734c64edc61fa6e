# cli/main.py
# Command-line surface. Exit codes: 0 success, 1 check failure, 2 usage,
# parse or validation error.
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from ep.config import get_settings
from ep.core import best_edit_path, ep_forward
from ep.decode import LAMBDA_MAX, LAMBDA_MIN, predict_free, predict_lex
from ep.errors import LambdaOutOfRange
from ep.formats import load_lexicon, read_emissions, write_emissions, write_lexicon, write_matrix_dump
from ep.oracle import enumerate_paths
from lab.corpus import check_alphabet, feature_width, read_corpus, write_corpus
from lab.gradcheck import REL_TOL, check_emission_gradients
from lab.models import SynthConfig, default_alphabet
from lab.network import ToyModel
from lab.rng import SplitMix64
from lab.synth import generate_corpus, random_emissions, synthetic_lexicon
from lab.train import DEFAULT_LAMBDAS, evaluate, sweep_lambda, train

logger = logging.getLogger("cli")

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE = 0, 1, 2


def _fmt(value: float) -> str:
    return f"{value:#.12g}"


def _check_lambda(lam: float | None) -> None:
    if lam is not None and not LAMBDA_MIN <= lam <= LAMBDA_MAX:
        raise LambdaOutOfRange(f"--lambda must lie in [{LAMBDA_MIN}, {LAMBDA_MAX}], got {lam}")


# ---------- EP commands ----------

def cmd_score(args) -> int:
    em = read_emissions(args.emissions)
    target = em.alphabet.encode(args.target)
    log_ep = ep_forward(em, target).log_ep
    print(f"log_ep={_fmt(log_ep)} ep={_fmt(float(np.exp(log_ep)))}")
    return EXIT_OK


def cmd_matrix(args) -> int:
    em = read_emissions(args.emissions)
    target = em.alphabet.encode(args.target)
    matrix = ep_forward(em, target)
    path, log_prob = best_edit_path(em, target)
    write_matrix_dump(matrix, path, args.out)
    logger.info("wrote %dx%d matrix and a %d-step best path (ln p=%.6g) to %s",
                matrix.target_len + 1, matrix.frame_len + 1, len(path), log_prob, args.out)
    return EXIT_OK


def cmd_decode(args) -> int:
    _check_lambda(args.lam)
    em = read_emissions(args.emissions)
    if args.lexicon:
        lex = load_lexicon(args.lexicon, em.alphabet, fold_case=args.fold_case)
        lam = get_settings().default_lambda if args.lam is None else args.lam
        pred = predict_lex(em, lex, lam)
    else:
        pred = predict_free(em)
    print(f"prediction={pred.text.text} log_ep={_fmt(pred.log_score)} source={pred.source.value}")
    return EXIT_OK


def cmd_bench_lexicon(args) -> int:
    _check_lambda(args.lam)
    if args.repeat < 1:
        raise ValueError(f"--repeat must be at least 1, got {args.repeat}")
    em = read_emissions(args.emissions)
    lex = load_lexicon(args.lexicon, em.alphabet, fold_case=args.fold_case)
    lam = get_settings().default_lambda if args.lam is None else args.lam

    trie_times, enum_times = [], []
    for r in range(args.repeat):
        start = time.perf_counter()
        by_trie = predict_lex(em, lex, lam, method="trie")
        trie_times.append(time.perf_counter() - start)
        start = time.perf_counter()
        by_enum = predict_lex(em, lex, lam, method="enumerate")
        enum_times.append(time.perf_counter() - start)
        if by_trie.text.indices != by_enum.text.indices:
            print(f"mismatch on repeat {r}: trie={by_trie.text.text} enumerate={by_enum.text.text}", file=sys.stderr)
            return EXIT_CHECK_FAILED

    trie_s = float(np.mean(trie_times))
    enum_s = float(np.mean(enum_times))
    print(f"prediction={by_trie.text.text} words={len(lex)} frames={em.n}")
    print(f"trie_seconds={trie_s:.6f} enumerate_seconds={enum_s:.6f} speedup={enum_s / trie_s:.2f}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    em = read_emissions(args.emissions)
    target = em.alphabet.encode(args.target)
    paths = enumerate_paths(em, target)
    log_ep = ep_forward(em, target).log_ep
    print(f"paths={len(paths.paths)} enumerated={_fmt(paths.total)} dp={_fmt(float(np.exp(log_ep)))}")
    return EXIT_OK


# ---------- generators ----------

def _synth_config(args) -> SynthConfig:
    return SynthConfig(
        alphabet_size=args.alphabet_size,
        feature_dim=args.feature_dim,
        len_min=args.len_min,
        len_max=args.len_max,
        noise_sigma=args.sigma,
        p_drop=args.p_drop,
        p_dup=args.p_dup,
        seed=args.seed,
    )


def cmd_gen(args) -> int:
    cfg = _synth_config(args)
    corpus = generate_corpus(cfg, args.count)
    write_corpus(corpus, args.out)
    logger.info("wrote %d sample(s) to %s", len(corpus), args.out)
    return EXIT_OK


def cmd_gen_lexicon(args) -> int:
    alphabet = read_emissions(args.emissions).alphabet if args.emissions else default_alphabet(args.alphabet_size)
    words = synthetic_lexicon(alphabet, args.count, args.seed, args.len_min, args.len_max)
    write_lexicon(words, args.out)
    logger.info("wrote %d word(s) to %s", len(words), args.out)
    return EXIT_OK


def cmd_gen_emissions(args) -> int:
    alphabet = default_alphabet(args.alphabet_size)
    em = random_emissions(SplitMix64(args.seed), alphabet, args.frames, args.floor)
    write_emissions(em, args.out)
    logger.info("wrote %d frame(s) over %d symbols to %s", em.n, alphabet.size, args.out)
    return EXIT_OK


# ---------- toy lab ----------

def cmd_train(args) -> int:
    alphabet = default_alphabet(args.alphabet_size)
    corpus = read_corpus(args.corpus, alphabet)
    check_alphabet(corpus, alphabet)
    heldout = read_corpus(args.heldout, alphabet) if args.heldout else None
    model = ToyModel.initialized(alphabet, feature_width(corpus), seed=args.seed)
    trained, report = train(
        model,
        corpus,
        loss_kind=args.loss,
        epochs=args.epochs,
        rho=args.rho,
        eps=args.eps,
        seed=args.seed,
        batch_size=args.batch_size,
        heldout=heldout,
        workers=args.workers,
    )
    out = Path(args.out)
    trained.save(out.with_suffix(".npz"))
    out.with_suffix(".json").write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
    print(f"loss={args.loss} final_accuracy={report.final_accuracy:.4f} model={out.with_suffix('.npz')}")
    return EXIT_OK


def cmd_eval(args) -> int:
    _check_lambda(args.lam)
    model = ToyModel.load(args.model)
    corpus = read_corpus(args.corpus, model.alphabet)
    lex = load_lexicon(args.lexicon, model.alphabet, fold_case=args.fold_case) if args.lexicon else None
    accuracy = evaluate(model, corpus, lex, args.lam)
    print(f"accuracy={accuracy:.4f} samples={len(corpus)}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    model = ToyModel.load(args.model)
    corpus = read_corpus(args.corpus, model.alphabet)
    lex = load_lexicon(args.lexicon, model.alphabet, fold_case=args.fold_case)
    lambdas = args.lambdas or list(DEFAULT_LAMBDAS)
    for lam in lambdas:
        _check_lambda(lam)
    table = sweep_lambda(model, corpus, lex, lambdas)
    print(table.to_csv(index=False), end="")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    worst = check_emission_gradients(args.instances, args.seed, args.step)
    print(f"max_rel_err={worst:.3e} instances={args.instances}")
    return EXIT_OK if worst <= REL_TOL else EXIT_CHECK_FAILED


# ---------- parser ----------

def _add_synth_flags(p):
    p.add_argument("--alphabet-size", type=int, default=8)
    p.add_argument("--feature-dim", type=int, default=None)
    p.add_argument("--len-min", type=int, default=2)
    p.add_argument("--len-max", type=int, default=5)
    p.add_argument("--sigma", type=float, default=0.3)
    p.add_argument("--p-drop", type=float, default=0.0)
    p.add_argument("--p-dup", type=float, default=0.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ep", description="Edit probability scoring, decoding and toy training.")
    visible = "score,matrix,decode,bench-lexicon,gen,gen-lexicon,gen-emissions,train,eval,sweep,gradcheck"
    sub = parser.add_subparsers(dest="command", required=True, metavar="{" + visible + "}")

    p = sub.add_parser("score", help="print ln EP and EP of a target")
    p.add_argument("emissions")
    p.add_argument("target", help="target text; EOS is appended when absent")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("matrix", help="dump the EP matrix and best edit path as CSV")
    p.add_argument("emissions")
    p.add_argument("target")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_matrix)

    p = sub.add_parser("decode", help="predict a string, optionally with a lexicon")
    p.add_argument("emissions")
    p.add_argument("--lexicon")
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--fold-case", action="store_true")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("bench-lexicon", help="time EP-Trie against per-word scoring")
    p.add_argument("emissions")
    p.add_argument("lexicon")
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--fold-case", action="store_true")
    p.set_defaults(func=cmd_bench_lexicon)

    p = sub.add_parser("gen", help="write a synthetic misaligned corpus")
    _add_synth_flags(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--count", type=int, default=500)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("gen-lexicon", help="write a random word list")
    p.add_argument("--emissions", help="take the alphabet from this emission file")
    p.add_argument("--alphabet-size", type=int, default=37)
    p.add_argument("--count", type=int, default=50_000)
    p.add_argument("--len-min", type=int, default=2)
    p.add_argument("--len-max", type=int, default=9)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_lexicon)

    p = sub.add_parser("gen-emissions", help="write a random emission file")
    p.add_argument("--frames", type=int, default=30)
    p.add_argument("--alphabet-size", type=int, default=37)
    p.add_argument("--floor", type=float, default=0.0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_emissions)

    p = sub.add_parser("train", help="train the toy model with EP or FP loss")
    p.add_argument("--corpus", required=True)
    p.add_argument("--heldout")
    p.add_argument("--alphabet-size", type=int, default=8)
    p.add_argument("--loss", choices=("ep", "fp"), default="ep")
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output prefix; writes <out>.npz and <out>.json")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="exact-match accuracy of a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--lexicon")
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--fold-case", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="accuracy for a range of lambda values")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--lexicon", required=True)
    p.add_argument("--lambdas", type=float, nargs="+")
    p.add_argument("--fold-case", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gradcheck", help="compare analytic gradients with finite differences")
    p.add_argument("--instances", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--step", type=float, default=1e-6)
    p.set_defaults(func=cmd_gradcheck)

    # test-only: brute-force path enumeration next to the DP
    p = sub.add_parser("oracle")
    p.add_argument("emissions")
    p.add_argument("target")
    p.set_defaults(func=cmd_oracle)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = get_settings()
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=settings.log_level, format="[%(name)s] %(message)s")

    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        # EpError, pydantic and pandas parse errors are all ValueErrors
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
