"""Command line interface.

Subcommands: score, mixture, corrupt, report, predict, dag, simulate.
Options can come from a config file (INI-style: flat key = value lines
under a [global] section or one section per subcommand, keys named like
the long flags without dashes); explicit flags override the file.

Exit codes: 0 success, 1 claim or check failure, 2 usage/config error,
3 I/O or file-format error.
"""
from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import causal, corruptions, predict, stats, svgplot, tgscores
from .errors import (
    AlignmentError,
    AuditError,
    ConfigError,
    InputError,
    IoFormatError,
    MissingImage,
)
from .images import decode_pnm, total_variation
from .tensorio import (
    CorrectnessTable,
    ScoreRecord,
    ScoreTable,
    check_alignment,
    load_correctness,
    load_manifest,
    load_npy,
    load_scores,
    write_manifest,
    write_scores,
)

EXIT_OK = 0
EXIT_CLAIM = 1
EXIT_CONFIG = 2
EXIT_IO = 3

_DEFAULTS = {
    "seed": 0,
    "temperature": tgscores.DEFAULT_TEMPERATURE,
    "p_c": None,
    "resamples": 1000,
    "permutations": 1000,
    "level": 0.95,
    "folds": 5,
    "sim_n": 1_000_000,
    "train_frac": 0.8,
}


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="iqaudit", description=__doc__.split("\n\n")[0])
    top.add_argument("--config", help="INI config file; flags override it")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="compute quality score tables")
    p.add_argument("--manifest")
    p.add_argument("--images", help="root directory for manifest image paths")
    p.add_argument("--logits", help="NPY logits aligned with the manifest")
    p.add_argument("--embeddings", help="NPY image embeddings (unnormalized ok)")
    p.add_argument("--text-weights", help="NPY zero-shot text weights")
    p.add_argument("--temperature", type=float)
    p.add_argument("--metrics", help="comma list of families: tv,tg,zsclip")
    p.add_argument("--ingest", help="comma list of external score CSVs to merge")
    p.add_argument("--out")

    p = sub.add_parser("mixture", help="assign corruptions to a clean manifest")
    p.add_argument("--manifest")
    p.add_argument("--p-c", type=float, dest="p_c")
    p.add_argument("--sweep", help="N range 'lo:hi'; p_c = N/100 per mixture")
    p.add_argument("--corruptions", help="comma list of kinds")
    p.add_argument("--severities", help="comma list of severities")
    p.add_argument("--seed", type=int)
    p.add_argument("--scores", help="score CSV covering all candidate variants (sweep)")
    p.add_argument("--correctness", help="correctness CSV covering all candidate variants (sweep)")
    p.add_argument("--metric")
    p.add_argument("--model")
    p.add_argument("--train-frac", type=float, dest="train_frac")
    p.add_argument("--resamples", type=int)
    p.add_argument("--level", type=float)
    p.add_argument("--out", help="manifest path, or output directory for --sweep")

    p = sub.add_parser("corrupt", help="materialize a corrupted mixture on disk")
    p.add_argument("--manifest")
    p.add_argument("--images", help="input image root")
    p.add_argument("--out-images", dest="out_images", help="output image root")
    p.add_argument("--p-c", type=float, dest="p_c")
    p.add_argument("--corruptions")
    p.add_argument("--severities")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output manifest path")

    p = sub.add_parser("report", help="correlation report over group means")
    p.add_argument("--scores")
    p.add_argument("--correctness")
    p.add_argument("--metrics", help="comma list of metric names")
    p.add_argument("--models", help="comma list of model names")
    p.add_argument("--seed", type=int)
    p.add_argument("--resamples", type=int)
    p.add_argument("--permutations", type=int)
    p.add_argument("--level", type=float)
    p.add_argument("--out", help="output directory")

    p = sub.add_parser("predict", help="predictability of correctness from a score")
    p.add_argument("--scores")
    p.add_argument("--correctness")
    p.add_argument("--metric")
    p.add_argument("--model")
    p.add_argument("--manifest", help="manifest supplying labels for per-label stats")
    p.add_argument("--per-image", action="store_true", default=None, dest="per_image")
    p.add_argument("--folds", type=int)
    p.add_argument("--train-frac", type=float, dest="train_frac")
    p.add_argument("--seed", type=int)
    p.add_argument("--resamples", type=int)
    p.add_argument("--level", type=float)
    p.add_argument("--out", help="output JSON path")

    p = sub.add_parser("dag", help="check separation claims and reference simulations")
    p.add_argument("--out", help="claims CSV path")
    p.add_argument("--sim-n", type=int, dest="sim_n")
    p.add_argument("--skip-sim", action="store_true", default=None, dest="skip_sim")
    p.add_argument("--seed", type=int)
    p.add_argument("--invert", help="flip the expectation of the named dag (testing aid)")

    p = sub.add_parser("simulate", help="sample a built-in structural model to CSV")
    p.add_argument("--scm", help="baseline_sim or shared_z_sim")
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    return top


def _apply_config(ns: argparse.Namespace) -> None:
    """Fill unset options from the config file, then from hard defaults."""
    from_file: dict[str, str] = {}
    if ns.config:
        path = Path(ns.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        cp = configparser.ConfigParser()
        try:
            cp.read_string(path.read_text(encoding="utf-8"), source=str(path))
        except configparser.Error as e:
            raise ConfigError(f"bad config file: {e}") from None
        for section in ("global", ns.command):
            if cp.has_section(section):
                from_file.update(cp.items(section))
    for dest, raw in from_file.items():
        dest = dest.replace("-", "_")
        if not hasattr(ns, dest):
            raise ConfigError(f"config key {dest!r} is not an option of {ns.command!r}")
        if getattr(ns, dest) is None:
            setattr(ns, dest, raw)
    for dest, value in _DEFAULTS.items():
        if hasattr(ns, dest) and getattr(ns, dest) is None:
            setattr(ns, dest, value)


def _num(ns, dest, conv):
    v = getattr(ns, dest, None)
    if v is None or isinstance(v, (int, float)):
        return v
    try:
        return conv(v)
    except ValueError:
        raise ConfigError(f"bad value for {dest}: {v!r}") from None


def _flag(ns, dest) -> bool:
    v = getattr(ns, dest, None)
    if v is None or isinstance(v, bool):
        return bool(v)
    low = str(v).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"bad boolean for {dest}: {v!r}")


def _require(ns, *dests):
    for dest in dests:
        if getattr(ns, dest, None) is None:
            flag = "--" + dest.replace("_", "-")
            raise ConfigError(f"{ns.command}: {flag} is required")


def _input_file(value: str, what: str) -> Path:
    p = Path(value)
    if not p.is_file():
        raise ConfigError(f"{what} not found: {p}")
    return p


def _split_list(raw: str | None) -> list[str]:
    if not raw:
        return []
    return [t.strip() for t in str(raw).split(",") if t.strip()]


def _out_path(value: str) -> Path:
    p = Path(value)
    if p.parent and not p.parent.exists():
        p.parent.mkdir(parents=True, exist_ok=True)
    return p


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_score(ns) -> int:
    _require(ns, "manifest", "out")
    manifest = load_manifest(_input_file(ns.manifest, "manifest"))
    families = _split_list(ns.metrics)
    if not families:
        families = [
            f
            for f, on in (
                ("tv", ns.images),
                ("tg", ns.logits),
                ("zsclip", ns.embeddings and ns.text_weights),
            )
            if on
        ]
    if not families and not ns.ingest:
        raise ConfigError("score: nothing to do (no inputs, metrics, or --ingest)")
    records: list[ScoreRecord] = []
    for family in families:
        if family == "tv":
            _require(ns, "images")
            for e in manifest:
                img_path = corruptions.resolve_image_path(ns.images, e.path)
                if not img_path.is_file():
                    raise MissingImage(str(img_path))
                tv = total_variation(decode_pnm(img_path.read_bytes()))
                records.append(ScoreRecord(e.image_id, e.corruption, e.severity, "tv", tv))
        elif family == "tg":
            _require(ns, "logits")
            logits = load_npy(_input_file(ns.logits, "logits"))
            check_alignment(logits, manifest)
            triples = tgscores.strong_tg_scores(logits.data)
            records.extend(tgscores.score_records(manifest, triples, tgscores.TG_METRIC_PREFIX))
        elif family == "zsclip":
            _require(ns, "embeddings", "text_weights")
            emb = load_npy(_input_file(ns.embeddings, "embeddings"))
            weights = load_npy(_input_file(ns.text_weights, "text weights"))
            check_alignment(emb, manifest)
            sims = tgscores.zeroshot_similarities(
                tgscores.normalize_rows(emb.data), tgscores.normalize_rows(weights.data)
            )
            triples = tgscores.zsclip_scores(sims, temperature=_num(ns, "temperature", float))
            records.extend(tgscores.score_records(manifest, triples, tgscores.ZSCLIP_METRIC_PREFIX))
        else:
            raise ConfigError(f"score: unknown metric family {family!r}")
    for extra in _split_list(ns.ingest):
        records.extend(load_scores(_input_file(extra, "ingested scores")))
    write_scores(ScoreTable(records), _out_path(ns.out))
    return EXIT_OK


def _policy(ns, p_c: float) -> corruptions.MixturePolicy:
    kinds = tuple(_split_list(ns.corruptions)) or corruptions.KINDS
    sevs = _split_list(ns.severities)
    severities = tuple(int(s) for s in sevs) if sevs else (1, 2, 3, 4, 5)
    return corruptions.MixturePolicy(kinds, severities, p_c, _num(ns, "seed", int))


def _mixture_tables(mix, scores: ScoreTable, correctness: CorrectnessTable, metric, model):
    want_s = {(r.image_id, r.corruption, r.severity): r for r in scores if r.metric == metric}
    want_c = {(r.image_id, r.corruption, r.severity): r for r in correctness if r.model == model}
    srec, crec = [], []
    for e in mix:
        k = e.key()
        if k not in want_s:
            raise InputError(f"score table lacks metric {metric!r} for variant {k}")
        if k not in want_c:
            raise InputError(f"correctness table lacks model {model!r} for variant {k}")
        srec.append(want_s[k])
        crec.append(want_c[k])
    return ScoreTable(srec), CorrectnessTable(crec)


def cmd_mixture(ns) -> int:
    _require(ns, "manifest", "out")
    manifest = load_manifest(_input_file(ns.manifest, "manifest"))
    if ns.sweep is None:
        p_c = _num(ns, "p_c", float)
        if p_c is None:
            raise ConfigError("mixture: --p-c (or --sweep) is required")
        mix = corruptions.build_mixture(manifest, _policy(ns, p_c))
        write_manifest(mix, _out_path(ns.out))
        return EXIT_OK

    lo, sep, hi = str(ns.sweep).partition(":")
    if not sep or not lo.isdigit() or not hi.isdigit() or int(lo) < 1 or int(hi) < int(lo):
        raise ConfigError(f"mixture: bad --sweep range {ns.sweep!r}, want 'lo:hi'")
    out_dir = Path(ns.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    run_predict = ns.scores is not None or ns.correctness is not None
    if run_predict:
        _require(ns, "scores", "correctness", "metric", "model")
        scores = load_scores(_input_file(ns.scores, "scores"))
        correctness = load_correctness(_input_file(ns.correctness, "correctness"))
    rows = []
    for n_pct in range(int(lo), int(hi) + 1):
        p_c = n_pct / 100.0
        mix = corruptions.build_mixture(manifest, _policy(ns, p_c))
        write_manifest(mix, out_dir / f"mixture_p{n_pct:02d}.jsonl")
        if run_predict:
            sub_s, sub_c = _mixture_tables(mix, scores, correctness, ns.metric, ns.model)
            split = predict.SplitSpec(_num(ns, "train_frac", float), "image_id", _num(ns, "seed", int))
            res = predict.pointwise_predictability(
                sub_s,
                sub_c,
                ns.metric,
                ns.model,
                split=split,
                resamples=_num(ns, "resamples", int),
                level=_num(ns, "level", float),
            )
            rows.append((p_c, res))
    if run_predict:
        from .tensorio import format_value

        with open(out_dir / "sweep.csv", "w", encoding="utf-8", newline="") as fh:
            fh.write("p_c,auc,auc_lo,auc_hi,ce,ce_lo,ce_hi\n")
            for p_c, res in rows:
                cells = [format_value(p_c)] + [
                    format_value(res[k]) for k in ("auc", "auc_lo", "auc_hi", "ce", "ce_lo", "ce_hi")
                ]
                fh.write(",".join(cells) + "\n")
        svg = svgplot.line_svg(
            [r[0] for r in rows],
            [r[1]["auc"] for r in rows],
            "p_c",
            "AUC",
            f"held-out AUC vs corrupted fraction ({ns.metric}, {ns.model})",
        )
        (out_dir / "sweep.svg").write_text(svg, encoding="utf-8")
    return EXIT_OK


def cmd_corrupt(ns) -> int:
    _require(ns, "manifest", "images", "out_images", "out")
    p_c = _num(ns, "p_c", float)
    if p_c is None:
        raise ConfigError("corrupt: --p-c is required")
    manifest = load_manifest(_input_file(ns.manifest, "manifest"))
    if not Path(ns.images).is_dir():
        raise ConfigError(f"image root not found: {ns.images}")
    mix = corruptions.corrupt_dataset(manifest, _policy(ns, p_c), ns.images, ns.out_images)
    write_manifest(mix, _out_path(ns.out))
    return EXIT_OK


def cmd_report(ns) -> int:
    _require(ns, "scores", "correctness", "metrics", "models", "out")
    scores = load_scores(_input_file(ns.scores, "scores"))
    correctness = load_correctness(_input_file(ns.correctness, "correctness"))
    out_dir = Path(ns.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    reports = []
    for metric in _split_list(ns.metrics):
        for model in _split_list(ns.models):
            groups = stats.group_means(scores, correctness, metric, model)
            reports.append(
                stats.correlation_report(
                    groups,
                    metric,
                    model,
                    resamples=_num(ns, "resamples", int),
                    permutations=_num(ns, "permutations", int),
                    level=_num(ns, "level", float),
                    seed=_num(ns, "seed", int),
                )
            )
            svg = svgplot.scatter_svg(
                [(g.mean_score, g.mean_correct, g.corruption) for g in groups],
                f"group mean {metric}",
                "group mean accuracy",
                f"{metric} vs accuracy ({model})",
            )
            name = f"scatter_{metric}_{model}.svg".replace("/", "_")
            (out_dir / name).write_text(svg, encoding="utf-8")
    stats.write_report_csv(reports, out_dir / "report.csv")
    return EXIT_OK


def cmd_predict(ns) -> int:
    _require(ns, "scores", "correctness", "metric", "model", "out")
    scores = load_scores(_input_file(ns.scores, "scores"))
    correctness = load_correctness(_input_file(ns.correctness, "correctness"))
    split = predict.SplitSpec(_num(ns, "train_frac", float), "image_id", _num(ns, "seed", int))
    res = predict.pointwise_predictability(
        scores,
        correctness,
        ns.metric,
        ns.model,
        split=split,
        resamples=_num(ns, "resamples", int),
        level=_num(ns, "level", float),
    )
    payload = {
        "metric": ns.metric,
        "model": ns.model,
        "auc": res["auc"],
        "auc_ci": [res["auc_lo"], res["auc_hi"]],
        "ce": res["ce"],
        "ce_ci": [res["ce_lo"], res["ce_hi"]],
        "n_train": res["n_train"],
        "n_test": res["n_test"],
        "mauc": None,
        "mauc_sigma": None,
        "skipped": None,
    }
    if ns.manifest is not None:
        labels = load_manifest(_input_file(ns.manifest, "manifest")).id_to_label()
        per_label = predict.per_label_predictability(
            scores, correctness, labels, ns.metric, ns.model, split=split
        )
        payload.update(
            mauc=per_label["mauc"],
            mauc_sigma=per_label["mauc_sigma"],
            mce=per_label["mce"],
            mce_sigma=per_label["mce_sigma"],
            skipped=per_label["skipped"],
        )
    if _flag(ns, "per_image"):
        kfold = predict.per_image_kfold(
            scores,
            correctness,
            ns.metric,
            ns.model,
            folds=_num(ns, "folds", int),
            seed=_num(ns, "seed", int),
        )
        payload.update(
            kfold_mauc=kfold["mauc"],
            kfold_mauc_sigma=kfold["mauc_sigma"],
            kfold_skipped=kfold["skipped"],
        )
    out = _out_path(ns.out)
    out.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_dag(ns) -> int:
    claims = causal.builtin_claims()
    if ns.invert:
        if ns.invert not in {c.dag for c in claims}:
            raise ConfigError(f"dag: --invert {ns.invert!r} does not match a built-in claim")
        claims = [
            causal.Claim(c.dag, c.a, c.b, c.z, not c.expected, c.informational)
            if c.dag == ns.invert
            else c
            for c in claims
        ]
    results = causal.verify_claims(claims)
    ok = True
    for r in results:
        print(r.describe())
        ok = ok and r.passed
    if ns.out:
        with open(_out_path(ns.out), "w", encoding="utf-8", newline="") as fh:
            fh.write("dag,a,b,z,expected,actual,passed,informational\n")
            for r in results:
                fh.write(
                    ",".join(
                        [
                            r.dag,
                            ";".join(sorted(r.a)),
                            ";".join(sorted(r.b)),
                            ";".join(sorted(r.z)),
                            str(r.expected),
                            str(r.actual),
                            str(r.passed),
                            str(r.informational),
                        ]
                    )
                    + "\n"
                )
    if not _flag(ns, "skip_sim"):
        n = _num(ns, "sim_n", int)
        seed = _num(ns, "seed", int)
        scms = causal.builtin_scms()
        scale = max(1.0, math.sqrt(1_000_000 / max(n, 1)))
        ace_tol, auc_tol = 0.005 * scale, 0.01 * scale

        frame = causal.simulate(scms["baseline_sim"], n, seed=seed)
        ace = causal.ace_estimate(frame)
        base_auc = causal.within_stratum_auc(frame)
        print(
            f"baseline_sim n={n}: |ACE| = {abs(ace.effect):.6f} (tol {ace_tol:.6f}), "
            f"stratum AUC = {base_auc:.4f} (want 0.5 +/- {auc_tol:.4f})"
        )
        ok = ok and abs(ace.effect) < ace_tol and abs(base_auc - 0.5) <= auc_tol

        frame = causal.simulate(scms["shared_z_sim"], n, seed=seed)
        shared_ace = causal.ace_estimate(frame)
        shared_auc = causal.within_stratum_auc(frame)
        print(
            f"shared_z_sim n={n}: stratum AUC = {shared_auc:.4f} (want > 0.6), "
            f"|ACE| = {abs(shared_ace.effect):.6f} (want > 0.05)"
        )
        ok = ok and shared_auc > 0.6 and abs(shared_ace.effect) > 0.05
    return EXIT_OK if ok else EXIT_CLAIM


def cmd_simulate(ns) -> int:
    _require(ns, "scm", "n", "out")
    scms = causal.builtin_scms()
    if ns.scm not in scms:
        raise ConfigError(f"simulate: unknown scm {ns.scm!r}, have {sorted(scms)}")
    frame = causal.simulate(scms[ns.scm], _num(ns, "n", int), seed=_num(ns, "seed", int))
    causal.write_frame_csv(frame, _out_path(ns.out))
    return EXIT_OK


_COMMANDS = {
    "score": cmd_score,
    "mixture": cmd_mixture,
    "corrupt": cmd_corrupt,
    "report": cmd_report,
    "predict": cmd_predict,
    "dag": cmd_dag,
    "simulate": cmd_simulate,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        _apply_config(ns)
        return _COMMANDS[ns.command](ns)
    except AlignmentError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except (IoFormatError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except AuditError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CLAIM


if __name__ == "__main__":
    sys.exit(main())
