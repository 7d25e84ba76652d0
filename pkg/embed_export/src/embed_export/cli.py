"""Command line front end: export-embeddings / export-text / export-logits."""

import argparse
import sys
from pathlib import Path

from .errors import ConfigError, ExportError, ImageError, ManifestError
from .export import ExportJob, export_image_embeddings, export_logits_and_correctness, export_text_weights


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="embed-export")
    sub = p.add_subparsers(dest="command", required=True)

    emb = sub.add_parser("export-embeddings", help="write an n x d image embedding tensor")
    emb.add_argument("--manifest", required=True)
    emb.add_argument("--images", help="root for relative manifest paths")
    emb.add_argument("--backbone", default="gistproj-64")
    emb.add_argument("--batch-size", type=int, default=64)
    emb.add_argument("--device", default="cpu")
    emb.add_argument("--out", required=True)

    txt = sub.add_parser("export-text", help="write a K x d class-prompt tensor")
    txt.add_argument("--names", required=True, help="text file, one label name per line")
    txt.add_argument("--template", default="a photo of a {}")
    txt.add_argument("--backbone", default="hashbow-64")
    txt.add_argument("--out", required=True)

    log = sub.add_parser("export-logits", help="write n x K logits and a correctness CSV")
    log.add_argument("--manifest", required=True)
    log.add_argument("--images", help="root for relative manifest paths")
    log.add_argument("--backbone", default="linprobe-64")
    log.add_argument("--batch-size", type=int, default=64)
    log.add_argument("--device", default="cpu")
    log.add_argument("--out", required=True)
    log.add_argument("--out-correctness", required=True)
    return p


def _read_names(path: str) -> list[str]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [ln.strip() for ln in lines if ln.strip()]


def main(argv: list[str] | None = None) -> int:
    try:
        ns = _parser().parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        if ns.command == "export-embeddings":
            emb = export_image_embeddings(
                ExportJob(ns.manifest, ns.backbone, ns.out, images_root=ns.images,
                          batch_size=ns.batch_size, device=ns.device)
            )
            print(f"wrote {emb.shape[0]}x{emb.shape[1]} embeddings to {ns.out}")
        elif ns.command == "export-text":
            w = export_text_weights(_read_names(ns.names), ns.template, ns.backbone, ns.out)
            print(f"wrote {w.shape[0]}x{w.shape[1]} text weights to {ns.out}")
        else:
            logits, correct = export_logits_and_correctness(
                ExportJob(ns.manifest, ns.backbone, ns.out, images_root=ns.images,
                          batch_size=ns.batch_size, device=ns.device,
                          out_correctness=ns.out_correctness)
            )
            print(
                f"wrote {logits.shape[0]}x{logits.shape[1]} logits to {ns.out}; "
                f"{int(correct.sum())}/{len(correct)} correct"
            )
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (ManifestError, ImageError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except ExportError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
