"""Command-line entry point: ``uedkit {ingest,analyze,stance,report,all}``.

Exit codes: 0 success, 1 internal error, 2 usage, 3 config, 4 data,
5 provider.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import pipeline
from .config import load_config
from .errors import ConfigError, UedError
from .report import write_manifest

logger = logging.getLogger("uedkit")

STAGES = ("ingest", "analyze", "stance", "report")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="uedkit", description="Emotion dynamics of post corpora.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="key = value config file")
        sp.add_argument("--workers", type=int)
        return sp

    sp = common(sub.add_parser("ingest", help="clean, deduplicate and filter raw posts"))
    sp.add_argument("--input", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--filter-anchor")
    sp.add_argument("--filter-threshold", type=float)
    sp.add_argument("--no-filter", action="store_true")

    sp = common(sub.add_parser("analyze", help="monthly densities, home bases, era statistics"))
    sp.add_argument("--corpus", required=True)
    sp.add_argument("--lexicons", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--bin", choices=["month"])
    sp.add_argument("--rolling", type=int)
    sp.add_argument("--rolling-mode", choices=["trailing", "centered"])
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--split")

    sp = common(sub.add_parser("stance", help="sample and classify stance, evaluate on gold"))
    sp.add_argument("--corpus", required=True)
    sp.add_argument("--lexicons", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--per-month", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--temperature", type=float)
    sp.add_argument("--runs", type=int)
    sp.add_argument("--sweep", action="store_true", default=None)
    sp.add_argument("--gold")

    sp = common(sub.add_parser("report", help="render charts and tables"))
    sp.add_argument("--from", dest="source", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--charts", choices=["svg"], default="svg")
    sp.add_argument("--tables", choices=["csv"], default="csv")

    sp = common(sub.add_parser("all", help="run every stage, skipping completed ones"))
    sp.add_argument("--out", required=True)
    sp.add_argument("--input")
    sp.add_argument("--lexicons")
    sp.add_argument("--force", action="store_true", help="rerun completed stages")
    return p


def _overrides(args) -> dict:
    keys = {
        "workers": "workers", "filter_anchor": "filter.anchor", "filter_threshold": "filter.threshold",
        "input": "input", "corpus": "corpus", "lexicons": "lexicons", "bin": "bin",
        "rolling": "rolling", "rolling_mode": "rolling_mode", "alpha": "alpha", "split": "split",
        "per_month": "stance.per_month", "seed": "stance.seed", "temperature": "stance.temperature",
        "runs": "stance.runs", "sweep": "stance.sweep", "gold": "stance.gold",
    }
    out = {key: getattr(args, attr) for attr, key in keys.items() if getattr(args, attr, None) is not None}
    if getattr(args, "no_filter", False):
        out["filter.enabled"] = False
    if getattr(args, "out", None):
        out["output"] = args.out
    return out


def _stage_done(directory: Path, stage: str, digest: str) -> bool:
    marker = directory / "stage.json"
    if not marker.exists() or not (directory / "manifest.json").exists():
        return False
    try:
        info = json.loads(marker.read_text(encoding="utf-8"))
    except ValueError:
        return False
    return info == {"stage": stage, "config": digest}


def _mark(directory: Path, stage: str, digest: str) -> None:
    (directory / "stage.json").write_text(
        json.dumps({"stage": stage, "config": digest}, sort_keys=True) + "\n", encoding="utf-8")


def run_all(cfg, force: bool = False) -> None:
    root = Path(cfg.output)
    root.mkdir(parents=True, exist_ok=True)
    cfg.corpus = str(root / "ingest")
    digest = cfg.digest()
    steps = {
        "ingest": lambda d: pipeline.run_ingest(cfg, d),
        "analyze": lambda d: pipeline.run_analyze(cfg, d),
        "stance": lambda d: pipeline.run_stance(cfg, d),
        "report": lambda d: pipeline.run_report(cfg, root, d),
    }
    for stage in STAGES:
        d = root / stage
        if not force and _stage_done(d, stage, digest):
            logger.info("stage %s already complete, skipping", stage)
            continue
        logger.info("running stage %s", stage)
        steps[stage](d)
        _mark(d, stage, digest)
    cfg.write_frozen(root)
    write_manifest(root)


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, _overrides(args))
        if args.command == "ingest":
            s = pipeline.run_ingest(cfg, args.out)
            print(json.dumps(s.to_dict(), sort_keys=True))
        elif args.command == "analyze":
            print(json.dumps(pipeline.run_analyze(cfg, args.out), sort_keys=True))
        elif args.command == "stance":
            print(json.dumps(pipeline.run_stance(cfg, args.out), sort_keys=True))
        elif args.command == "report":
            made = pipeline.run_report(cfg, args.source, args.out)
            print(f"wrote {len(made)} artifacts to {args.out}")
        elif args.command == "all":
            if not cfg.input:
                raise ConfigError("missing required path: input")
            run_all(cfg, args.force)
            print(f"pipeline complete: {cfg.output}")
    except UedError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        ckpt = getattr(exc, "checkpoint", None)
        if ckpt:
            print(f"resume checkpoint: {ckpt}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # noqa: BLE001
        logger.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
