"""Command-line client for the benchmark service.

Every command talks HTTP to the service API.  By default the app is
mounted in-process (no socket, no separate server), so file paths in
commands refer to the local filesystem; pass --server to aim the same
commands at a remote instance instead, in which case paths are resolved
on that machine.
"""

from __future__ import annotations

import argparse
import asyncio
import sys

import httpx

from .svm import DEFAULT_C, DEFAULT_GAMMA


class ServiceError(Exception):
    def __init__(self, kind: str, message: str):
        self.kind = kind
        super().__init__(message)


def call_service(server: str | None, path: str, payload: dict) -> dict:
    """POST one request either in-process or to a remote server.  Domain
    failures (HTTP 4xx with the service's error envelope) raise
    ServiceError with the original exception class name."""

    async def run() -> dict:
        if server is None:
            from .service import app

            transport = httpx.ASGITransport(app=app)
            client = httpx.AsyncClient(
                transport=transport, base_url="http://tsrbench", timeout=None
            )
        else:
            client = httpx.AsyncClient(base_url=server, timeout=None)
        async with client:
            response = await client.post(path, json=payload)
        if response.status_code != 200:
            try:
                body = response.json()
            except ValueError:
                body = {}
            raise ServiceError(
                body.get("kind", f"HTTP{response.status_code}"),
                body.get("error", response.text),
            )
        return response.json()

    return asyncio.run(run())


def _cmd_check(args: argparse.Namespace) -> int:
    body = call_service(args.server, "/check", {"data_root": args.data_root})
    counts = {int(k): v for k, v in body["classes"].items()}
    print(f"classes: {len(counts)}")
    print(f"total images: {body['total']}")
    for class_id in sorted(counts):
        print(f"  class {class_id:2d}: {counts[class_id]:6d}")
    print("size histogram (longest side, pixels):")
    for bucket, n in body["size_histogram"].items():
        print(f"  {bucket}: {n}")
    print(f"imbalance ratio (largest/smallest class): {body['imbalance_ratio']:.2f}")
    return 0


def _cmd_features(args: argparse.Namespace) -> int:
    body = call_service(
        args.server,
        "/features",
        {
            "data_root": args.data_root,
            "pipeline": args.pipeline,
            "seed": args.seed,
            "out_path": args.out,
            "roi_crop": args.roi_crop,
        },
    )
    print(
        f"wrote {body['train_path']} ({body['train_count']} samples), "
        f"{body['val_path']} ({body['val_count']}), "
        f"{body['test_path']} ({body['test_count']}); "
        f"dim {body['dim']}, {body['seconds']:.1f}s"
    )
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    body = call_service(
        args.server,
        "/train",
        {
            "train_cache": args.cache,
            "c": args.c,
            "gamma": args.gamma,
            "out_model": args.out,
        },
    )
    print(f"model written to {body['model_path']}")
    print(f"classes: {len(body['classes'])}, pairs: {body['pair_count']}")
    stuck = [p for p in body["pairs"] if not p["converged"]]
    if stuck:
        for p in stuck:
            print(f"  pair ({p['class_a']}, {p['class_b']}): NOT converged")
    else:
        print("all pairs converged")
    print(f"training took {body['seconds']:.1f}s")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    body = call_service(
        args.server,
        "/eval",
        {
            "model": args.model,
            "cache": args.cache,
            "format": args.format,
            "split": args.split,
            "out": args.out,
        },
    )
    sys.stdout.write(body["rendered"])
    if body["written_to"]:
        print(f"wrote {body['written_to']}", file=sys.stderr)
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    body = call_service(
        args.server,
        "/bench",
        {
            "data_root": args.data_root,
            "seed": args.seed,
            "out_dir": args.out,
            "roi_crop": args.roi_crop,
        },
    )
    for row in body["rows"]:
        print(
            f"{row['pipeline']:<20} {row['split']:<11} "
            f"acc {row['accuracy']:.6f}  macro-F1 {row['macro_f1']:.6f}"
        )
    for t in body["timings"]:
        print(
            f"{t['pipeline']:<20} preprocess {t['preprocess_seconds']:.1f}s  "
            f"train {t['train_seconds']:.1f}s  eval {t['eval_seconds']:.1f}s"
        )
    print("files:")
    for path in body["files"]:
        print(f"  {path}")
    if body["failures"]:
        for failure in body["failures"]:
            print(f"FAILED {failure['pipeline']}: {failure['error']}", file=sys.stderr)
        return 1
    return 0


def _cmd_tune(args: argparse.Namespace) -> int:
    body = call_service(
        args.server,
        "/tune",
        {"train_cache": args.cache, "seed": args.seed, "out": args.out},
    )
    for cand in body["candidates"]:
        print(
            f"stage {cand['stage']}: C={cand['c']:.4f} gamma={cand['gamma']:.4f} "
            f"score={cand['score']:.6f}"
        )
    print(f"selected C={body['c']:.4f} gamma={body['gamma']:.4f}")
    if body["written_to"]:
        print(f"wrote {body['written_to']}")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tsrbench",
        description="Traffic-sign recognition benchmark over HOG features and an RBF-SVM.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument(
            "--server",
            default=None,
            help="base URL of a running service; default runs in-process",
        )

    p = sub.add_parser("check", help="summarize a dataset tree")
    common(p)
    p.add_argument("--data-root", required=True)
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("features", help="extract features into cache files")
    common(p)
    p.add_argument("--data-root", required=True)
    p.add_argument("--pipeline", default="HOG")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--roi-crop", action="store_true")
    p.add_argument("--out", required=True, help="cache path stem (.train/.val/.test added)")
    p.set_defaults(func=_cmd_features)

    p = sub.add_parser("train", help="train a model from a feature cache")
    common(p)
    p.add_argument("--cache", required=True, help="training cache file")
    p.add_argument("--c", type=float, default=DEFAULT_C)
    p.add_argument("--gamma", type=float, default=DEFAULT_GAMMA)
    p.add_argument("--out", required=True, help="model file to write")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="score a model against a feature cache")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--cache", required=True)
    p.add_argument("--format", choices=("md", "csv"), default="md")
    p.add_argument("--split", choices=("validation", "test", "train"), default=None)
    p.add_argument("--out", default=None, help="also write the report here")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("bench", help="run all seven pipelines end to end")
    common(p)
    p.add_argument("--data-root", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--roi-crop", action="store_true")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("tune", help="two-stage randomized hyperparameter search")
    common(p)
    p.add_argument("--cache", required=True, help="training cache file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="write the chosen (c, gamma) as JSON")
    p.set_defaults(func=_cmd_tune)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ServiceError as exc:
        print(f"error [{exc.kind}]: {exc}", file=sys.stderr)
        return 1
    except httpx.HTTPError as exc:
        print(f"connection error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
