"""Command-line surface: build-graphs, train, eval, rank, report.

Runs are driven by a key=value config file so sweeps are reproducible;
every run echoes its fully resolved configuration into the output
directory. All outputs are byte-identical across reruns with the same
inputs and seed.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

from . import diffgraph, embedding, evaluation, homograph, ranking, rgcn
from .dataset import DatasetError, load_dataset, parse_record
from .estimators import RootCauseRanker
from .evaluation import cross_validate, render_report, report_from_dict, report_to_dict

ERROR_PREFIX = "rootrank: error:"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Config:
    """Resolved run configuration; defaults follow the training protocol
    the model ships with (lr 5e-6, 20 epochs, pair batch 128, 2 layers,
    30 bases, 10-fold evaluation)."""

    dim: int = 128
    hidden_dim: int = 64
    layers: int = 2
    decomposition: str = "basis"
    num_bases: int = 30
    num_blocks: int = 8
    loss: str = "focal"
    alpha_t: float = 0.25
    gamma: float = 2.0
    pos_weight: float = 1.0
    lr: float = 5e-6
    epochs: int = 20
    pair_batch: int = 128
    k: int = 10
    seed: int = 0
    embedder: str = "hashed"
    fill_missing: bool = False


_PARSERS = {
    "dim": int, "hidden_dim": int, "layers": int, "num_bases": int,
    "num_blocks": int, "epochs": int, "pair_batch": int, "k": int,
    "seed": int, "alpha_t": float, "gamma": float, "pos_weight": float,
    "lr": float, "decomposition": str, "loss": str, "embedder": str,
    "fill_missing": lambda v: v.lower() in ("1", "true", "yes"),
}


def load_config(path: str | Path | None, seed_override: int | None = None) -> Config:
    values: dict = {}
    if path is not None:
        for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key not in _PARSERS:
                raise ConfigError(f"{path}:{lineno}: unknown config key '{key}'")
            try:
                values[key] = _PARSERS[key](value)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for '{key}': {exc}")
    config = Config(**values)
    if seed_override is not None:
        config = replace(config, seed=seed_override)
    return config


def echo_config(config: Config, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = [f"{key}={value}" for key, value in sorted(asdict(config).items())]
    (out_dir / "resolved-config.txt").write_text("\n".join(lines) + "\n",
                                                 encoding="utf-8")


def _ranker(config: Config) -> RootCauseRanker:
    embedder, vectors_path = config.embedder, None
    if embedder.startswith("file:"):
        embedder, vectors_path = "file", embedder[len("file:"):]
    return RootCauseRanker(
        hidden_dim=config.hidden_dim, layers=config.layers,
        decomposition=config.decomposition, num_bases=config.num_bases,
        num_blocks=config.num_blocks, loss=config.loss,
        alpha_t=config.alpha_t, gamma=config.gamma,
        pos_weight=config.pos_weight, lr=config.lr, epochs=config.epochs,
        pair_batch=config.pair_batch, seed=config.seed,
        embedder=embedder, embed_dim=config.dim, vectors_path=vectors_path,
        fill_missing=config.fill_missing)


def _safe_name(commit_id: str) -> str:
    return "".join(c if c.isalnum() or c in "-._" else "_" for c in commit_id)


def cmd_build_graphs(args) -> int:
    config = load_config(args.config, args.seed)
    records = load_dataset(args.dataset)
    out_dir = Path(args.out)
    echo_config(config, out_dir)

    def build(record):
        hetero = diffgraph.build_graph(record)
        homo = homograph.merge(hetero, fill=config.fill_missing)
        return record.commit_id, hetero, homo

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            built = list(pool.map(build, records))
    else:
        built = [build(r) for r in records]
    for commit_id, hetero, homo in built:
        stem = _safe_name(commit_id)
        (out_dir / f"{stem}.hetero.json").write_text(diffgraph.to_json(hetero),
                                                     encoding="utf-8")
        (out_dir / f"{stem}.homo.json").write_text(homograph.to_json(homo),
                                                   encoding="utf-8")
    print(f"wrote {len(built)} graph pairs to {out_dir}")
    return 0


def _load_graphs(graphs_dir: Path) -> list[homograph.HomoGraph]:
    paths = sorted(graphs_dir.glob("*.homo.json"))
    if not paths:
        raise DatasetError(f"no *.homo.json files under {graphs_dir}")
    return [homograph.from_json(p.read_text(encoding="utf-8")) for p in paths]


def _embedder_from_config(config: Config) -> embedding.Embedder:
    if config.embedder == "hashed":
        return embedding.HashedBagEmbedder(dim=config.dim, seed=config.seed)
    if config.embedder.startswith("file:"):
        return embedding.FileEmbedder(config.embedder[len("file:"):])
    raise ConfigError(f"unknown embedder '{config.embedder}'")


def cmd_train(args) -> int:
    config = load_config(args.config, args.seed)
    out_dir = Path(args.out)
    echo_config(config, out_dir)
    if args.graphs:
        graphs = _load_graphs(Path(args.graphs))
        emb = _embedder_from_config(config)
        graphs = [embedding.embed_graph(g, emb) for g in graphs]
        ranker = _ranker(config)
        model = rgcn.build_model(
            input_dim=emb.dim, hidden_dim=config.hidden_dim,
            num_layers=config.layers,
            num_relations=2 * len(diffgraph.RELATION_KINDS),
            decompositions=ranker._decompositions(),
            num_bases=config.num_bases, num_blocks=config.num_blocks,
            seed=config.seed)
        head = ranking.ScoreHead.create(dim=config.hidden_dim, seed=config.seed + 1)
        history = ranking.train(model, head, graphs,
                                ranker._train_config(), ranker._loss_config())
    else:
        records = load_dataset(args.dataset)
        ranker = _ranker(config)
        ranker.fit(records)
        model, head, history = ranker.model_, ranker.head_, ranker.history_
    rgcn.save_checkpoint(
        out_dir / "checkpoint.json", model,
        extra={"head.weight": head.weight, "head.bias": head.bias},
        meta={"embedder": config.embedder, "dim": config.dim,
              "hidden_dim": config.hidden_dim, "layers": config.layers,
              "decomposition": config.decomposition, "loss": config.loss,
              "lr": config.lr, "epochs": config.epochs, "seed": config.seed})
    log_lines = ["epoch,mean_loss,mean_P_ij"]
    log_lines += [f"{s.epoch},{s.mean_loss:.10f},{s.mean_p:.10f}" for s in history]
    (out_dir / "training-log.csv").write_text("\n".join(log_lines) + "\n",
                                              encoding="utf-8")
    print(f"lr={config.lr} epochs={config.epochs} -> {out_dir / 'checkpoint.json'}")
    return 0


def cmd_eval(args) -> int:
    config = load_config(args.config, args.seed)
    records = load_dataset(args.dataset)
    out_dir = Path(args.out)
    echo_config(config, out_dir)
    report = cross_validate(records, k=config.k, ranker=_ranker(config),
                            n_jobs=args.jobs)
    (out_dir / "report.json").write_text(
        json.dumps(report_to_dict(report), sort_keys=True), encoding="utf-8")
    suffix = "csv" if args.format == "csv" else "txt"
    rendered = render_report(report, fmt=args.format)
    (out_dir / f"report.{suffix}").write_bytes(rendered)
    sys.stdout.write(rendered.decode("utf-8"))
    return 0


def cmd_rank(args) -> int:
    model, extra, meta = rgcn.load_checkpoint(args.checkpoint)
    head = ranking.ScoreHead(weight=extra["head.weight"], bias=extra["head.bias"])
    raw = Path(args.commit).read_text(encoding="utf-8").strip()
    record = parse_record(json.loads(raw))
    config = Config(dim=int(meta.get("dim", 128)),
                    embedder=meta.get("embedder", "hashed"),
                    seed=int(meta.get("seed", 0)))
    emb = _embedder_from_config(config)
    hetero = diffgraph.build_graph(record)
    homo = embedding.embed_graph(homograph.merge(hetero), emb)
    result = ranking.rank_deletions(model, head, homo)
    for pos, entry in enumerate(result.entries, start=1):
        print(f"{pos} {entry.line_no} {entry.path} {entry.score:.6f}")
    return 0


def cmd_report(args) -> int:
    obj = json.loads(Path(args.report).read_text(encoding="utf-8"))
    report = report_from_dict(obj)
    sys.stdout.write(render_report(report, fmt=args.format).decode("utf-8"))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rootrank",
        description="Rank deleted lines of bug-fixing commits by "
                    "root-cause likelihood.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-graphs", help="serialize typed and homogeneous "
                                            "graphs for every commit")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_build_graphs)

    p = sub.add_parser("train", help="train a checkpoint")
    p.add_argument("--dataset")
    p.add_argument("--graphs", help="directory produced by build-graphs")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="cross-validated metrics report")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--format", choices=("csv", "text"), default="csv")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("rank", help="rank one commit's deleted lines")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--commit", required=True, help="single-commit JSON file")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("report", help="re-render a saved report.json")
    p.add_argument("--report", required=True)
    p.add_argument("--format", choices=("csv", "text"), default="csv")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "train" and not (args.dataset or args.graphs):
        print(f"{ERROR_PREFIX} train needs --dataset or --graphs", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except (DatasetError, ConfigError, ValueError, OSError, RuntimeError) as exc:
        print(f"{ERROR_PREFIX} {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
