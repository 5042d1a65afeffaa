"""Pipeline orchestration CLI.

Stages communicate through JSON Lines files under the output directory,
one subdirectory per repository, so any stage can resume from its
predecessor's artifacts:

    mine     -> bugfix_commits.jsonl, introducers.jsonl, bug_introducing.json
    sample   -> targets.jsonl
    extract  -> records_<window>.jsonl
    classify -> verdicts_<window>.jsonl
    analyze  -> contingency.csv, summary.json
    eval     -> metrics.csv, metrics.txt
    report   -> report.txt

Every stage writes a manifest and refuses to overwrite without --force.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__, bugfix, classify, manifest, metrics, records, stats, szz
from .config import PipelineConfig, load_config, window_label
from .errors import CcimpactError
from .gitcore import CommitMeta, GitRepo


def _open_repo(cfg: PipelineConfig, label: str, path: str) -> GitRepo:
    return GitRepo(path, name=label, clock=cfg.clock)


def _repo_dir(cfg: PipelineConfig, label: str) -> Path:
    d = cfg.output_dir / label
    d.mkdir(parents=True, exist_ok=True)
    return d


def _commit_to_json(c: CommitMeta) -> str:
    return json.dumps({
        "id": c.id, "author_time": c.author_time, "message": c.message,
        "parent_ids": list(c.parent_ids), "repo_name": c.repo_name,
    }, sort_keys=True)


def _commit_from_json(line: str) -> CommitMeta:
    obj = json.loads(line)
    return CommitMeta(obj["id"], obj["author_time"], obj["message"],
                      tuple(obj["parent_ids"]), obj["repo_name"])


# --- stages ------------------------------------------------------------


def cmd_mine(cfg: PipelineConfig, args) -> int:
    cfg.validate_for_run()
    cfg_hash = manifest.config_hash(args.config)
    for label, path in cfg.repos:
        repo = _open_repo(cfg, label, path)
        out = _repo_dir(cfg, label)
        outputs = [out / "bugfix_commits.jsonl", out / "introducers.jsonl",
                   out / "bug_introducing.json"]
        manifest.check_overwrite(outputs, args.force)

        fixes = bugfix.find_bugfix_commits(repo, cfg.ruleset,
                                           exclude_merges=cfg.exclude_merges)
        with open(outputs[0], "w", encoding="utf-8") as fh:
            for c in fixes:
                fh.write(_commit_to_json(c) + "\n")

        blamable = [f for f in fixes if f.parent_ids]
        batch = szz.find_all_bug_introducing(repo, blamable, cfg.szz_filters)
        with open(outputs[1], "w", encoding="utf-8") as fh:
            szz.write_report(batch, fh)
        with open(outputs[2], "w", encoding="utf-8") as fh:
            json.dump({
                "introducers": sorted(batch.introducers),
                "failures": batch.failures,
            }, fh, indent=2, sort_keys=True)
            fh.write("\n")
        manifest.write_manifest("mine", out, [], outputs, cfg_hash)
        print(f"{label}: {len(fixes)} bug-fixing commits, "
              f"{len(batch.introducers)} bug-introducing, "
              f"{len(batch.failures)} failures")
    return 0


def cmd_sample(cfg: PipelineConfig, args) -> int:
    cfg.validate_for_run()
    cfg_hash = manifest.config_hash(args.config)
    for label, path in cfg.repos:
        repo = _open_repo(cfg, label, path)
        out = _repo_dir(cfg, label)
        source = out / "bug_introducing.json"
        target_file = out / "targets.jsonl"
        manifest.check_overwrite([target_file], args.force)
        with open(source, encoding="utf-8") as fh:
            introducers = set(json.load(fh)["introducers"])
        if not introducers:
            print(f"{label}: no bug-introducing commits; skipping")
            continue
        n = records.sample_size(len(introducers), cfg.confidence, cfg.margin)
        plan = records.SamplePlan(
            population=len(introducers), sample_size=n,
            confidence=cfg.confidence, margin=cfg.margin, seed=cfg.seed,
        )
        bug_targets, nonbug_targets, shortfall = records.select_targets(
            repo, introducers, plan)
        with open(target_file, "w", encoding="utf-8") as fh:
            for t in bug_targets + nonbug_targets:
                fh.write(json.dumps({
                    "commit": json.loads(_commit_to_json(t.commit)),
                    "is_bug_introducing": t.is_bug_introducing,
                }, sort_keys=True) + "\n")
        manifest.write_manifest("sample", out, [source], [target_file], cfg_hash)
        note = " (insufficient non-bug commits)" if shortfall else ""
        print(f"{label}: {len(bug_targets)} bug + {len(nonbug_targets)} "
              f"non-bug targets{note}")
    return 0


def _load_targets(path: Path) -> list[records.Target]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            c = obj["commit"]
            out.append(records.Target(
                CommitMeta(c["id"], c["author_time"], c["message"],
                           tuple(c["parent_ids"]), c["repo_name"]),
                obj["is_bug_introducing"],
            ))
    return out


def cmd_extract(cfg: PipelineConfig, args) -> int:
    cfg.validate_for_run()
    cfg_hash = manifest.config_hash(args.config)
    for label, path in cfg.repos:
        repo = _open_repo(cfg, label, path)
        out = _repo_dir(cfg, label)
        target_file = out / "targets.jsonl"
        targets = _load_targets(target_file)
        for window in cfg.windows:
            rec_file = out / f"records_{window_label(window)}.jsonl"
            manifest.check_overwrite([rec_file], args.force)
            recs, errors = records.build_records(repo, targets, window)
            with open(rec_file, "w", encoding="utf-8") as fh:
                records.write_records(recs, fh)
            manifest.write_manifest(f"extract.{window_label(window)}", out,
                                    [target_file], [rec_file], cfg_hash)
            print(f"{label} ({window_label(window)}d): {len(recs)} records, "
                  f"{len(errors)} target errors")
    return 0


def _make_classifier(cfg: PipelineConfig):
    settings = cfg.classifier
    if settings.kind == "heuristic":
        def run(record):
            return classify.classify_heuristic(record)
        return run
    if settings.kind == "mock":
        scripted = {}
        if settings.mock_verdicts:
            with open(settings.mock_verdicts, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        obj = json.loads(line)
                        scripted[obj["key"]] = obj

        def run(record):
            obj = scripted.get(classify.record_key(record))
            if obj is None:
                raise classify.MalformedResponse("no scripted verdict for record")
            return classify.ConsistencyVerdict(
                consistent_with_new_code=obj["consistent_with_new_code"],
                consistent_with_old_code=obj["consistent_with_old_code"],
                rationale=obj.get("rationale", ""),
                source="mock",
            )
        return run
    if settings.kind == "llm":
        client = classify.ChatClient(
            base_url=settings.base_url,
            model=settings.model,
            credential_env=settings.credential_env,
            temperature=settings.temperature,
            top_p=settings.top_p,
        )
        template = classify.PromptTemplate(settings.prompt, settings.few_shot_k)

        def run(record):
            return classify.classify_llm(record, template, client)
        return run
    raise CcimpactError(f"unknown classifier kind {settings.kind!r}")


def cmd_classify(cfg: PipelineConfig, args) -> int:
    cfg.validate_for_run()
    cfg_hash = manifest.config_hash(args.config)
    run_classifier = _make_classifier(cfg)
    concurrency = cfg.classifier.concurrency if cfg.classifier.kind == "llm" else 1
    for label, _path in cfg.repos:
        out = _repo_dir(cfg, label)
        for window in cfg.windows:
            rec_file = out / f"records_{window_label(window)}.jsonl"
            verdict_file = out / f"verdicts_{window_label(window)}.jsonl"
            if verdict_file.exists() and not (args.force or args.resume):
                manifest.check_overwrite([verdict_file], False)
            with open(rec_file, encoding="utf-8") as fh:
                recs = records.read_records(fh)
            done = classify.load_verdict_keys(verdict_file) if args.resume else set()
            todo = [r for r in recs if classify.record_key(r) not in done]
            mode = "a" if args.resume and done else "w"

            classified = unclassified = 0
            with open(verdict_file, mode, encoding="utf-8") as fh:
                if concurrency > 1:
                    with ThreadPoolExecutor(max_workers=concurrency) as pool:
                        results = list(pool.map(_safe_classify(run_classifier), todo))
                else:
                    results = [_safe_classify(run_classifier)(r) for r in todo]
                for record, (verdict, error) in zip(todo, results):
                    if verdict is None:
                        classify.write_verdict(fh, record, None, None, error)
                        unclassified += 1
                    else:
                        category = classify.categorize(
                            record, verdict,
                            strict_outdated=cfg.classifier.strict_outdated)
                        classify.write_verdict(fh, record, verdict, category)
                        classified += 1
            manifest.write_manifest(f"classify.{window_label(window)}", out,
                                    [rec_file], [verdict_file], cfg_hash)
            print(f"{label} ({window_label(window)}d): {classified} classified, "
                  f"{unclassified} unclassified, {len(done)} already done")
    return 0


def _safe_classify(run_classifier):
    def inner(record):
        try:
            return run_classifier(record), ""
        except CcimpactError as exc:
            return None, f"{type(exc).__name__}: {exc}"
    return inner


def _load_categorized(cfg: PipelineConfig):
    """(repo, window) -> [(category, is_bug_introducing)]; also returns the
    unclassified count per key and the verdict files read."""
    categorized = {}
    unclassified = {}
    inputs = []
    for label, _path in cfg.repos:
        out = cfg.output_dir / label
        for window in cfg.windows:
            wl = window_label(window)
            verdict_file = out / f"verdicts_{wl}.jsonl"
            if not verdict_file.exists():
                continue
            inputs.append(verdict_file)
            key = (label, wl)
            categorized.setdefault(key, [])
            unclassified.setdefault(key, 0)
            with open(verdict_file, encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    obj = json.loads(line)
                    if "category" not in obj:
                        unclassified[key] += 1
                        continue
                    categorized[key].append((
                        classify.RecordCategory(obj["category"]),
                        bool(obj["is_bug_introducing"]),
                    ))
    return categorized, unclassified, inputs


def cmd_analyze(cfg: PipelineConfig, args) -> int:
    cfg.validate_for_run()
    cfg_hash = manifest.config_hash(args.config)
    categorized, unclassified, inputs = _load_categorized(cfg)
    if not categorized:
        raise CcimpactError("no verdict files found; run classify first")
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    outputs = [cfg.output_dir / "contingency.csv", cfg.output_dir / "summary.json"]
    manifest.check_overwrite(outputs, args.force)
    rows = stats.analysis_rows(categorized)
    with open(outputs[0], "w", encoding="utf-8", newline="") as fh:
        stats.write_csv_report(rows, fh)
    summary = stats.summary_json(rows)
    summary["unclassified"] = {f"{k[0]}:{k[1]}": v for k, v in unclassified.items()}
    with open(outputs[1], "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    manifest.write_manifest("analyze", cfg.output_dir, inputs, outputs, cfg_hash)
    for row in rows:
        if row.repo == "total":
            print(f"total ({row.window}d): OR {row.odds_ratio:.9f} "
                  f"[a={row.table.a} b={row.table.b} c={row.table.c} d={row.table.d}]")
    return 0


def cmd_eval(cfg: PipelineConfig, args) -> int:
    instances = classify.load_cup2(args.dataset)
    labels = [inst.label for inst in instances]
    if args.predictions:
        preds = []
        with open(args.predictions, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    obj = json.loads(line)
                    preds.append(bool(obj["prediction"] if isinstance(obj, dict) else obj))
    else:
        # built-in heuristic: positive iff the comments differ after
        # punctuation removal
        preds = [classify.recompute_cup2_label(inst) for inst in instances]
    cm = metrics.score(preds, labels)
    precision, recall, f1 = metrics.metrics(cm)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    outputs = [cfg.output_dir / "metrics.csv", cfg.output_dir / "metrics.txt"]
    manifest.check_overwrite(outputs, args.force)
    with open(outputs[0], "w", encoding="utf-8", newline="") as fh:
        fh.write("dataset,classifier,tp,fp,tn,fn,precision,recall,f1\n")
        name = "predictions" if args.predictions else "heuristic"
        fh.write(f"{args.dataset},{name},{cm.tp},{cm.fp},{cm.tn},{cm.fn},"
                 f"{precision:.4f},{recall:.4f},{f1:.4f}\n")
    table = (
        f"dataset: {args.dataset}\n"
        f"instances: {cm.total}  tp={cm.tp} fp={cm.fp} tn={cm.tn} fn={cm.fn}\n"
        f"precision: {precision:.4f}\nrecall:    {recall:.4f}\nf1:        {f1:.4f}\n"
    )
    with open(outputs[1], "w", encoding="utf-8") as fh:
        fh.write(table)
    cfg_hash = manifest.config_hash(args.config)
    manifest.write_manifest("eval", cfg.output_dir, [Path(args.dataset)],
                            outputs, cfg_hash)
    print(table, end="")
    return 0


def cmd_report(cfg: PipelineConfig, args) -> int:
    cfg.validate_for_run()
    cfg_hash = manifest.config_hash(args.config)
    summary_file = cfg.output_dir / "summary.json"
    if not summary_file.exists():
        raise CcimpactError("summary.json not found; run analyze first")
    with open(summary_file, encoding="utf-8") as fh:
        summary = json.load(fh)
    out_file = cfg.output_dir / "report.txt"
    manifest.check_overwrite([out_file], args.force)
    lines = ["Odds-ratio analysis: exposed = outdated/earlier-outdated records,",
             "event = record's new commit is bug-introducing.", ""]
    by_window: dict[str, list[dict]] = {}
    for row in summary["rows"]:
        by_window.setdefault(row["window"], []).append(row)
    for window, rows in sorted(by_window.items()):
        lines.append(f"Window ({window} days]")
        lines.append(f"{'repo':<16}{'a':>8}{'b':>8}{'c':>8}{'d':>8}  odds ratio")
        for row in rows:
            ratio = "n/a" if row["odds_ratio"] is None else f"{row['odds_ratio']:.9f}"
            lines.append(f"{row['repo']:<16}{row['a']:>8}{row['b']:>8}"
                         f"{row['c']:>8}{row['d']:>8}  {ratio}")
        lines.append("")
    if summary.get("unclassified"):
        lines.append("Unclassified records (excluded from the tables):")
        for key, count in sorted(summary["unclassified"].items()):
            lines.append(f"  {key}: {count}")
        lines.append("")
    text = "\n".join(lines)
    with open(out_file, "w", encoding="utf-8") as fh:
        fh.write(text)
    manifest.write_manifest("report", cfg.output_dir, [summary_file],
                            [out_file], cfg_hash)
    print(text)
    return 0


# --- entry point -------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ccimpact",
        description="Mine git history for the association between "
                    "code-comment inconsistency and bug introduction.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, required=name != "eval",
                       help="pipeline config file (INI key=value)")
        p.add_argument("--output-dir", type=Path, default=None,
                       help="override the configured output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the configured RNG seed")
        p.add_argument("--classifier", default=None,
                       help="override classifier kind (heuristic|llm|mock)")
        p.add_argument("--force", action="store_true",
                       help="overwrite existing stage outputs")
        p.set_defaults(func=func)
        return p

    add("mine", cmd_mine, "identify bug-fixing and bug-introducing commits")
    add("sample", cmd_sample, "sample target commits")
    add("extract", cmd_extract, "build method-change records per window")
    p_classify = add("classify", cmd_classify, "classify record consistency")
    p_classify.add_argument("--resume", action="store_true",
                            help="skip records already in the verdicts file")
    add("analyze", cmd_analyze, "contingency tables and odds ratios")
    p_eval = add("eval", cmd_eval, "score a classifier on a labeled dataset")
    p_eval.add_argument("--dataset", required=True,
                        help="CUP2-format JSON Lines dataset")
    p_eval.add_argument("--predictions", default=None,
                        help="JSON Lines predictions to score instead of the "
                             "built-in heuristic")
    add("report", cmd_report, "human-readable summary tables")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config is not None:
            cfg = load_config(args.config)
        else:
            cfg = PipelineConfig()
        if args.output_dir is not None:
            cfg.output_dir = args.output_dir
        if args.seed is not None:
            cfg.seed = args.seed
        if args.classifier is not None:
            cfg.classifier.kind = args.classifier
        return args.func(cfg, args)
    except (CcimpactError, FileExistsError, FileNotFoundError) as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)},
                  sys.stderr)
        sys.stderr.write("\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
