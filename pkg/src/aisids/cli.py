"""Command line entry point: ``aisids {synth,train,detect,dca,evolve,evaluate}``.

Exit codes: 0 ok, 2 input error, 3 coverage failure, 4 artifact mismatch.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import config as config_mod
from . import synth
from .clonal import LabeledSet, Population, history_lines, mature
from .dca import classify_mcav, run_dca
from .errors import AISError, EncodeError, InputError, SchemaError, SchemaMismatchError
from .io import read_frames, read_json, read_records, record_ids, write_json, write_text
from .lifecycle import GeneLibrary, archive, prune_stale, revalidate, seed_from_library
from .metrics import evaluate, parse_label
from .negsel import DetectorSet, SelfSet, classify_batch, generate_nsa, generate_vdetector
from .representation import FeatureSchema, encode_vector, fit_schema

logger = logging.getLogger("aisids")


def encode_records(records, schema: FeatureSchema, lenient=False, source="input"):
    X = np.zeros((len(records), schema.dim))
    for n, rec in enumerate(records):
        try:
            X[n] = encode_vector(rec, schema, lenient=lenient)
        except (SchemaError, EncodeError) as exc:
            raise InputError(f"{source}: row {n + 1}: {exc}") from None
    return X


def _load_schema(path) -> FeatureSchema:
    try:
        return FeatureSchema.from_dict(read_json(path))
    except (KeyError, TypeError) as exc:
        raise InputError(f"{path}: malformed schema ({exc})") from None


def _load_detectors(path) -> DetectorSet:
    try:
        return DetectorSet.from_dict(read_json(path))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: malformed detector set ({exc})") from None


def _derived_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def _generate(cfg, self_set, threads, fingerprint, first_id=0, generation=0, count=None, seed=None):
    n = cfg.negsel
    seed = n.seed if seed is None else seed
    if n.variant == "vdetector" and count is None:
        return generate_vdetector(self_set, n.target_coverage, seed, n.attempts(), threads=threads,
                                  schema_fingerprint=fingerprint, first_id=first_id,
                                  generation=generation)
    count = n.target_count if count is None else count
    attempts = n.max_attempts or 100 * count
    return generate_nsa(self_set, count, n.radius, seed, attempts, threads=threads,
                        schema_fingerprint=fingerprint, first_id=first_id, generation=generation)


# -- commands -------------------------------------------------------------

def cmd_synth(cfg, args):
    scenario = synth.generate(cfg.synth)
    files = synth.write(scenario, args.out_dir)
    print(f"wrote {len(files)} files to {args.out_dir}: {', '.join(p.name for p in files)}")
    return 0


def cmd_train(cfg, args):
    out = Path(args.out_dir)
    records = read_records(args.self_csv)
    if not records:
        raise InputError(f"{args.self_csv}: no data rows")
    schema = fit_schema(records)
    fp = schema.fingerprint()
    X = encode_records(records, schema, source=args.self_csv)
    self_set = SelfSet(X, cfg.negsel.self_radius)
    ds = _generate(cfg, self_set, args.threads, fp)

    if cfg.clonal.enabled:
        if not args.validation:
            raise InputError("clonal maturation needs --validation with a label column")
        vrec = read_records(args.validation)
        if not vrec or "label" not in vrec[0]:
            raise InputError(f"{args.validation}: a label column is required")
        val = LabeledSet(encode_records(vrec, schema, cfg.representation.lenient, args.validation),
                         [parse_label(r["label"]) for r in vrec])
        pop = Population(ds.detectors)
        history = []
        for pop, rec in mature(pop, val, cfg.clonal.maturation(cfg.negsel.radius), self_set,
                               snapshot_every=cfg.clonal.snapshot_every):
            history.append(rec)
        write_text(out / "maturation.jsonl", history_lines(history))
        ds = ds.replace(pop.members, params=dict(ds.params, clonal_generations=pop.generation,
                                                 best_fitness=pop.best, mean_fitness=pop.mean))

    ds.params["config_digest"] = cfg.digest()
    write_json(out / "schema.json", dict(schema.to_dict(), fingerprint=fp))
    write_json(out / "detectors.json", ds.to_dict())
    cov = ds.params.get("estimated_coverage")
    print(f"detectors: {len(ds)} (attempts {ds.params['attempts']})"
          + (f", estimated coverage {cov:.3f}" if cov is not None else ""))
    return 0


def cmd_detect(cfg, args):
    out = Path(args.out_dir)
    det_path = Path(args.detectors)
    ds = _load_detectors(det_path)
    schema = _load_schema(args.schema or det_path.with_name("schema.json"))
    lenient = args.lenient or cfg.representation.lenient
    records = read_records(args.traffic_csv)
    ids = record_ids(records)
    X = encode_records(records, schema, lenient, args.traffic_csv)
    t0 = time.perf_counter()
    verdicts = classify_batch(X, ds, schema.fingerprint()) if records else []
    runtime_ms = round(1000 * (time.perf_counter() - t0))
    lines = [json.dumps({"id": ag, "matched": v.matched}) + "\n"
             for ag, v in zip(ids, verdicts) if v.nonself]
    write_text(out / "alerts.jsonl", "".join(lines))
    write_json(out / "detectors.json", ds.to_dict())
    write_json(out / "detect_summary.json", {"antigens": len(ids), "alerts": len(lines),
                                             "detector_count": len(ds),
                                             "config_digest": cfg.digest()})
    print(f"antigens: {len(ids)}, alerts: {len(lines)}, detectors: {len(ds)}, "
          f"runtime_ms: {runtime_ms}")
    return 0


def cmd_dca(cfg, args):
    d = cfg.dca
    frames = read_frames(args.signals_csv, d.columns)
    t0 = time.perf_counter()
    table = run_dca(frames, d.pool_size, (d.threshold_low, d.threshold_high), d.seed, d.weights)
    verdicts = classify_mcav(table, d.anomaly_threshold)
    runtime_ms = round(1000 * (time.perf_counter() - t0))
    doc = table.to_dict()
    for ag, v in verdicts.items():
        doc[ag]["verdict"] = v
    write_json(Path(args.out_dir) / "mcav.json",
               {"format": "aisids.mcav", "anomaly_threshold": d.anomaly_threshold,
                "config_digest": cfg.digest(), "antigens": doc})
    counts = {k: list(verdicts.values()).count(k) for k in ("anomalous", "normal", "no-verdict")}
    print(f"frames: {len(frames)}, antigens: {len(doc)}, " +
          ", ".join(f"{k}: {v}" for k, v in counts.items()) + f", runtime_ms: {runtime_ms}")
    return 0


def cmd_evolve(cfg, args):
    out = Path(args.out_dir)
    det_path = Path(args.detectors)
    ds = _load_detectors(det_path)
    schema = _load_schema(args.schema or det_path.with_name("schema.json"))
    fp = schema.fingerprint()
    if fp != ds.schema_fingerprint:
        raise SchemaMismatchError("detector set was trained under a different feature schema")
    policy = cfg.lifecycle.policy
    lib_path = Path(args.library) if args.library else out / "library.json"
    library = (GeneLibrary.from_dict(read_json(lib_path)) if lib_path.exists()
               else GeneLibrary(policy.library_capacity))

    records = read_records(args.new_self_csv)
    if not records:
        raise InputError(f"{args.new_self_csv}: no data rows")
    self_set = SelfSet(encode_records(records, schema, cfg.representation.lenient, args.new_self_csv),
                       cfg.negsel.self_radius)
    target = len(ds)
    gen = ds.generation + 1
    invalid = []
    if gen % policy.revalidation_interval == 0:
        ds, invalid = revalidate(ds, self_set)
    ds, pruned = prune_stale(ds, policy, gen)
    archived = 0
    for d in sorted(invalid + pruned, key=lambda d: d.id):
        if d.match_count > 0:
            library = archive(d, library, gen)
            archived += 1

    deficit = target - len(ds)
    next_id = max([d.id for d in ds] + [d.id for d in invalid + pruned], default=-1) + 1
    rng = np.random.default_rng([cfg.lifecycle.seed, gen])
    n_lib = math.floor(policy.library_seed_fraction * deficit + 0.5)
    seeded = seed_from_library(library, n_lib, policy.seed_mutation_scale, self_set, rng,
                               first_id=next_id, generation=gen)
    fresh, random_attempts = [], 0
    remainder = deficit - len(seeded)
    if remainder > 0:
        topup = _generate(cfg, self_set, args.threads, fp, first_id=next_id + len(seeded),
                          generation=gen, count=remainder, seed=_derived_seed(cfg.negsel.seed, gen))
        fresh, random_attempts = topup.detectors, topup.params["attempts"]
    ds = ds.replace(ds.detectors + seeded + fresh, generation=gen)
    ds.params["config_digest"] = cfg.digest()
    summary = {"generation": gen, "kept": target - len(invalid) - len(pruned),
               "invalidated": len(invalid), "pruned": len(pruned), "archived": archived,
               "seeded": len(seeded), "library_attempts": n_lib if library.entries else 0,
               "random": len(fresh), "random_attempts": random_attempts,
               "library_size": len(library)}
    write_json(out / "detectors.json", ds.to_dict())
    write_json(out / "library.json", library.to_dict())
    write_json(out / "evolve_summary.json", summary)
    print(", ".join(f"{k}: {v}" for k, v in summary.items()))
    return 0


def _load_predictions(path) -> tuple[dict[str, bool], int | None]:
    """Return (id -> predicted anomalous, detector count or None for alert lists)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        doc = None
    if isinstance(doc, dict) and doc.get("format") == "aisids.mcav":
        return {ag: e["verdict"] == "anomalous" for ag, e in doc["antigens"].items()
                if e["verdict"] != "no-verdict"}, 0
    alerts = {}
    for n, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            alerts[str(json.loads(line)["id"])] = True
        except (json.JSONDecodeError, KeyError, TypeError):
            raise InputError(f"{path}: line {n} is not an alert record") from None
    return alerts, None


def cmd_evaluate(cfg, args):
    t0 = time.perf_counter()
    preds, det_count = _load_predictions(args.predictions)
    labels = {r["id"]: parse_label(r["label"]) for r in read_records(args.labels_csv)}
    if not labels:
        raise InputError(f"{args.labels_csv}: zero labeled rows")
    if det_count is None:
        # alerts list only positives: every labeled id without an alert was judged self
        extra = {ag: True for ag in preds if ag not in labels}
        preds = {ag: ag in preds for ag in labels} | extra
        det_count = len(_load_detectors(args.detectors)) if args.detectors else 0
    runtime = round(1000 * (time.perf_counter() - t0)) if args.timing else None
    report = evaluate(preds, labels, detector_count=det_count, config_digest=cfg.digest(),
                      runtime_ms=runtime)
    write_json(Path(args.out_dir) / "report.json", report.to_dict())
    f1 = "null" if report.f1 is None else f"{report.f1:.4f}"
    print(f"TP {report.true_positives} FP {report.false_positives} TN {report.true_negatives} "
          f"FN {report.false_negatives} | tpr {report.tpr:.4f} fpr {report.fpr:.4f} "
          f"precision {report.precision:.4f} f1 {f1} | skipped {report.skipped}")
    return 0


# -- argument parsing -----------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML configuration file")
    common.add_argument("--seed", type=int, help="override every seed in the configuration")
    common.add_argument("--threads", type=int, default=1, help="worker threads (never changes outputs)")
    common.add_argument("--out-dir", default=".", help="directory for output artifacts")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="aisids", description="Artificial immune system intrusion detection")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="generate a synthetic scenario")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("train", parents=[common], help="fit schema and generate detectors")
    s.add_argument("self_csv")
    s.add_argument("--validation", help="labeled CSV for clonal maturation")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("detect", parents=[common], help="classify traffic against detectors")
    s.add_argument("detectors")
    s.add_argument("traffic_csv")
    s.add_argument("--schema", help="schema file (default: schema.json beside the detectors)")
    s.add_argument("--lenient", action="store_true", help="encode unknown categories as all zeros")
    s.set_defaults(func=cmd_detect)

    s = sub.add_parser("dca", parents=[common], help="run the dendritic cell algorithm")
    s.add_argument("signals_csv")
    s.set_defaults(func=cmd_dca)

    s = sub.add_parser("evolve", parents=[common], help="revalidate, prune and reseed detectors")
    s.add_argument("detectors")
    s.add_argument("new_self_csv")
    s.add_argument("--library", help="gene library file (default: <out-dir>/library.json if present)")
    s.add_argument("--schema")
    s.set_defaults(func=cmd_evolve)

    s = sub.add_parser("evaluate", parents=[common], help="score alerts or an MCAV report against labels")
    s.add_argument("predictions", help="alerts.jsonl or mcav.json")
    s.add_argument("labels_csv")
    s.add_argument("--detectors", help="detector set, for the reported detector count")
    s.add_argument("--timing", action="store_true", help="record runtime_ms in the report")
    s.set_defaults(func=cmd_evaluate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        cfg = config_mod.load(args.config)
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed).validate()
        return args.func(cfg, args)
    except AISError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
