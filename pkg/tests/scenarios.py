"""Shared desk-scale scenarios built from the synthetic generator."""

import numpy as np

from aisids.config import SynthSettings
from aisids.lifecycle import GeneLibrary, archive
from aisids.lifecycle import seed_from_library
from aisids.negsel import Detector, SelfSet, censor, classify_batch, generate_nsa
from aisids.representation import encode_vector, fit_schema
from aisids.synth import generate


def as_records(names, X):
    return [{n: float(v) for n, v in zip(names, row)} for row in X]


def encoded(spec=None):
    """Scenario with everything encoded under the schema fitted on the self-set."""
    sc = generate(spec or SynthSettings())
    schema = fit_schema(as_records(sc.feature_names, sc.self_train))
    enc = lambda X: np.array([encode_vector(r, schema) for r in as_records(sc.feature_names, X)])
    return sc, schema, enc


def recurring_attack_rates(n=1000, seed=42):
    """Acceptance rates of library-seeded vs uniform candidates after self drift.

    Detectors trained on the original self-set are run over the attack
    traffic; every detector that fired is archived. Self then drifts while
    attacks keep coming from the same regions.
    """
    sc, schema, enc = encoded()
    self_set = SelfSet(enc(sc.self_train), 0.05)
    ds = generate_nsa(self_set, 500, 0.1, seed, schema_fingerprint=schema.fingerprint())
    attacks = enc(sc.traffic[[l == "anomaly" for l in sc.traffic_labels]])
    classify_batch(attacks, ds)
    library = GeneLibrary(256)
    for d in ds:
        if d.match_count > 0:
            library = archive(d, library, 1)

    drifted = SelfSet(enc(sc.self_drift), 0.05)
    seeded = seed_from_library(library, n, 0.05, drifted, np.random.default_rng(seed))
    rng = np.random.default_rng(seed + 1)
    accepted_random = sum(not censor(Detector(0, rng.random(2), 0.1), drifted) for _ in range(n))
    return len(seeded) / n, accepted_random / n, library


def brute_force_mcav(frames, pool_size, lo, hi, seed):
    """Plain-dict reimplementation; thresholds drawn in the documented order."""
    rng = np.random.default_rng(seed)
    pool = []
    for _ in range(pool_size):
        pool.append({"t": float(rng.uniform(lo, hi)), "csm": 0.0, "k": 0.0, "bag": []})
    total, mature, migrated_bag = {}, {}, 0
    for f in frames:
        for i in range(pool_size):
            c = pool[i]
            c["bag"] = c["bag"] + list(f.active_antigens)
            c["csm"] = c["csm"] + (2 * f.pamp + 1 * f.danger + 2 * f.safe)
            c["k"] = c["k"] + (2 * f.pamp + 1 * f.danger - 3 * f.safe)
            if c["csm"] >= c["t"]:
                for ag in c["bag"]:
                    total[ag] = total.get(ag, 0) + 1
                    if c["k"] > 0:
                        mature[ag] = mature.get(ag, 0) + 1
                migrated_bag += len(c["bag"])
                pool[i] = {"t": float(rng.uniform(lo, hi)), "csm": 0.0, "k": 0.0, "bag": []}
    return {ag: mature.get(ag, 0) / n for ag, n in total.items()}, migrated_bag
