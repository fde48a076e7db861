from __future__ import annotations

from dataclasses import asdict, dataclass

from .errors import InputError

POSITIVE_LABELS = {"1", "anomaly", "anomalous", "attack", "nonself", "true", "malicious"}
NEGATIVE_LABELS = {"0", "normal", "benign", "self", "false"}


def parse_label(value: str) -> bool:
    v = str(value).strip().lower()
    if v in POSITIVE_LABELS:
        return True
    if v in NEGATIVE_LABELS:
        return False
    raise InputError(f"unrecognised label {value!r}")


@dataclass
class EvaluationReport:
    true_positives: int
    false_positives: int
    true_negatives: int
    false_negatives: int
    tpr: float
    fpr: float
    precision: float
    f1: float | None
    detector_count: int
    runtime_ms: int | None
    config_digest: str
    skipped: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def _ratio(a: int, b: int) -> float:
    return a / b if b else 0.0


def evaluate(predictions: dict[str, bool], labels: dict[str, bool], *, detector_count: int = 0,
             config_digest: str = "", runtime_ms: int | None = None) -> EvaluationReport:
    """Confusion counts over ids present in both mappings; the rest are skipped."""
    tp = fp = tn = fn = skipped = 0
    for ag, predicted in predictions.items():
        if ag not in labels:
            skipped += 1
            continue
        actual = labels[ag]
        if predicted and actual:
            tp += 1
        elif predicted:
            fp += 1
        elif actual:
            fn += 1
        else:
            tn += 1
    if tp + fp + tn + fn == 0:
        raise InputError("no labeled predictions to evaluate")
    tpr = _ratio(tp, tp + fn)
    precision = _ratio(tp, tp + fp)
    f1 = 2 * precision * tpr / (precision + tpr) if precision + tpr > 0 else None
    return EvaluationReport(tp, fp, tn, fn, tpr, _ratio(fp, fp + tn), precision, f1,
                            detector_count, runtime_ms, config_digest, skipped)
