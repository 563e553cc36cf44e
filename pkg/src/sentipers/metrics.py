"""Confusion matrices and support-weighted F1."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError


def confusion(y_true, y_pred, n_classes: int) -> np.ndarray:
    """``M[t, p]`` = number of examples with true class t predicted as p."""
    y_true = np.asarray(y_true, dtype=np.int64).ravel()
    y_pred = np.asarray(y_pred, dtype=np.int64).ravel()
    if y_true.shape != y_pred.shape:
        raise DataError(f"length mismatch: {y_true.size} true labels vs {y_pred.size} predictions")
    for name, arr in (("y_true", y_true), ("y_pred", y_pred)):
        if arr.size and (arr.min() < 0 or arr.max() >= n_classes):
            raise DataError(f"{name} has labels outside [0, {n_classes})")
    m = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(m, (y_true, y_pred), 1)
    return m


def _safe_div(num, den):
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    return np.divide(num, den, out=np.zeros_like(num), where=den > 0)


def per_class(m) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """precision, recall, F1 and support per class; 0/0 is taken as 0."""
    m = np.asarray(m)
    tp = np.diag(m).astype(np.float64)
    precision = _safe_div(tp, m.sum(axis=0))
    recall = _safe_div(tp, m.sum(axis=1))
    f1 = _safe_div(2 * precision * recall, precision + recall)
    return precision, recall, f1, m.sum(axis=1)


def weighted_f1(m) -> float:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise DataError(f"confusion matrix must be square and non-empty, got shape {m.shape}")
    total = m.sum()
    if total == 0:
        raise DataError("confusion matrix is empty")
    _, _, f1, support = per_class(m)
    return float(np.dot(support / total, f1))


@dataclass
class MetricReport:
    precision: list
    recall: list
    f1: list
    support: list
    weighted_f1: float
    accuracy: float
    macro_f1: float
    confusion: list = field(default_factory=list)
    class_names: list = field(default_factory=list)

    @classmethod
    def from_confusion(cls, m, class_names=None) -> "MetricReport":
        m = np.asarray(m)
        p, r, f, s = per_class(m)
        names = list(class_names) if class_names else [str(i) for i in range(m.shape[0])]
        return cls(
            precision=p.tolist(), recall=r.tolist(), f1=f.tolist(), support=s.tolist(),
            weighted_f1=weighted_f1(m), accuracy=float(np.trace(m) / m.sum()),
            macro_f1=float(f.mean()), confusion=m.tolist(), class_names=names,
        )

    def as_dict(self) -> dict:
        return {
            "weighted_f1": self.weighted_f1, "accuracy": self.accuracy, "macro_f1": self.macro_f1,
            "precision": self.precision, "recall": self.recall, "f1": self.f1,
            "support": self.support, "confusion": self.confusion, "class_names": self.class_names,
        }

    def to_keyvalue(self) -> str:
        lines = [f"weighted_f1={self.weighted_f1!r}", f"accuracy={self.accuracy!r}", f"macro_f1={self.macro_f1!r}"]
        for name, p, r, f, s in zip(self.class_names, self.precision, self.recall, self.f1, self.support):
            lines.append(f"class.{name}.precision={p!r}")
            lines.append(f"class.{name}.recall={r!r}")
            lines.append(f"class.{name}.f1={f!r}")
            lines.append(f"class.{name}.support={s}")
        return "\n".join(lines) + "\n"

    def csv_header(self) -> list[str]:
        cols = ["weighted_f1", "accuracy", "macro_f1"]
        for name in self.class_names:
            cols += [f"{name}_precision", f"{name}_recall", f"{name}_f1", f"{name}_support"]
        return cols

    def to_csv_row(self, header: bool = False) -> str:
        values = [repr(self.weighted_f1), repr(self.accuracy), repr(self.macro_f1)]
        for p, r, f, s in zip(self.precision, self.recall, self.f1, self.support):
            values += [repr(p), repr(r), repr(f), str(s)]
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if header:
            writer.writerow(self.csv_header())
        writer.writerow(values)
        return buf.getvalue()


def evaluate(y_true, y_pred, n_classes: int, class_names=None) -> MetricReport:
    return MetricReport.from_confusion(confusion(y_true, y_pred, n_classes), class_names)
