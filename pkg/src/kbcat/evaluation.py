"""Contingency accumulation, micro/macro F-measure, relative improvement,
paired t-test, and the cross-validation driver.

Conventions: precision/recall 0/0 cases are defined as 0; the macro
average is the arithmetic mean of per-category F-scores over all
evaluated categories.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .corpus import RawDocument, make_folds


@dataclass
class CategoryCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0


@dataclass
class ContingencyTable:
    counts: dict[str, CategoryCounts] = field(default_factory=dict)
    n_docs: int = 0

    def merge(self, other: "ContingencyTable") -> None:
        for category, cc in other.counts.items():
            mine = self.counts.setdefault(category, CategoryCounts())
            mine.tp += cc.tp
            mine.fp += cc.fp
            mine.fn += cc.fn
            mine.tn += cc.tn
        self.n_docs += other.n_docs


@dataclass
class MetricReport:
    micro_precision: float
    micro_recall: float
    micro_f: float
    macro_f: float
    per_category: dict[str, tuple[float, float, float]]


@dataclass
class TTestResult:
    t: float
    degrees_of_freedom: int
    p_two_tailed: float


def accumulate(
    gold: list[set[str]],
    pred: list[set[str]],
    categories: Iterable[str],
) -> ContingencyTable:
    """Per-category tp/fp/fn/tn over aligned gold and predicted label sets."""
    if len(gold) != len(pred):
        raise ValueError("gold and pred must be the same length")
    cats = list(categories)
    cat_set = set(cats)
    table = ContingencyTable(
        counts={c: CategoryCounts() for c in cats}, n_docs=len(gold)
    )
    for g, p in zip(gold, pred):
        stray = (g | p) - cat_set
        if stray:
            raise ValueError(f"labels outside the category set: {sorted(stray)}")
        for c in cats:
            in_g = c in g
            in_p = c in p
            cc = table.counts[c]
            if in_g and in_p:
                cc.tp += 1
            elif in_p:
                cc.fp += 1
            elif in_g:
                cc.fn += 1
            else:
                cc.tn += 1
    return table


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


def micro_f(table: ContingencyTable) -> float:
    return micro_scores(table)[2]


def micro_scores(table: ContingencyTable) -> tuple[float, float, float]:
    tp = sum(cc.tp for cc in table.counts.values())
    fp = sum(cc.fp for cc in table.counts.values())
    fn = sum(cc.fn for cc in table.counts.values())
    return _prf(tp, fp, fn)


def macro_f(table: ContingencyTable) -> float:
    """Mean of per-category F over all categories in the table."""
    if not table.counts:
        raise ValueError("contingency table has no categories")
    scores = [_prf(cc.tp, cc.fp, cc.fn)[2] for cc in table.counts.values()]
    return sum(scores) / len(scores)


def metric_report(table: ContingencyTable) -> MetricReport:
    p, r, f = micro_scores(table)
    return MetricReport(
        micro_precision=p,
        micro_recall=r,
        micro_f=f,
        macro_f=macro_f(table),
        per_category={c: _prf(cc.tp, cc.fp, cc.fn) for c, cc in table.counts.items()},
    )


def relative_improvement(baseline: float, value: float) -> float:
    """Signed percentage change of value over baseline."""
    if baseline <= 0:
        raise ValueError(f"baseline must be positive, got {baseline}")
    return 100.0 * (value - baseline) / baseline


def _betacf(a: float, b: float, x: float) -> float:
    # continued fraction for the incomplete beta function (Lentz method)
    max_iter = 300
    eps = 3e-14
    fpmin = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < fpmin:
        d = fpmin
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        de = d * c
        h *= de
        if abs(de - 1.0) < eps:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def _betai(a: float, b: float, x: float) -> float:
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_bt = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
             + a * math.log(x) + b * math.log(1.0 - x))
    bt = math.exp(ln_bt)
    if x < (a + 1.0) / (a + b + 2.0):
        return bt * _betacf(a, b, x) / a
    return 1.0 - bt * _betacf(b, a, 1.0 - x) / b


def student_t_sf_two_tailed(t: float, df: int) -> float:
    """P(|T| >= t) for Student's t with df degrees of freedom."""
    return _betai(df / 2.0, 0.5, df / (df + t * t))


def paired_t_test(a: list[float], b: list[float]) -> TTestResult:
    """Two-tailed paired t-test on elementwise differences a - b."""
    if len(a) != len(b) or len(a) < 2:
        raise ValueError("need two equal-length samples of size >= 2")
    d = [x - y for x, y in zip(a, b)]
    n = len(d)
    mean = sum(d) / n
    sd = statistics.stdev(d)
    df = n - 1
    if sd == 0.0:
        if mean == 0.0:
            return TTestResult(t=0.0, degrees_of_freedom=df, p_two_tailed=1.0)
        return TTestResult(
            t=math.copysign(math.inf, mean), degrees_of_freedom=df, p_two_tailed=0.0
        )
    t = mean / (sd / math.sqrt(n))
    return TTestResult(
        t=t, degrees_of_freedom=df, p_two_tailed=student_t_sf_two_tailed(abs(t), df)
    )


# A fold runner maps (train_docs, test_docs) to (gold, pred) label-set lists
# aligned with test_docs, optionally plus an artifacts dict.
FoldRunner = Callable[[list[RawDocument], list[RawDocument]], tuple]


@dataclass
class CvResult:
    fold_reports: list[MetricReport]
    micro_f_mean: float
    micro_f_sd: float
    macro_f_mean: float
    macro_f_sd: float
    pooled: MetricReport


def run_cv(
    docs: list[RawDocument],
    runner: FoldRunner,
    k: int,
    seed: int,
    categories: Iterable[str],
    on_fold: Callable | None = None,
) -> CvResult:
    """k-fold cross-validation: for each fold, train on the remainder and
    evaluate on the fold. Reports come back in fold order with a
    mean/sample-sd summary and a pooled contingency report."""
    cats = list(categories)
    folds = make_folds(docs, k, seed)
    fold_reports: list[MetricReport] = []
    pooled = ContingencyTable(counts={c: CategoryCounts() for c in cats})
    for fold in range(k):
        train = [d for d in docs if folds.assignment[d.id] != fold]
        test = [d for d in docs if folds.assignment[d.id] == fold]
        try:
            result = runner(train, test)
        except Exception as exc:
            raise RuntimeError(f"pipeline failed in fold {fold}: {exc}") from exc
        gold, pred = result[0], result[1]
        artifacts = result[2] if len(result) > 2 else {}
        table = accumulate(gold, pred, cats)
        fold_reports.append(metric_report(table))
        pooled.merge(table)
        if on_fold is not None:
            on_fold(fold, train, test, artifacts)
    micro_vals = [r.micro_f for r in fold_reports]
    macro_vals = [r.macro_f for r in fold_reports]
    return CvResult(
        fold_reports=fold_reports,
        micro_f_mean=statistics.mean(micro_vals),
        micro_f_sd=statistics.stdev(micro_vals) if k > 1 else 0.0,
        macro_f_mean=statistics.mean(macro_vals),
        macro_f_sd=statistics.stdev(macro_vals) if k > 1 else 0.0,
        pooled=metric_report(pooled),
    )
