"""The full benchmark: filter, rank, fuse, then sweep k through both classifiers.

Pipeline order for :func:`run_sweep`:

1. z-score with statistics fitted on the training cohort (optional)
2. one-way ANOVA filter on the training cohort
3. six scorers on the surviving features, fused per family
4. for every (family, classifier, k): train on the top-k training columns,
   cross-validate on the training cohort, evaluate on the test cohort

Seeds.  Every random stage draws its seed from
``numpy.random.SeedSequence(seed, spawn_key=key)`` where ``key`` is a fixed
counter tuple: ``(1,)`` for the CV fold assignment (shared by every cell so
cells are compared on the same folds) and ``(2, family_id, classifier_id, k)``
for a classifier's own randomness.  Ids are fixed (supervised=0,
unsupervised=1; svm=0, nb=1), so a cell's result does not depend on which
other cells are configured.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import anova, classify, fusion, rank_supervised, rank_unsupervised
from .dataset import FeatureMatrix, load_csv, zscore_normalize
from .errors import ConfigError, DatasetError, PipelineError, RadiofsError
from .metrics import ConfusionMatrix, Metrics, confusion, evaluate, format_metric

REPORT_SCHEMA = "radiofs.sweep_report"
REPORT_VERSION = 1

FAMILY_IDS = {fusion.SUPERVISED: 0, fusion.UNSUPERVISED: 1}
CLASSIFIER_IDS = {"svm": 0, "nb": 1}
STAGE_CV = 1
STAGE_CLASSIFIER = 2


def stage_seed(seed, *key):
    """Deterministic 32-bit seed for the stage identified by ``key``."""
    return int(np.random.SeedSequence(seed, spawn_key=tuple(key)).generate_state(1)[0])


def _parse_bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_list(text, item=str):
    return tuple(item(p.strip()) for p in text.split(",") if p.strip())


def _optional_float(text):
    t = text.strip().lower()
    return None if t in ("", "auto", "none") else float(t)


@dataclass(frozen=True)
class ExperimentConfig:
    train_csv: str = ""
    test_csv: str = ""
    alpha: float = 0.05
    k_list: tuple = (2, 4, 8, 12, 16, 20)
    k_cap: int = 20
    classifiers: tuple = ("svm", "nb")
    ranking_families: tuple = (fusion.SUPERVISED, fusion.UNSUPERVISED)
    svm_kernel: str = "linear"
    svm_c: float = 1.0
    svm_gamma: Optional[float] = None
    cv_folds: int = 10
    seed: int = 0
    normalize: bool = True
    relieff_k: int = 10
    nca_lambda: Optional[float] = None
    graph_k: int = 5
    mcfs_clusters: int = 2
    mcfs_cardinality: int = 20

    _PARSERS = {
        "alpha": float, "k_list": lambda t: _parse_list(t, int), "k_cap": int,
        "classifiers": _parse_list, "ranking_families": _parse_list,
        "svm_kernel": str.strip, "svm_c": float, "svm_gamma": _optional_float,
        "cv_folds": int, "seed": int, "normalize": _parse_bool, "relieff_k": int,
        "nca_lambda": _optional_float, "graph_k": int, "mcfs_clusters": int,
        "mcfs_cardinality": int, "train_csv": str.strip, "test_csv": str.strip,
    }

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not self.k_list:
            raise ConfigError("k_list must not be empty")
        if any(b <= a for a, b in zip(self.k_list, self.k_list[1:])):
            raise ConfigError(f"k_list must be strictly increasing: {self.k_list}")
        if self.k_list[0] < 1:
            raise ConfigError("k values must be positive")
        if self.k_list[-1] > self.k_cap:
            raise ConfigError(f"k={self.k_list[-1]} exceeds k_cap={self.k_cap}")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")
        if not self.classifiers or set(self.classifiers) - set(CLASSIFIER_IDS):
            raise ConfigError(f"classifiers must be a non-empty subset of {set(CLASSIFIER_IDS)}")
        if not self.ranking_families or set(self.ranking_families) - set(FAMILY_IDS):
            raise ConfigError(f"ranking_families must be a non-empty subset of {set(FAMILY_IDS)}")
        if len(set(self.classifiers)) != len(self.classifiers) or \
                len(set(self.ranking_families)) != len(self.ranking_families):
            raise ConfigError("duplicate classifier or family")
        if self.svm_kernel not in ("linear", "rbf"):
            raise ConfigError(f"unknown svm_kernel {self.svm_kernel!r}")
        if self.svm_c <= 0:
            raise ConfigError("svm_c must be positive")
        if self.cv_folds < 2:
            raise ConfigError("cv_folds must be at least 2")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")

    @classmethod
    def from_text(cls, text, base_dir=None, **overrides):
        """Parse ``key = value`` lines; ``#`` starts a comment line.

        Relative CSV paths are resolved against ``base_dir``.
        """
        values = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value'")
            key, value = (p.strip() for p in line.split("=", 1))
            if key not in cls._PARSERS:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            try:
                values[key] = cls._PARSERS[key](value)
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
        values.update({k: v for k, v in overrides.items() if v is not None})
        if base_dir is not None:
            for key in ("train_csv", "test_csv"):
                if values.get(key) and not Path(values[key]).is_absolute():
                    values[key] = str(Path(base_dir) / values[key])
        return cls(**values)

    @classmethod
    def from_file(cls, path, **overrides):
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_text(text, base_dir=path.parent, **overrides)

    def to_dict(self):
        d = asdict(self)
        for key, val in d.items():
            if isinstance(val, tuple):
                d[key] = list(val)
        return d

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in fields(cls)}
        return cls(**{k: tuple(v) if isinstance(v, list) else v
                      for k, v in d.items() if k in names})

    def classifier_spec(self, kind, seed=0):
        kernel = classify.Kernel(self.svm_kernel,
                                 self.svm_gamma if self.svm_kernel == "rbf" else None)
        return classify.ClassifierSpec(kind, kernel, self.svm_c, seed)


def family_scores(m: FeatureMatrix, family: str, cfg: ExperimentConfig = ExperimentConfig()):
    """Run the three scorers of ``family`` on ``m``."""
    if family == fusion.SUPERVISED:
        counts = m.class_counts()
        k = max(1, min(cfg.relieff_k, min(counts.values()) - 1))
        return [rank_supervised.fisher_scores(m),
                rank_supervised.relieff_weights(m, k=k),
                rank_supervised.nca_weights(m, lam=cfg.nca_lambda)]
    if family == fusion.UNSUPERVISED:
        g = rank_unsupervised.knn_graph(m, min(cfg.graph_k, m.n_samples - 1))
        return [rank_unsupervised.laplacian_scores(m, g),
                rank_unsupervised.min_correlation_scores(m),
                rank_unsupervised.mcfs_scores(m, g, cfg.mcfs_clusters,
                                              cfg.mcfs_cardinality)]
    raise ValueError(f"unknown family {family!r}")


def rank_family(m: FeatureMatrix, family: str, cfg: ExperimentConfig = ExperimentConfig()):
    return fusion.fuse(family_scores(m, family, cfg), family)


@dataclass(frozen=True)
class ReportEntry:
    family: str
    classifier: str
    k: int
    status: str
    features: tuple = ()
    test_confusion: Optional[ConfusionMatrix] = None
    test_metrics: Optional[Metrics] = None
    cv_confusion: Optional[ConfusionMatrix] = None
    cv_metrics: Optional[Metrics] = None
    cv_mean_metrics: Optional[Metrics] = None

    def to_dict(self):
        def opt(v):
            return None if v is None else v.to_dict()
        return {"family": self.family, "classifier": self.classifier, "k": self.k,
                "status": self.status, "features": list(self.features),
                "test_confusion": opt(self.test_confusion),
                "test_metrics": opt(self.test_metrics),
                "cv_confusion": opt(self.cv_confusion),
                "cv_metrics": opt(self.cv_metrics),
                "cv_mean_metrics": opt(self.cv_mean_metrics)}

    @classmethod
    def from_dict(cls, d):
        def opt(kind, v):
            return None if v is None else kind.from_dict(v)
        return cls(d["family"], d["classifier"], d["k"], d["status"], tuple(d["features"]),
                   opt(ConfusionMatrix, d["test_confusion"]), opt(Metrics, d["test_metrics"]),
                   opt(ConfusionMatrix, d["cv_confusion"]), opt(Metrics, d["cv_metrics"]),
                   opt(Metrics, d["cv_mean_metrics"]))


@dataclass(frozen=True)
class SweepReport:
    config: ExperimentConfig
    anova: tuple
    rankings: dict = field(hash=False)
    entries: tuple = ()

    def entry(self, family, classifier, k):
        for e in self.entries:
            if (e.family, e.classifier, e.k) == (family, classifier, k):
                return e
        raise KeyError((family, classifier, k))

    def to_dict(self):
        return {
            "schema": REPORT_SCHEMA, "version": REPORT_VERSION,
            "config": self.config.to_dict(),
            "anova": [r.to_dict() for r in self.anova],
            "n_features_retained": sum(r.significant for r in self.anova),
            "rankings": {fam: rl.to_dict() for fam, rl in self.rankings.items()},
            "top_tables": {fam: list(rl.to_rows())[: self.config.k_cap + 1]
                           for fam, rl in self.rankings.items()},
            "entries": [e.to_dict() for e in self.entries],
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("schema") != REPORT_SCHEMA or d.get("version") != REPORT_VERSION:
            raise ValueError("not a version-1 sweep report")
        return cls(ExperimentConfig.from_dict(d["config"]),
                   tuple(anova.AnovaResult.from_dict(r) for r in d["anova"]),
                   {fam: fusion.RankingList.from_dict(rl) for fam, rl in d["rankings"].items()},
                   tuple(ReportEntry.from_dict(e) for e in d["entries"]))

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    CSV_HEADER = ("family", "classifier", "k", "status", "tp", "tn", "fp", "fn",
                  "accuracy", "sensitivity", "specificity", "cv_accuracy",
                  "cv_sensitivity", "cv_specificity", "features")

    def to_csv(self):
        """One row per grid cell, metrics with 5 decimals."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.CSV_HEADER)
        for e in self.entries:
            cm = e.test_confusion
            counts = ["", "", "", ""] if cm is None else [cm.tp, cm.tn, cm.fp, cm.fn]
            test = e.test_metrics.as_tuple() if e.test_metrics else (None,) * 3
            cv = e.cv_metrics.as_tuple() if e.cv_metrics else (None,) * 3
            writer.writerow([e.family, e.classifier, e.k, e.status, *counts,
                             *(format_metric(v) for v in test),
                             *(format_metric(v) for v in cv),
                             ";".join(e.features)])
        return buf.getvalue()


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PipelineError:
        raise
    except (RadiofsError, ValueError, OSError, np.linalg.LinAlgError) as exc:
        raise PipelineError(name, exc) from exc


def _evaluate_cell(cfg, train, test, cv_cfg, family, kind, k, features):
    spec = cfg.classifier_spec(kind, stage_seed(cfg.seed, STAGE_CLASSIFIER,
                                                FAMILY_IDS[family], CLASSIFIER_IDS[kind], k))
    tr = train.select_features(features)
    te = test.select_features(features)
    model = spec.fit(tr)
    cm = confusion(model.predict(te.values), te.labels)
    cv = classify.cross_validate(tr, spec, cv_cfg)
    return ReportEntry(family, kind, k, "ok", tuple(features), cm, evaluate(cm),
                       cv.pooled, cv.pooled_metrics, cv.mean_metrics)


def run_sweep(cfg: ExperimentConfig, train: Optional[FeatureMatrix] = None,
              test: Optional[FeatureMatrix] = None) -> SweepReport:
    """Run the whole benchmark and collect a :class:`SweepReport`.

    ``train`` / ``test`` default to loading ``cfg.train_csv`` / ``cfg.test_csv``.
    Cells whose k exceeds the number of features left after the ANOVA filter
    are reported with status ``"skipped"``.
    """
    if train is None:
        train = _stage("load", load_csv, cfg.train_csv)
    if test is None:
        test = _stage("load", load_csv, cfg.test_csv)
    if not train.has_labels or not test.has_labels:
        raise PipelineError("load", DatasetError("train and test cohorts need labels"))
    if train.feature_names != test.feature_names:
        test = _stage("load", test.select_features, train.feature_names)

    if cfg.normalize:
        train, record = _stage("normalize", zscore_normalize, train)
        test = _stage("normalize", record.apply, test)

    results, reduced = _stage("anova", anova.filter_features, train, cfg.alpha)
    test = test.select_features(reduced.feature_names)

    rankings = {}
    for family in cfg.ranking_families:
        rankings[family] = _stage(f"rank:{family}", rank_family, reduced, family, cfg)

    cv_cfg = classify.CvConfig(cfg.cv_folds, stage_seed(cfg.seed, STAGE_CV))
    entries = []
    for family in cfg.ranking_families:
        ranking = rankings[family]
        for kind in cfg.classifiers:
            for k in cfg.k_list:
                if k > len(ranking):
                    entries.append(ReportEntry(family, kind, k, "skipped"))
                    continue
                entries.append(_stage(f"classify:{family}/{kind}/k={k}", _evaluate_cell,
                                      cfg, reduced, test, cv_cfg, family, kind, k,
                                      ranking.top_k(k)))
    return SweepReport(cfg, tuple(results), rankings, tuple(entries))


def emit_report(report: SweepReport, fmt: str, path=None) -> str:
    """Serialize ``report`` as ``json`` or ``csv``; write it when ``path`` is given.

    CSV output also writes one ranking table per family next to ``path``
    (``<stem>.<family>_ranking.csv``, top ``k_cap`` rows).
    """
    if fmt == "json":
        text = report.to_json()
    elif fmt == "csv":
        text = report.to_csv()
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if path is not None:
        path = Path(path)
        try:
            path.write_text(text, encoding="utf-8")
            if fmt == "csv":
                for family, rl in report.rankings.items():
                    top = fusion.RankingList(rl.family, rl.algorithms,
                                             rl.entries[: report.config.k_cap])
                    top.to_csv(path.with_name(f"{path.stem}.{family}_ranking.csv"))
        except OSError as exc:
            raise PipelineError("report", exc) from exc
    return text
