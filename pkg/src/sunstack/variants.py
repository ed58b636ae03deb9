"""The fixed 24-configuration SVR family: enumeration, training, storage.

Each variant combines four axes: training span (full history or trailing
months), normalization scheme (A = min-max, B = z-score), one of three
(C, gamma) pairs, and input set (weather columns alone or with calendar
encodings).  Variant 4 (full history, scheme A, C=10, gamma=8, weather
columns only) is the family's reference configuration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import HourlyDataset
from .features import INPUT_SETS, FeatureMatrix, build_feature_matrix
from .scaling import SCHEMES, FeatureScaler
from .svr import SupportVectorRegressor, kkt_violation
from .validation import (
    ConfigurationError,
    ConvergenceError,
    ParseError,
    SchemaError,
    open_for_write,
)

SPANS = ("all_months", "recent_months")
NORM_SCHEMES = ("A", "B")
PARAM_GRID = ((10.0, 8.0), (1.0, 8.0), (10.0, 0.5))
RECENT_WINDOW_MONTHS = 3
DEFAULT_EPSILON = 0.01
DEFAULT_TOL = 1e-3
# Smooth kernels (small gamma) on multi-thousand-row sets need far more
# pairwise updates than the per-estimator default cap allows, so family
# training passes an explicit generous cap instead.
TRAIN_ITER_FACTOR = 200

_SCHEME_TO_SCALER = {"A": "minmax", "B": "zscore"}
_INPUT_LABEL = {"extended": "ext18", "original14": "orig14"}


@dataclass(frozen=True)
class VariantSpec:
    """One point of the configuration grid, identified by ``variant_id``."""

    variant_id: int
    dataset_span: str
    norm_scheme: str
    c: float
    gamma: float
    input_set: str

    def __post_init__(self):
        if self.dataset_span not in SPANS:
            raise ConfigurationError(f"dataset_span must be one of {SPANS}")
        if self.norm_scheme not in NORM_SCHEMES:
            raise ConfigurationError(f"norm_scheme must be one of {NORM_SCHEMES}")
        if self.input_set not in INPUT_SETS:
            raise ConfigurationError(f"input_set must be one of {INPUT_SETS}")
        if self.c <= 0 or self.gamma <= 0:
            raise ConfigurationError("c and gamma must be positive")

    @property
    def model_id(self) -> str:
        return f"svr{self.variant_id:02d}"

    @property
    def label(self) -> str:
        return "+".join(
            (
                self.dataset_span,
                self.norm_scheme,
                f"C{self.c:g}g{self.gamma:g}",
                _INPUT_LABEL[self.input_set],
            )
        )


def make_variant_specs() -> list[VariantSpec]:
    """Enumerate the grid in its fixed order, variant ids 1 through 24."""
    specs = []
    vid = 1
    for span in SPANS:
        for scheme in NORM_SCHEMES:
            for input_set in ("extended", "original14"):
                for c, gamma in PARAM_GRID:
                    specs.append(
                        VariantSpec(
                            variant_id=vid,
                            dataset_span=span,
                            norm_scheme=scheme,
                            c=c,
                            gamma=gamma,
                            input_set=input_set,
                        )
                    )
                    vid += 1
    return specs


@dataclass
class VariantModel:
    """A trained family member: feature recipe, scaler, and SVR weights."""

    spec: VariantSpec
    columns: tuple[str, ...]
    scaler: FeatureScaler
    svr: SupportVectorRegressor
    train_rows: int

    @property
    def model_id(self) -> str:
        return self.spec.model_id

    def predict_raw(self, X_raw: np.ndarray) -> np.ndarray:
        """Forecast normalized power for rows already in column layout."""
        X_raw = np.asarray(X_raw, dtype=np.float64)
        if X_raw.ndim != 2 or X_raw.shape[1] != len(self.columns):
            raise SchemaError(
                f"expected (n, {len(self.columns)}) inputs, got {X_raw.shape}"
            )
        return self.svr.predict(self.scaler.transform(X_raw))

    def predict_normalized(self, dataset: HourlyDataset) -> np.ndarray:
        """Forecast every record of ``dataset``; night hours are exactly 0."""
        feats = build_feature_matrix(dataset, self.spec.input_set, with_target=False)
        out = self.predict_raw(feats.values)
        out[~dataset.daylight_mask()] = 0.0
        return out


def training_row_mask(dataset: HourlyDataset, span: str) -> np.ndarray:
    """Daylight-row mask for a span, relative to the dataset's own end."""
    if span not in SPANS:
        raise ConfigurationError(f"unknown dataset span {span!r}")
    mask = dataset.daylight_mask().copy()
    if span == "recent_months":
        months = dataset.timestamps.astype("M8[M]")
        cutoff = months.max() - np.timedelta64(RECENT_WINDOW_MONTHS - 1, "M")
        mask &= months >= cutoff
    return mask


def train_variants(
    dataset: HourlyDataset, specs: list[VariantSpec] | None = None
) -> list[VariantModel]:
    """Train one model per spec on the dataset's daylight rows.

    The dataset IS the training window: ``recent_months`` variants restrict
    to its trailing calendar months.  Convergence failures are re-raised
    tagged with the offending variant.
    """
    if specs is None:
        specs = make_variant_specs()
    matrices = {
        name: build_feature_matrix(dataset, name, daylight_only=True)
        for name in INPUT_SETS
    }
    daylight = dataset.daylight_mask()
    span_rows = {
        span: training_row_mask(dataset, span)[daylight] for span in SPANS
    }

    models = []
    for spec in specs:
        feats = matrices[spec.input_set]
        rows = span_rows[spec.dataset_span]
        X, y = feats.values[rows], feats.target[rows]
        scaler = FeatureScaler(_SCHEME_TO_SCALER[spec.norm_scheme]).fit(X)
        svr = SupportVectorRegressor(
            C=spec.c,
            gamma=spec.gamma,
            epsilon=DEFAULT_EPSILON,
            tol=DEFAULT_TOL,
            max_iter=TRAIN_ITER_FACTOR * len(y),
        )
        try:
            svr.fit(scaler.transform(X), y)
        except ConvergenceError as exc:
            raise ConvergenceError(
                f"variant {spec.variant_id} ({spec.label}) failed to converge",
                residual=exc.residual,
            ) from exc
        models.append(
            VariantModel(
                spec=spec,
                columns=feats.columns,
                scaler=scaler,
                svr=svr,
                train_rows=len(y),
            )
        )
    return models


def training_kkt_violation(model: VariantModel, features: FeatureMatrix) -> float:
    """Max KKT complementarity violation of ``model`` on its training set."""
    if features.target is None:
        raise SchemaError("training features must carry a target")
    return kkt_violation(
        model.svr, model.scaler.transform(features.values), features.target
    )


def _floats_csv(values) -> str:
    return ",".join(repr(float(v)) for v in values)


def _parse_floats(text: str, line_no: int, path: str) -> np.ndarray:
    try:
        return np.array([float(tok) for tok in text.split(",")])
    except ValueError as exc:
        raise ParseError(f"{path}: bad float list: {exc}", line=line_no) from None


_MAGIC = "svrmodel v1"
_HEADER_KEYS = (
    "variant_id", "dataset_span", "norm_scheme", "c", "gamma", "input_set",
    "epsilon", "tol", "max_iter", "train_rows", "columns",
    "scaler_scheme", "scaler_center", "scaler_scale", "scaler_degenerate",
    "n_support",
)


def save_svr_model(model: VariantModel, path: str) -> None:
    """Write a trained variant as flat text, lossless for every weight."""
    spec = model.spec
    sc = model.scaler
    est = model.svr
    lines = [
        _MAGIC,
        f"variant_id={spec.variant_id}",
        f"dataset_span={spec.dataset_span}",
        f"norm_scheme={spec.norm_scheme}",
        f"c={spec.c!r}",
        f"gamma={spec.gamma!r}",
        f"input_set={spec.input_set}",
        f"epsilon={est.epsilon!r}",
        f"tol={est.tol!r}",
        f"max_iter={est.max_iter}",
        f"train_rows={model.train_rows}",
        "columns=" + ",".join(model.columns),
        f"scaler_scheme={sc.scheme}",
        "scaler_center=" + _floats_csv(sc.center_),
        "scaler_scale=" + _floats_csv(sc.scale_),
        "scaler_degenerate=" + ",".join(str(int(v)) for v in sc.degenerate_),
        f"n_support={len(est.dual_coef_)}",
        f"bias={float(est.intercept_)!r}",
    ]
    for coef, sv in zip(est.dual_coef_, est.support_vectors_):
        lines.append(f"{float(coef)!r}," + _floats_csv(sv))
    with open_for_write(path) as fh:
        fh.write("\n".join(lines) + "\n")


def load_svr_model(path: str) -> VariantModel:
    """Rebuild a variant model saved by :func:`save_svr_model`."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != _MAGIC:
        raise ParseError(f"{path}: not a {_MAGIC!r} file", line=1)
    header: dict[str, str] = {}
    row = 1
    for key in _HEADER_KEYS:
        if row >= len(lines) or "=" not in lines[row]:
            raise ParseError(f"{path}: missing header field {key!r}", line=row + 1)
        got, _, val = lines[row].partition("=")
        if got != key:
            raise ParseError(
                f"{path}: expected header field {key!r}, found {got!r}", line=row + 1
            )
        header[key] = val
        row += 1
    if row >= len(lines) or not lines[row].startswith("bias="):
        raise ParseError(f"{path}: missing bias line", line=row + 1)
    bias = float(lines[row].partition("=")[2])
    row += 1

    spec = VariantSpec(
        variant_id=int(header["variant_id"]),
        dataset_span=header["dataset_span"],
        norm_scheme=header["norm_scheme"],
        c=float(header["c"]),
        gamma=float(header["gamma"]),
        input_set=header["input_set"],
    )
    columns = tuple(header["columns"].split(","))
    d = len(columns)

    if header["scaler_scheme"] not in SCHEMES:
        raise ParseError(f"{path}: unknown scaler scheme", line=13)
    scaler = FeatureScaler(header["scaler_scheme"])
    scaler.center_ = _parse_floats(header["scaler_center"], 14, path)
    scaler.scale_ = _parse_floats(header["scaler_scale"], 15, path)
    scaler.degenerate_ = np.array(
        [tok == "1" for tok in header["scaler_degenerate"].split(",")]
    )
    scaler.n_features_in_ = d
    if not (len(scaler.center_) == len(scaler.scale_) == len(scaler.degenerate_) == d):
        raise ParseError(f"{path}: scaler width disagrees with columns", line=14)

    n_support = int(header["n_support"])
    coefs = np.empty(n_support)
    svs = np.empty((n_support, d))
    for k in range(n_support):
        ln = row + k
        if ln >= len(lines):
            raise ParseError(f"{path}: truncated support-vector block", line=ln + 1)
        parts = _parse_floats(lines[ln], ln + 1, path)
        if len(parts) != d + 1:
            raise ParseError(
                f"{path}: expected {d + 1} fields, got {len(parts)}", line=ln + 1
            )
        coefs[k] = parts[0]
        svs[k] = parts[1:]
    if row + n_support != len(lines):
        raise ParseError(
            f"{path}: trailing content after support vectors", line=row + n_support + 1
        )

    max_iter = None if header["max_iter"] == "None" else int(header["max_iter"])
    est = SupportVectorRegressor(
        C=spec.c,
        gamma=spec.gamma,
        epsilon=float(header["epsilon"]),
        tol=float(header["tol"]),
        max_iter=max_iter,
    )
    est.n_features_in_ = d
    est.support_ = np.arange(n_support)
    est.support_vectors_ = svs
    est.dual_coef_ = coefs
    est.intercept_ = bias
    est.n_iter_ = 0
    est.dual_objective_ = float("nan")
    return VariantModel(
        spec=spec,
        columns=columns,
        scaler=scaler,
        svr=est,
        train_rows=int(header["train_rows"]),
    )
