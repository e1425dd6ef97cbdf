"""Window features: time-domain statistics, DFT magnitudes, pooling, scaling.

The time-domain plan applies 18 statistics (10 on the raw samples x, 8 on
the forward difference dx) across channels as follows:

    accel/gyro axes (6 channels) : all 18
    rotvec axes     (3 channels) : mean, max, min, variance, std, range, iqr
    accel/gyro sums (2 channels) : all 18 except energy and spectral entropy
    rotvec sum      (1 channel)  : mean, variance, range, sign changes

which yields 18*6 + 7*3 + 16*2 + 4*1 = 165 features. The measure subsets
for the rotation-vector and summation channels are a documented convention
of this package; only the counts are externally fixed.

Frequency features take each axis channel's DFT magnitudes (bins 1..50, DC
excluded), keep the 20 largest, and emit them sorted descending - feature
slot k is "the (k+1)-th strongest spectral component" - for 9*20 = 180
features and 345 pooled in total. ``freq_mode="first20"`` switches to the
variant that keeps bins 1..20 at their bin positions.

Scaling maps each feature's training min/max to [-1, 1]; test-time values
beyond the training range are clamped.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .datagen import ModeLabel
from .sigproc import AXIS_CHANNELS, DT, WINDOW_SAMPLES, Window
from .util import atomic_write_text

# The 18 time-domain measures; the d-prefix marks the forward-difference ones.
MEASURES_X = ("mean", "max", "min", "variance", "std", "range", "iqr",
              "sign_changes", "energy", "spectral_entropy")
MEASURES_DX = ("dmean", "dmax", "dmin", "dvariance", "dstd", "drange", "diqr",
               "dsign_changes")
ALL_MEASURES = MEASURES_X + MEASURES_DX

ROTVEC_AXIS_MEASURES = ("mean", "max", "min", "variance", "std", "range", "iqr")
SUM_MEASURES = tuple(m for m in ALL_MEASURES if m not in ("energy", "spectral_entropy"))
ROTVEC_SUM_MEASURES = ("mean", "variance", "range", "sign_changes")

FREQ_COMPONENTS = 20

#: (channel, measures) in catalog order for the time domain.
TIME_PLAN: tuple[tuple[str, tuple[str, ...]], ...] = (
    ("accel_x", ALL_MEASURES), ("accel_y", ALL_MEASURES), ("accel_z", ALL_MEASURES),
    ("gyro_x", ALL_MEASURES), ("gyro_y", ALL_MEASURES), ("gyro_z", ALL_MEASURES),
    ("rotvec_x", ROTVEC_AXIS_MEASURES), ("rotvec_y", ROTVEC_AXIS_MEASURES),
    ("rotvec_z", ROTVEC_AXIS_MEASURES),
    ("accel_sum", SUM_MEASURES), ("gyro_sum", SUM_MEASURES),
    ("rotvec_sum", ROTVEC_SUM_MEASURES),
)

TIME_FEATURES = 165
FREQ_FEATURES = 180
TOTAL_FEATURES = 345


@dataclass(frozen=True)
class FeatureDescriptor:
    fid: int
    domain: str  # "time" | "freq"
    channel: str
    measure: str  # measure name, or "c00".."c19" for spectral components
    name: str


class FeatureCatalog:
    """Ordered, immutable feature id space shared by every pipeline stage."""

    def __init__(self, descriptors: list[FeatureDescriptor]):
        self.descriptors = tuple(descriptors)
        self._by_name = {d.name: d for d in self.descriptors}
        if len(self._by_name) != len(self.descriptors):
            raise ValueError("duplicate feature names in catalog")

    def __len__(self) -> int:
        return len(self.descriptors)

    def names(self) -> list[str]:
        return [d.name for d in self.descriptors]

    def domain_ids(self, domain: str) -> np.ndarray:
        if domain == "pooled":
            return np.arange(len(self.descriptors))
        if domain not in ("time", "freq"):
            raise ValueError(f"unknown feature domain {domain!r}")
        return np.array([d.fid for d in self.descriptors if d.domain == domain])

    def by_name(self, name: str) -> FeatureDescriptor:
        try:
            return self._by_name[name]
        except KeyError:
            raise ValueError(f"unknown feature name {name!r}") from None

    def to_json(self) -> str:
        payload = [
            {"id": d.fid, "domain": d.domain, "channel": d.channel,
             "measure": d.measure, "name": d.name}
            for d in self.descriptors
        ]
        return json.dumps(payload, indent=2) + "\n"


def build_catalog() -> FeatureCatalog:
    descriptors = []
    fid = 0
    for channel, measures in TIME_PLAN:
        for measure in measures:
            descriptors.append(FeatureDescriptor(
                fid, "time", channel, measure, f"t_{channel}_{measure}"))
            fid += 1
    assert fid == TIME_FEATURES
    for channel in AXIS_CHANNELS:
        for k in range(FREQ_COMPONENTS):
            descriptors.append(FeatureDescriptor(
                fid, "freq", channel, f"c{k:02d}", f"f_{channel}_c{k:02d}"))
            fid += 1
    assert fid == TOTAL_FEATURES
    return FeatureCatalog(descriptors)


_CATALOG: FeatureCatalog | None = None


def get_catalog() -> FeatureCatalog:
    global _CATALOG
    if _CATALOG is None:
        _CATALOG = build_catalog()
    return _CATALOG


# ---------------------------------------------------------------------------
# Measures. Each works on a batch matrix W of shape (n_windows, samples).
# ---------------------------------------------------------------------------

def _iqr(W: np.ndarray) -> np.ndarray:
    q1, q3 = np.percentile(W, [25.0, 75.0], axis=1, method="linear")
    return q3 - q1


def _sign_changes(W: np.ndarray) -> np.ndarray:
    return np.sum(W[:, :-1] * W[:, 1:] < 0, axis=1).astype(float)


def _spectral_entropy(W: np.ndarray) -> np.ndarray:
    """Normalized Shannon entropy of the non-DC power spectrum, in [0, 1]."""
    power = np.abs(np.fft.rfft(W, axis=1)[:, 1:]) ** 2
    total = power.sum(axis=1)
    nbins = power.shape[1]
    out = np.zeros(W.shape[0])
    ok = total > 0
    if np.any(ok):
        p = power[ok] / total[ok, None]
        plogp = np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)
        out[ok] = -plogp.sum(axis=1) / np.log(nbins)
    return out


_X_FUNCS = {
    "mean": lambda W: W.mean(axis=1),
    "max": lambda W: W.max(axis=1),
    "min": lambda W: W.min(axis=1),
    "variance": lambda W: W.var(axis=1),
    "std": lambda W: W.std(axis=1),
    "range": lambda W: W.max(axis=1) - W.min(axis=1),
    "iqr": _iqr,
    "sign_changes": _sign_changes,
    "energy": lambda W: np.sum(W * W, axis=1),
    "spectral_entropy": _spectral_entropy,
}


def _measure_column(measure: str, W: np.ndarray, D: np.ndarray | None) -> np.ndarray:
    if measure.startswith("d"):
        return _X_FUNCS[measure[1:]](D)
    return _X_FUNCS[measure](W)


def _stack(windows: list[Window]) -> tuple[dict[str, np.ndarray], np.ndarray]:
    if not windows:
        raise ValueError("no windows to extract features from")
    names = windows[0].channels.keys()
    stacked = {name: np.stack([w.channels[name] for w in windows]) for name in names}
    labels = np.array([int(w.mode) for w in windows], dtype=np.int64)
    return stacked, labels


def _time_matrix(stacked: dict[str, np.ndarray]) -> np.ndarray:
    cols = []
    for channel, measures in TIME_PLAN:
        W = stacked[channel]
        D = np.diff(W, axis=1) / DT if any(m.startswith("d") for m in measures) else None
        for measure in measures:
            cols.append(_measure_column(measure, W, D))
    return np.column_stack(cols)


def _freq_matrix(stacked: dict[str, np.ndarray], freq_mode: str) -> np.ndarray:
    if freq_mode not in ("top20", "first20"):
        raise ValueError(f"freq_mode must be 'top20' or 'first20', got {freq_mode!r}")
    cols = []
    for channel in AXIS_CHANNELS:
        mags = np.abs(np.fft.rfft(stacked[channel], axis=1))[:, 1:]
        if freq_mode == "top20":
            top = np.partition(mags, mags.shape[1] - FREQ_COMPONENTS, axis=1)
            top = np.sort(top[:, -FREQ_COMPONENTS:], axis=1)[:, ::-1]
        else:
            top = mags[:, :FREQ_COMPONENTS]
        cols.append(top)
    return np.hstack(cols)


def extract_matrix(windows: list[Window], domain: str = "pooled",
                   freq_mode: str = "top20") -> tuple[np.ndarray, np.ndarray]:
    """Batch feature extraction: returns (X, y) with X columns in catalog order
    restricted to the requested domain."""
    stacked, labels = _stack(windows)
    if domain == "time":
        X = _time_matrix(stacked)
    elif domain == "freq":
        X = _freq_matrix(stacked, freq_mode)
    elif domain == "pooled":
        X = np.hstack([_time_matrix(stacked), _freq_matrix(stacked, freq_mode)])
    else:
        raise ValueError(f"unknown feature domain {domain!r}")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite feature values")
    return X, labels


# ---------------------------------------------------------------------------
# Per-window API: partial vectors keyed by catalog ids, and pooling.
# ---------------------------------------------------------------------------

@dataclass
class PartialFeatures:
    ids: np.ndarray
    values: np.ndarray


@dataclass
class FeatureVector:
    ids: np.ndarray
    values: np.ndarray
    mode: ModeLabel | None = None


def time_features(window: Window, catalog: FeatureCatalog | None = None) -> PartialFeatures:
    window.validate()
    catalog = catalog or get_catalog()
    stacked, _ = _stack([window])
    return PartialFeatures(ids=catalog.domain_ids("time"), values=_time_matrix(stacked)[0])


def freq_features(window: Window, catalog: FeatureCatalog | None = None,
                  freq_mode: str = "top20") -> PartialFeatures:
    window.validate()
    catalog = catalog or get_catalog()
    stacked, _ = _stack([window])
    return PartialFeatures(ids=catalog.domain_ids("freq"),
                           values=_freq_matrix(stacked, freq_mode)[0])


def dft_magnitudes(series: np.ndarray) -> np.ndarray:
    """|X[k]| for k = 0..N/2 of the plain forward DFT (no normalization)."""
    series = np.asarray(series, dtype=float)
    if series.shape != (WINDOW_SAMPLES,):
        raise ValueError(f"dft_magnitudes expects {WINDOW_SAMPLES} samples, got {series.shape}")
    return np.abs(np.fft.rfft(series))


def pool(*parts: PartialFeatures, mode: ModeLabel | None = None,
         catalog: FeatureCatalog | None = None) -> FeatureVector:
    """Stitch partial vectors into one id-ordered vector.

    The parts must tile their combined domain exactly: a duplicate slot or a
    gap (relative to the catalog ids of the domains covered) is an error.
    """
    catalog = catalog or get_catalog()
    if not parts:
        raise ValueError("pool needs at least one partial vector")
    ids = np.concatenate([p.ids for p in parts])
    values = np.concatenate([p.values for p in parts])
    if len(np.unique(ids)) != len(ids):
        raise ValueError("slot collision: duplicate feature ids across parts")
    domains = {catalog.descriptors[i].domain for i in ids}
    expected = np.sort(np.concatenate([catalog.domain_ids(d) for d in sorted(domains)]))
    order = np.argsort(ids)
    if not np.array_equal(ids[order], expected):
        missing = sorted(set(expected.tolist()) - set(ids.tolist()))
        raise ValueError(f"missing feature slots: {missing[:8]}{'...' if len(missing) > 8 else ''}")
    return FeatureVector(ids=ids[order], values=values[order], mode=mode)


# ---------------------------------------------------------------------------
# Scaling
# ---------------------------------------------------------------------------

@dataclass
class Scaler:
    """Per-feature training min/max; transform maps into [-1, 1] with clamping."""

    lo: np.ndarray
    hi: np.ndarray

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        span = self.hi - self.lo
        with np.errstate(divide="ignore", invalid="ignore"):
            scaled = 2.0 * (X - self.lo) / span - 1.0
        scaled = np.where(span > 0, scaled, 0.0)
        return np.clip(scaled, -1.0, 1.0)

    def to_dict(self) -> dict:
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist()}

    @classmethod
    def from_dict(cls, payload: dict) -> "Scaler":
        return cls(lo=np.asarray(payload["lo"], dtype=float),
                   hi=np.asarray(payload["hi"], dtype=float))


def fit_scaler(X: np.ndarray) -> Scaler:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("scaler needs a non-empty 2-D training matrix")
    return Scaler(lo=X.min(axis=0), hi=X.max(axis=0))


# ---------------------------------------------------------------------------
# Feature matrix CSV: first column `mode`, optional `trace` group column,
# then feature columns named by descriptor in catalog-id order.
# ---------------------------------------------------------------------------

def write_matrix_csv(path, X: np.ndarray, y: np.ndarray, ids: np.ndarray,
                     groups: np.ndarray | None = None,
                     catalog: FeatureCatalog | None = None) -> None:
    catalog = catalog or get_catalog()
    names = [catalog.descriptors[i].name for i in ids]
    header = ["mode"] + (["trace"] if groups is not None else []) + names
    lines = [",".join(header)]
    for r in range(X.shape[0]):
        cells = [ModeLabel(int(y[r])).label]
        if groups is not None:
            cells.append(str(int(groups[r])))
        cells.extend(repr(v) for v in X[r].tolist())
        lines.append(",".join(cells))
    lines.append("")
    atomic_write_text(path, "\n".join(lines))


def read_matrix_csv(path, catalog: FeatureCatalog | None = None):
    """Returns (X, y, ids, groups); groups is None without a trace column."""
    catalog = catalog or get_catalog()
    with open(path, "r") as handle:
        header = handle.readline().strip().split(",")
        if not header or header[0] != "mode":
            raise ValueError(f"{path}: first column must be 'mode'")
        has_groups = len(header) > 1 and header[1] == "trace"
        names = header[2:] if has_groups else header[1:]
        ids = np.array([catalog.by_name(n).fid for n in names], dtype=np.int64)
        rows, labels, groups = [], [], []
        for lineno, line in enumerate(handle, start=2):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if len(cells) != len(header):
                raise ValueError(f"{path}:{lineno}: {len(cells)} cells, expected {len(header)}")
            labels.append(int(ModeLabel.from_name(cells[0])))
            offset = 1
            if has_groups:
                groups.append(int(cells[1]))
                offset = 2
            rows.append([float(c) for c in cells[offset:]])
    X = np.asarray(rows, dtype=float)
    y = np.asarray(labels, dtype=np.int64)
    return X, y, ids, (np.asarray(groups, dtype=np.int64) if has_groups else None)
