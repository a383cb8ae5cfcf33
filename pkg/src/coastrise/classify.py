"""Supervised maximum-likelihood land-cover classification and accuracy
assessment, plus the land-cover x inundation tabulation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    AllocationError,
    EmptyAssessment,
    InsufficientTraining,
    SingularCovariance,
)
from .grid import ClassGrid, LegendEntry, class_header, require_aligned
from .inundation import SlrScenario, resample_nearest

COV_EPSILON = 1e-6
COV_DET_FLOOR = 1e-12
MIN_POINTS_PER_CLASS = 10


@dataclass(frozen=True)
class BandStack:
    """Ordered, aligned spectral bands."""

    names: tuple
    grids: tuple

    def __post_init__(self):
        if not self.grids:
            raise ValueError("need at least one band")
        if len(self.names) != len(self.grids):
            raise ValueError("names and grids must pair up")
        require_aligned(*self.grids, what="bands")

    @property
    def header(self):
        return self.grids[0].header

    @property
    def n_bands(self) -> int:
        return len(self.grids)

    def valid_mask(self) -> np.ndarray:
        mask = self.grids[0].data_mask
        for g in self.grids[1:]:
            mask = mask & g.data_mask
        return mask

    def values(self, rows, cols) -> np.ndarray:
        return np.column_stack([g.cells[rows, cols] for g in self.grids])


@dataclass(frozen=True)
class ClassSignature:
    class_id: int
    mean: np.ndarray
    cov: np.ndarray
    n: int


def save_signatures(signatures, path) -> None:
    """Text manifest: one line per class with id, sample count, the mean
    vector and the covariance matrix row-major, full decimal precision."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# class_id n mean[bands] cov[bands*bands row-major]\n")
        for sig in sorted(signatures, key=lambda s: s.class_id):
            values = [str(sig.class_id), str(sig.n)]
            values += [repr(float(v)) for v in np.asarray(sig.mean).ravel()]
            values += [repr(float(v)) for v in np.asarray(sig.cov).ravel()]
            fh.write(" ".join(values) + "\n")


def load_signatures(path):
    signatures = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            # tokens = 2 + b + b*b for band count b
            b = int((-1 + np.sqrt(1 + 4 * (len(tokens) - 2))) / 2)
            if 2 + b + b * b != len(tokens):
                raise ValueError(f"malformed signature line: {line[:60]}...")
            mean = np.array([float(v) for v in tokens[2 : 2 + b]])
            cov = np.array([float(v) for v in tokens[2 + b :]]).reshape(b, b)
            signatures.append(
                ClassSignature(int(tokens[0]), mean, cov, int(tokens[1]))
            )
    return signatures


def fit_signatures(stack: BandStack, training: ClassGrid):
    """Per-class sample mean and covariance (n-1 denominator) from labelled
    training cells.  Cells with any nodata band are skipped."""
    require_aligned(stack.grids[0], training, what="bands and training grid")
    valid = stack.valid_mask() & training.data_mask
    signatures = []
    for cid in sorted(training.legend):
        rows, cols = np.nonzero(valid & (training.cells == cid))
        if rows.size == 0:
            continue
        if rows.size < stack.n_bands + 1:
            raise InsufficientTraining(
                cid, f"class {cid}: {rows.size} samples < {stack.n_bands + 1}"
            )
        x = stack.values(rows, cols)
        mean = x.mean(axis=0)
        cov = np.cov(x, rowvar=False, ddof=1).reshape(stack.n_bands, stack.n_bands)
        signatures.append(ClassSignature(cid, mean, cov, int(rows.size)))
    return signatures


def _regularized(sig: ClassSignature):
    cov = np.array(sig.cov, dtype=np.float64)
    det = np.linalg.det(cov)
    if abs(det) < COV_DET_FLOOR:
        bump = COV_EPSILON * np.trace(cov) / cov.shape[0]
        if bump <= 0:
            bump = COV_EPSILON
        cov = cov + bump * np.eye(cov.shape[0])
    sign, logdet = np.linalg.slogdet(cov)
    if sign <= 0:
        raise SingularCovariance(sig.class_id)
    try:
        inv = np.linalg.inv(cov)
    except np.linalg.LinAlgError as exc:
        raise SingularCovariance(sig.class_id) from exc
    return inv, logdet


def maxlike_classify(stack: BandStack, signatures, priors=None, legend=None) -> ClassGrid:
    """Gaussian maximum-likelihood label per cell.

    Discriminant per class: ln(prior) - log|cov|/2 - mahalanobis^2/2; ties go
    to the lowest class id.  Cells with any nodata band stay nodata.
    """
    if not signatures:
        raise ValueError("need at least one signature")
    signatures = sorted(signatures, key=lambda s: s.class_id)
    k = len(signatures)
    if priors is None:
        priors = {s.class_id: 1.0 / k for s in signatures}

    valid = stack.valid_mask()
    rows, cols = np.nonzero(valid)
    x = stack.values(rows, cols)

    best_g = np.full(x.shape[0], -np.inf)
    best_id = np.zeros(x.shape[0], dtype=np.uint8)
    for sig in signatures:
        inv, logdet = _regularized(sig)
        diff = x - sig.mean
        maha = np.einsum("ij,jk,ik->i", diff, inv, diff)
        g = np.log(priors[sig.class_id]) - 0.5 * logdet - 0.5 * maha
        improved = g > best_g  # strict: earlier (lower) class id wins ties
        best_g[improved] = g[improved]
        best_id[improved] = sig.class_id
    hdr = class_header(stack.header)
    cells = np.full((hdr.nrows, hdr.ncols), int(hdr.nodata_value), dtype=np.uint8)
    cells[rows, cols] = best_id
    if legend is None:
        legend = {s.class_id: _legend_entry_for(s.class_id) for s in signatures}
    return ClassGrid(hdr, cells, legend)


def _legend_entry_for(cid: int):
    palette = [
        (31, 119, 180, 255),
        (44, 160, 44, 255),
        (152, 223, 138, 255),
        (214, 39, 40, 255),
        (196, 156, 148, 255),
        (148, 103, 189, 255),
        (140, 86, 75, 255),
        (227, 119, 194, 255),
    ]
    return LegendEntry(f"class_{cid}", palette[cid % len(palette)])


@dataclass(frozen=True)
class SamplePoint:
    row: int
    col: int
    x: float
    y: float
    ref_class: int


def stratified_sample(reference: ClassGrid, n_points: int, seed: int):
    """Stratified random points, allocated proportionally to class area.

    Every present class receives at least MIN_POINTS_PER_CLASS points
    (capped by its size); sampling is without replacement and deterministic
    for a given seed.  Nodata cells are never sampled.
    """
    counts = {c: n for c, n in reference.class_counts().items() if n > 0}
    if not counts:
        raise AllocationError("reference grid has no data cells")
    if n_points < len(counts):
        raise AllocationError(
            f"n_points={n_points} is below one point per class ({len(counts)})"
        )
    total = sum(counts.values())
    classes = sorted(counts)

    # proportional quotas by largest remainder, then the per-class floor
    raw = {c: n_points * counts[c] / total for c in classes}
    quotas = {c: int(np.floor(raw[c])) for c in classes}
    leftover = n_points - sum(quotas.values())
    by_remainder = sorted(classes, key=lambda c: (-(raw[c] - quotas[c]), c))
    for c in by_remainder[:leftover]:
        quotas[c] += 1
    for c in classes:
        quotas[c] = min(max(quotas[c], MIN_POINTS_PER_CLASS), counts[c])

    rng = np.random.default_rng(seed)
    points = []
    for c in classes:
        rows, cols = np.nonzero(reference.data_mask & (reference.cells == c))
        order = np.lexsort((cols, rows))  # row-major for run-to-run stability
        rows, cols = rows[order], cols[order]
        pick = rng.choice(rows.size, size=quotas[c], replace=False)
        pick.sort()
        for idx in pick:
            r, col = int(rows[idx]), int(cols[idx])
            x, y = reference.header.cell_center(r, col)
            points.append(SamplePoint(r, col, float(x), float(y), c))
    return points


@dataclass(frozen=True)
class ConfusionMatrix:
    """k x k counts; rows are reference classes, columns predicted."""

    classes: tuple
    counts: np.ndarray

    @classmethod
    def from_pairs(cls, reference, predicted) -> "ConfusionMatrix":
        reference = np.asarray(reference, dtype=np.int64)
        predicted = np.asarray(predicted, dtype=np.int64)
        classes = tuple(sorted(set(reference.tolist()) | set(predicted.tolist())))
        index = {c: i for i, c in enumerate(classes)}
        counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
        for r, p in zip(reference, predicted):
            counts[index[r], index[p]] += 1
        return cls(classes, counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def overall_accuracy(self) -> float:
        return float(np.trace(self.counts)) / self.total

    def expected_agreement(self) -> float:
        n = self.total
        rows = self.counts.sum(axis=1).astype(np.float64)
        cols = self.counts.sum(axis=0).astype(np.float64)
        return float(np.dot(rows, cols)) / (n * n)

    def kappa(self) -> float:
        p_o = self.overall_accuracy()
        p_e = self.expected_agreement()
        if p_e == 1.0:
            return 1.0 if p_o == 1.0 else 0.0
        return (p_o - p_e) / (1.0 - p_e)

    def users_accuracy(self) -> dict:
        cols = self.counts.sum(axis=0)
        return {
            c: (float(self.counts[i, i]) / cols[i] if cols[i] else float("nan"))
            for i, c in enumerate(self.classes)
        }

    def producers_accuracy(self) -> dict:
        rows = self.counts.sum(axis=1)
        return {
            c: (float(self.counts[i, i]) / rows[i] if rows[i] else float("nan"))
            for i, c in enumerate(self.classes)
        }


@dataclass(frozen=True)
class Assessment:
    matrix: ConfusionMatrix
    overall_accuracy: float
    kappa: float
    users_acc: dict
    producers_acc: dict
    n_points: int


def assess(predicted: ClassGrid, reference_points) -> Assessment:
    """Accuracy assessment of a classified grid against labelled points."""
    refs, preds = [], []
    for pt in reference_points:
        if isinstance(pt, SamplePoint):
            r, c, ref = pt.row, pt.col, pt.ref_class
        else:  # (row, col, ref_class) triple
            r, c, ref = pt
        v = int(predicted.cells[r, c])
        if v == int(predicted.header.nodata_value):
            continue
        refs.append(int(ref))
        preds.append(v)
    if not refs:
        raise EmptyAssessment("no reference point fell on a data cell")
    matrix = ConfusionMatrix.from_pairs(refs, preds)
    return Assessment(
        matrix=matrix,
        overall_accuracy=matrix.overall_accuracy(),
        kappa=matrix.kappa(),
        users_acc=matrix.users_accuracy(),
        producers_acc=matrix.producers_accuracy(),
        n_points=len(refs),
    )


@dataclass(frozen=True)
class LulcTabulation:
    """Land-cover composition of an inundation mask."""

    height_m: float
    cells: dict  # class id -> cell count inside the mask
    pct: dict  # class id -> percentage of classified masked cells
    nodata_cells: int

    def rows(self, legend) -> list:
        out = []
        for cid in sorted(self.cells):
            name = legend[cid].name if cid in legend else str(cid)
            out.append((cid, name, self.cells[cid], self.pct[cid]))
        return out


def lulc_under_slr(lulc: ClassGrid, scenario: SlrScenario) -> LulcTabulation:
    """Count land-cover classes inside a scenario's flooded cells.

    The land-cover grid is resampled (nearest neighbour) onto the scenario
    grid when the two differ.  Percentages are over classified flooded cells;
    flooded cells with nodata land cover are reported separately.
    """
    mask = scenario.mask
    if not lulc.header.aligned_with(mask.header):
        lulc = resample_nearest(lulc, mask.header)
    wet = (mask.cells == 1) & mask.data_mask
    values = lulc.cells[wet]
    nodata = int(lulc.header.nodata_value)
    classified = values[values != nodata]
    counts = np.bincount(classified, minlength=256)
    cells = {cid: int(counts[cid]) for cid in sorted(lulc.legend)}
    total = sum(cells.values())
    pct = {
        cid: (100.0 * n / total if total else 0.0) for cid, n in cells.items()
    }
    return LulcTabulation(
        height_m=scenario.height_m,
        cells=cells,
        pct=pct,
        nodata_cells=int(np.count_nonzero(values == nodata)),
    )
