"""Land-change modelling: change analysis between two dated land-cover maps,
transition filtering, training-set assembly for the transition network,
variable-influence analysis, Markov projection, hard allocation, and
three-map validation of a prediction."""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .errors import InsufficientSamples, NoTransitionsError
from .grid import ClassGrid, LegendEntry, class_header, require_aligned
from .mlp import MlpModel, TrainingSet, normalize, skill
from .rasterops import CrossTab, cross_tab

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TransitionSpec:
    from_class: int
    to_class: int
    cell_count: int
    included: bool = False

    def __post_init__(self):
        if self.from_class == self.to_class:
            raise ValueError("a transition needs two distinct classes")

    @property
    def key(self):
        return (self.from_class, self.to_class)


@dataclass(frozen=True)
class ChangeAnalysis:
    gains: dict  # class -> cells newly in the class
    losses: dict  # class -> cells that left the class
    transitions: list  # TransitionSpec, descending cell_count
    crosstab: CrossTab


def change_analysis(lulc_t1: ClassGrid, lulc_t2: ClassGrid) -> ChangeAnalysis:
    """Per-class gains and losses plus the full off-diagonal transition list."""
    ct = cross_tab(lulc_t1, lulc_t2)
    if ct.classes_a != ct.classes_b:
        classes = tuple(sorted(set(ct.classes_a) | set(ct.classes_b)))
    else:
        classes = ct.classes_a
    gains = {}
    losses = {}
    for c in classes:
        col = sum(ct.count(a, c) for a in classes if a != c)
        row = sum(ct.count(c, b) for b in classes if b != c)
        gains[c] = col
        losses[c] = row
    transitions = [
        TransitionSpec(a, b, ct.count(a, b))
        for a in classes
        for b in classes
        if a != b and ct.count(a, b) > 0
    ]
    transitions.sort(key=lambda t: (-t.cell_count, t.from_class, t.to_class))
    return ChangeAnalysis(gains, losses, transitions, ct)


def filter_transitions(specs, threshold: int):
    """Keep transitions with at least ``threshold`` calibration cells."""
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    return [replace(s, included=True) for s in specs if s.cell_count >= threshold]


def build_training_set(
    lulc_t1: ClassGrid,
    lulc_t2: ClassGrid,
    drivers,
    spec: TransitionSpec,
    samples_per_class: int,
    seed: int,
) -> TrainingSet:
    """Balanced samples of transitioned vs persisted cells of ``from_class``.

    Each group is drawn without replacement from cells where every driver has
    data; features are min-max normalized over the drawn samples, and each
    group is split half/half into disjoint train and test sets.
    """
    require_aligned(lulc_t1, lulc_t2, drivers.grids[0], what="land cover and drivers")
    valid = lulc_t1.data_mask & lulc_t2.data_mask & drivers.valid_mask()
    from_cells = valid & (lulc_t1.cells == spec.from_class)
    transitioned = from_cells & (lulc_t2.cells == spec.to_class)
    persisted = from_cells & (lulc_t2.cells == spec.from_class)

    rng = np.random.default_rng(seed)
    groups = []
    for label, mask in ((0, transitioned), (1, persisted)):
        rows, cols = np.nonzero(mask)
        if rows.size < samples_per_class:
            kind = "transitioned" if label == 0 else "persisted"
            raise InsufficientSamples(
                f"{kind} cells for {spec.from_class}->{spec.to_class}: "
                f"{rows.size} < requested {samples_per_class}"
            )
        pick = rng.choice(rows.size, size=samples_per_class, replace=False)
        groups.append((label, rows[pick], cols[pick]))

    features = []
    labels = []
    cellidx = []
    for label, rows, cols in groups:
        features.append(drivers.values_at(rows, cols))
        labels.append(np.full(rows.size, label))
        cellidx.append(np.column_stack([rows, cols]))
    x = np.concatenate(features, axis=0)
    y_label = np.concatenate(labels)
    cells = np.concatenate(cellidx, axis=0)

    norm_min = x.min(axis=0)
    norm_max = x.max(axis=0)
    x = normalize(x, norm_min, norm_max)

    # stratified half/half split keeps both halves balanced
    n = samples_per_class
    train_idx, test_idx = [], []
    for g in range(2):
        order = rng.permutation(n) + g * n
        half = n // 2
        train_idx.append(order[:half])
        test_idx.append(order[half:])
    train_idx = np.concatenate(train_idx)
    test_idx = np.concatenate(test_idx)

    y = np.zeros((x.shape[0], 2))
    y[np.arange(x.shape[0]), y_label] = 1.0
    return TrainingSet(
        x_train=x[train_idx],
        y_train=y[train_idx],
        x_test=x[test_idx],
        y_test=y[test_idx],
        norm_min=norm_min,
        norm_max=norm_max,
        variable_names=drivers.names,
        train_cells=cells[train_idx],
        test_cells=cells[test_idx],
    )


@dataclass(frozen=True)
class InfluenceRow:
    label: str
    accuracy: float
    skill_measure: float
    influence_order: int = 0  # 1 = most influential; 0 = not ranked


@dataclass(frozen=True)
class InfluenceReport:
    forced_constant: list  # InfluenceRow per variable, plus the all-variable row
    all_but_one: list


def variable_influence(model: MlpModel, ts: TrainingSet) -> InfluenceReport:
    """Sensitivity of test accuracy to holding variables constant.

    'Forced constant' replaces one variable column with its training mean and
    re-evaluates (no retraining); lower accuracy means more influence.  The
    second table keeps a single variable and holds all others constant.
    """
    means = ts.x_train.mean(axis=0)
    k = model.output_dim
    base = InfluenceRow("all_variables", model.accuracy_on(ts.x_test, ts.y_test),
                        skill(model.accuracy_on(ts.x_test, ts.y_test), k))

    single_rows = []
    for i, name in enumerate(model.variable_names):
        x = np.array(ts.x_test)
        x[:, i] = means[i]
        acc = model.accuracy_on(x, ts.y_test)
        single_rows.append((i, name, acc))
    order = sorted(range(len(single_rows)), key=lambda i: (single_rows[i][2], i))
    rank = {i: r + 1 for r, i in enumerate(order)}
    forced = [base] + [
        InfluenceRow(f"{name}_constant", acc, skill(acc, k), rank[i])
        for i, name, acc in single_rows
    ]

    keep_rows = [base]
    for i, name in enumerate(model.variable_names):
        x = np.tile(means, (ts.x_test.shape[0], 1))
        x[:, i] = ts.x_test[:, i]
        acc = model.accuracy_on(x, ts.y_test)
        keep_rows.append(InfluenceRow(f"only_{name}", acc, skill(acc, k)))
    return InfluenceReport(forced_constant=forced, all_but_one=keep_rows)


@dataclass(frozen=True)
class MarkovMatrix:
    """Row-stochastic class-transition probabilities over one base period."""

    classes: tuple
    probabilities: np.ndarray
    base_years: float

    def __post_init__(self):
        p = self.probabilities
        if p.shape != (len(self.classes), len(self.classes)):
            raise ValueError("probability matrix shape mismatch")
        if np.any(p < -1e-12) or np.any(p > 1 + 1e-12):
            raise ValueError("probabilities must lie in [0, 1]")
        rowsums = p.sum(axis=1)
        if np.any(np.abs(rowsums - 1.0) > 1e-9):
            raise ValueError(f"rows must sum to 1, got {rowsums}")


def markov_from_crosstab(
    lulc_t1: ClassGrid, lulc_t2: ClassGrid, t1_year: float, t2_year: float
) -> MarkovMatrix:
    """Transition probabilities from a dated pair of land-cover maps."""
    if t2_year <= t1_year:
        raise ValueError("t2_year must be after t1_year")
    ct = cross_tab(lulc_t1, lulc_t2)
    classes = tuple(sorted(set(ct.classes_a) | set(ct.classes_b)))
    k = len(classes)
    counts = np.zeros((k, k), dtype=np.float64)
    for i, a in enumerate(classes):
        for j, b in enumerate(classes):
            counts[i, j] = ct.count(a, b)
    p = np.eye(k)
    totals = counts.sum(axis=1)
    for i in range(k):
        if totals[i] > 0:
            p[i, :] = counts[i, :] / totals[i]
    return MarkovMatrix(classes, p, float(t2_year - t1_year))


@dataclass(frozen=True)
class TransitionQuotas:
    """Expected cells moving between classes by the target year."""

    classes: tuple
    expected_cells: np.ndarray  # (k, k); row = from, col = to
    effective_matrix: np.ndarray
    steps: float

    def quota(self, from_class: int, to_class: int) -> float:
        i = self.classes.index(from_class)
        j = self.classes.index(to_class)
        return float(self.expected_cells[i, j])


def project_markov(
    markov: MarkovMatrix, class_counts: dict, target_year: float, base_year: float
) -> TransitionQuotas:
    """Expected per-class transition quotas at ``target_year``.

    The step count may be fractional: the effective matrix interpolates
    linearly between the two neighbouring integer matrix powers.
    """
    if target_year <= base_year:
        raise ValueError("target_year must be after base_year")
    s = (target_year - base_year) / markov.base_years
    lo = int(np.floor(s))
    frac = s - lo
    p_lo = np.linalg.matrix_power(markov.probabilities, lo)
    if frac > 0:
        p_hi = np.linalg.matrix_power(markov.probabilities, lo + 1)
        effective = (1.0 - frac) * p_lo + frac * p_hi
    else:
        effective = p_lo
    counts = np.array([float(class_counts.get(c, 0)) for c in markov.classes])
    expected = counts[:, None] * effective
    return TransitionQuotas(markov.classes, expected, effective, s)


@dataclass(frozen=True)
class AllocationResult:
    predicted: ClassGrid
    applied: dict  # (from, to) -> cells converted
    shortfalls: dict  # (from, to) -> quota cells that had no eligible cell


def allocate(lulc_base: ClassGrid, potentials: dict, quotas: dict) -> AllocationResult:
    """Convert the top-ranked eligible cells of each transition.

    ``potentials`` maps (from, to) to a suitability grid; ``quotas`` maps
    (from, to) to expected cell counts.  Cells are ranked by potential
    descending with row-major index as the tie-break; a cell converts at most
    once per call.  Over-sized quotas are clamped with a logged shortfall.
    """
    for grid in potentials.values():
        require_aligned(lulc_base, grid, what="base land cover and potentials")
    cells = np.array(lulc_base.cells)
    converted = np.zeros(cells.shape, dtype=bool)
    applied = {}
    shortfalls = {}
    for key in sorted(quotas):
        if key not in potentials:
            continue
        from_class, to_class = key
        q = int(np.floor(quotas[key] + 0.5))
        if q <= 0:
            applied[key] = 0
            continue
        pot = potentials[key]
        eligible = (
            (lulc_base.cells == from_class) & ~converted & pot.data_mask
        )
        rows, cols = np.nonzero(eligible)
        if rows.size == 0 and q > 0:
            shortfalls[key] = q
            applied[key] = 0
            log.warning("transition %s->%s: no eligible cells for quota %d",
                        from_class, to_class, q)
            continue
        flat = rows.astype(np.int64) * cells.shape[1] + cols
        values = pot.cells[rows, cols]
        order = np.lexsort((flat, -values))
        take = order[: min(q, rows.size)]
        cells[rows[take], cols[take]] = to_class
        converted[rows[take], cols[take]] = True
        applied[key] = int(take.size)
        if take.size < q:
            shortfalls[key] = q - int(take.size)
            log.warning("transition %s->%s: quota %d clamped to %d eligible cells",
                        from_class, to_class, q, take.size)
    return AllocationResult(
        predicted=ClassGrid(lulc_base.header, cells, lulc_base.legend),
        applied=applied,
        shortfalls=shortfalls,
    )


VALIDATION_LEGEND = {
    0: LegendEntry("correct_rejection", (0, 0, 0, 0)),
    1: LegendEntry("hit", (44, 160, 44, 255)),
    2: LegendEntry("miss", (255, 127, 14, 255)),
    3: LegendEntry("false_alarm", (214, 39, 40, 255)),
}


@dataclass(frozen=True)
class ValidationMap:
    grid: ClassGrid  # VALIDATION_LEGEND classes
    hits: int
    misses: int
    false_alarms: int
    correct_rejections: int

    @property
    def total(self) -> int:
        return self.hits + self.misses + self.false_alarms + self.correct_rejections


def validate_three_map(
    observed_t2: ClassGrid, predicted_t3: ClassGrid, observed_t3: ClassGrid
) -> ValidationMap:
    """Hits / misses / false alarms of a prediction against what happened.

    Change is measured against the calibration-end map: a hit is a cell
    where change was both predicted and observed (regardless of the class it
    became), a miss is observed change predicted as persistence, a false
    alarm predicted change that never happened.
    """
    require_aligned(observed_t2, predicted_t3, observed_t3, what="validation grids")
    valid = (
        observed_t2.data_mask & predicted_t3.data_mask & observed_t3.data_mask
    )
    observed_change = valid & (observed_t2.cells != observed_t3.cells)
    predicted_change = valid & (observed_t2.cells != predicted_t3.cells)

    hdr = class_header(observed_t2.header)
    cells = np.full(observed_t2.cells.shape, int(hdr.nodata_value), dtype=np.uint8)
    cells[valid] = 0
    cells[observed_change & predicted_change] = 1
    cells[observed_change & ~predicted_change] = 2
    cells[~observed_change & predicted_change & valid] = 3
    grid = ClassGrid(hdr, cells, VALIDATION_LEGEND)
    return ValidationMap(
        grid=grid,
        hits=int(np.count_nonzero(cells == 1)),
        misses=int(np.count_nonzero(cells == 2)),
        false_alarms=int(np.count_nonzero(cells == 3)),
        correct_rejections=int(np.count_nonzero(cells == 0)),
    )


def require_transitions(specs) -> list:
    if not specs:
        raise NoTransitionsError("no transition met the cell-count threshold")
    return specs
