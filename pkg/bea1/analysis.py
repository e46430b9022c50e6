"""Differential and linear metrics of the BEA-1 components.

Difference distribution and linear approximation tables of the S-boxes,
branch numbers of M, the active S-box count of a trail and the probability
and bias bounds that follow from them. Every published figure is checked as a
``Claim``.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from itertools import combinations, product
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
import pandas as pd

from bea1 import gf2, settings
from bea1.bundles import BUNDLE_BITS, BUNDLE_SIZE
from bea1.tables import (
    MAP_BUNDLES,
    BeaTables,
    LinearMapTable,
    SBoxTable,
    as_binary_matrix,
    linear_map_from_matrix,
)

logger = logging.getLogger(__name__)
logger.setLevel(settings.LOG_LEVEL)

DIFFERENTIAL_UNIFORMITY = 40
LINEAR_UNIFORMITY = 128
BRANCH_NUMBER = 5
TRAIL_ROUNDS = 10
ACTIVE_SBOXES = 25
LOG2_PROB_RANGE = (-117.0, -116.9)
LOG2_BIAS = -50.0
CODEBOOK_LOG2 = 80

HALF = BUNDLE_SIZE // 2
MAX_BRANCH = MAP_BUNDLES + 1
FULL_SCAN_WEIGHT = MAP_BUNDLES - 1

_PARITY = np.array([bin(v).count("1") & 1 for v in range(BUNDLE_SIZE)], dtype=np.int64)


@dataclass(frozen=True, eq=False)
class DifferenceDistributionTable:
    name: str
    counts: np.ndarray
    max_nontrivial: int

    def __repr__(self):
        return (
            f"<DifferenceDistributionTable(name={self.name}, "
            f"max={self.max_nontrivial})>"
        )


@dataclass(frozen=True, eq=False)
class LinearApproximationTable:
    """``bias_counts[a, b] = |#{x : a.x = b.S(x)} - 512|``, i.e. |W(a, b)| / 2."""

    name: str
    bias_counts: np.ndarray
    max_nontrivial: int

    @property
    def max_walsh(self) -> int:
        return 2 * self.max_nontrivial

    def __repr__(self):
        return (
            f"<LinearApproximationTable(name={self.name}, max={self.max_nontrivial})>"
        )


class BranchMethod(enum.Enum):
    SUBMATRIX_RANK = "submatrix_rank"
    EXHAUSTIVE_LOW_WEIGHT = "exhaustive_low_weight"


@dataclass(frozen=True)
class BranchNumberReport:
    differential: int | None
    linear: int | None
    method: BranchMethod
    max_weight: int | None = None
    exact: bool = True
    # input bundle weight -> (min, max) output bundle weight seen
    output_weights: dict[int, tuple[int, int]] = field(default_factory=dict)
    cases: int = 0

    @property
    def certified_lower_bound(self) -> int | None:
        if self.differential is None:
            return None
        if self.method is BranchMethod.SUBMATRIX_RANK or self.max_weight is None:
            return self.differential
        return min(self.differential, self.max_weight + 2)


@dataclass(frozen=True)
class TrailBound:
    rounds: int | None
    active_sboxes: int
    log2_prob_bound: float
    log2_bias_bound: float

    @property
    def log2_chosen_pairs(self) -> float:
        return -self.log2_prob_bound

    @property
    def log2_known_pairs(self) -> float:
        return -2 * self.log2_bias_bound


@dataclass(frozen=True)
class Claim:
    name: str
    measured: str
    expected: str
    passed: bool

    def render(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (
            f"CLAIM {self.name}: {self.measured} "
            f"(published: {self.expected}) {verdict}"
        )


@dataclass
class AnalysisReport:
    claims: list[Claim] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(claim.passed for claim in self.claims)

    def extend(self, other: AnalysisReport) -> None:
        self.claims.extend(other.claims)
        self.notes.extend(other.notes)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [vars(claim) for claim in self.claims],
            columns=["name", "measured", "expected", "passed"],
        )

    def render(self) -> str:
        lines = [*self.notes, *(claim.render() for claim in self.claims)]
        verdict = "ALL CLAIMS HOLD" if self.passed else "SOME CLAIMS FAIL"
        lines.append(f"RESULT {verdict} ({sum(c.passed for c in self.claims)}"
                     f"/{len(self.claims)})")
        return "\n".join(lines)


def inverse_sbox(s: SBoxTable) -> SBoxTable:
    return SBoxTable(name=f"{s.name}^-1", forward=s.inverse, inverse=s.forward)


def compute_ddt(s: SBoxTable) -> DifferenceDistributionTable:
    S = s.forward_array.astype(np.int64)
    xs = np.arange(BUNDLE_SIZE)
    out_diff = S[xs[:, None] ^ xs[None, :]] ^ S[None, :]
    flat = out_diff + BUNDLE_SIZE * xs[:, None]
    counts = np.bincount(flat.ravel(), minlength=BUNDLE_SIZE * BUNDLE_SIZE).reshape(
        BUNDLE_SIZE, BUNDLE_SIZE
    )
    max_nontrivial = int(counts[1:].max())
    logger.debug("DDT of %s: max nontrivial entry %d", s.name, max_nontrivial)
    return DifferenceDistributionTable(
        name=s.name, counts=counts, max_nontrivial=max_nontrivial
    )


def walsh_hadamard(values: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along axis 0."""
    out = np.array(values, dtype=np.int64)
    n = out.shape[0]
    h = 1
    while h < n:
        out = out.reshape(n // (2 * h), 2, h, -1)
        out = np.stack((out[:, 0] + out[:, 1], out[:, 0] - out[:, 1]), axis=1)
        h *= 2
    return out.reshape(np.shape(values))


def walsh_spectrum(s: SBoxTable) -> np.ndarray:
    """``W[a, b] = sum_x (-1)^(a.x xor b.S(x))``."""
    S = s.forward_array.astype(np.int64)
    masks = np.arange(BUNDLE_SIZE)
    signs = 1 - 2 * _PARITY[S[:, None] & masks[None, :]]
    return walsh_hadamard(signs)


def compute_lat(s: SBoxTable) -> LinearApproximationTable:
    bias_counts = np.abs(walsh_spectrum(s)) // 2
    max_nontrivial = int(bias_counts[:, 1:].max())
    logger.debug("LAT of %s: max nontrivial bias count %d", s.name, max_nontrivial)
    return LinearApproximationTable(
        name=s.name, bias_counts=bias_counts, max_nontrivial=max_nontrivial
    )


def export_csv(table: np.ndarray, path: Path | str) -> int:
    a, b = np.nonzero(table)
    frame = pd.DataFrame({"a": a, "b": b, "count": table[a, b]})
    frame.to_csv(path, index=False)
    return len(frame)


def _bit_indices(bundles: Sequence[int]) -> list[int]:
    return [BUNDLE_BITS * i + t for i in bundles for t in range(BUNDLE_BITS)]


def square_block_selections() -> Iterator[tuple[tuple[int, ...], tuple[int, ...]]]:
    for t in range(1, MAP_BUNDLES + 1):
        for rows in combinations(range(MAP_BUNDLES), t):
            for cols in combinations(range(MAP_BUNDLES), t):
                yield rows, cols


def singular_square_blocks(
    matrix: np.ndarray,
) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    singular = []
    for rows, cols in square_block_selections():
        block = matrix[np.ix_(_bit_indices(rows), _bit_indices(cols))]
        if gf2.rank(block) < block.shape[0]:
            singular.append((rows, cols))
    return singular


def _images_by_support(
    nonzero: np.ndarray, support: tuple[int, ...]
) -> Iterator[np.ndarray]:
    """Images of every input whose nonzero bundles are exactly ``support``."""
    if len(support) == 1:
        yield nonzero[support[0]]
        return
    grid = nonzero[support[-2]][:, None, :] ^ nonzero[support[-1]][None, :, :]
    if len(support) == 2:
        yield grid
        return
    prefixes = [range(BUNDLE_SIZE - 1)] * (len(support) - 2)
    for indices in product(*prefixes):
        v = np.zeros(MAP_BUNDLES, dtype=np.uint16)
        for position, index in zip(support, indices):
            v ^= nonzero[position][index]
        yield grid ^ v


def branch_number_exhaustive(
    map: LinearMapTable, max_weight: int
) -> BranchNumberReport:
    """min(wt(x) + wt(Mx)) over nonzero x of bundle weight <= max_weight."""
    if not 1 <= max_weight <= MAP_BUNDLES:
        raise ValueError(f"max_weight must be in 1..{MAP_BUNDLES}, got {max_weight}")
    nonzero = map.lut_array[:, 1:, :]
    best = MAX_BRANCH + MAP_BUNDLES
    cases = 0
    output_weights: dict[int, tuple[int, int]] = {}
    for w in range(1, max_weight + 1):
        lowest, highest = MAP_BUNDLES, 0
        for support in combinations(range(MAP_BUNDLES), w):
            for images in _images_by_support(nonzero, support):
                weights = np.count_nonzero(images, axis=-1)
                lowest = min(lowest, int(weights.min()))
                highest = max(highest, int(weights.max()))
                cases += weights.size
        output_weights[w] = (lowest, highest)
        best = min(best, w + lowest)
        logger.info(
            "%s weight-%d scan: output weights %d..%d", map.name, w, lowest, highest
        )
    return BranchNumberReport(
        differential=best,
        linear=None,
        method=BranchMethod.EXHAUSTIVE_LOW_WEIGHT,
        max_weight=max_weight,
        exact=False,
        output_weights=output_weights,
        cases=cases,
    )


def certify_branch_number(
    map: LinearMapTable, inverse: LinearMapTable, max_weight: int = 2
) -> BranchNumberReport:
    """Scan a map and its inverse up to ``max_weight``.

    A pair (x, Mx) of total weight below ``2 * max_weight + 2`` has a side of
    weight at most ``max_weight``, so one of the scans meets it.
    """
    forward = branch_number_exhaustive(map, max_weight)
    backward = branch_number_exhaustive(inverse, max_weight)
    threshold = 2 * max_weight + 2
    best = min(forward.differential, backward.differential)
    return BranchNumberReport(
        differential=min(best, threshold),
        linear=None,
        method=BranchMethod.EXHAUSTIVE_LOW_WEIGHT,
        max_weight=max_weight,
        exact=best <= threshold,
        output_weights=forward.output_weights,
        cases=forward.cases + backward.cases,
    )


def _branch_number_by_scan(matrix: np.ndarray, name: str) -> int:
    inverse = gf2.inverse(matrix)
    report = certify_branch_number(
        linear_map_from_matrix(matrix, name),
        linear_map_from_matrix(inverse, f"{name}^-1"),
        max_weight=2,
    )
    return report.differential


def branch_number_submatrix(matrix: np.ndarray) -> BranchNumberReport:
    """Differential and linear branch numbers from square block submatrix ranks.

    The branch number is maximal exactly when all 69 square block submatrices
    are nonsingular; the linear one uses the transpose. When some block is
    singular the exact value comes from the exhaustive scan instead.
    """
    matrix = np.asarray(matrix, dtype=np.uint8)
    if not gf2.is_invertible(matrix):
        raise ValueError("Branch numbers are only certified for invertible maps")
    singular = singular_square_blocks(matrix)
    singular_transposed = singular_square_blocks(matrix.T)
    if not singular and not singular_transposed:
        return BranchNumberReport(
            differential=MAX_BRANCH,
            linear=MAX_BRANCH,
            method=BranchMethod.SUBMATRIX_RANK,
        )

    logger.info(
        "%d/%d singular block submatrices, falling back to exhaustive scan",
        len(singular),
        len(singular_transposed),
    )
    differential = _branch_number_by_scan(matrix, "matrix") if singular else MAX_BRANCH
    linear = (
        _branch_number_by_scan(matrix.T, "transpose")
        if singular_transposed
        else MAX_BRANCH
    )
    return BranchNumberReport(
        differential=differential,
        linear=linear,
        method=BranchMethod.EXHAUSTIVE_LOW_WEIGHT,
        max_weight=2,
    )


def min_active_sboxes(rounds: int, branch: int) -> int:
    if rounds < 1:
        raise ValueError(f"rounds must be at least 1, got {rounds}")
    if branch < 2:
        raise ValueError(f"branch number must be at least 2, got {branch}")
    return (rounds // 2) * branch


def trail_bounds(
    active: int, du: int, lu: int, rounds: int | None = None
) -> TrailBound:
    if active < 0:
        raise ValueError(f"active S-box count must be non-negative, got {active}")
    if not 0 < du <= BUNDLE_SIZE:
        raise ValueError(
            f"differential uniformity must be in 1..{BUNDLE_SIZE}, got {du}"
        )
    if not 0 < lu <= HALF:
        raise ValueError(f"linear uniformity must be in 1..{HALF}, got {lu}")
    return TrailBound(
        rounds=rounds,
        active_sboxes=active,
        log2_prob_bound=active * math.log2(du / BUNDLE_SIZE) + 0.0,
        log2_bias_bound=active * math.log2(lu / HALF) + 0.0,
    )


def sbox_report(
    tables: BeaTables, index: int, export_dir: Path | None = None
) -> AnalysisReport:
    sbox = tables.sboxes[index]
    ddt = compute_ddt(sbox)
    lat = compute_lat(sbox)
    report = AnalysisReport()
    report.notes.append(
        f"{sbox.name}: max DDT {ddt.max_nontrivial}, max LAT bias count "
        f"{lat.max_nontrivial} (max |Walsh| {lat.max_walsh})"
    )
    inverse = inverse_sbox(sbox)
    report.notes.append(
        f"{inverse.name}: max DDT {compute_ddt(inverse).max_nontrivial}, "
        f"max LAT bias count {compute_lat(inverse).max_nontrivial}"
    )
    report.claims.append(
        Claim(
            name=f"{sbox.name} differential uniformity",
            measured=str(ddt.max_nontrivial),
            expected=f"<= {DIFFERENTIAL_UNIFORMITY}",
            passed=ddt.max_nontrivial <= DIFFERENTIAL_UNIFORMITY,
        )
    )
    report.claims.append(
        Claim(
            name=f"{sbox.name} linear uniformity",
            measured=f"{lat.max_nontrivial} (|Walsh| {lat.max_walsh})",
            expected=f"<= {LINEAR_UNIFORMITY} (|Walsh| <= {2 * LINEAR_UNIFORMITY})",
            passed=lat.max_nontrivial <= LINEAR_UNIFORMITY,
        )
    )
    if export_dir is not None:
        export_dir.mkdir(parents=True, exist_ok=True)
        rows = export_csv(ddt.counts, export_dir / f"ddt_s{index}.csv")
        rows += export_csv(lat.bias_counts, export_dir / f"lat_s{index}.csv")
        logger.info(
            "Exported %d nonzero cells for %s to %s", rows, sbox.name, export_dir
        )
    return report


def matrix_report(tables: BeaTables, full_scan: bool = False) -> AnalysisReport:
    report = AnalysisReport()
    for map in (tables.m, tables.m_inv):
        branch = branch_number_submatrix(as_binary_matrix(map))
        for kind, value in (
            ("differential", branch.differential),
            ("linear", branch.linear),
        ):
            report.claims.append(
                Claim(
                    name=f"{kind} branch number of {map.name}",
                    measured=f"{value} ({branch.method.value})",
                    expected=f"= {BRANCH_NUMBER}",
                    passed=value == BRANCH_NUMBER,
                )
            )

    scan = branch_number_exhaustive(tables.m, max_weight=2)
    weight_one = scan.output_weights[1]
    report.claims.append(
        Claim(
            name="weight-1 inputs of M reach every output bundle",
            measured=f"output weights {weight_one[0]}..{weight_one[1]} over "
            f"{MAP_BUNDLES * (BUNDLE_SIZE - 1)} inputs",
            expected=f"= {MAP_BUNDLES}",
            passed=weight_one == (MAP_BUNDLES, MAP_BUNDLES),
        )
    )
    report.claims.append(
        Claim(
            name="weight-2 inputs of M reach at least 3 output bundles",
            measured=f"min output weight {scan.output_weights[2][0]}",
            expected=">= 3",
            passed=scan.output_weights[2][0] >= 3,
        )
    )
    certified = certify_branch_number(tables.m, tables.m_inv, max_weight=2)
    report.claims.append(
        Claim(
            name="exhaustive scan of M and M^-1 agrees with submatrix ranks",
            measured=f"{certified.differential} over {certified.cases} inputs",
            expected=f"= {BRANCH_NUMBER}",
            passed=certified.exact and certified.differential == BRANCH_NUMBER,
        )
    )
    if full_scan:
        # weight-4 inputs of an invertible map already have total weight >= 5
        full = branch_number_exhaustive(tables.m, max_weight=FULL_SCAN_WEIGHT)
        report.claims.append(
            Claim(
                name=f"exhaustive search of M up to input weight {FULL_SCAN_WEIGHT}",
                measured=f"{full.differential} over {full.cases} inputs",
                expected=f"= {BRANCH_NUMBER}",
                passed=full.differential == BRANCH_NUMBER,
            )
        )
    return report


def bounds_report(
    rounds: int = TRAIL_ROUNDS,
    branch: int = BRANCH_NUMBER,
    du: int = DIFFERENTIAL_UNIFORMITY,
    lu: int = LINEAR_UNIFORMITY,
) -> AnalysisReport:
    active = min_active_sboxes(rounds, branch)
    bound = trail_bounds(active, du, lu, rounds=rounds)
    report = AnalysisReport()
    report.notes.append(
        f"{rounds} rounds, branch {branch}: {active} active S-boxes, "
        f"log2 probability bound {bound.log2_prob_bound:.2f}, "
        f"log2 bias bound {bound.log2_bias_bound:.2f}, "
        f"2^{bound.log2_chosen_pairs:.2f} chosen pairs, "
        f"2^{bound.log2_known_pairs:.2f} known pairs"
    )
    if rounds != TRAIL_ROUNDS:
        return report

    low, high = LOG2_PROB_RANGE
    if du == DIFFERENTIAL_UNIFORMITY:
        prob_expected = f"in [{low}, {high}]"
        prob_passed = low <= bound.log2_prob_bound <= high
    else:
        # measured uniformity: only has to be at least as strong
        prob_expected = f"<= {high}"
        prob_passed = bound.log2_prob_bound <= high
    report.claims.extend(
        [
            Claim(
                name="active S-boxes in a 10-round trail",
                measured=str(active),
                expected=f">= {ACTIVE_SBOXES}",
                passed=active >= ACTIVE_SBOXES,
            ),
            Claim(
                name="log2 differential trail probability bound",
                measured=f"{bound.log2_prob_bound:.2f}",
                expected=prob_expected,
                passed=prob_passed,
            ),
            Claim(
                name="log2 linear trail bias bound",
                measured=f"{bound.log2_bias_bound:.2f}",
                expected=f"<= {LOG2_BIAS:.0f}",
                passed=bound.log2_bias_bound <= LOG2_BIAS,
            ),
            Claim(
                name="differential and linear attacks exceed the codebook",
                measured=f"2^{bound.log2_chosen_pairs:.2f} chosen, "
                f"2^{bound.log2_known_pairs:.2f} known pairs",
                expected=f"> 2^{CODEBOOK_LOG2} plaintexts per key",
                passed=min(bound.log2_chosen_pairs, bound.log2_known_pairs)
                > CODEBOOK_LOG2,
            ),
        ]
    )
    return report


def full_report(tables: BeaTables, full_scan: bool = False) -> AnalysisReport:
    report = AnalysisReport()
    for index in range(len(tables.sboxes)):
        report.extend(sbox_report(tables, index))
    du = max(compute_ddt(s).max_nontrivial for s in tables.sboxes)
    lu = max(compute_lat(s).max_nontrivial for s in tables.sboxes)
    report.extend(matrix_report(tables, full_scan=full_scan))
    report.notes.append(f"measured uniformities over S0..S3: DU {du}, LU {lu}")
    report.extend(bounds_report(du=du, lu=lu))
    return report
