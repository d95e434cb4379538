"""Built-in sanity checks against small exact oracles."""

import asyncio
import itertools
import logging
from typing import Any, Callable, Dict, List, Tuple

import numpy as np

from analysis.failure_bounds import lrfc_exact
from analysis.fl_analysis import exhaustive_inactivation_distribution, expected_inactivations_dp
from analysis.spectra import outer_rate_root, we_hamming
from codes.degree_dists import DegreeDistribution
from codes.gf_linalg import FieldMatrix, field_add, field_inv, field_mul, field_spec, rank
from commands.base import CommandBase, lab_command
from core.tsv import format_tsv, parse_tsv

logger = logging.getLogger(__name__)

SELFTEST_COLUMNS = ("check", "passed", "detail")
OUTER_RATE_ROOT = 0.22709
TOY_TOLERANCE = 1e-6

Check = Callable[[], Tuple[bool, str]]


def check_field_axioms() -> Tuple[bool, str]:
    """Inverses, distributivity and commutativity over GF(2), GF(4) and GF(16)."""
    for m in (1, 2, 4):
        spec = field_spec(m)
        elements = range(spec.order)
        for a in range(1, spec.order):
            if field_mul(a, field_inv(a, spec), spec) != 1:
                return False, f"GF({spec.order}): {a} has a bad inverse"
        for a, b, c in itertools.product(elements, repeat=3):
            left = field_mul(a, field_add(b, c, spec), spec)
            right = field_add(field_mul(a, b, spec), field_mul(a, c, spec), spec)
            if left != right or field_mul(a, b, spec) != field_mul(b, a, spec):
                return False, f"GF({spec.order}): axioms fail at ({a}, {b}, {c})"
    return True, "GF(2), GF(4), GF(16)"


def check_exhaustive_lrfc() -> Tuple[bool, str]:
    """Share of singular 2×2 binary matrices against the closed form."""
    singular = sum(
        rank(FieldMatrix(np.array(bits).reshape(2, 2))) < 2 for bits in itertools.product((0, 1), repeat=4)
    )
    pf = singular / 16
    closed = lrfc_exact(2, 2, 0)
    return abs(pf - 0.625) < 1e-12 and abs(closed - 0.625) < 1e-12, f"exhaustive={pf} closed={closed}"


def check_hamming_enumerator() -> Tuple[bool, str]:
    we = we_hamming(3)
    counts = [int(round(we[w])) for w in range(we.n + 1)]
    return counts == [1, 0, 0, 7, 7, 0, 0, 1], ",".join(map(str, counts))


def check_outer_rate_root() -> Tuple[bool, str]:
    root = outer_rate_root()
    return abs(root - OUTER_RATE_ROOT) < 1e-4, f"{root:.6f}"


def check_toy_dp() -> Tuple[bool, str]:
    """Exact DP against exhaustive enumeration of every graph and decoder choice."""
    dist = DegreeDistribution([0.3, 0.5, 0.2], name="toy")
    k, m = 3, 4
    dp = expected_inactivations_dp(k, m, dist).expected_inactivations
    pmf = exhaustive_inactivation_distribution(k, m, dist)
    oracle = float(np.dot(np.arange(pmf.size), pmf))
    return abs(dp - oracle) < TOY_TOLERANCE, f"dp={dp:.8f} oracle={oracle:.8f}"


def check_tsv_round_trip() -> Tuple[bool, str]:
    rows = [[0, 0.1, 1e-300], [1, 2.0 / 3.0, float("inf")]]
    table = parse_tsv(format_tsv({"command": "selftest", "seed": 0}, ["i", "a", "b"], rows))
    return table.rows == rows and table.header["seed"] == 0, f"{len(table.rows)} rows"


CHECKS: Dict[str, Check] = {
    "field-axioms": check_field_axioms,
    "lrfc-2x2": check_exhaustive_lrfc,
    "hamming-t3": check_hamming_enumerator,
    "outer-rate-root": check_outer_rate_root,
    "toy-dp": check_toy_dp,
    "tsv-round-trip": check_tsv_round_trip,
}


def run_checks() -> List[List[Any]]:
    rows = []
    for name, check in CHECKS.items():
        try:
            passed, detail = check()
        except Exception as e:
            passed, detail = False, f"{type(e).__name__}: {e}"
        if not passed:
            logger.warning("Self-test %s failed: %s", name, detail)
        rows.append([name, int(passed), detail])
    return rows


@lab_command("selftest")
class SelftestCommand(CommandBase):
    """Run every built-in check; fails when any check fails."""

    def __init__(self):
        super().__init__(name="selftest", description="Run the built-in consistency checks", arguments={})

    async def execute(self, **kwargs) -> Dict[str, Any]:
        try:
            self.validate_parameters(**kwargs)
            rows = await asyncio.to_thread(run_checks)
            failed = [row[0] for row in rows if not row[1]]
            if failed:
                return self.format_error_response(f"Self-test failed: {', '.join(failed)}")
            return self.format_success_response(
                SELFTEST_COLUMNS, rows, self.provenance(0), f"All {len(rows)} checks passed"
            )
        except Exception as e:
            logger.error("Self-test failed: %s", str(e))
            return self.format_error_response(str(e))
