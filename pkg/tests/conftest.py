"""Shared fixtures: the published Square_Rabbit score table and helpers.

The five (name, score) top-7 columns below are the published per-metric
localization results for the Square_Rabbit subject, frozen here as test
data. The expected consolidated head order and aggregate weights were
recomputed independently with exact decimal arithmetic before the
aggregator existed.
"""

import pytest

from binmend.spectra import FunctionRecord, TestRecord, build_matrix

SQUARE_RABBIT_ROWS = {
    "tarantula": [
        ("cgc_remove_card", 1.000),
        ("cgc_split", 1.000),
        ("cgc_remove_from_blist", 0.885),
        ("cgc_stand", 0.858),
        ("cgc_is_player_finished", 0.852),
        ("cgc_calc_score", 0.852),
        ("cgc_dealer_hit", 0.852),
    ],
    "ochiai": [
        ("cgc_remove_card", 1.000),
        ("cgc_split", 1.000),
        ("cgc_remove_from_blist", 0.718),
        ("cgc_stand", 0.676),
        ("cgc_print_winner", 0.667),
        ("cgc_check_player_squarerabbit", 0.667),
        ("cgc_new_srabbit_game", 0.667),
    ],
    "op2": [
        ("cgc_split", 1.000),
        ("cgc_remove_card", 1.000),
        ("cgc_remove_from_blist", 0.875),
        ("cgc_stand", 0.842),
        ("cgc_can_split", 0.833),
        ("cgc_get_card", 0.833),
        ("cgc_print_cards", 0.833),
    ],
    "barinel": [
        ("cgc_split", 1.000),
        ("cgc_remove_card", 1.000),
        ("cgc_remove_from_blist", 0.516),
        ("cgc_stand", 0.457),
        ("cgc_calc_score", 0.444),
        ("cgc_shuffle_deck_if_needed", 0.444),
        ("cgc_discard_hand", 0.444),
    ],
    "dstar2": [
        ("cgc_remove_card", 1.000),
        ("cgc_split", 1.000),
        ("cgc_remove_from_blist", 0.500),
        ("cgc_stand", 0.441),
        ("cgc_dealer_hit", 0.429),
        ("cgc_print_cards", 0.429),
        ("cgc_cardtos", 0.429),
    ],
}

# first four names of the published consolidated list, plus the aggregate
# weights recomputed by hand: 5x1.000 for the head pair (lexicographic tie),
# 0.885+0.718+0.875+0.516+0.500 and 0.858+0.676+0.842+0.457+0.441
SQUARE_RABBIT_HEAD = [
    ("cgc_remove_card", 5.000),
    ("cgc_split", 5.000),
    ("cgc_remove_from_blist", 3.494),
    ("cgc_stand", 3.274),
]


@pytest.fixture
def square_rabbit_rows():
    names = [[n for n, _ in SQUARE_RABBIT_ROWS[m]] for m in SQUARE_RABBIT_ROWS]
    weights = [[w for _, w in SQUARE_RABBIT_ROWS[m]] for m in SQUARE_RABBIT_ROWS]
    return names, weights


def make_matrix(coverage: dict[str, set[str]], verdicts: dict[str, str],
                sizes: dict[str, int] | None = None):
    """Small-matrix builder: coverage maps test id -> covered names."""
    names = sorted({n for cov in coverage.values() for n in cov}
                   | set(sizes or {}))
    fns = [FunctionRecord(n, (sizes or {}).get(n, 64)) for n in names]
    runs = []
    for tid in sorted(coverage):
        kind = "negative" if verdicts[tid] == "fail" else "positive"
        runs.append(((tid, kind, verdicts[tid]), coverage[tid]))
    return build_matrix(runs, fns)
