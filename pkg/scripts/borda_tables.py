"""Recompute importance scores from the bundled highway ballot tables."""

import json
from pathlib import Path

from phasepat.importance import BallotMatrix, borda_score
from phasepat.model import VARIABLE_KEYS

FIXTURES = Path(__file__).resolve().parents[1] / "tests" / "fixtures"


def main() -> None:
    for name in ("us101", "i80"):
        matrix = BallotMatrix.from_rows(json.loads((FIXTURES / f"{name}_ballots.json").read_text())["by_size"])
        score = borda_score(matrix)
        print(f"{name}: consistent ballot table = {matrix.is_consistent()}")
        for key, w, s in zip(VARIABLE_KEYS, score.wbs, score.scores):
            print(f"  {key:>2}  wBS {w:9.3f}  IS {s:.4f}")


if __name__ == "__main__":
    main()
