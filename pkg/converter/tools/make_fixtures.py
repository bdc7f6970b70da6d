"""Regenerate the pickled test fixtures.

Run from converter/: python3 tools/make_fixtures.py
The chorale-style fixture needs the tensorcells package installed.
"""

import pickle
from pathlib import Path

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

BASIC = {
    "train": [[(60,), (64, 67)], [(72,), ()]],
    "valid": [[(21,), (108,)]],
    "test": [[(67, 64, 60)]],
}


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    for proto in (0, 2, 4):
        with open(FIXTURES / f"basic_p{proto}.pkl", "wb") as fh:
            pickle.dump(BASIC, fh, protocol=proto)

    bad = {"train": [[(60, 109)]], "valid": [], "test": []}
    with open(FIXTURES / "bad_pitch_p2.pkl", "wb") as fh:
        pickle.dump(bad, fh, protocol=2)

    with open(FIXTURES / "missing_split_p2.pkl", "wb") as fh:
        pickle.dump({"train": [], "valid": []}, fh, protocol=2)

    alias = dict(BASIC)
    alias["validation"] = alias.pop("valid")
    with open(FIXTURES / "validation_alias_p2.pkl", "wb") as fh:
        pickle.dump(alias, fh, protocol=2)

    from tensorcells.demo_data import corpus_to_upstream_pickle, generate_corpus

    corpus = generate_corpus(11, counts=(6, 2, 2), name="chorales-sample")
    with open(FIXTURES / "chorales_p2.pkl", "wb") as fh:
        pickle.dump(corpus_to_upstream_pickle(corpus), fh, protocol=2)

    print(f"fixtures written to {FIXTURES}")


if __name__ == "__main__":
    main()
