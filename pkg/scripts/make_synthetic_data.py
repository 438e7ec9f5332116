#!/usr/bin/env python3
"""Generate a synthetic 4-class corpus for pipeline experiments.

Writes labeled/unlabeled/heldout JSONL splits plus a truth.json mapping every
post id to its generating class, which the scripted annotator uses as the
ground-truth oracle.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from semilabel import make_blob_fixture
from semilabel.corpus import save_dataset


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--labeled", type=int, default=200)
    parser.add_argument("--unlabeled", type=int, default=600)
    parser.add_argument("--heldout", type=int, default=150)
    parser.add_argument("--dim", type=int, default=24)
    parser.add_argument("--separation", type=float, default=4.0)
    parser.add_argument("--confusion-gap", type=float, default=2.8)
    parser.add_argument("--noise", type=float, default=1.0)
    args = parser.parse_args()

    fixture = make_blob_fixture(
        seed=args.seed,
        n_labeled=args.labeled,
        n_unlabeled=args.unlabeled,
        n_heldout=args.heldout,
        dim=args.dim,
        separation=args.separation,
        confusion_gap=args.confusion_gap,
        noise=args.noise,
    )

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_dataset(fixture.labeled, out / "labeled.jsonl")
    save_dataset(fixture.unlabeled, out / "unlabeled.jsonl")
    save_dataset(fixture.heldout, out / "heldout.jsonl")
    (out / "truth.json").write_text(json.dumps(fixture.truth, indent=2, sort_keys=True))
    print(
        f"wrote {args.labeled} labeled / {args.unlabeled} unlabeled / "
        f"{args.heldout} heldout posts to {out}/"
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
