#!/usr/bin/env python3
"""Mask/demask sweep over randomized texts with planted personal entities.

For each sample the text is masked at every level, round-tripped through an
echoing "cloud", and demasked; counts per-level masked span totals and any
round-trip failures. Useful for eyeballing what each level actually hides.
"""

import argparse
import random
from collections import Counter

from galaxy.privacy import LEVELS, AvatarProfile, Detector, demask_payload, mask_payload

ENTITIES = ["Alice", "Bob", "Irene", "bob@example.org", "555-987-6543",
            "+1 555-222-3333", "$1,250", "4111-1111-1111-1111", "insulin",
            "Boston", "Tokyo", "March 5, 2026", "4:30 pm", "12 Baker Street",
            "Acme Corp", "password: hunter2"]
FILLERS = ["please remind", "about the", "meeting notes", "and then",
           "for tomorrow", "draft a reply"]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--samples", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=2026)
    parser.add_argument("--show", type=int, default=3,
                        help="print this many example maskings per level")
    args = parser.parse_args()

    rng = random.Random(args.seed)
    spans_per_level = Counter()
    categories_per_level: dict[int, Counter] = {lv: Counter() for lv in LEVELS}
    failures = 0
    shown = 0
    for _ in range(args.samples):
        parts = [rng.choice(ENTITIES if rng.random() < 0.5 else FILLERS)
                 for _ in range(rng.randint(1, 12))]
        text = " ".join(parts)
        avatar, detector = AvatarProfile(), Detector()
        for level in LEVELS:
            masked, mapping = mask_payload(text, level, avatar, detector)
            restored, unknown = demask_payload(masked, mapping)
            if restored != text or unknown:
                failures += 1
            spans_per_level[level] += len(mapping.entries)
            for entry in mapping.entries:
                categories_per_level[level][entry.category] += 1
            if shown < args.show and level == max(LEVELS):
                print(f"  L{level}: {masked}")
                shown += 1

    print(f"\n{args.samples} samples, {failures} round-trip failures")
    for level in LEVELS:
        cats = ", ".join(f"{c}:{n}" for c, n in
                         sorted(categories_per_level[level].items()))
        print(f"L{level}: {spans_per_level[level]:6d} spans  ({cats})")


if __name__ == "__main__":
    main()
