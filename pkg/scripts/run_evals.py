#!/usr/bin/env python3
"""Run the scripted evaluation suites with each feature switch on and off.

Prints one line per (suite, condition) pair, e.g.:

    preference_retention  persona=on   retained 10/10  (330 turns)
    leakage               gate=on      leaked 0/50
"""

import argparse
import json
import time

from galaxy.gateway.evalsuite import (run_leakage, run_pattern_recovery,
                                      run_preference_retention)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--json", action="store_true",
                        help="emit raw result dicts instead of summary lines")
    args = parser.parse_args()

    results = []
    for enabled in (True, False):
        started = time.perf_counter()
        out = run_preference_retention(persona_enabled=enabled)
        out["elapsed_s"] = round(time.perf_counter() - started, 2)
        results.append(out)
        if not args.json:
            print(f"preference_retention  persona={'on ' if enabled else 'off'}  "
                  f"retained {out['retained']}/{out['total']}  "
                  f"({out['turns']} turns, {out['elapsed_s']}s)")

    for enabled in (True, False):
        started = time.perf_counter()
        out = run_leakage(gate_enabled=enabled)
        out["elapsed_s"] = round(time.perf_counter() - started, 2)
        results.append(out)
        if not args.json:
            print(f"leakage               gate={'on ' if enabled else 'off'}  "
                  f"leaked {out['leaked']}/{out['scenarios']}  "
                  f"({out['cloud_calls']} cloud calls, {out['elapsed_s']}s)")

    started = time.perf_counter()
    out = run_pattern_recovery()
    out["elapsed_s"] = round(time.perf_counter() - started, 2)
    results.append(out)
    if not args.json:
        print(f"pattern_recovery      support "
              f"{out['routine_support']}  trigger_fired={out['trigger_fired']}  "
              f"({out['elapsed_s']}s)")

    if args.json:
        print(json.dumps(results, indent=2, default=str))


if __name__ == "__main__":
    main()
