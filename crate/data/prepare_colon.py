#!/usr/bin/env python3
"""Convert the raw two-row-per-subject trial extract (colon_raw.csv) into
the long transition format the CLI and the test suite ingest.

Raw columns: id, group, etype (1 = recurrence endpoint row, 2 = death
endpoint row), time (days), status (1 = event observed, 0 = censored).

Output columns: id, group, time (years), status with codes
    0 = censored (end of observation)
    1 = recurrence                 (state 0 -> 1)
    2 = death without recurrence   (state 0 -> 2)
    3 = death after recurrence     (state 1 -> 2)

Rules applied:
  - time is rescaled from days to years (/ 365.25).
  - subjects whose recurrence and death fall on the same day get the death
    shifted by +0.5 days so the two transitions are orderable.
  - for subjects without an observed recurrence, the recurrence row's time
    is ignored; observation ends at the death row's time (the two agree in
    this extract).
"""
import csv
import sys
from pathlib import Path

YEAR_DAYS = 365.25


def main(raw_path: str, out_path: str) -> None:
    subjects = {}
    with open(raw_path, newline="") as f:
        for row in csv.DictReader(f):
            sid = int(row["id"])
            subjects.setdefault(sid, {"group": row["group"]})[int(row["etype"])] = (
                float(row["time"]),
                int(row["status"]),
            )

    out = []
    for sid in sorted(subjects):
        rec = subjects[sid]
        (t1, s1), (t2, s2) = rec[1], rec[2]
        if s1 == 1 and s2 == 1 and t1 == t2:
            t2 += 0.5
        g = rec["group"]
        if s1 == 1:
            out.append((sid, g, t1 / YEAR_DAYS, 1))
        if s2 == 1:
            out.append((sid, g, t2 / YEAR_DAYS, 3 if s1 == 1 else 2))
        else:
            out.append((sid, g, t2 / YEAR_DAYS, 0))

    with open(out_path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["id", "group", "time", "status"])
        for sid, g, t, code in out:
            w.writerow([sid, g, f"{t:.10f}", code])
    print(f"{len(subjects)} subjects, {len(out)} rows -> {out_path}")


if __name__ == "__main__":
    base = Path(__file__).parent
    raw = sys.argv[1] if len(sys.argv) > 1 else base / "colon_raw.csv"
    out = sys.argv[2] if len(sys.argv) > 2 else base / "colon_long.csv"
    main(str(raw), str(out))
