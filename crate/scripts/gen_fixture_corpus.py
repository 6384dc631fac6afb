#!/usr/bin/env python3
"""Writes the synthetic shortage-list corpus used by the curation tests.

Every event is placed by hand (which snapshots list it, which packages, why, how it
ends), so the expected counts in manifest.json follow from the construction rather
than from running the pipeline. Output is deterministic.

    python3 scripts/gen_fixture_corpus.py crates/core/tests/fixtures/corpus
"""

import csv
import datetime as dt
import json
import math
import sys
from collections import defaultdict
from pathlib import Path

FIRST_SNAPSHOT = dt.date(2022, 1, 10)
SNAPSHOT_STEP_DAYS = 45
N_SNAPSHOTS = 28
DAYS_PER_QUARTER = 91.25
MAX_QUARTERS = 12

DISC = "Discontinuation of the manufacture of the drug"
SUPPLY = "Shortage of an active ingredient"
DEMAND = "Demand increase for the drug"

SNAPSHOT_DATES = [FIRST_SNAPSHOT + dt.timedelta(days=SNAPSHOT_STEP_DAYS * i) for i in range(N_SNAPSHOTS)]


class Event:
    """One listing of one labeler-product code, from snapshot `first` to `last`.

    `ends` is "absent" (dropped from the list), "status" (last row says Resolved)
    or "open" (still listed in the final snapshot). `reason_from` delays the reason
    text to a later sighting. `disc_pkgs` are packages listed as To Be Discontinued.
    """

    def __init__(self, labeler, product, packages, first, last, reason="", ends="absent",
                 disc_pkgs=(), reason_from=0, written=None, duplicate_at=None):
        self.labeler = labeler
        self.product = product
        self.packages = list(packages)
        self.first = first
        self.last = last
        self.reason = reason
        self.ends = ends
        self.disc_pkgs = set(disc_pkgs)
        self.reason_from = reason_from
        self.written = written
        self.duplicate_at = duplicate_at
        self.posting = SNAPSHOT_DATES[first] - dt.timedelta(days=12)

    @property
    def canonical_labeler(self):
        return self.labeler.rjust(5, "0")

    def code(self, pkg):
        if self.written is not None:
            return self.written(pkg)
        return f"{self.labeler}-{self.product}-{pkg}"

    def resolved_idx(self):
        if self.ends == "status":
            return self.last
        if self.ends == "absent":
            assert self.last + 2 <= N_SNAPSHOTS - 1, "needs two later snapshots"
            return self.last + 1
        assert self.last == N_SNAPSHOTS - 1
        return None


class Group:
    def __init__(self, name, strength, form, companies, events, expect):
        self.name = name
        self.strength = strength
        self.form = form
        self.companies = companies
        self.events = events
        self.expect = expect


def groups():
    g = []
    # FDA-Disc cases.
    g.append(Group("Cisplatin", "1 mg/mL", "Injection", {"11111": "Acme Oncology", "0409": "Hospira"}, [
        Event("11111", "0101", ["01", "02"], 2, 10, DISC),
        Event("0409", "4888", ["10", "20"], 3, 11, ends="status"),
    ], "FDA-Disc"))
    g.append(Group("Carboplatin", "10 mg/mL", "Injection", {"22222": "Beta Pharma", "33333": "Gamma Labs", "44444": "Delta Generics"}, [
        Event("22222", "123", ["01", "02", "03", "04"], 5, 14, disc_pkgs={"01", "02"}),
        Event("33333", "0201", ["01"], 5, 9, SUPPLY),
        Event("44444", "0202", ["01", "02"], 6, 10, DISC, reason_from=2, duplicate_at=7),
    ], "FDA-Disc"))
    g.append(Group("Vincristine Sulfate", "1 mg/mL", "Injection",
                   {"51111": "Eta Sciences", "52222": "Theta Pharma", "53333": "Iota Labs", "54444": "Kappa Health"}, [
        Event("51111", "0301", ["01"], 8, 20, DISC),
        Event("52222", "0302", ["01", "02", "03"], 8, 14, disc_pkgs={"03"}),
        Event("53333", "0303", ["01"], 9, 13),
        Event("54444", "0304", ["05"], 9, 12),
    ], "FDA-Disc"))
    g.append(Group("Methotrexate", "25 mg/mL", "Injection", {"61111": "Lambda Drugs", "62222": "Mu Generics"}, [
        Event("61111", "0401", ["01", "02"], 10, 19, DISC),
        Event("61111", "0402", ["01", "02"], 11, 18),
        Event("62222", "0403", ["01"], 10, 17),
    ], "FDA-Disc"))
    g.append(Group("Dexamethasone Sodium Phosphate", "4 mg/mL", "Injection",
                   {"71111": "Nu Pharma", "72222": "Xi Labs", "73333": "Omicron Rx"}, [
        Event("71111", "0501", ["01"], 14, 17, DISC, ends="status"),
        Event("72222", "0502", ["01", "02"], 14, 16, ends="status"),
        Event("73333", "0503", ["01"], 15, 16),
    ], "FDA-Disc"))
    # FDA-NR cases.
    g.append(Group("Amoxicillin", "250 mg/5 mL", "Suspension", {"81111": "Pi Pharma", "82222": "Rho Labs"}, [
        Event("81111", "0601", ["01"], 1, 9),
        Event("82222", "0602", ["01", "02"], 2, 5),
    ], "FDA-NR"))
    g.append(Group("Lidocaine Hydrochloride", "1%", "Solution", {"83333": "Sigma Health", "84444": "Tau Pharma", "85555": "Upsilon Labs"}, [
        Event("83333", "0701", ["01"], 4, 9),
        Event("84444", "0702", ["01"], 4, 8, "n/a"),
        Event("85555", "0703", ["01"], 5, 10),
    ], "FDA-NR"))
    g.append(Group("Albuterol Sulfate", "2.5 mg/3 mL", "Inhalation", {"86666": "Phi Respiratory", "55555": "Chi Pharma", "87777": "Psi Labs"}, [
        Event("86666", "0801", ["01"], 12, 16),
        Event("55555", "1234", ["5"], 12, 15, written=lambda pkg: "5555512345"),
        Event("87777", "0802", ["01"], 13, 17, ends="status"),
    ], "FDA-NR"))
    g.append(Group("Heparin Sodium", "1,000 USP Units/mL", "Injection",
                   {"91111": "Omega Biologics", "92222": "Alpha Two", "93333": "Beta Two", "94444": "Gamma Two", "95555": "Delta Two"}, [
        Event("91111", "0901", ["01"], 16, 18),
        Event("91111", "0901", ["01"], 21, 23),
        Event("92222", "0902", ["01"], 16, 20),
        Event("93333", "0903", ["01"], 17, 20),
        Event("94444", "0904", ["01"], 17, 19),
        Event("95555", "0905", ["01"], 18, 22),
    ], "FDA-NR"))
    g.append(Group("Potassium Chloride", "2 mEq/mL", "Injection",
                   {f"8{k}900": f"Vendor {name}" for k, name in zip(range(1, 8), ["One", "Two", "Three", "Four", "Five", "Six", "Seven"])}, [
        Event(f"8{k}900", f"10{k:02d}", ["01"], 19, 19 + k % 3) for k in range(1, 8)
    ], "FDA-NR"))
    g.append(Group("Furosemide", "10 mg/mL", "Injection", {"96111": "Epsilon Two", "96222": "Zeta Two"}, [
        Event("96111", "1101", ["01"], 20, 21, ends="status"),
        Event("96222", "1102", ["01"], 20, 20, ends="status"),
    ], "FDA-NR"))
    # Excluded cases.
    g.append(Group("Epinephrine", "1 mg/mL", "Injection", {"97111": "Eta Two", "97222": "Theta Two"}, [
        Event("97111", "1201", ["01"], 3, 6, DEMAND),
        Event("97222", "1202", ["01"], 3, 5),
    ], "cause"))
    g.append(Group("Zinc Sulfate", "3 mg/mL", "Injection", {"97333": "Iota Two"}, [
        Event("97333", "1301", ["01"], 6, 9),
    ], "monopoly"))
    g.append(Group("Bupivacaine Hydrochloride", "0.5%", "Injection", {"97444": "Kappa Two", "97555": "Lambda Two"}, [
        Event("97444", "1401", ["01"], 20, N_SNAPSHOTS - 1, ends="open"),
        Event("97555", "1402", ["01"], 21, 23),
    ], "unresolved"))
    g.append(Group("Morphine Sulfate", "2 mg/mL", "Injection", {"97666": "Mu Two", "97777": "Nu Two"}, [
        Event("97666", "1501", ["01"], 0, 25, DISC),
        Event("97777", "1502", ["01"], 1, 20),
    ], "T>12"))
    return g


# Rows that never reach an event: (snapshot index, row values, expected outcome).
NOISE = [
    (4, ["Ondansetron", "Omega Two", "Ondansetron Injection 2 mg/mL (NDC 98111-1601-01)", "Current", "", "13/45/2022"], "reject"),
    (4, ["Ondansetron", "Omega Two", "", "Current", "", "03/01/2022"], "reject"),
    (9, ["Ondansetron", "Omega Two", "Ondansetron Injection 2 mg/mL (NDC 98111-1601-01)", "Sold out", "", "03/01/2022"], "reject"),
    (11, ["Ondansetron", "Omega Two"], "reject"),
    (6, ["Ketamine", "Pi Two", "Ketamine Injection 50 mg/mL, 10 mL vial", "Current", "", "05/01/2022"], "quarantine"),
    (7, ["Ketamine", "Pi Two", "Ketamine Injection 50 mg/mL (NDC 1234567890)", "Current", "", "05/01/2022"], "quarantine"),
    (8, ["Ketamine", "Pi Two", "Ketamine Injection 50 mg/mL (NDC 9999999999)", "Current", "", "05/01/2022"], "quarantine"),
]

DIRECTORY = ["1234-5678", "12345-678", "55555-1234", "0409-4888", "22222-123"]

HEADERS = [
    ["Generic Name", "Company Name", "Presentation", "Status", "Reason for Shortage", "Date First Posted"],
    ["generic_name", "manufacturer", "presentations", "shortage_status", "shortage_reason", "initial_posting_date"],
]


def presentation(group, event, pkg):
    return f"{group.name} {group.form} {group.strength}, 10 mL vial (NDC {event.code(pkg)})"


def quarters_between(start, end):
    days = max((end - start).days, 0)
    return max(math.ceil(days / DAYS_PER_QUARTER), 1)


def build(out):
    out = Path(out)
    snap_dir = out / "snapshots"
    snap_dir.mkdir(parents=True, exist_ok=True)
    for old in snap_dir.glob("*.csv"):
        old.unlink()

    rows = defaultdict(list)
    sightings = 0
    events = 0
    resolved_events = 0
    for group in groups():
        for e in group.events:
            events += 1
            resolved_events += e.resolved_idx() is not None
            for idx in range(e.first, e.last + 1):
                nth = idx - e.first
                for pkg in e.packages:
                    status = "To Be Discontinued" if pkg in e.disc_pkgs else "Current"
                    if e.ends == "status" and idx == e.last:
                        status = "Resolved"
                    reason = e.reason if nth >= e.reason_from else ""
                    row = [group.name + " " + group.form, group.companies[e.labeler], presentation(group, e, pkg), status, reason, e.posting]
                    copies = 2 if e.duplicate_at == idx else 1
                    for _ in range(copies):
                        rows[idx].append(row)
                        sightings += 1

    rejects = sum(1 for n in NOISE if n[2] == "reject")
    quarantined = sum(1 for n in NOISE if n[2] == "quarantine")
    for idx, values, _ in NOISE:
        rows[idx].append(values)

    for idx, date in enumerate(SNAPSHOT_DATES):
        alias = idx % 3 == 2
        header = HEADERS[1] if alias else HEADERS[0]
        with open(snap_dir / f"shortages_{date.isoformat()}.csv", "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(header)
            for r in rows[idx]:
                r = list(r)
                if len(r) == 6 and isinstance(r[5], dt.date):
                    r[5] = r[5].isoformat() if alias else r[5].strftime("%m/%d/%Y")
                w.writerow(r)

    with open(out / "ndc_directory.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["PRODUCTID", "PRODUCTNDC", "PROPRIETARYNAME"])
        for i, code in enumerate(DIRECTORY):
            w.writerow([f"id{i}", code, f"product {i}"])

    cases = []
    excluded = defaultdict(int)
    for group in groups():
        labelers = sorted({e.canonical_labeler for e in group.events})
        if group.expect not in ("FDA-Disc", "FDA-NR"):
            excluded[group.expect] += 1
            continue
        start = min(SNAPSHOT_DATES[e.first] for e in group.events)
        end = max(SNAPSHOT_DATES[e.resolved_idx()] for e in group.events)
        horizon = quarters_between(start, end)
        assert horizon <= MAX_QUARTERS, group.name
        deltas = []
        if group.expect == "FDA-Disc":
            for lab in labelers:
                total = disc = 0
                for e in group.events:
                    if e.canonical_labeler != lab:
                        continue
                    total += len(e.packages)
                    disc += len(e.packages) if "discontinu" in e.reason.lower() else len(e.disc_pkgs)
                deltas.append(disc / total)
            deltas.sort(reverse=True)
        cases.append({
            "generic_name": group.name + " " + group.form,
            "dataset": group.expect,
            "n_manufacturers": len(labelers),
            "horizon": horizon,
            "per_mfr_delta": deltas,
        })

    counts = defaultdict(int)
    for c in cases:
        counts[c["dataset"]] += 1
    manifest = {
        "snapshots": N_SNAPSHOTS,
        "rows_read": sightings + rejects + quarantined,
        "rejected_rows": rejects,
        "quarantined_rows": quarantined,
        "sightings": sightings,
        "events": events,
        "resolved_events": resolved_events,
        "trajectories": dict(sorted(counts.items())),
        "excluded": dict(sorted(excluded.items())),
        "cases": sorted(cases, key=lambda c: c["generic_name"]),
    }
    with open(out / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")
    return manifest


if __name__ == "__main__":
    target = sys.argv[1] if len(sys.argv) > 1 else "crates/core/tests/fixtures/corpus"
    m = build(target)
    print(json.dumps({k: v for k, v in m.items() if k != "cases"}, indent=2))
