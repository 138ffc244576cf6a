#!/usr/bin/env python3
"""Writes the synthetic 123-node feeder and its full-year profiles.

The network follows the published totals of the IEEE 123-node feeder
(3490 kW, 1925 kvar, 56 three-phase nodes, four capacitor banks, fixed-tap
regulators, ten 500 kVA PV units) on a generated radial layout. It is not
the IEEE data set.

    python3 generate_feeder123.py          # writes into this directory
"""

import math
import os
import random

HERE = os.path.dirname(os.path.abspath(__file__))
BASE_KV = 2.4018
PV_NODES = [7, 13, 25, 3, 47, 56, 62, 72, 82, 105]
TOTAL_P = 3490.0
TOTAL_Q = 1925.0

# three-phase nodes, with the PV nodes among them
THREE_PHASE = [
    1, 3, 7, 8, 13, 18, 21, 23, 25, 26, 27, 28, 29, 30, 35, 36, 40, 42, 44,
    47, 48, 49, 50, 51, 52, 53, 54, 55, 56, 57, 60, 61, 62, 63, 64, 65, 66,
    67, 72, 76, 77, 78, 79, 80, 81, 82, 86, 87, 89, 91, 93, 97, 98, 99, 101, 105,
]

# per-mile line matrices (ohm), upper triangle over ABC
R3 = [0.4576, 0.1560, 0.1535, 0.4666, 0.1580, 0.4615]
X3 = [1.0780, 0.5017, 0.3849, 1.0482, 0.4236, 1.0651]
R1, X1 = 1.3292, 1.3475
R2 = [1.3294, 0.2066, 1.3238]
X2 = [1.3471, 0.4591, 1.3569]


def fmt(values, scale):
    return " ".join(f"{v * scale:.5f}" for v in values)


def build(rng):
    assert len(THREE_PHASE) == 56 and all(p in THREE_PHASE for p in PV_NODES)
    others = [n for n in range(1, 124) if n not in THREE_PHASE]
    buses = {"150": "ABC"}
    branches = []  # (from, to, phases, length_mi, tap, ampacity)

    # three-phase backbone: mostly a chain, with occasional side branches
    order = list(THREE_PHASE)
    attached = []
    for i, node in enumerate(order):
        if i == 0:
            parent = "150"
        elif rng.random() < 0.65:
            parent = attached[-1]
        else:
            parent = rng.choice(attached[max(0, len(attached) - 12):])
        length = rng.uniform(0.035, 0.08)
        branches.append([parent, str(node), "ABC", length, 1.0, 0.0])
        buses[str(node)] = "ABC"
        attached.append(str(node))

    # one- and two-phase laterals hang off the backbone or each other
    laterals = []
    for node in others:
        if laterals and rng.random() < 0.35:
            parent = rng.choice(laterals[-6:])
            phases = buses[parent] if len(buses[parent]) == 1 else rng.choice(list(buses[parent]))
        else:
            parent = rng.choice(attached)
            phases = rng.choice(["A", "B", "C", "A", "B", "C", "AB", "BC", "AC"])
        phases = "".join(sorted(phases))
        length = rng.uniform(0.03, 0.08)
        branches.append([parent, str(node), phases, length, 1.0, 0.0])
        buses[str(node)] = phases
        laterals.append(str(node))

    # fixed regulator taps at the head of the feeder and two deep sections
    depth = {"150": 0}
    children = {}
    for b in branches:
        depth[b[1]] = depth[b[0]] + 1
        children.setdefault(b[0], []).append(b)
    branches[0][4] = 1.0
    deep = sorted((b for b in branches if b[2] == "ABC"), key=lambda b: depth[b[1]])
    for b in (deep[len(deep) // 2], deep[(3 * len(deep)) // 4]):
        b[4] = 1.0125

    # loads: every lateral node, and most backbone nodes
    loads = []
    weights = []
    for name, phases in buses.items():
        if name == "150":
            continue
        if len(phases) == 3 and rng.random() < 0.35:
            continue
        kind = rng.choice(["1 0 0", "0 1 0", "0 0 1", "0 0 1"])
        for p in phases:
            w = rng.uniform(0.5, 1.5)
            weights.append(w)
            loads.append([name, p, w, kind])
    wsum = sum(weights)
    for l in loads:
        share = l[2] / wsum
        l[2] = TOTAL_P * share
        l.append(TOTAL_Q * share)
    return buses, branches, loads


def write_feeder(path, buses, branches, loads):
    lines = [
        "# Synthetic 123-node feeder, 4.16 kV line-to-line.",
        "# Generated by generate_feeder123.py; layout is not the IEEE data set.",
        "",
        "[source]",
        "bus=150, voltage_pu=1.02, s_min_kva=-6000, s_max_kva=6000",
        "",
        "[bus]",
    ]
    for name, phases in buses.items():
        lines.append(f"id={name}, phases={phases}, base_kv={BASE_KV}")
    lines += ["", "[branch]"]
    for i, (f, t, phases, length, tap, _) in enumerate(branches):
        if len(phases) == 3:
            r, x, amp = fmt(R3, length), fmt(X3, length), 2500 if i < 20 else 1500
        elif len(phases) == 2:
            r, x, amp = fmt(R2, length), fmt(X2, length), 600
        else:
            r, x, amp = f"{R1 * length:.5f}", f"{X1 * length:.5f}", 400
        tap_s = f", tap={tap}" if tap != 1.0 else ""
        lines.append(f"id=l{t}, from={f}, to={t}, r={r}, x={x}, ampacity_kva={amp}{tap_s}")
    lines += ["", "[load]"]
    for name, p, kw, kind, kvar in loads:
        lines.append(f"bus={name}, phase={p}, p_kw={kw:.3f}, q_kvar={kvar:.3f}, zip={kind}")
    lines += ["", "[capacitor]"]
    three = [n for n, ph in buses.items() if len(ph) == 3 and n != "150"]
    single = [n for n, ph in buses.items() if len(ph) == 1]
    lines.append(f"bus={three[-5]}, phases=ABC, kvar=200")
    for n in single[10:40:10]:
        lines.append(f"bus={n}, phases={buses[n]}, kvar=50")
    lines += ["", "[pv]"]
    for n in PV_NODES:
        lines.append(f"bus={n}, rating_kva=500, pmax_kw=450")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_profiles(rng, load_path, pv_path):
    daily = [0.55, 0.52, 0.50, 0.50, 0.52, 0.58, 0.68, 0.78, 0.82, 0.83, 0.84, 0.85,
             0.86, 0.86, 0.86, 0.88, 0.93, 0.99, 1.00, 0.97, 0.91, 0.82, 0.71, 0.61]
    load, pv = [], []
    for day in range(365):
        season = math.cos(2 * math.pi * (day - 200) / 365)  # peaks in July
        weekend = day % 7 in (5, 6)
        sunrise = 6.5 - 1.2 * season
        sunset = 18.5 + 1.2 * season
        clear = min(1.0, max(0.15, rng.gauss(0.8, 0.2)))
        for h in range(24):
            v = daily[h] * (0.85 + 0.12 * season) * (0.92 if weekend else 1.0)
            v *= 1.0 + rng.gauss(0.0, 0.02)
            load.append(max(0.05, v))
            mid = h + 0.5
            if sunrise < mid < sunset:
                x = (mid - sunrise) / (sunset - sunrise)
                s = math.sin(math.pi * x) ** 1.3 * clear * (0.85 + 0.15 * season)
            else:
                s = 0.0
            pv.append(min(1.0, max(0.0, s)))
    with open(load_path, "w") as fh:
        fh.write("# hourly load multiplier, 8760 values\n")
        fh.writelines(f"{v:.4f}\n" for v in load)
    with open(pv_path, "w") as fh:
        fh.write("# hourly PV output as a fraction of peak, 8760 values\n")
        fh.writelines(f"{v:.4f}\n" for v in pv)


def main():
    rng = random.Random(123)
    buses, branches, loads = build(rng)
    write_feeder(os.path.join(HERE, "feeder123.feeder"), buses, branches, loads)
    write_profiles(rng, os.path.join(HERE, "year.load"), os.path.join(HERE, "year.pv"))


if __name__ == "__main__":
    main()
