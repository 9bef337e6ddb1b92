#!/usr/bin/env python3
"""Writes data/ieee37.json from the public IEEE 37-node test feeder data.

Line configurations 721-724 (ohm/mile) and segment lengths follow the
published feeder. Delta spot loads are split half-and-half onto the two
phases they connect, then rescaled to a 2 MW / 1.9 Mvar peak. The regulator
at 799 is not modelled; 799 is the substation secondary (node 0).

One DER per node-phase on every node except 799 and 775, sized so their
combined rating is 90% of peak load, inverter kVA = 1.1 x kW rating.

Two calibrations stand in for the missing regulator. Each phase's loads are rescaled so the three phases carry equal
totals. Series resistances (lines and the 709-775 transformer) are multiplied
by R_SCALE and reactances by X_SCALE. With the published impedances the feeder
is too stiff for its voltage limits to shape the capability curve; these
values put the peak-load absorption limit's turnover between 60% and 80%
curtailment and keep 20% penetration feasible at peak load.

"""

import json
import sys

MILE = 5280.0

CONFIGS = {
    "721": [[(0.2926, 0.1973), (0.0673, -0.0368), (0.0337, -0.0417)],
            [None, (0.2646, 0.1900), (0.0673, -0.0368)],
            [None, None, (0.2926, 0.1973)]],
    "722": [[(0.4751, 0.2973), (0.1629, -0.0326), (0.1234, -0.0607)],
            [None, (0.4488, 0.2678), (0.1629, -0.0326)],
            [None, None, (0.4751, 0.2973)]],
    "723": [[(1.2936, 0.6713), (0.4871, 0.2111), (0.4585, 0.1521)],
            [None, (1.3022, 0.6326), (0.4871, 0.2111)],
            [None, None, (1.2936, 0.6713)]],
    "724": [[(2.0952, 0.7758), (0.5204, 0.2738), (0.4926, 0.2123)],
            [None, (2.1068, 0.7398), (0.5204, 0.2738)],
            [None, None, (2.0952, 0.7758)]],
}

SEGMENTS = [
    ("799", "701", 1850, "721"), ("701", "702", 960, "722"), ("702", "705", 400, "724"),
    ("702", "713", 360, "723"), ("702", "703", 1320, "722"), ("703", "727", 240, "724"),
    ("703", "730", 600, "723"), ("704", "714", 80, "724"), ("704", "720", 800, "723"),
    ("705", "742", 320, "724"), ("705", "712", 240, "724"), ("706", "725", 280, "724"),
    ("707", "724", 760, "724"), ("707", "722", 120, "724"), ("708", "733", 320, "723"),
    ("708", "732", 320, "724"), ("709", "731", 600, "723"), ("709", "708", 320, "723"),
    ("710", "735", 200, "724"), ("710", "736", 1280, "724"), ("711", "741", 400, "723"),
    ("711", "740", 200, "724"), ("713", "704", 520, "723"), ("714", "718", 520, "724"),
    ("720", "707", 920, "724"), ("720", "706", 600, "723"), ("727", "744", 280, "723"),
    ("730", "709", 200, "723"), ("733", "734", 560, "723"), ("734", "737", 640, "723"),
    ("734", "710", 520, "724"), ("737", "738", 400, "723"), ("738", "711", 400, "723"),
    ("744", "728", 200, "724"), ("744", "729", 280, "724"),
]

# 500 kVA 4.8/0.48 kV, R = 0.09 %, X = 1.81 % on its own rating.
XFM = ("709", "775", 0.0009 * 4.8 ** 2 / 0.5, 0.0181 * 4.8 ** 2 / 0.5)

# Spot loads, kW / kvar on the delta branches AB, BC, CA.
SPOT = {
    "701": [(140, 70), (140, 70), (350, 175)], "712": [(0, 0), (0, 0), (85, 40)],
    "713": [(0, 0), (0, 0), (85, 40)], "714": [(17, 8), (21, 10), (0, 0)],
    "718": [(85, 40), (0, 0), (0, 0)], "720": [(0, 0), (0, 0), (85, 40)],
    "722": [(0, 0), (140, 70), (21, 10)], "724": [(0, 0), (42, 21), (0, 0)],
    "725": [(0, 0), (42, 21), (0, 0)], "727": [(0, 0), (0, 0), (42, 21)],
    "728": [(42, 21), (42, 21), (42, 21)], "729": [(42, 21), (0, 0), (0, 0)],
    "730": [(0, 0), (0, 0), (85, 40)], "731": [(0, 0), (85, 40), (0, 0)],
    "732": [(0, 0), (0, 0), (42, 21)], "733": [(85, 40), (0, 0), (0, 0)],
    "734": [(0, 0), (0, 0), (42, 21)], "735": [(0, 0), (0, 0), (85, 40)],
    "736": [(0, 0), (42, 21), (0, 0)], "737": [(140, 70), (0, 0), (0, 0)],
    "738": [(126, 62), (0, 0), (0, 0)], "740": [(0, 0), (0, 0), (85, 40)],
    "741": [(0, 0), (0, 0), (42, 21)], "742": [(8, 4), (85, 40), (0, 0)],
    "744": [(42, 21), (0, 0), (0, 0)],
}
DELTA_PHASES = [(0, 1), (1, 2), (2, 0)]

LABELS = {"711": "end", "740": "end", "741": "end", "730": "middle",
          "701": "beginning", "702": "beginning", "713": "beginning"}

PEAK_KW = 2000.0
PEAK_KVAR = 1900.0
DER_SHARE = 0.9
OVERSIZE = 1.1
R_SCALE = 2.53
X_SCALE = 1.87


def config_matrix(cfg, feet):
    full = [[None] * 3 for _ in range(3)]
    for i in range(3):
        for j in range(i, 3):
            full[i][j] = full[j][i] = CONFIGS[cfg][i][j]
    scale = feet / MILE
    r = [[round(full[i][j][0] * scale * R_SCALE, 10) for j in range(3)] for i in range(3)]
    x = [[round(full[i][j][1] * scale * X_SCALE, 10) for j in range(3)] for i in range(3)]
    return r, x


def main():
    names = sorted({a for a, _, _, _ in SEGMENTS} | {b for _, b, _, _ in SEGMENTS} | {"775"})
    names.remove("799")
    names = ["799"] + names
    ids = {n: i for i, n in enumerate(names)}

    nodes = []
    for n in names:
        node = {"id": ids[n], "phases": "abc", "name": n}
        if n in LABELS:
            node["label"] = LABELS[n]
        nodes.append(node)

    lines = []
    for a, b, feet, cfg in SEGMENTS:
        r, x = config_matrix(cfg, feet)
        lines.append({"from": ids[a], "to": ids[b], "r_ohm": r, "x_ohm": x})
    a, b, rx, xx = XFM
    rx, xx = R_SCALE * rx, X_SCALE * xx
    lines.append({"from": ids[a], "to": ids[b],
                  "r_ohm": [[rx if i == j else 0.0 for j in range(3)] for i in range(3)],
                  "x_ohm": [[xx if i == j else 0.0 for j in range(3)] for i in range(3)]})

    raw = {}
    for n, branches in SPOT.items():
        for (p, q), (ph1, ph2) in zip(branches, DELTA_PHASES):
            for ph in (ph1, ph2):
                key = (n, ph)
                pp, qq = raw.get(key, (0.0, 0.0))
                raw[key] = (pp + p / 2.0, qq + q / 2.0)
    phase_p = [sum(v[0] for k, v in raw.items() if k[1] == ph) for ph in range(3)]
    phase_q = [sum(v[1] for k, v in raw.items() if k[1] == ph) for ph in range(3)]
    loads = []
    for (n, ph), (p, q) in sorted(raw.items(), key=lambda kv: (ids[kv[0][0]], kv[0][1])):
        if p == 0.0 and q == 0.0:
            continue
        loads.append({"node": ids[n], "phase": "abc"[ph],
                      "p_kw": round(p * PEAK_KW / 3.0 / phase_p[ph], 6),
                      "q_kvar": round(q * PEAK_KVAR / 3.0 / phase_q[ph], 6)})

    der_nodes = [n for n in names if n not in ("799", "775")]
    count = 3 * len(der_nodes)
    p_rated = DER_SHARE * PEAK_KW / count
    ders = []
    for n in der_nodes:
        for ph in "abc":
            ders.append({"id": len(ders), "node": ids[n], "phase": ph,
                         "p_rated_kw": round(p_rated, 9), "s_kva": round(OVERSIZE * p_rated, 9)})

    doc = {
        "base_kva": 2500.0,
        "base_kv": 4.8,
        "substation": {"tap_step": 0.0063, "max_taps": 16},
        "nodes": nodes,
        "lines": lines,
        "loads": loads,
        "ders": ders,
    }
    json.dump(doc, sys.stdout, indent=1)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
