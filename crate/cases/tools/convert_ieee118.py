"""Convert the MATPOWER/PYPOWER IEEE 118-bus case into the native TOML grid format.

Requires `pypower` (pip install pypower). Usage:

    python3 convert_ieee118.py > ../ieee118.toml

Conversion applied (lossless approximation):
  * susceptance b_ij = 1 / x_ij in per unit on the 100 MVA base; resistance,
    line charging and transformer taps are dropped; parallel branches are
    merged by summing susceptances (186 branches -> 179 lines).
  * dispatch: every generator's scheduled Pg is scaled by a common factor so
    that total generation equals total load (losses are absent in the model);
    the net injection is P_i = scaled Pg_i - Pd_i in per unit, rounded to 1e-6,
    with the rounding residue assigned to the largest generator (bus 89).
  * bus kind: "generator" for every bus hosting a machine (including
    synchronous condensers with Pg = 0), "load" otherwise.
  * generators carry inertia_constant = 5 s.
"""
import sys
from decimal import Decimal

from pypower.case118 import case118


def main():
    c = case118()
    bus, gen, br = c["bus"], c["gen"], c["branch"]
    base = c["baseMVA"]
    ids = [int(b[0]) for b in bus]
    pd = {int(b[0]): b[2] for b in bus}
    pg = {i: 0.0 for i in ids}
    is_gen = {i: False for i in ids}
    for g in gen:
        pg[int(g[0])] += g[1]
        is_gen[int(g[0])] = True
    scale = sum(pd.values()) / sum(pg.values())
    p = {i: Decimal(repr(round(float((pg[i] * scale - pd[i]) / base), 6))) for i in ids}
    slack = max(ids, key=lambda i: pg[i])
    p[slack] -= sum(p.values())
    lines = {}
    for r in br:
        a, b = sorted((int(r[0]), int(r[1])))
        lines[(a, b)] = lines.get((a, b), 0.0) + 1.0 / float(r[3])

    out = sys.stdout
    out.write("# IEEE 118-bus test case, lossless per-unit conversion (see cases/tools/convert_ieee118.py).\n")
    out.write(f"# Dispatch: scheduled generation scaled by {scale:.9f} to match total load of {sum(pd.values()):.1f} MW.\n")
    out.write(f"# Slack-style rounding residue assigned to bus {slack}.\n")
    out.write("version = 1\nbase_frequency_hz = 50.0\nunit_system = \"per_unit\"\nbase_mva = 100.0\n\n")
    for i in ids:
        out.write("[[buses]]\n")
        out.write(f"id = {i}\n")
        out.write(f"kind = \"{'generator' if is_gen[i] else 'load'}\"\n")
        out.write(f"power = {float(p[i])!r}\n")
        if is_gen[i]:
            out.write("inertia_constant = 5.0\n")
        out.write("\n")
    for (a, b), s in sorted(lines.items()):
        out.write(f"[[lines]]\nfrom = {a}\nto = {b}\nsusceptance = {s!r}\n\n")
    print(f"buses={len(ids)} branches={len(br)} lines={len(lines)}", file=sys.stderr)


if __name__ == "__main__":
    main()
