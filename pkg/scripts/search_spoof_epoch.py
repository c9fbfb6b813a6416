#!/usr/bin/env python3
"""Scan constellation epochs for windows where a displacement spoof is
executable.

The plan needs every visible broadcast satellite to accept a nonnegative
delay: satellites low in the sky toward the displacement would need
negative ones, so executable epochs are those where no such satellite is
visible.  The responding satellite must also be above the mask at both
anchor epochs.  Feasible epochs are printed with their delay margin and
satellite counts; pin one of them into a scenario file.
"""

import argparse
import sys

from securange.attacks import plan_spoof
from securange.geodesy import GeodeticPoint, elevation_angle, geodetic_to_ecef
from securange.orbits import (
    GroundStation,
    bundled_constellation,
    generate_walker,
    propagate,
    visible_satellites,
)


def parse_point(text):
    parts = [float(p) for p in text.split(",")]
    if len(parts) == 2:
        parts.append(0.0)
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(
            f"expected lat,lon[,alt] but got {text!r}")
    return GeodeticPoint(*parts)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--true-point", type=parse_point, required=True,
                    help="lat,lon[,alt_m] of the victim")
    ap.add_argument("--fake-point", type=parse_point, required=True,
                    help="lat,lon[,alt_m] of the spoof target")
    ap.add_argument("--backward-delay-s", type=float, default=1e-3)
    ap.add_argument("--mask-deg", type=float, default=10.0)
    ap.add_argument("--leo", default="oneweb")
    ap.add_argument("--gnss", default="gps,galileo",
                    help="comma-separated broadcast constellations")
    ap.add_argument("--start-s", type=float, default=0.0)
    ap.add_argument("--stop-s", type=float, default=86400.0)
    ap.add_argument("--step-s", type=float, default=60.0)
    ap.add_argument("--separation-s", type=float, default=120.0,
                    help="anchor separation; the responder must stay visible")
    ap.add_argument("--min-gnss", type=int, default=4)
    ap.add_argument("--limit", type=int, default=20,
                    help="stop after this many feasible epochs")
    args = ap.parse_args(argv)

    site = GroundStation("site", args.true_point)
    site_pos = site.position()
    true_pos = geodetic_to_ecef(args.true_point)
    fake_pos = geodetic_to_ecef(args.fake_point)
    leo_sats = generate_walker(bundled_constellation(args.leo))
    gnss_shells = {name: generate_walker(bundled_constellation(name))
                   for name in args.gnss.split(",")}

    found = 0
    epoch = args.start_s
    print("epoch_s  margin_ms  n_gnss  leo_elev1_deg  leo_elev2_deg")
    while epoch < args.stop_s and found < args.limit:
        leo_vis = visible_satellites(site, leo_sats, epoch, args.mask_deg)
        if not leo_vis:
            epoch += args.step_s
            continue
        idx, anchor1 = max(
            leo_vis, key=lambda iv: elevation_angle(site_pos, iv[1]))
        anchor2 = propagate(leo_sats[idx], epoch + args.separation_s)
        elev2 = elevation_angle(site_pos, anchor2)
        if elev2 < args.mask_deg:
            epoch += args.step_s
            continue
        pairs = []
        for name, shell in gnss_shells.items():
            for i, pos in visible_satellites(site, shell, epoch,
                                             args.mask_deg):
                pairs.append((f"{name}-{i:02d}", pos))
        if len(pairs) < args.min_gnss:
            epoch += args.step_s
            continue
        plan = plan_spoof(true_pos, fake_pos, pairs, args.backward_delay_s)
        if plan.feasible:
            elev1 = elevation_angle(site_pos, anchor1)
            print(f"{epoch:8.0f}  {plan.worst_margin_s() * 1e3:9.4f}  "
                  f"{len(pairs):6d}  {elev1:13.2f}  {elev2:13.2f}")
            found += 1
        epoch += args.step_s

    if found == 0:
        print("no feasible epoch in the scanned range", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
