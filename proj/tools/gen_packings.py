#!/usr/bin/env python3
"""Generate the equal-sphere-in-unit-cube packing table compiled into the palette module.

For each K, spreads K points in [0,1]^3 maximizing their minimum pairwise distance m
(multi-start repulsion warm start, then an SLSQP max-min polish). A spread with
minimum distance m maps to K spheres of radius r = m / (2 (1 + m)) inside the unit
cube, centered at r + (1 - 2r) x.

Cubic lattices are taken where they beat the optimizer. Radii are then made
non-increasing in K: where K + 1 spheres fit with a larger radius than K did,
K takes the first K of those centers.

Usage: gen_packings.py KMAX OUT.inc [--restarts N]
       gen_packings.py --fixup TABLE.inc
"""
import re
import argparse
import sys

import numpy as np
from scipy.optimize import minimize


def pair_index(k):
    i, j = np.triu_indices(k, 1)
    return i, j


def repulse(x0, k, iters=300):
    i, j = pair_index(k)

    def energy(flat):
        x = flat.reshape(k, 3)
        d = x[i] - x[j]
        r2 = np.maximum((d * d).sum(1), 1e-12)
        e = (1.0 / r2 ** 6).sum()
        g_pair = (-6.0 / r2 ** 7)[:, None] * 2.0 * d
        g = np.zeros_like(x)
        np.add.at(g, i, g_pair)
        np.add.at(g, j, -g_pair)
        return e, g.ravel()

    res = minimize(energy, x0.ravel(), jac=True, method="L-BFGS-B",
                   bounds=[(0.0, 1.0)] * (3 * k), options={"maxiter": iters})
    return res.x.reshape(k, 3)


def polish(x, k, iters=400):
    i, j = pair_index(k)
    n = 3 * k
    d = x[i] - x[j]
    t0 = (d * d).sum(1).min()
    z0 = np.concatenate([x.ravel(), [t0]])

    def obj(z):
        return -z[-1]

    def obj_jac(z):
        g = np.zeros_like(z)
        g[-1] = -1.0
        return g

    def cons(z):
        p = z[:n].reshape(k, 3)
        dd = p[i] - p[j]
        return (dd * dd).sum(1) - z[-1]

    def cons_jac(z):
        p = z[:n].reshape(k, 3)
        dd = p[i] - p[j]
        m = len(i)
        jac = np.zeros((m, n + 1))
        rows = np.arange(m)
        for c in range(3):
            jac[rows, 3 * i + c] = 2.0 * dd[:, c]
            jac[rows, 3 * j + c] = -2.0 * dd[:, c]
        jac[:, -1] = -1.0
        return jac

    res = minimize(obj, z0, jac=obj_jac, method="SLSQP",
                   bounds=[(0.0, 1.0)] * n + [(0.0, 3.0)],
                   constraints=[{"type": "ineq", "fun": cons, "jac": cons_jac}],
                   options={"maxiter": iters, "ftol": 1e-15})
    p = np.clip(res.x[:n].reshape(k, 3), 0.0, 1.0)
    return p


def min_dist(x):
    k = len(x)
    if k < 2:
        return np.inf
    i, j = pair_index(k)
    d = x[i] - x[j]
    return np.sqrt((d * d).sum(1).min())


def best_spread(k, restarts, rng):
    if k == 1:
        return np.array([[0.5, 0.5, 0.5]]), np.inf
    best, best_m = None, -1.0
    for _ in range(restarts):
        x = repulse(rng.random((k, 3)), k)
        polished = polish(x, k)
        # SLSQP occasionally wanders off on large K; keep the warm start then.
        if min_dist(polished) > min_dist(x):
            x = polished
        m = min_dist(x)
        if m > best_m:
            best, best_m = x, m
    return best, best_m


HEADER = ["// Generated by tools/gen_packings.py. Do not edit.",
          "// {K, radius, {x, y, z}...}"]


def grid(k):
    # First k points of the smallest n x n x n lattice: r = 1 / (2n).
    n = 1
    while n ** 3 < k:
        n += 1
    t = (np.arange(n) + 0.5) / n
    pts = np.array([[a, b, c] for a in t for b in t for c in t])[:k]
    return 0.5 / n - 1e-13, pts


def with_grid(entries):
    for k in range(1, len(entries) + 1):
        r, pts = grid(k)
        if r > entries[k - 1][0]:
            entries[k - 1] = (r, pts)
    return entries


def monotone(entries):
    for k in range(len(entries) - 1, 0, -1):
        r, centers = entries[k - 1]
        r_next, next_centers = entries[k]
        if r < r_next:
            entries[k - 1] = (r_next, next_centers[:k])
            print("K=%d r %.6f -> %.6f" % (k, r, r_next), file=sys.stderr)
    return entries


def format_entry(k, r, centers):
    pts = ", ".join("{%.17g, %.17g, %.17g}" % tuple(c) for c in centers)
    return "{%d, %.17g, {%s}}," % (k, r, pts)


def write_table(path, entries):
    lines = HEADER + [format_entry(k + 1, r, c) for k, (r, c) in enumerate(entries)]
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def read_table(path):
    entries = []
    num = r"[-+0-9.eE]+"
    for line in open(path):
        m = re.match(r"\{(\d+), (%s), \{(.*)\}\},$" % num, line.strip())
        if not m:
            continue
        pts = re.findall(r"\{(%s), (%s), (%s)\}" % (num, num, num), m.group(3))
        entries.append((float(m.group(2)), np.array([[float(v) for v in p] for p in pts])))
        assert len(entries) == int(m.group(1)) and len(pts) == len(entries)
    return entries


def main():
    if len(sys.argv) == 3 and sys.argv[1] == "--fixup":
        write_table(sys.argv[2], monotone(with_grid(read_table(sys.argv[2]))))
        return
    ap = argparse.ArgumentParser()
    ap.add_argument("kmax", type=int)
    ap.add_argument("out")
    ap.add_argument("--restarts", type=int, default=12)
    args = ap.parse_args()
    rng = np.random.default_rng(20240601)
    entries = []
    for k in range(1, args.kmax + 1):
        x, m = best_spread(k, args.restarts if k > 2 else 1, rng)
        if k == 1:
            r = 0.5
            centers = np.array([[0.5, 0.5, 0.5]])
        elif k == 2:
            # Diagonal pair: sqrt(3) (1 - 2r) = 2r.
            r = np.sqrt(3.0) / (2.0 + 2.0 * np.sqrt(3.0))
            centers = np.array([[r, r, r], [1 - r, 1 - r, 1 - r]])
        else:
            r = m / (2.0 * (1.0 + m))
            centers = r + (1.0 - 2.0 * r) * x
            # Recompute from the realized centers so the stored radius is never optimistic.
            r = min(r, min_dist(centers) / 2.0, centers.min(), 1.0 - centers.max())
            r -= 1e-13
        entries.append((r, centers))
        print("K=%d r=%.6f" % (k, r), file=sys.stderr, flush=True)
    write_table(args.out, monotone(with_grid(entries)))


if __name__ == "__main__":
    main()
