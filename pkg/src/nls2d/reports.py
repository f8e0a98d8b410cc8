"""Figure rendering for the CLI report path.

Every run that emits delimited data also renders a PNG next to it;
matplotlib's Agg backend keeps this headless-safe.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_townes(profile, path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(profile.radii, profile.values, lw=1.5)
    ax.set_xlabel("r")
    ax.set_ylabel("Q(r)")
    ax.set_title(f"Townes profile, mass = {profile.mass:.6f}")
    ax.grid(alpha=0.3)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)


def render_density(field, path, title="|u|^2") -> None:
    grid = field.grid
    dens = np.abs(field.values) ** 2
    fig, ax = plt.subplots(figsize=(5, 4.2))
    extent = [-grid.half_extent, grid.half_extent] * 2
    im = ax.imshow(dens.T, origin="lower", extent=extent, cmap="viridis")
    fig.colorbar(im, ax=ax)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(title)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)


def render_sweep(lambdas, errors, path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog(lambdas, errors, "o-")
    ax.set_xlabel("lambda")
    ax.set_ylabel("interaction error")
    ax.set_title("Hartree-to-NLS interaction error vs scaling")
    ax.grid(alpha=0.3, which="both")
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)


def render_eta_trajectory(etas, path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    vals = [float(e) for e in etas]
    ax.plot(range(len(vals)), vals, ".-")
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xlabel("bootstrap step")
    ax.set_ylabel("eta")
    ax.set_title("Bootstrap exponent trajectory")
    ax.grid(alpha=0.3)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)


def render_manybody(records, path) -> None:
    ns = [r["n_particles"] for r in records]
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    axes[0].plot(ns, [r["e_n"] for r in records], "o-", label="e_N")
    axes[0].plot(ns, [r["e_n_eps"] for r in records], "s--", label="e_N,eps")
    if all("e_hartree_span" in r for r in records):
        axes[0].plot(ns, [r["e_hartree_span"] for r in records], "^:",
                     label="e_H (span)")
    axes[0].set_xlabel("N")
    axes[0].set_ylabel("energy per particle")
    axes[0].legend()
    axes[0].grid(alpha=0.3)
    axes[1].plot(ns, [r["m1"] for r in records], "o-", label="m1")
    axes[1].plot(ns, [r["m2"] for r in records], "s--", label="m2")
    axes[1].set_xlabel("N")
    axes[1].set_ylabel("moments")
    axes[1].legend()
    axes[1].grid(alpha=0.3)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)


def render_definetti(errors, bound, path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(range(len(errors)), errors, "o", label="trace-norm error")
    ax.axhline(bound, color="r", label="8d/N")
    ax.set_xlabel("state index")
    ax.set_ylabel("error")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
