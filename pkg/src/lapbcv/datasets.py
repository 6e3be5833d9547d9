"""Deterministic synthetic datasets: Gaussian blob regimes, a two-scale
hierarchical regime, and a 12-column beam-diagnostics surrogate.

Preset geometry notes.  The blob separations look extreme (30 cluster
widths for the well-separated preset) because the estimator reads cluster
count off the near-null spectrum of the normalized Laplacian: the clusters
must be decoupled below ~1e-16 in RBF weight at the kernel scales being
swept, while staying internally well connected.  Separations of a few
cluster widths leave inter-cluster couplings many orders above the
regularization scales of interest.
"""
from dataclasses import dataclass

import numpy as np

from ._seeds import rng_from
from .errors import SeparationUnsatisfiable
from .graph import Dataset

_MAX_ATTEMPTS = 10_000


@dataclass(frozen=True)
class BlobSpec:
    n_samples: int
    n_features: int
    n_clusters: int
    cluster_std: float
    center_scale: float
    seed: int = 0
    separation_factor: float = 4.0  # minimum center distance, in cluster widths

    def __post_init__(self):
        if self.n_clusters > self.n_samples:
            raise ValueError("more clusters than samples")
        if min(self.cluster_std, self.center_scale, self.separation_factor) <= 0:
            raise ValueError("scales must be positive")


def _equal_sizes(n, k):
    return [n // k + (1 if i < n % k else 0) for i in range(k)]


def _separated_points(rng, count, dim, low, high, min_dist, what):
    """Uniform points in a box with a minimum pairwise distance, by
    redrawing the whole set."""
    for _ in range(_MAX_ATTEMPTS):
        pts = rng.uniform(low, high, size=(count, dim))
        if count == 1:
            return pts
        d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
        np.fill_diagonal(d, np.inf)
        if d.min() >= min_dist:
            return pts
    raise SeparationUnsatisfiable(
        f"could not place {count} {what} at pairwise distance >= {min_dist:g} "
        f"in [{low:g}, {high:g}]^{dim} after {_MAX_ATTEMPTS} attempts")


def gaussian_blobs(spec):
    """Isotropic Gaussian clusters around uniformly drawn, separated centers.

    Sizes are as equal as possible (the remainder goes to the first
    clusters); truth labels record the generating cluster.
    """
    rng = rng_from(spec.seed)
    min_sep = spec.separation_factor * spec.cluster_std
    centers = _separated_points(rng, spec.n_clusters, spec.n_features,
                                -spec.center_scale, spec.center_scale,
                                min_sep, "cluster centers")
    sizes = _equal_sizes(spec.n_samples, spec.n_clusters)
    parts, labels = [], []
    for ci, (center, size) in enumerate(zip(centers, sizes)):
        parts.append(center + spec.cluster_std * rng.standard_normal((size, spec.n_features)))
        labels += [ci] * size
    return Dataset(values=np.vstack(parts),
                   column_names=[f"x{i}" for i in range(spec.n_features)],
                   truth_labels=np.array(labels))


def hierarchical_blobs(n_samples, n_subclusters, n_groups, intra_scale,
                       inter_scale, seed, cluster_std=0.2, n_features=2):
    """Subclusters nested in groups: fine structure at ``intra_scale``
    inside groups separated at ``inter_scale``.

    Both label levels are returned; every fine label maps to exactly one
    coarse label.
    """
    if n_groups > n_subclusters:
        raise ValueError("need at least one subcluster per group")
    rng = rng_from(seed)
    group_centers = _separated_points(rng, n_groups, n_features,
                                      -1.2 * inter_scale, 1.2 * inter_scale,
                                      inter_scale, "group centers")
    group_sizes = _equal_sizes(n_subclusters, n_groups)
    sub_centers, sub_group = [], []
    for gi, (gc, gs) in enumerate(zip(group_centers, group_sizes)):
        local = _separated_points(rng, gs, n_features, -intra_scale, intra_scale,
                                  0.85 * intra_scale, "subcluster centers")
        sub_centers.append(gc + local)
        sub_group += [gi] * gs
    sub_centers = np.vstack(sub_centers)
    sizes = _equal_sizes(n_samples, n_subclusters)
    parts, fine, coarse = [], [], []
    for si, (center, size) in enumerate(zip(sub_centers, sizes)):
        parts.append(center + cluster_std * rng.standard_normal((size, n_features)))
        fine += [si] * size
        coarse += [sub_group[si]] * size
    return Dataset(values=np.vstack(parts),
                   column_names=[f"x{i}" for i in range(n_features)],
                   truth_labels=np.array(fine),
                   coarse_labels=np.array(coarse))


def pca_project_2d(data):
    """Projection onto the top-2 principal directions of the mean-centered
    data; used only for emitted visualization files."""
    x = data.values if isinstance(data, Dataset) else np.asarray(data)
    if x.shape[1] < 2:
        raise ValueError("need at least 2 features")
    xc = x - x.mean(axis=0, keepdims=True)
    _, _, vt = np.linalg.svd(xc, full_matrices=False)
    return xc @ vt[:2].T


SURROGATE_COLUMNS = [
    "scattered_intensity", "mono_intensity",
    "upstream_intensity_1", "upstream_intensity_2",
    "upstream_intensity_3", "upstream_intensity_4",
    "delay_stage", "laser_power", "arrival_time_mean", "arrival_time_fwhm",
    "photon_energy", "energy_mono_product",
]

# default population mix follows 573/62/43 of 750, remainder spread thin
SURROGATE_PROPORTIONS = {
    "signal": 573 / 750.0,
    "dropped": 62 / 750.0,
    "drifted": 43 / 750.0,
}


def surrogate_experiment(n_samples=750, seed=0, proportions=None):
    """Synthetic 12-column pulse-diagnostics table.

    One dominant signal population, a zero-fluence dropped-shot population
    (all incident-intensity columns near zero), a photon-energy-drifted
    population, and small timing/weak/junk remainders.  The final column is
    exactly photon_energy * mono_intensity.
    """
    if n_samples < 100:
        raise ValueError("surrogate needs at least 100 samples")
    props = dict(SURROGATE_PROPORTIONS)
    if proportions:
        props.update(proportions)
    rng = rng_from(seed)

    n_signal = int(round(props["signal"] * n_samples))
    n_dropped = int(round(props["dropped"] * n_samples))
    n_drifted = int(round(props["drifted"] * n_samples))
    rest = n_samples - n_signal - n_dropped - n_drifted
    if rest < 0:
        raise ValueError("population proportions exceed 1")
    n_timing = rest // 3
    n_weak = rest // 3
    n_junk = rest - n_timing - n_weak

    def block(n, mk):
        cols = mk(n)
        cols.append(cols[10] * cols[1])  # exact product column
        return np.column_stack(cols)

    def signal_like(n, scatter=20.0, mono=30.0, up=25.0, escale=1.0):
        return [
            rng.normal(scatter, 5.0, n), rng.normal(mono, 6.0, n),
            rng.normal(up, 5.0, n), rng.normal(up, 5.0, n),
            rng.normal(up, 5.0, n), rng.normal(up, 5.0, n),
            rng.uniform(-5.0, 5.0, n), rng.normal(15.0, 1.5, n),
            rng.normal(0.0, 1.5, n), rng.normal(4.0, 0.5, n),
            rng.normal(escale, 0.02, n),
        ]

    def dropped_like(n):
        return [
            rng.normal(0.0, 0.05, n), rng.normal(0.0, 0.05, n),
            rng.normal(0.0, 0.05, n), rng.normal(0.0, 0.05, n),
            rng.normal(0.0, 0.05, n), rng.normal(0.0, 0.05, n),
            rng.uniform(-5.0, 5.0, n), rng.normal(15.0, 1.5, n),
            rng.normal(0.0, 5.0, n), rng.normal(8.0, 2.0, n),
            rng.normal(1.0, 0.05, n),
        ]

    def timing_like(n):
        cols = signal_like(n)
        cols[8] = rng.normal(25.0, 3.0, n)
        cols[9] = rng.normal(15.0, 2.0, n)
        return cols

    def weak_like(n):
        return [
            rng.normal(4.0, 1.5, n), rng.normal(6.0, 2.0, n),
            rng.normal(5.0, 1.5, n), rng.normal(5.0, 1.5, n),
            rng.normal(5.0, 1.5, n), rng.normal(5.0, 1.5, n),
            rng.uniform(-5.0, 5.0, n), rng.normal(15.0, 1.5, n),
            rng.normal(0.0, 2.0, n), rng.normal(5.0, 1.0, n),
            rng.normal(1.0, 0.03, n),
        ]

    def junk_like(n):
        return [
            rng.uniform(0.0, 40.0, n), rng.uniform(0.0, 50.0, n),
            rng.uniform(0.0, 45.0, n), rng.uniform(0.0, 45.0, n),
            rng.uniform(0.0, 45.0, n), rng.uniform(0.0, 45.0, n),
            rng.uniform(-5.0, 5.0, n), rng.normal(15.0, 1.5, n),
            rng.uniform(-10.0, 30.0, n), rng.uniform(1.0, 20.0, n),
            rng.uniform(0.8, 1.6, n),
        ]

    blocks = [
        (block(n_signal, signal_like), 0),
        (block(n_dropped, dropped_like), 1),
        (block(n_drifted, lambda n: signal_like(n, mono=24.0, escale=1.35)), 2),
        (block(n_timing, timing_like), 3),
        (block(n_weak, weak_like), 4),
        (block(n_junk, junk_like), 5),
    ]
    values = np.vstack([b for b, _ in blocks])
    labels = np.concatenate([np.full(b.shape[0], lab) for b, lab in blocks])
    return Dataset(values=values, column_names=list(SURROGATE_COLUMNS),
                   truth_labels=labels)


# generation presets reachable from the CLI; parameters are recorded in the
# emitted sidecar so results stay auditable
BLOB_PRESETS = {
    "fig1a": dict(n_samples=150, n_features=7, n_clusters=5, cluster_std=1.0,
                  center_scale=40.0, separation_factor=30.0),
    "fig1b": dict(n_samples=150, n_features=2, n_clusters=7, cluster_std=1.0,
                  center_scale=5.0, separation_factor=1.5),
}

HIERARCHICAL_PRESETS = {
    "fig2a": dict(n_samples=150, n_subclusters=11, n_groups=3,
                  intra_scale=6.0, inter_scale=90.0, cluster_std=0.2,
                  n_features=2),
}

PRESET_NAMES = sorted(list(BLOB_PRESETS) + list(HIERARCHICAL_PRESETS) + ["surrogate"])


def generate_preset(name, seed):
    """Build a named preset dataset; raises KeyError for unknown names."""
    if name in BLOB_PRESETS:
        return gaussian_blobs(BlobSpec(seed=seed, **BLOB_PRESETS[name]))
    if name in HIERARCHICAL_PRESETS:
        return hierarchical_blobs(seed=seed, **HIERARCHICAL_PRESETS[name])
    if name == "surrogate":
        return surrogate_experiment(seed=seed)
    raise KeyError(name)
