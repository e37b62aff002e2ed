"""Feature selectors behind one contract: panel (or design) in, FeatureSet out."""
from __future__ import annotations

import numpy as np

from ..errors import BadName
from ..ingest import Regime, RegimeCalendar
from ..panel import AlignedPanel, build_design
from .base import SELECTOR_IDS, DynamicGraph, Environment, FeatureSet
from .dynotears import dynotears_fit, dynotears_select
from .granger import granger_select
from .pcmci import pcmci_select
from .seqicp import halves_environments, residual_invariance_p, seqicp_select
from .sfs import cv_mse, sfs_select
from .varlingam import VarLingamResult, cluster_prefilter, varlingam_fit, varlingam_select

__all__ = [
    "SELECTOR_IDS",
    "DynamicGraph",
    "Environment",
    "FeatureSet",
    "VarLingamResult",
    "cluster_prefilter",
    "cv_mse",
    "dynotears_fit",
    "dynotears_select",
    "granger_select",
    "halves_environments",
    "make_selector",
    "pcmci_select",
    "residual_invariance_p",
    "seqicp_select",
    "sfs_select",
    "varlingam_fit",
    "varlingam_select",
]


def _calendar_environments(design, calendar: RegimeCalendar) -> list[Environment]:
    normal = [i for i, d in enumerate(design.dates) if calendar.classify(d) is Regime.NORMAL]
    crisis = [i for i, d in enumerate(design.dates) if calendar.classify(d) is Regime.CRISIS]
    return [
        Environment("normal", np.array(normal, dtype=int)),
        Environment("crisis", np.array(crisis, dtype=int)),
    ]


def make_selector(selector_id: str, params: dict | None = None):
    """Build the uniform callable used by the backtest engine.

    The callable signature is ``(panel, p, seed, calendar=None) -> FeatureSet``;
    design-based selectors build their lag design internally.
    """
    params = dict(params or {})
    if selector_id not in SELECTOR_IDS:
        raise BadName(f"unknown selector {selector_id!r}; known: {SELECTOR_IDS}")

    if selector_id == "granger":
        alpha = float(params.pop("alpha", 0.05))

        def run(panel: AlignedPanel, p: int, seed: int, calendar=None) -> FeatureSet:
            return granger_select(build_design(panel, p), alpha=alpha)

    elif selector_id == "sfs":
        kwargs = {
            "direction": params.pop("direction", "forward"),
            "tol": float(params.pop("tol", 1e-8)),
            "folds": int(params.pop("folds", 5)),
        }
        if "max_features" in params:
            kwargs["max_features"] = int(params.pop("max_features"))

        def run(panel, p, seed, calendar=None):
            return sfs_select(build_design(panel, p), seed=seed, **kwargs)

    elif selector_id == "seqicp":
        alpha = float(params.pop("alpha", 0.05))
        max_subset_size = int(params.pop("max_subset_size", 2))
        env_mode = params.pop("environments", "halves")

        def run(panel, p, seed, calendar=None):
            design = build_design(panel, p)
            if env_mode == "calendar" and calendar is not None:
                envs = _calendar_environments(design, calendar)
                envs = [e for e in envs if len(e) > 0]
                if len(envs) < 2:
                    envs = halves_environments(design.n)
            else:
                envs = halves_environments(design.n)
            return seqicp_select(
                design, envs, alpha=alpha, max_subset_size=max_subset_size
            )

    elif selector_id == "varlingam":
        kwargs = {
            "edge_threshold": float(params.pop("edge_threshold", 0.05)),
            "use_instantaneous": bool(params.pop("use_instantaneous", True)),
            "use_lagged": bool(params.pop("use_lagged", True)),
        }
        if "k_clusters" in params:
            kwargs["k_clusters"] = int(params.pop("k_clusters"))

        def run(panel, p, seed, calendar=None):
            return varlingam_select(panel, p=p, seed=seed, **kwargs)

    elif selector_id == "dynotears":
        fit_kwargs = {
            "lambda_w": float(params.pop("lambda_w", 0.1)),
            "lambda_s": float(params.pop("lambda_s", 0.1)),
            "h_tol": float(params.pop("h_tol", 1e-8)),
            "w_threshold": float(params.pop("w_threshold", 0.05)),
        }

        def run(panel, p, seed, calendar=None):
            graph = dynotears_fit(panel, p=p, **fit_kwargs)
            return dynotears_select(graph, panel.target_name)

    else:  # pcmci
        kwargs = {
            "alpha": float(params.pop("alpha", 0.05)),
            "max_cond_dim": int(params.pop("max_cond_dim", 3)),
            "max_parents_stage1": int(params.pop("max_parents_stage1", 10)),
        }

        def run(panel, p, seed, calendar=None):
            return pcmci_select(panel, p=p, **kwargs)

    if params:
        raise BadName(f"unknown parameters for {selector_id}: {sorted(params)}")
    return run
