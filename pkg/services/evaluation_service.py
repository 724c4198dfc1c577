"""
Evaluation of fitted models on held-out activations (one layer per model).
"""

import logging
from typing import List, Optional, Sequence

import numpy as np

import config
from core.errors import ExampleCountMismatch, ManifestParseError, SpecValidationError
from core.metrics import MetricsCollector
from core.models import ActivityMatrix, AlignmentReport, SrmModel
from core.run_context import RunContext
from repositories.activation_repository import group_by_layer
from services.rsm_service import (
    average_inter_rsm, mean_within_rsm, pairwise_inter_consistency,
    pairwise_wrsm_consistency, rsm_correlation
)
from services.srm_service import fit_srm, transform, variance_explained
from services.stats_service import bootstrap_ci
from validators import split_sizes

logger = logging.getLogger(__name__)


class EvaluationService:
    """
    Computes alignment metrics for a model on a set of activations.

    Provides:
    - Shared-space vs native-space iRSM/wRSM correlations
    - Variance explained on the given (test) activations
    - Within-network RSM consistency across network pairs
    - Bootstrap CIs over network pairs
    """

    def __init__(
        self,
        resamples: int = config.BOOTSTRAP_RESAMPLES,
        level: float = config.CI_LEVEL,
        seed: int = config.DEFAULT_SEED,
        metrics: Optional[MetricsCollector] = None,
    ):
        self.resamples = resamples
        self.level = level
        self.seed = seed
        self.metrics = metrics

    def evaluate(
        self,
        model: SrmModel,
        mats: Sequence[ActivityMatrix],
        reference: Optional[Sequence[ActivityMatrix]] = None,
    ) -> AlignmentReport:
        """
        Evaluate `model` on `mats` (networks in model order).

        Args:
            model: Fitted SRM model
            mats: Held-out activations, one per model network
            reference: Activations whose averaged wRSM replaces that of `mats`
                as the comparison target (e.g. the final training checkpoint
                when `mats` come from an earlier one); same examples, any
                number of networks

        Raises:
            NetworkCountMismatch / DimensionMismatch: mats do not fit the model
            ExampleCountMismatch: reference example count differs from mats
        """
        shared = transform(model, mats)
        if reference:
            expected = mats[0].examples
            for a in reference:
                if a.examples != expected:
                    raise ExampleCountMismatch(
                        f"reference network '{a.network_id}' has {a.examples} examples, "
                        f"evaluated activations have {expected}"
                    )
            wrsm = mean_within_rsm(reference)
        else:
            wrsm = mean_within_rsm(mats)

        shared_irsm = average_inter_rsm(shared, space="shared")
        native_irsm = average_inter_rsm(mats, space="native")
        consistency_mean, consistency_pairs = pairwise_wrsm_consistency(mats)
        pair_correlations = pairwise_inter_consistency(shared, wrsm, "pearson")

        report = AlignmentReport(
            layer_id=model.layer_id or (mats[0].layer_id if mats else ""),
            k=model.k,
            networks=model.networks,
            examples=int(mats[0].examples),
            units={a.network_id: a.units for a in mats},
            shared_pearson=rsm_correlation(shared_irsm, wrsm, "pearson"),
            shared_spearman=rsm_correlation(shared_irsm, wrsm, "spearman"),
            native_pearson=rsm_correlation(native_irsm, wrsm, "pearson"),
            native_spearman=rsm_correlation(native_irsm, wrsm, "spearman"),
            variance_explained=variance_explained(model, mats),
            wrsm_consistency_mean=consistency_mean,
            wrsm_consistency_pairs=consistency_pairs,
            shared_pair_ci=bootstrap_ci(
                pair_correlations, self.level, self.resamples, self.seed, axis="network_pairs"
            ),
            wrsm_consistency_ci=bootstrap_ci(
                consistency_pairs, self.level, self.resamples, self.seed, axis="network_pairs"
            ),
            wrsm_source="reference" if reference else "evaluated",
        )

        logger.info(
            f"Layer '{report.layer_id}': shared r={report.shared_pearson:.4f} "
            f"native r={report.native_pearson:.4f} VE={report.variance_explained:.4f} "
            f"(wRSM from {report.wrsm_source} activations)"
        )
        return report

    def fit_and_evaluate_layers(
        self,
        mats: Sequence[ActivityMatrix],
        split_fraction: float = config.SIM_SPLIT_FRACTION,
        k: Optional[int] = None,
        reference: Optional[Sequence[ActivityMatrix]] = None,
        threads: int = 1,
    ) -> List[AlignmentReport]:
        """
        For every layer: split examples with a seeded shuffle, fit SRM on the
        alignment part and evaluate on the held-out part. A reference set is
        split with the same shuffle, layer by layer.

        Raises:
            ManifestParseError: a layer is missing from the reference set
        """
        layers = group_by_layer(list(mats))
        reference_layers = group_by_layer(list(reference)) if reference else {}

        reports = []
        for layer_id, group in layers.items():
            with RunContext(layer=layer_id):
                if reference and layer_id not in reference_layers:
                    raise ManifestParseError(f"layer '{layer_id}' does not appear in the reference set")
                examples = group[0].examples
                sizes = split_sizes(examples, split_fraction)
                if sizes is None:
                    raise SpecValidationError(f"layer '{layer_id}': cannot split {examples} examples")
                order = np.random.default_rng(self.seed).permutation(examples)
                alignment = [a.with_columns(order[:sizes[0]]) for a in group]
                test = [a.with_columns(order[sizes[0]:]) for a in group]

                layer_reference = None
                if reference:
                    for a in reference_layers[layer_id]:
                        if a.examples != examples:
                            raise ExampleCountMismatch(
                                f"layer '{layer_id}': reference network '{a.network_id}' has "
                                f"{a.examples} examples, expected {examples}"
                            )
                    layer_reference = [a.with_columns(order[sizes[0]:]) for a in reference_layers[layer_id]]

                layer_k = min(k, min(a.units for a in group)) if k is not None else None
                model = fit_srm(alignment, k=layer_k, metrics=self.metrics, threads=threads)
                reports.append(self.evaluate(model, test, layer_reference))
        return reports
