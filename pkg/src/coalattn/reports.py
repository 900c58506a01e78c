"""Report assembly for the oracle / estimate / attend commands.

Reports are plain dicts serialized canonically (sorted keys, two-space
indent, shortest round-trip float repr, trailing newline) so identical
inputs and seeds always produce byte-identical files.  Wall-clock timings
are deliberately kept out of these reports; only the benchmark CSV carries
timings, and those are documented as environment-dependent.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .estimators import estimate_all
from .games import GibbsTarget
from .inputs import SCHEMA_VERSION, InputDocument, InputError, RunConfig
from .meanfield import solve_fixed_point
from .oracles import (
    exact_game_values,
    exact_gibbs_tilted_values,
    exact_spin_marginals,
)
from .pipeline import (
    AttentionOutput,
    HeadParams,
    MultiHeadParams,
    combine_fields,
    derive_head_seed,
    gate_lambda,
    multi_head_attend,
    normalize_scores,
    single_head_attend,
)

__all__ = [
    "dump_json",
    "write_trace_csv",
    "run_oracle",
    "run_estimate",
    "run_attend",
]


def dump_json(report: dict, path=None) -> str:
    """Canonical JSON encoding; writes to *path* when given."""
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def write_trace_csv(trace, path) -> None:
    """Convergence trace as CSV rows of (iteration, residual)."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["iteration", "residual"])
        for iteration, residual in trace:
            writer.writerow([iteration, repr(float(residual))])


def _head_params_from_doc(doc: InputDocument, cfg: RunConfig) -> list[HeadParams]:
    if doc.heads is None:
        raise InputError(
            "document: attend needs head parameters "
            "(value_projection/gate_weights/gate_bias or a multi_head block)"
        )
    heads = []
    for index, spec in enumerate(doc.heads):
        seed = cfg.seed if len(doc.heads) == 1 else derive_head_seed(cfg.seed, index)
        heads.append(
            HeadParams(
                value_projection=spec.value_projection,
                gate_weights=spec.gate_weights,
                gate_bias=spec.gate_bias,
                estimator=cfg.estimator_config(seed),
                meanfield=cfg.meanfield_config(),
                nonlinearity=doc.nonlinearity,
                normalization=cfg.normalization,
            )
        )
    return heads


def _solver_input(n: int, fields, couplings) -> dict:
    # a self-contained document: feed it back through `attend`/`oracle`
    return {
        "schema_version": SCHEMA_VERSION,
        "n": n,
        "fields": np.asarray(fields).tolist(),
        "couplings": np.asarray(couplings).tolist(),
    }


def run_oracle(doc: InputDocument, cfg: RunConfig) -> dict:
    """Exact values for everything the document pins down.

    Game documents get exact Shapley/Banzhaf/interaction values, their
    Gibbs-tilted counterparts, and the efficiency-axiom check.  Spin
    marginals are included when the document carries explicit fields and
    couplings, or when they are exactly derivable (embedding game plus gate
    parameters); the mean-field solution of the same system rides along with
    its gap to the exact marginals.
    """
    report: dict = {"schema_version": SCHEMA_VERSION, "config": cfg.echo()}

    fields = couplings = None
    if doc.has_game:
        projection = doc.heads[0].value_projection if doc.heads else None
        game = doc.build_game(projection)
        exact = exact_game_values(game)
        tilted = exact_gibbs_tilted_values(game, GibbsTarget(cfg.coalition_gamma))
        grand = game.value_by_mask((1 << game.n) - 1)
        empty = game.value_by_mask(0)
        report["game"] = {
            "n": game.n,
            "shapley": exact.shapley.tolist(),
            "banzhaf": exact.banzhaf.tolist(),
            "interactions": exact.interactions.tolist(),
            "tilted_shapley_prefix": tilted.shapley.tolist(),
            "tilted_banzhaf": tilted.banzhaf.tolist(),
            "tilted_interactions": tilted.interactions.tolist(),
            "efficiency_sum": float(np.sum(exact.shapley)),
            "efficiency_target": float(grand - empty),
            "efficiency_gap": float(np.sum(exact.shapley) - (grand - empty)),
        }
        if doc.heads is not None and doc.embeddings is not None and len(doc.heads) == 1:
            spec = doc.heads[0]
            lambdas = np.array(
                [
                    gate_lambda(doc.embeddings[i], spec.gate_weights, spec.gate_bias)
                    for i in range(game.n)
                ]
            )
            fields = combine_fields(
                normalize_scores(exact.shapley, cfg.normalization),
                normalize_scores(exact.banzhaf, cfg.normalization),
                lambdas,
            )
            couplings = exact.interactions

    if doc.has_spin_system:
        fields, couplings = doc.spin_system()

    if fields is not None:
        marginals = exact_spin_marginals(fields, couplings, cfg.spin_gamma)
        solved = solve_fixed_point(fields, couplings, cfg.meanfield_config())
        report["spins"] = {
            "fields": np.asarray(fields).tolist(),
            "couplings": np.asarray(couplings).tolist(),
            "alphas": marginals.alphas.tolist(),
            "expected_spins": marginals.expected_spins.tolist(),
            "log_partition": marginals.log_partition,
            "alpha_sum": float(np.sum(marginals.alphas)),
            "meanfield_alphas": solved.alphas.tolist(),
            "meanfield_converged": solved.converged,
            "meanfield_max_gap": float(np.max(np.abs(solved.alphas - marginals.alphas))),
        }

    return report


def run_estimate(doc: InputDocument, cfg: RunConfig) -> dict:
    """Monte Carlo estimates for the document's game."""
    if not doc.has_game:
        raise InputError("document: estimate needs embeddings or a characteristic_table")
    projection = doc.heads[0].value_projection if doc.heads else None
    game = doc.build_game(projection)
    values = estimate_all(game, cfg.estimator_config())
    return {
        "schema_version": SCHEMA_VERSION,
        "config": cfg.echo(),
        "n": game.n,
        "shapley_hat": values.shapley_hat.tolist(),
        "banzhaf_hat": values.banzhaf_hat.tolist(),
        "interactions_hat": values.interactions_hat.tolist(),
        "effective_sample_size": values.effective_sample_size.tolist(),
    }


def _head_report(result, n: int) -> dict:
    mf = result.meanfield
    return {
        "alphas": result.alphas.tolist(),
        "alpha_sum": result.alpha_sum,
        "expected_spins": mf.expected_spins.tolist(),
        "lambdas": result.lambdas.tolist(),
        "field_vector": result.field_vector.tolist(),
        "interaction_matrix": result.interaction_matrix.tolist(),
        "shapley_hat": result.shapley_hat.tolist(),
        "banzhaf_hat": result.banzhaf_hat.tolist(),
        "effective_sample_size": result.effective_sample_size.tolist(),
        "output": result.output.tolist(),
        "converged": mf.converged,
        "iterations_used": mf.iterations_used,
        "final_residual": mf.final_residual,
        "solver_input": _solver_input(n, result.field_vector, result.interaction_matrix),
    }


def run_attend(doc: InputDocument, cfg: RunConfig, trace_path=None) -> dict:
    """Full pipeline for embedding documents; solver stage alone for
    explicit fields/couplings documents."""
    report: dict = {"schema_version": SCHEMA_VERSION, "config": cfg.echo()}

    if doc.embeddings is not None:
        if doc.has_spin_system:
            raise InputError(
                "document: attend with embeddings must not also carry fields/couplings"
            )
        heads = _head_params_from_doc(doc, cfg)
        if doc.output_projection is not None:
            result: AttentionOutput = multi_head_attend(
                doc.embeddings, MultiHeadParams(tuple(heads), doc.output_projection)
            )
        else:
            result = single_head_attend(doc.embeddings, heads[0])
        report["output"] = result.output.tolist()
        report["heads"] = [_head_report(h, doc.n) for h in result.heads]
        if trace_path is not None:
            # rerun the first head's solve with tracing; identical inputs
            head0 = result.heads[0]
            solved = solve_fixed_point(
                head0.field_vector,
                head0.interaction_matrix,
                cfg.meanfield_config(),
                record_trace=True,
            )
            write_trace_csv(solved.trace, trace_path)
        return report

    if doc.has_spin_system:
        fields, couplings = doc.spin_system()
        solved = solve_fixed_point(
            fields, couplings, cfg.meanfield_config(), record_trace=trace_path is not None
        )
        report["solver"] = {
            "alphas": solved.alphas.tolist(),
            "alpha_sum": float(np.sum(solved.alphas)),
            "expected_spins": solved.expected_spins.tolist(),
            "converged": solved.converged,
            "iterations_used": solved.iterations_used,
            "final_residual": solved.final_residual,
            "solver_input": _solver_input(doc.n, fields, couplings),
        }
        if trace_path is not None:
            write_trace_csv(solved.trace, trace_path)
        return report

    raise InputError("document: attend needs embeddings or an explicit fields/couplings block")
