"""Structured run records: JSON reports, factor-graph export, verification.

A report carries everything needed to reproduce and re-check a run: the
resolved configuration, input provenance (path, checksum, shape), the
basis with its biases, the block partition with modeled flags, and the
full evidence decomposition. Floats are stored at full precision so that
re-verification can match to 1e-9; the 12-significant-digit rendering is
applied to printed summaries only.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Any, Mapping

from .basis import Basis, basis_from_operators
from .data import Dataset
from .errors import DatasetFormatError
from .evidence import (
    Block,
    EvidenceReport,
    McmStructure,
    mcm_log_evidence,
)
from .gf2 import Operator

FORMAT_NAME = "mcmselect-report"
FORMAT_VERSION = 1


def sig12(x: float) -> str:
    """Render a float with 12 significant digits (printed output only)."""
    return f"{x:.12g}"


def file_sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def basis_record(basis: Basis) -> dict[str, Any]:
    return {
        "operators": [op.to_string() for op in basis.operators],
        "biases": list(basis.biases),
    }


def structure_record(m: McmStructure) -> dict[str, Any]:
    return {
        "n": m.n,
        "basis_size": m.basis_size,
        "blocks": [
            {"members": list(b.members), "modeled": b.modeled} for b in m.blocks
        ],
    }


def evidence_record(r: EvidenceReport, log_base: float = 1.0) -> dict[str, Any]:
    """Evidence fields; log_base > 1 rescales from nats for display."""
    scale = 1.0 if log_base == 1.0 else 1.0 / math.log(log_base)
    return {
        "n": r.n,
        "N": r.N,
        "per_block_log_evidence": [v * scale for v in r.per_block_log_evidence],
        "total_log_evidence": r.total_log_evidence * scale,
        "max_log_likelihood": r.max_log_likelihood * scale,
        "K": r.K,
        "first_order_complexity": r.first_order_complexity * scale,
        "unmodeled_term": r.unmodeled_term * scale,
    }


def build_report(
    config: Mapping[str, Any],
    input_info: Mapping[str, Any],
    basis: Basis,
    structure: McmStructure,
    evidence: EvidenceReport,
    extras: Mapping[str, Any] | None = None,
) -> dict[str, Any]:
    rec: dict[str, Any] = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "config": dict(config),
        "input": dict(input_info),
        "basis": basis_record(basis),
        "partition": structure_record(structure),
        "evidence": evidence_record(evidence),
    }
    if extras:
        rec.update(extras)
    return rec


def write_report(report: Mapping[str, Any], path: str | Path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_report(path: str | Path) -> dict[str, Any]:
    with open(path, "r", encoding="ascii") as fh:
        rec = json.load(fh)
    if rec.get("format") != FORMAT_NAME:
        raise DatasetFormatError(f"{path} is not a {FORMAT_NAME} file")
    return rec


def report_basis(report: Mapping[str, Any], d: Dataset | None = None) -> Basis:
    """Rebuild the basis from a report; order and biases are as stored."""
    ops = tuple(Operator.from_string(s) for s in report["basis"]["operators"])
    if d is not None:
        return basis_from_operators(d, ops)
    return Basis(operators=ops, biases=tuple(report["basis"]["biases"]))


def report_structure(report: Mapping[str, Any]) -> McmStructure:
    part = report["partition"]
    return McmStructure(
        n=part["n"],
        basis_size=part["basis_size"],
        blocks=tuple(
            Block(tuple(b["members"]), bool(b["modeled"]))
            for b in part["blocks"]
        ),
    )


def verify_report(
    report: Mapping[str, Any],
    d: Dataset,
    tol: float = 1e-9,
) -> tuple[bool, float, float]:
    """Recompute the evidence from the stored basis and partition.

    Returns (ok, recomputed_total, stored_total); ok means the absolute
    difference is within tol.
    """
    basis = Basis(
        operators=tuple(Operator.from_string(s)
                        for s in report["basis"]["operators"]),
        biases=tuple(report["basis"]["biases"]),
    )
    structure = report_structure(report)
    fresh = mcm_log_evidence(d, basis, structure)
    stored = float(report["evidence"]["total_log_evidence"])
    return (abs(fresh.total_log_evidence - stored) <= tol,
            fresh.total_log_evidence, stored)


def factor_graph_dot(basis: Basis, structure: McmStructure) -> str:
    """Three-layer factor graph in DOT: spins, basis operators, blocks.

    Spin nodes are circles, basis operators squares, blocks triangles;
    edges follow operator membership in each layer.
    """
    n = basis.n
    lines = [
        "graph factor_graph {",
        "  rankdir=LR;",
        '  subgraph cluster_spins { label="variables";',
    ]
    for i in range(n):
        lines.append(f'    s{i} [shape=circle, label="s{i + 1}"];')
    lines.append("  }")
    lines.append('  subgraph cluster_basis { label="basis operators";')
    for j, op in enumerate(basis.operators[: structure.basis_size]):
        lines.append(f'    b{j} [shape=square, label="b{j + 1}"];')
    lines.append("  }")
    lines.append('  subgraph cluster_blocks { label="components";')
    for a, block in enumerate(structure.blocks):
        style = "solid" if block.modeled else "dashed"
        lines.append(
            f'    c{a} [shape=triangle, style={style}, label="a{a + 1}"];')
    lines.append("  }")
    for j, op in enumerate(basis.operators[: structure.basis_size]):
        for i in range(n):
            if (op.mask >> i) & 1:
                lines.append(f"  s{i} -- b{j};")
    for a, block in enumerate(structure.blocks):
        for j in block.members:
            lines.append(f"  b{j} -- c{a};")
    lines.append("}")
    return "\n".join(lines) + "\n"
