#!/usr/bin/env python3
"""
opalgs command-line interface.

Builds algebras from generator files, family parameters or bundled fixtures,
and runs the structure analyses on them. Documents are read from a file
argument or from stdin, so commands chain:

    opalgs fixture ex6-7 | opalgs qposet mirsky
    opalgs family tn --n 3 | opalgs antisym
    opalgs fixture ex4-11 | opalgs --json triangularize > report.json
    opalgs verify report.json

Exit codes: 0 success (including "unknown" verdicts, flagged in the report's
``detail``), 1 negative verdict with a certificate, 2 errors.
"""

import argparse
import logging
import sys
import time
from pathlib import Path

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from src import settings  # noqa: E402
from src.algebra.antisymmetry import (  # noqa: E402
    NO,
    UNKNOWN,
    is_antisymmetric,
    is_hereditarily_antisymmetric,
    self_adjoint_intersection,
)
from src.algebra.families import (  # noqa: E402
    Preorder,
    make_Dv,
    make_Jv,
    make_preorder_algebra,
    make_Tn,
    random_anti_orthogonal_basis,
    random_block_basis,
)
from src.algebra.invariant import invariant_lattice  # noqa: E402
from src.algebra.matspan import close_algebra  # noqa: E402
from src.algebra.triangular import (  # noqa: E402
    BASIS,
    OBSTRUCTION,
    jordanesque_basis,
    spectral_idempotent_poly,
    upper_triangularize,
)
from src.channels.kraus import (  # noqa: E402
    reachability_algebra,
    trap_subspaces,
    transition_witness,
)
from src.exceptions import (  # noqa: E402
    BudgetExhaustedError,
    JordanesqueConstructionError,
    OpalgsError,
)
from src.formats import reports  # noqa: E402
from src.formats.documents import (  # noqa: E402
    algebra_from_document,
    algebra_to_document,
    block_basis_from_document,
    channel_to_document,
    channels_from_document,
    decode_matrix,
    decode_scalar,
    decode_vector,
    dumps,
    encode_scalar,
    read_document,
    write_document,
)
from src.formats.fixtures import fixture_document, fixture_names  # noqa: E402
from src.linalg.backend import ToleranceConfig, get_backend  # noqa: E402
from src.qposet.chains import (  # noqa: E402
    antichain_width_lower_bound,
    bottom_up_partition,
    max_quantum_chain,
    power_filtration,
    top_down_partition,
)
from src.qposet.dilworth import dilworth_chain_partition  # noqa: E402

logger = logging.getLogger(__name__)


def setup_logging(verbose: bool = False):
    """Configure logging."""
    level = logging.DEBUG if verbose else getattr(logging, settings.LOG_LEVEL, logging.INFO)
    logging.basicConfig(level=level, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s")


def _backend(args, document: dict = None):
    """--backend, else the document's backend, else settings; tolerance flags override settings."""
    name = args.backend or (document or {}).get("backend") or settings.BACKEND
    defaults = ToleranceConfig.from_settings()
    tolerance = ToleranceConfig(
        eps_abs=args.eps_abs if args.eps_abs is not None else defaults.eps_abs,
        eps_rel=args.eps_rel if args.eps_rel is not None else defaults.eps_rel,
        rank_threshold=args.rank_threshold if args.rank_threshold is not None else defaults.rank_threshold,
    )
    return get_backend(name, tolerance)


def _seed(args) -> int:
    return settings.SEED if args.seed is None else args.seed


def _budget(args) -> int:
    return settings.SEARCH_BUDGET if args.budget is None else args.budget


def _load_algebra(args):
    document = read_document(args.input)
    backend = _backend(args, document)
    algebra = algebra_from_document(document, backend)
    return algebra, {args.input or "-": reports.digest_text(dumps(document))}


def _new_report(args, command: str, backend, inputs: dict, algebra=None) -> reports.Report:
    report = reports.Report(command, backend.name, _seed(args), inputs)
    if algebra is not None:
        report.algebra = algebra_to_document(algebra)
    return report


def _parse_vector(text: str, backend, field: str):
    return decode_vector([part.strip() for part in text.split(",")], backend, field)


def _emit(args, report: reports.Report, lines: list[str]) -> int:
    """Print the human summary (or the JSON report) and write --report."""
    report.timing_ms = (time.perf_counter() - getattr(args, "started", time.perf_counter())) * 1000
    if args.json:
        sys.stdout.write(dumps(report.to_document()))
    else:
        for line in lines:
            print(line)
        if report.detail == reports.UNKNOWN:
            print("Verdict is unknown (search budget exhausted or lattice incomplete)")
    if args.report:
        write_document(report.to_document(), args.report)
    return report.exit_code


def cmd_fixture(args):
    """Print a bundled fixture document."""
    if args.list or not args.name:
        for name in fixture_names():
            print(name)
        return 0
    write_document(fixture_document(args.name), args.output)
    return 0


def cmd_family(args):
    """Build a family algebra and print its document."""
    backend = _backend(args)
    seed = _seed(args)
    if args.family == "tn":
        algebra = make_Tn(args.n, backend)
    elif args.family == "dv":
        if args.vectors:
            vectors = _read_vectors(args.vectors, backend)
        else:
            vectors = random_anti_orthogonal_basis(args.n, seed=seed, backend=backend)
        algebra = make_Dv(vectors, backend)
    elif args.family == "jv":
        if args.basis:
            basis = block_basis_from_document(read_document(args.basis), backend)
        else:
            sizes = [int(s) for s in args.blocks.split(",")]
            basis = random_block_basis(sizes, seed=seed, backend=backend)
        algebra = make_Jv(basis)
    else:
        pairs = [tuple(int(x) for x in pair.split("<")) for pair in args.pairs.split(",") if pair]
        if args.vectors:
            vectors = _read_vectors(args.vectors, backend)
        else:
            vectors = random_anti_orthogonal_basis(args.n, seed=seed, backend=backend)
        preorder = Preorder.from_pairs(len(vectors), pairs, close=True)
        algebra = make_preorder_algebra(preorder, vectors, backend)
    logger.info("Built %r", algebra)
    write_document(algebra_to_document(algebra), args.output)
    return 0


def _read_vectors(path: str, backend):
    document = read_document(path)
    return [decode_vector(v, backend, "vectors") for v in document.get("vectors", [])]


def cmd_close(args):
    """Close generator matrices into an algebra document."""
    document = read_document(args.input)
    backend = _backend(args, document)
    if document.get("kind") == "generators":
        matrices = [decode_matrix(m, backend, "matrices", document.get("n")) for m in document["matrices"]]
    else:
        matrices = [decode_matrix(document["matrix"], backend, "matrix")]
    algebra = close_algebra(matrices, args.unital or bool(document.get("unital", False)), backend)
    logger.info("Closed %d generators to dimension %d", len(matrices), algebra.dim)
    write_document(algebra_to_document(algebra), args.output)
    return 0


def cmd_antisym(args):
    """Decide antisymmetry, with a self-adjoint witness when it fails."""
    algebra, inputs = _load_algebra(args)
    report = _new_report(args, "antisym", algebra.backend, inputs, algebra)
    result = is_antisymmetric(algebra)
    common = self_adjoint_intersection(algebra)
    report.verdicts = {
        "antisymmetric": result.antisymmetric,
        "self_adjoint_dimension": common.dim,
    }
    if result.antisymmetric:
        report.certificates.append(
            reports.certificate("antisymmetric", algebra.backend, intersection=common.basis)
        )
    else:
        report.detail = reports.NEGATIVE
        report.certificates.append(
            reports.certificate("self_adjoint_witness", algebra.backend, matrix=result.witness)
        )
    return _emit(args, report, [f"Algebra: {algebra!r}", f"Antisymmetric: {result.antisymmetric}"])


def cmd_hereditary(args):
    """Check antisymmetry of every subquotient over the invariant lattice."""
    algebra, inputs = _load_algebra(args)
    backend = algebra.backend
    report = _new_report(args, "hereditary", backend, inputs, algebra)
    lattice = invariant_lattice(algebra, budget=_budget(args), seed=_seed(args))
    verdict = is_hereditarily_antisymmetric(algebra, lattice)
    report.verdicts = {
        "hereditarily_antisymmetric": verdict.status,
        "lattice_size": len(lattice),
        "lattice_complete": lattice.complete,
    }
    report.certificates.append(reports.certificate("lattice", backend, subspaces=lattice.subspaces))
    if verdict.status == NO:
        report.detail = reports.NEGATIVE
        ce = verdict.counterexample
        report.certificates.append(
            reports.certificate(
                "hereditary_counterexample", backend, e1=ce.e1, e2=ce.e2, witness=ce.compressed_witness
            )
        )
    elif verdict.status == UNKNOWN:
        report.detail = reports.UNKNOWN
    lines = [
        f"Algebra: {algebra!r}",
        f"Invariant subspaces: {len(lattice)} ({'complete' if lattice.complete else 'discovered'})",
        f"Hereditarily antisymmetric: {verdict.status}",
    ]
    return _emit(args, report, lines)


def cmd_triangularize(args):
    """Upper triangularize, or report a full subquotient."""
    algebra, inputs = _load_algebra(args)
    backend = algebra.backend
    report = _new_report(args, "triangularize", backend, inputs, algebra)
    lattice = invariant_lattice(algebra).subspaces if algebra.provenance is not None else None
    result = upper_triangularize(algebra, lattice, seed=_seed(args), budget=_budget(args))
    report.verdicts = {"status": result.status}
    lines = [f"Algebra: {algebra!r}", f"Triangularization: {result.status}"]
    if result.status == BASIS:
        report.verdicts["normalized"] = result.normalized
        report.certificates.append(
            reports.certificate("triangular_basis", backend, vectors=result.vectors)
        )
    elif result.status == OBSTRUCTION:
        report.detail = reports.NEGATIVE
        spec = result.obstruction
        report.verdicts["obstruction_dimension"] = spec.dim
        report.verdicts["compression_dimension"] = result.compressed.dim
        report.certificates.append(reports.certificate("obstruction", backend, e1=spec.e1, e2=spec.e2))
        lines.append(
            f"Full subquotient of dimension {spec.dim} "
            f"(compression dimension {result.compressed.dim})"
        )
    else:
        report.detail = reports.UNKNOWN
    return _emit(args, report, lines)


def cmd_jordanesque(args):
    """Construct a block ordered basis in which every element is Jordanesque."""
    algebra, inputs = _load_algebra(args)
    backend = algebra.backend
    report = _new_report(args, "jordanesque", backend, inputs, algebra)
    try:
        basis = jordanesque_basis(algebra, seed=_seed(args), budget=_budget(args))
    except JordanesqueConstructionError as e:
        report.detail = reports.NEGATIVE
        report.verdicts = {"constructed": False, "failure": str(e), "step": e.step}
        return _emit(args, report, [f"Algebra: {algebra!r}", f"No Jordanesque basis: {e}"])
    report.verdicts = {
        "constructed": True,
        "block_sizes": list(basis.block_sizes),
        "normalized": basis.normalized,
    }
    report.certificates.append(reports.certificate("jordanesque_basis", backend, basis=basis))
    lines = [f"Algebra: {algebra!r}", f"Jordanesque basis with blocks {basis.block_sizes}"]
    return _emit(args, report, lines)


def cmd_idempotent(args):
    """Idempotent polynomial in a Jordanesque matrix for one diagonal value."""
    document = read_document(args.input)
    backend = _backend(args, document)
    matrix = decode_matrix(document["matrix"], backend, "matrix")
    value = decode_scalar(args.value, backend, "value")
    if args.basis:
        basis = block_basis_from_document(read_document(args.basis), backend)
    else:
        generated = close_algebra([matrix], True, backend)
        basis = jordanesque_basis(generated, seed=_seed(args), budget=_budget(args))
    projection = spectral_idempotent_poly(matrix, basis, value)
    inputs = {args.input or "-": reports.digest_text(dumps(document))}
    report = _new_report(args, "idempotent", backend, inputs)
    report.verdicts = {"value": args.value, "rank": backend.rank(projection)}
    report.certificates.append(
        reports.certificate(
            "idempotent",
            backend,
            matrix=matrix,
            value=encode_scalar(value, backend),
            projection=projection,
        )
    )
    return _emit(args, report, [f"Idempotent for {args.value} has rank {report.verdicts['rank']}"])


def cmd_qposet(args):
    """Quantum chains, antichain partitions, and the Mirsky / Dilworth constructions."""
    algebra, inputs = _load_algebra(args)
    backend = algebra.backend
    report = _new_report(args, f"qposet {args.analysis}", backend, inputs, algebra)
    r = power_filtration(algebra).nilpotency_index
    report.verdicts = {"nilpotency_index": r}
    report.certificates.append(reports.certificate("nilpotency", backend, index=r))
    lines = [f"Algebra: {algebra!r}", f"Nilpotency index: {r}"]

    if args.analysis in ("chains", "mirsky"):
        chain = max_quantum_chain(algebra, seed=_seed(args))
        report.verdicts["max_chain_length"] = chain.length
        report.certificates.append(reports.certificate("quantum_chain", backend, chain=chain))
        lines.append(f"Longest quantum chain: {chain.length}")
    if args.analysis in ("antichains", "mirsky"):
        partitions = (
            ("top_down", top_down_partition(algebra)),
            ("bottom_up", bottom_up_partition(algebra)),
        )
        for label, partition in partitions:
            report.verdicts[f"{label}_size"] = partition.size
            report.verdicts[f"{label}_dims"] = [p.dim for p in partition.parts]
            report.certificates.append(
                reports.certificate("antichain_partition", backend, parts=partition.parts, ordered=True)
            )
            lines.append(f"{label.replace('_', '-')} partition: {[p.dim for p in partition.parts]}")
    if args.analysis == "antichains":
        bound = antichain_width_lower_bound(algebra)
        report.verdicts["width_lower_bound"] = bound
        lines.append(f"Widest quantum antichain: at least {bound}")
    if args.analysis == "dilworth":
        try:
            chains = dilworth_chain_partition(algebra, seed=_seed(args), budget=_budget(args))
        except BudgetExhaustedError as e:
            report.detail = reports.UNKNOWN
            report.verdicts["failure"] = str(e)
            return _emit(args, report, lines)
        widest = max(power_filtration(algebra).layer_dims, default=0)
        report.verdicts["chain_count"] = len(chains)
        report.verdicts["widest_layer"] = widest
        report.certificates.append(reports.certificate("chain_partition", backend, chains=chains))
        lines.append(f"Chain partition: {len(chains)} chains (widest layer {widest})")
    return _emit(args, report, lines)


def cmd_channels(args):
    """CPTP validation, reachability algebra, transitions and trap subspaces."""
    document = read_document(args.input)
    backend = _backend(args, document)
    channels = channels_from_document(document, backend)
    inputs = {args.input or "-": reports.digest_text(dumps(document))}
    reach = reachability_algebra(channels, backend)
    algebra = reach.algebra
    report = _new_report(args, f"channels {args.action}", backend, inputs, algebra)
    bundle = {"kind": "channels", "channels": [channel_to_document(c, backend) for c in channels]}
    report.certificates.append(reports.certificate("channels", backend, channels=bundle))
    lines = [f"Channels: {len(channels)} on C^{channels[0].n}"]

    if args.action == "validate":
        report.verdicts = {"cptp_residuals": [c.cptp_residual for c in channels]}
        lines.append(f"Largest CPTP residual: {max(c.cptp_residual for c in channels):.3e}")
    elif args.action == "reach":
        report.verdicts = {"dimension": algebra.dim, "full": algebra.is_full()}
        lines.append(f"Reachability algebra: {algebra!r}")
    elif args.action == "transition":
        v = _parse_vector(args.v, backend, "v")
        w = _parse_vector(args.w, backend, "w")
        witness = transition_witness(reach, v, w)
        report.verdicts = {"can_transition": witness is not None}
        if witness is not None:
            report.certificates.append(reports.certificate("transition", backend, v=v, w=w, element=witness))
        else:
            report.detail = reports.NEGATIVE
            report.certificates.append(reports.certificate("no_transition", backend, v=v, w=w))
        lines.append(f"Transition possible: {witness is not None}")
    else:
        lattice = trap_subspaces(reach, budget=_budget(args), seed=_seed(args))
        report.verdicts = {"trap_count": len(lattice), "complete": lattice.complete}
        report.certificates.append(reports.certificate("lattice", backend, subspaces=lattice.subspaces))
        if not lattice.complete:
            report.detail = reports.UNKNOWN
        lines.append(f"Trap subspaces: {[s.dim for s in lattice.subspaces]}")
    return _emit(args, report, lines)


def cmd_verify(args):
    """Re-check every certificate in a report."""
    document = read_document(args.input)
    backend = get_backend(args.backend) if args.backend else None
    result = reports.verify_report(document, backend)
    print(f"Checked {result.checked} certificates")
    for index, kind, message in result.failures:
        print(f"  certificate {index} ({kind}): {message}")
    print("Report verified" if result.ok else "Report FAILED verification")
    return 0 if result.ok else 1


def _add_input(parser):
    parser.add_argument("input", nargs="?", default="-", help="Document file (default: stdin)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Finite-dimensional operator algebra structure toolkit",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__,
    )

    parser.add_argument("-v", "--verbose", action="store_true", help="Enable verbose logging")
    parser.add_argument("--backend", choices=["exact", "numeric"], default=None, help="Scalar field")
    parser.add_argument("--seed", type=int, default=None, help="Seed for randomized searches")
    parser.add_argument("--budget", type=int, default=None, help="Invariant-subspace search budget")
    parser.add_argument("--eps-abs", type=float, default=None, help="Numeric absolute tolerance")
    parser.add_argument("--eps-rel", type=float, default=None, help="Numeric relative tolerance")
    parser.add_argument("--rank-threshold", type=float, default=None, help="Numeric rank cutoff")
    parser.add_argument("--json", action="store_true", help="Print the machine-readable report")
    parser.add_argument("--report", type=str, default=None, help="Also write the report to this file")

    subparsers = parser.add_subparsers(dest="command", help="Commands")

    # Fixture command
    fixture_parser = subparsers.add_parser("fixture", help="Print a bundled fixture document")
    fixture_parser.add_argument("name", nargs="?", help="Fixture name (ex6-7, tn-4, ...)")
    fixture_parser.add_argument("--list", action="store_true", help="List fixture names")
    fixture_parser.add_argument("-o", "--output", default=None, help="Output file (default: stdout)")

    # Family command
    family_parser = subparsers.add_parser("family", help="Build a family algebra")
    family_parser.add_argument("family", choices=["tn", "dv", "jv", "preorder"])
    family_parser.add_argument("--n", type=int, default=3, help="Size (tn, random dv/preorder bases)")
    family_parser.add_argument("--vectors", default=None, help="Document with a 'vectors' list")
    family_parser.add_argument("--basis", default=None, help="Block basis document (jv)")
    family_parser.add_argument("--blocks", default="2,2", help="Random jv block sizes, e.g. 2,1")
    family_parser.add_argument("--pairs", default="", help="Preorder pairs i<j, comma separated")
    family_parser.add_argument("-o", "--output", default=None, help="Output file (default: stdout)")

    # Close command
    close_parser = subparsers.add_parser("close", help="Close generators into an algebra")
    _add_input(close_parser)
    close_parser.add_argument("--unital", action="store_true", help="Include the identity")
    close_parser.add_argument("-o", "--output", default=None, help="Output file (default: stdout)")

    # Analysis commands
    for name, help_text in (
        ("antisym", "Decide antisymmetry"),
        ("hereditary", "Decide hereditary antisymmetry"),
        ("triangularize", "Upper triangularize or find a full subquotient"),
        ("jordanesque", "Construct a Jordanesque block basis"),
    ):
        _add_input(subparsers.add_parser(name, help=help_text))

    idempotent_parser = subparsers.add_parser("idempotent", help="Idempotent polynomial of a matrix")
    _add_input(idempotent_parser)
    idempotent_parser.add_argument("--value", required=True, help="Diagonal value, e.g. 2 or 1/2+1 i")
    idempotent_parser.add_argument("--basis", default=None, help="Block basis document")

    qposet_parser = subparsers.add_parser("qposet", help="Quantum chains and antichains")
    qposet_parser.add_argument("analysis", choices=["chains", "antichains", "mirsky", "dilworth"])
    _add_input(qposet_parser)

    channels_parser = subparsers.add_parser("channels", help="Quantum channel reachability")
    channels_parser.add_argument("action", choices=["validate", "reach", "transition", "traps"])
    _add_input(channels_parser)
    channels_parser.add_argument("--v", default=None, help="Start vector, comma separated")
    channels_parser.add_argument("--w", default=None, help="Target vector, comma separated")

    verify_parser = subparsers.add_parser("verify", help="Re-check a report's certificates")
    _add_input(verify_parser)

    return parser


COMMANDS = {
    "fixture": cmd_fixture,
    "family": cmd_family,
    "close": cmd_close,
    "antisym": cmd_antisym,
    "hereditary": cmd_hereditary,
    "triangularize": cmd_triangularize,
    "jordanesque": cmd_jordanesque,
    "idempotent": cmd_idempotent,
    "qposet": cmd_qposet,
    "channels": cmd_channels,
    "verify": cmd_verify,
}


def main(argv=None):
    """Main CLI entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.verbose)

    handler = COMMANDS.get(args.command)
    if handler is None:
        parser.print_help()
        return 0
    if args.command == "channels" and args.action == "transition" and not (args.v and args.w):
        print("Error: transition needs --v and --w", file=sys.stderr)
        return 2

    args.started = time.perf_counter()
    try:
        code = handler(args)
    except OpalgsError as e:
        print(f"Error: {e}", file=sys.stderr)
        return 2
    except (KeyError, ValueError) as e:
        print(f"Error: malformed input ({e})", file=sys.stderr)
        return 2
    logger.debug("%s finished in %.1f ms", args.command, (time.perf_counter() - args.started) * 1000)
    return code


if __name__ == "__main__":
    sys.exit(main())
