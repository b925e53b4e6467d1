import json
import logging
from typing import List, Optional

import click
from pydantic import ValidationError

from faircut.errors import FairCutError, InputError
from faircut.io import dumps, load_graph, load_model, load_schema, load_weights, schema_text, write_atomic
from faircut.main import FairCut
from faircut.models import (
    SCHEMAS,
    AuxCutDocument,
    CutEntry,
    DemographicsDocument,
    DistributionDocument,
    ProtectionDocument,
    RunConfig,
    SampleReport,
)
from faircut.rational import fmt
from faircut.runtime import derive_rng
from faircut.solvers.auxcut import AuxCutInstance
from faircut.solvers.demfair import DemographicSpec
from faircut.solvers.indfair import CutDistribution, ProtectionSpec, sample

EXIT_OK = 0
EXIT_INFEASIBLE = 2


def parse_sources(value: Optional[str]) -> Optional[List[int]]:
    if not value:
        return None
    try:
        return [int(part) for part in value.split(",") if part.strip()]
    except ValueError:
        raise InputError(f"--sources expects comma-separated vertex ids, got {value!r}")


def run_config(command: str, **options) -> RunConfig:
    options["sources"] = parse_sources(options.get("sources"))
    try:
        config = RunConfig(command=command, **{k: v for k, v in options.items() if v is not None})
        config.solver_config()
    except ValidationError as e:
        problems = "; ".join(f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors())
        raise InputError(f"invalid options: {problems}")
    return config


def emit(doc, out: Optional[str]) -> None:
    text = dumps(doc)
    if out:
        write_atomic(out, text)
    else:
        click.echo(text, nl=False)


def session(config: RunConfig) -> FairCut:
    logger = logging.getLogger("faircut")
    return FairCut(
        load_graph(config.graph),
        config=config.solver_config(),
        logger=logger,
        embedding=config.embedding,
        sources=config.sources,
    )


COMMON_OPTIONS = [
    click.option("--graph", required=True, type=click.Path(exists=True, dir_okay=False), help="Graph file"),
    click.option("--epsilon", default="1/4", show_default=True, help="Accuracy parameter in (0, 1)"),
    click.option("--seed", default=0, show_default=True, type=click.INT, help="Master random seed"),
    click.option("--embedding", default="build", show_default=True, help="'build' or a path to an embedding JSON"),
    click.option("--out", default=None, type=click.Path(dir_okay=False), help="Write JSON here instead of stdout"),
    click.option("--max-n", "max_n", default=None, type=click.INT, help="Override every exhaustive size bound"),
    click.option("--sources", default=None, help="Extra source vertices merged with the declared source"),
    click.option("--workers", default=1, show_default=True, type=click.INT, help="Worker threads"),
]


def common_options(fn):
    for option in reversed(COMMON_OPTIONS):
        fn = option(fn)
    return fn


@click.group()
@click.option(
    "-v",
    "--verbosity",
    help="Logging verbosity",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]),
    default="WARNING",
)
def cli(verbosity) -> None:
    logger = logging.getLogger("faircut")
    logger.setLevel(verbosity)
    if not logger.handlers:
        logger.addHandler(logging.StreamHandler())


@cli.command("sbmincc")
@common_options
@click.option("--target", required=True, type=click.INT, help="Vertices that must be protected")
@click.option("--route", default="demfair", type=click.Choice(["demfair", "indfair"]), show_default=True)
@click.option("--method", default="dp", type=click.Choice(["dp", "lp"]), show_default=True)
def sbmincc_command(route, **options) -> int:
    config = run_config("sbmincc", **options)
    emit(session(config).sbmincc(config.target, route=route, method=config.method), config.out)
    return EXIT_OK


@cli.command("demfair")
@common_options
@click.option("--groups", required=True, type=click.Path(exists=True, dir_okay=False), help="Demographics JSON")
@click.option("--method", default="dp", type=click.Choice(["dp", "lp"]), show_default=True)
def demfair_command(**options) -> int:
    config = run_config("demfair", **options)
    spec = DemographicSpec.from_document(load_model(config.groups, DemographicsDocument))
    emit(session(config).demfair(spec, method=config.method), config.out)
    return EXIT_OK


@cli.command("indfair")
@common_options
@click.option("--protection", required=True, type=click.Path(exists=True, dir_okay=False), help="Protection JSON")
@click.option("--target", default=None, type=click.INT, help="Override the protection file's target")
def indfair_command(**options) -> int:
    config = run_config("indfair", **options)
    doc = load_model(config.protection, ProtectionDocument)
    spec = ProtectionSpec.build(doc.probabilities, doc.target if config.target is None else config.target)
    emit(session(config).indfair(spec), config.out)
    return EXIT_OK


def auxcut_instance(cx: FairCut, instance: Optional[str], weights: Optional[str], budget, target) -> AuxCutInstance:
    path = instance or weights
    doc = load_weights(path) if path else AuxCutDocument()
    return AuxCutInstance.from_document(cx.graph, doc, budget, target)


@cli.command("auxcut")
@common_options
@click.option("--budget", default=None, help="Budget B (rational)")
@click.option("--target", default=None, type=click.INT, help="Vertices that must be protected")
@click.option("--weights", default=None, type=click.Path(exists=True, dir_okay=False), help="Vertex weights JSON")
@click.option("--instance", default=None, type=click.Path(exists=True, dir_okay=False), help="AuxCut instance JSON")
def auxcut_command(weights, instance, **options) -> int:
    config = run_config("auxcut", **options)
    cx = session(config)
    inst = auxcut_instance(cx, instance, weights, config.budget, config.target)
    emit(cx.auxcut(inst), config.out)
    return EXIT_OK


@cli.command("embed")
@common_options
def embed_command(**options) -> int:
    config = run_config("embed", **options)
    emit(session(config).embed(), config.out)
    return EXIT_OK


@cli.group("oracle")
def oracle_group() -> None:
    """Exact brute-force reference solvers."""


def oracle_result(doc, out: Optional[str]) -> int:
    emit(doc, out)
    return EXIT_OK if doc.feasible else EXIT_INFEASIBLE


@oracle_group.command("sbmincc")
@common_options
@click.option("--target", required=True, type=click.INT)
def oracle_sbmincc_command(**options) -> int:
    config = run_config("oracle", **options)
    return oracle_result(session(config).oracle("sbmincc", target=config.target), config.out)


@oracle_group.command("demfair")
@common_options
@click.option("--groups", required=True, type=click.Path(exists=True, dir_okay=False))
def oracle_demfair_command(**options) -> int:
    config = run_config("oracle", **options)
    spec = DemographicSpec.from_document(load_model(config.groups, DemographicsDocument))
    return oracle_result(session(config).oracle("demfair", spec=spec), config.out)


@oracle_group.command("auxcut")
@common_options
@click.option("--budget", default=None)
@click.option("--target", default=None, type=click.INT)
@click.option("--weights", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--instance", default=None, type=click.Path(exists=True, dir_okay=False))
def oracle_auxcut_command(weights, instance, **options) -> int:
    config = run_config("oracle", **options)
    cx = session(config)
    inst = auxcut_instance(cx, instance, weights, config.budget, config.target)
    return oracle_result(cx.oracle("auxcut", inst=inst), config.out)


@oracle_group.command("plp")
@common_options
@click.option("--protection", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--budget", required=True)
def oracle_plp_command(**options) -> int:
    config = run_config("oracle", **options)
    doc = load_model(config.protection, ProtectionDocument)
    spec = ProtectionSpec.build(doc.probabilities, doc.target)
    return oracle_result(session(config).oracle("plp", spec=spec, budget=config.budget), config.out)


@oracle_group.command("indfair")
@common_options
@click.option("--protection", required=True, type=click.Path(exists=True, dir_okay=False))
def oracle_indfair_command(**options) -> int:
    config = run_config("oracle", **options)
    doc = load_model(config.protection, ProtectionDocument)
    spec = ProtectionSpec.build(doc.probabilities, doc.target)
    return oracle_result(session(config).oracle("indfair", spec=spec), config.out)


@cli.command("sample")
@click.option("--distribution", required=True, type=click.Path(exists=True, dir_okay=False), help="Distribution JSON")
@click.option("--count", default=1, show_default=True, type=click.IntRange(min=1))
@click.option("--seed", default=0, show_default=True, type=click.INT)
@click.option("--graph", default=None, type=click.Path(exists=True, dir_okay=False), help="Re-verify cuts on this graph")
@click.option("--out", default=None, type=click.Path(dir_okay=False))
def sample_command(distribution, count, seed, graph, out) -> int:
    run_config("sample", seed=seed)
    g = load_graph(graph) if graph else None
    dist = CutDistribution.from_document(load_model(distribution, DistributionDocument), g)
    rng = derive_rng(seed, "sample")
    draws = [sample(dist, rng) for _ in range(count)]
    entries = [
        CutEntry(cut_edges=sorted(cut.cut_edges), cost=fmt(cut.cost), protected=sorted(cut.protected)) for cut in draws
    ]
    emit(SampleReport(seed=seed, draws=entries), out)
    return EXIT_OK


@cli.command("schema")
@click.argument("name", type=click.Choice(sorted(SCHEMAS)))
@click.option("--generate", is_flag=True, help="Regenerate from the models instead of printing the shipped schema")
@click.option("--out", default=None, type=click.Path(dir_okay=False), help="Write to this file instead of stdout")
def schema_command(name, generate, out) -> int:
    text = schema_text(name) if generate else json.dumps(load_schema(name), indent=2, sort_keys=True) + "\n"
    if out:
        write_atomic(out, text)
    else:
        click.echo(text, nl=False)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    try:
        rv = cli.main(args=argv, prog_name="faircut", standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return 1
    except click.Abort:
        return 1
    except FairCutError as e:
        click.echo(f"faircut: {e}", err=True)
        return e.exit_code
    return rv if isinstance(rv, int) else EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
