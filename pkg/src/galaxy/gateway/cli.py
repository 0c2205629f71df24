"""Command line entry points: serve, replay, eval, diagnose, export-forest."""

from __future__ import annotations

import json
from pathlib import Path

import click

from ..config import GalaxyConfig
from .evalsuite import SUITES, run_eval
from .runtime import GalaxySystem, rebuild_from_log


def _load_config(config_path: str | None, data_dir: str | None) -> GalaxyConfig:
    overrides = {}
    if data_dir:
        overrides["data_dir"] = Path(data_dir)
    return GalaxyConfig.load(config_path, **overrides)


@click.group()
def main() -> None:
    """Proactive assistant gateway."""


@main.command()
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--data-dir", default=None)
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8420, type=int)
@click.option("--scripted/--hosted", default=True,
              help="Scripted fixtures vs configured hosted model backends.")
@click.option("--static-dir", default=None, type=click.Path(),
              help="Serve a built web client from this directory at /ui.")
def serve(config_path, data_dir, host, port, scripted, static_dir) -> None:
    """Run the HTTP gateway."""
    import uvicorn

    from .app import create_app

    config = _load_config(config_path, data_dir)
    log_path = config.data_dir / "commands.jsonl"
    system = GalaxySystem(config=config, scripted=scripted, log_path=log_path,
                          run_self_check=True)
    static = Path(static_dir) if static_dir else None
    uvicorn.run(create_app(system, static_dir=static), host=host, port=port)


@main.command()
@click.argument("log_file", type=click.Path(exists=True))
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--data-dir", default=None)
@click.option("--upto", default=None, type=int,
              help="Replay only the first N commands.")
def replay(log_file, config_path, data_dir, upto) -> None:
    """Rebuild runtime state from a command log and print its digest."""
    config = _load_config(config_path, data_dir)
    system, halt = rebuild_from_log(Path(log_file), config=config, upto=upto)
    if halt is not None:
        click.echo(f"halted at offset {halt.offset}: {halt.reason}", err=True)
    click.echo(system.state_digest())


@main.command("eval")
@click.argument("suite", type=click.Choice(sorted(SUITES)))
@click.option("--off", is_flag=True,
              help="Run with the relevant subsystem disabled, as a control.")
def eval_cmd(suite, off) -> None:
    """Run a scripted evaluation suite and print its metrics."""
    kwargs = {}
    if off and suite == "preference_retention":
        kwargs["persona_enabled"] = False
    if off and suite == "leakage":
        kwargs["gate_enabled"] = False
    result = run_eval(suite, **kwargs)
    result.pop("patterns", None)
    click.echo(json.dumps(result, indent=2, default=str))


@main.command()
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--data-dir", default=None)
def diagnose(config_path, data_dir) -> None:
    """Boot a runtime, run the structural self-check, print the report."""
    config = _load_config(config_path, data_dir)
    system = GalaxySystem(config=config, scripted=True)
    report = system.self_check()
    click.echo(json.dumps(report, indent=2, default=str))


@main.command("export-forest")
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--data-dir", default=None)
@click.option("--out", default="-", help="Output file, - for stdout.")
def export_forest(config_path, data_dir, out) -> None:
    """Dump the cognition forest snapshot as JSON."""
    config = _load_config(config_path, data_dir)
    system = GalaxySystem(config=config, scripted=True)
    text = system.forest.dumps()
    if out == "-":
        click.echo(text)
    else:
        Path(out).write_text(text)
        click.echo(f"wrote {out}")


if __name__ == "__main__":
    main()
