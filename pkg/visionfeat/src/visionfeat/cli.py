"""Command-line entry point: batch extraction of a directory of images."""

from __future__ import annotations

import sys

import click

from .config import load_config
from .errors import VisionfeatError
from .extract import batch_extract


@click.group()
def cli():
    """Offline image feature extraction into bundle files."""


@cli.command("extract")
@click.option("--in", "in_dir", required=True,
              type=click.Path(exists=True, file_okay=False),
              help="Directory of input images.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False),
              help="Directory for bundle files and the manifest fragment.")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="TOML or JSON extractor configuration.")
def cmd_extract(in_dir, out_dir, config_path):
    """Extract every image in a directory into bundle files."""
    report = batch_extract(in_dir, out_dir, load_config(config_path))
    for path, reason in report.failures:
        click.echo(f"failed: {path}: {reason}", err=True)
    click.echo(f"wrote {len(report.written)} bundle(s), "
               f"{len(report.failures)} failure(s), "
               f"manifest: {report.manifest_path}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return 1
    except VisionfeatError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
