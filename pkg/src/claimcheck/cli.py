"""Command-line entry points.

Exit codes: 0 success, 1 usage error, 2 provider failure, 3 corpus error.
Mock mode wires deterministic providers from local transcript/index files so
every verb runs offline.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .config import EngineConfig, load_config
from .ergraph import export_dot, graph_from_dict
from .errors import (
    ClaimcheckError,
    EmptyCorpusError,
    GraphBuildExhaustedError,
    ManifestNotFoundError,
    ProviderUnavailableError,
)
from .graphmatch import graph_match, report_from_dict
from .harness import evaluate, filter_corpus, load_corpus
from .imagematch import image_match, load_bundle
from .providers import (
    HttpLlm,
    HttpSearchClient,
    MockLlm,
    MockSearchClient,
    build_graph,
)
from .retrieval import RetrievalConfig, gather_cross_evidence, retrieve_visual_evidence
from .textembed import HttpEmbedder, StubEmbedder
from .verify import render_markdown, verify_claim

EXIT_USAGE = 1
EXIT_PROVIDER = 2
EXIT_CORPUS = 3


def _load_graph_file(path: str):
    return graph_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


class _Env:
    def __init__(self, cfg: EngineConfig, providers: str,
                 mock_llm: str | None, mock_index: str | None, embed_dim: int):
        self.cfg = cfg
        self.providers = providers
        self._mock_llm = mock_llm
        self._mock_index = mock_index
        self._embed_dim = embed_dim

    def llm(self):
        if self.providers == "mock":
            if not self._mock_llm:
                raise click.UsageError("--providers mock requires --mock-llm FILE")
            replies = json.loads(Path(self._mock_llm).read_text(encoding="utf-8"))
            return MockLlm(transcript=replies)
        if not self.cfg.llm_url:
            raise ProviderUnavailableError("no LLM endpoint configured (ENGINE_LLM_URL)")
        return HttpLlm(self.cfg.llm_url, self.cfg.llm_model)

    def search(self):
        if self.providers == "mock":
            if not self._mock_index:
                raise click.UsageError("--providers mock requires --mock-index FILE")
            return MockSearchClient.from_file(self._mock_index)
        if not self.cfg.search_url:
            raise ProviderUnavailableError("no search endpoint configured (ENGINE_SEARCH_URL)")
        return HttpSearchClient(self.cfg.search_url, self.cfg.search_key)

    def embedder(self):
        if self.providers == "mock" or not self.cfg.embed_url:
            return StubEmbedder(dim=self._embed_dim)
        return HttpEmbedder(self.cfg.embed_url)


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="TOML or JSON config file.")
@click.option("--providers", type=click.Choice(["live", "mock"]), default="mock",
              show_default=True)
@click.option("--mock-llm", type=click.Path(exists=True), default=None,
              help="JSON array of scripted LLM replies (mock mode).")
@click.option("--mock-index", type=click.Path(exists=True), default=None,
              help="JSON search index file (mock mode).")
@click.option("--embed-dim", type=int, default=64, show_default=True,
              help="Stub embedder dimensionality.")
@click.pass_context
def cli(ctx, config_path, providers, mock_llm, mock_index, embed_dim):
    """Zero-shot evidence-guided verification of image-text claims."""
    cfg = load_config(config_path)
    ctx.obj = _Env(cfg, providers, mock_llm, mock_index, embed_dim)


@cli.command("build-graph")
@click.option("--text", required=True, help="Claim text (or @file to read a file).")
@click.pass_obj
def cmd_build_graph(env: _Env, text: str):
    """Build and print the entity-relationship graph of a text."""
    if text.startswith("@"):
        text = Path(text[1:]).read_text(encoding="utf-8")
    graph = build_graph(text, env.llm(), max_retries=env.cfg.max_retries)
    click.echo(graph.to_json(indent=2))


@cli.command("match-graphs")
@click.argument("claim_file", type=click.Path(exists=True))
@click.argument("evidence_files", type=click.Path(exists=True), nargs=-1, required=True)
@click.pass_obj
def cmd_match_graphs(env: _Env, claim_file, evidence_files):
    """Match a claim graph JSON file against evidence graph files."""
    claim = _load_graph_file(claim_file)
    evidence = [_load_graph_file(f) for f in evidence_files]
    report = graph_match(claim, evidence, env.embedder(), env.cfg.match)
    click.echo(json.dumps(report.to_dict(), indent=2, sort_keys=True))


@cli.command("match-images")
@click.argument("claim_bundle", type=click.Path(exists=True))
@click.argument("evidence_bundle", type=click.Path(exists=True))
@click.pass_obj
def cmd_match_images(env: _Env, claim_bundle, evidence_bundle):
    """Compare two visual feature bundle files."""
    result = image_match(load_bundle(claim_bundle), load_bundle(evidence_bundle),
                         threshold=env.cfg.image_threshold)
    click.echo(json.dumps(result.to_dict(), indent=2, sort_keys=True))


@cli.command("retrieve")
@click.option("--text", required=True)
@click.option("--bundle", "bundle_path", required=True, type=click.Path(exists=True))
@click.option("--trace-out", type=click.Path(), default=None)
@click.pass_obj
def cmd_retrieve(env: _Env, text, bundle_path, trace_out):
    """Run the feedback retrieval loop for visual cross evidence."""
    rcfg = RetrievalConfig(max_tries=env.cfg.max_tries, match_cfg=env.cfg.match,
                           image_threshold=env.cfg.image_threshold,
                           allowlist=env.cfg.allowlist)
    trace = retrieve_visual_evidence(text, load_bundle(bundle_path),
                                     env.llm(), env.search(), env.embedder(), rcfg)
    payload = trace.to_json(indent=2)
    if trace_out:
        Path(trace_out).write_text(payload + "\n", encoding="utf-8")
    click.echo(payload)


@cli.command("verify")
@click.option("--text", required=True)
@click.option("--bundle", "bundle_path", required=True, type=click.Path(exists=True))
@click.option("--evidence-dir", type=click.Path(exists=True), default=None,
              help="Dataset-mode evidence directory (text.jsonl / visual.jsonl).")
@click.option("--markdown", is_flag=True, help="Render a human-readable report.")
@click.pass_obj
def cmd_verify(env: _Env, text, bundle_path, evidence_dir, markdown):
    """Verify one claim and print the verdict."""
    bundle = load_bundle(bundle_path)
    llm, embedder = env.llm(), env.embedder()
    if evidence_dir:
        text_ev, visual_ev = gather_cross_evidence(text, bundle, evidence_dir=evidence_dir)
    else:
        rcfg = RetrievalConfig(max_tries=env.cfg.max_tries, match_cfg=env.cfg.match,
                               image_threshold=env.cfg.image_threshold,
                               allowlist=env.cfg.allowlist)
        text_ev, visual_ev = gather_cross_evidence(text, bundle, llm, env.search(),
                                                   embedder, rcfg)
    verdict = verify_claim(text, bundle, visual_ev, text_ev, llm, embedder,
                           env.cfg.match, env.cfg.image_threshold)
    if markdown:
        click.echo(render_markdown(verdict))
    else:
        click.echo(verdict.to_json(indent=2))


@cli.command("eval")
@click.argument("manifest", type=click.Path())
@click.option("--out-dir", type=click.Path(), default=None,
              help="Directory for per-claim verdict files.")
@click.option("--jobs", type=int, default=1, show_default=True)
@click.pass_obj
def cmd_eval(env: _Env, manifest, out_dir, jobs):
    """Batch-evaluate a labeled JSON-lines corpus manifest."""
    report = load_corpus(manifest)
    summary = evaluate(report.records, env.llm(), env.embedder(), env.cfg.match,
                       env.cfg.image_threshold, out_dir=out_dir, jobs=jobs)
    click.echo(json.dumps(summary.to_dict(), indent=2, sort_keys=True))


@cli.command("filter")
@click.argument("manifest", type=click.Path())
@click.option("--mode", type=click.Choice(["remiss", "newsclippings"]),
              default="remiss", show_default=True)
@click.pass_obj
def cmd_filter(env: _Env, manifest, mode):
    """Apply the corpus filter pipeline and report kept/rejected records."""
    report = load_corpus(manifest)
    kept, rejected = filter_corpus(report.records, mode=mode, embedder=env.embedder())
    click.echo(json.dumps({
        "kept": [r.claim_id for r in kept],
        "rejected": [
            {"claim_id": rej.record.claim_id, "stage": rej.stage, "reason": rej.reason}
            for rej in rejected
        ],
        "load_skipped": [{"line": n, "reason": reason} for n, reason in report.skipped],
    }, indent=2, sort_keys=True))


@cli.command("export-dot")
@click.argument("graph_file", type=click.Path(exists=True))
@click.option("--report", "report_file", type=click.Path(exists=True), default=None,
              help="Match report JSON used to color matched/conflicted elements.")
@click.pass_obj
def cmd_export_dot(env: _Env, graph_file, report_file):
    """Render a graph JSON file as Graphviz DOT."""
    graph = _load_graph_file(graph_file)
    annotations = None
    if report_file:
        annotations = report_from_dict(
            json.loads(Path(report_file).read_text(encoding="utf-8")))
    click.echo(export_dot(graph, annotations), nl=False)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except click.exceptions.Abort:
        return EXIT_USAGE
    except (ProviderUnavailableError, GraphBuildExhaustedError) as exc:
        click.echo(f"provider failure: {exc}", err=True)
        return EXIT_PROVIDER
    except (ManifestNotFoundError, EmptyCorpusError) as exc:
        click.echo(f"corpus error: {exc}", err=True)
        return EXIT_CORPUS
    except ClaimcheckError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
