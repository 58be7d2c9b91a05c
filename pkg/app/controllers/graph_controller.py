"""
Graph Controller - Business logic for graph generation
"""

from app.controllers.common import EXIT_OK, CommandResult, guarded
from app.models.schemas import RunConfig
from app.services.export_service import render_json
from app.services.generator_service import generate
from app.services.graph_service import graph_document, save_graph


class GraphController:
    """Controller for graph families"""

    def run_generate(self, cfg: RunConfig) -> CommandResult:
        def body() -> CommandResult:
            graph = generate(
                cfg.family,
                cfg.params,
                seed=cfg.seed,
                random_weights=cfg.random_weights,
                random_measure=cfg.random_measure,
            )
            summary = {
                "family": cfg.family,
                "vertices": len(graph),
                "edges": len(graph.edges),
                "graph_sha256": graph.fingerprint,
            }
            if cfg.output:
                save_graph(graph, cfg.output)
                return CommandResult(EXIT_OK, summary)
            return CommandResult(EXIT_OK, summary, text=render_json(graph_document(graph).model_dump()))

        return guarded("generate", body)
