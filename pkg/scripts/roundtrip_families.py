#!/usr/bin/env python3
"""
Vérification de bout en bout : génération -> résolution -> vérification pour
chaque famille de graphes, à un couplage multiple de la borne analytique.
"""

import argparse
import sys
import tempfile
from pathlib import Path

# Add the repository root to the Python path
sys.path.append(str(Path(__file__).parent.parent))

from app.core.nonlinear import NonlinearityKind, analytic_lambda_bound
from app.services.graph_service import load_graph
from main import main as cli

FAMILIES = {
    "path": ["8"],
    "cycle": ["8"],
    "complete": ["6"],
    "torus": ["5", "5"],
    "random": ["20", "0.3"],
}


def print_header():
    """Print script header."""
    print("=" * 60)
    print("🔁 Aller-retour generate / solve / verify")
    print("=" * 60)
    print()


def roundtrip(family, params, equation, factor, workdir):
    graph_path = workdir / f"{family}.json"
    result_path = workdir / f"{family}-{equation}.json"
    if cli(["generate", family, *params, "--seed", "1", "--random-weights", "--random-measure",
            "--output", str(graph_path)]) != 0:
        return "generate"
    graph = load_graph(graph_path)
    vortex = graph.vertices[len(graph) // 2]
    lam = factor * analytic_lambda_bound(NonlinearityKind(equation), 1, graph.volume)
    if cli(["solve", "--graph", str(graph_path), "--equation", equation, "--vortex", vortex,
            "--lambda", repr(lam), "--output", str(result_path)]) != 0:
        return "solve"
    if cli(["--log-level", "warning", "verify", "--graph", str(graph_path), "--result", str(result_path),
            "--output", str(workdir / "report.json")]) != 0:
        return "verify"
    return None


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--factor", type=float, default=4.0, help="Multiple of the analytic bound")
    args = parser.parse_args()

    print_header()
    failed = 0
    with tempfile.TemporaryDirectory() as tmp:
        workdir = Path(tmp)
        for family, params in FAMILIES.items():
            for equation in ("generalized", "standard"):
                stage = roundtrip(family, params, equation, args.factor, workdir)
                if stage is None:
                    print(f"✅ {family:<9} {equation}")
                else:
                    failed += 1
                    print(f"❌ {family:<9} {equation} (échec à l'étape {stage})")

    print()
    print("🎉 Toutes les familles passent" if not failed else f"⚠️  {failed} échec(s)")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
