"""
Command routes: one module per CLI command.
"""

from . import critical_routes, generate_routes, solve_routes, sweep_routes, verify_routes

COMMAND_ROUTES = (solve_routes, critical_routes, sweep_routes, verify_routes, generate_routes)
