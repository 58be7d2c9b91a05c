"""
Pydantic models for graph files, run configurations and result documents.
"""
