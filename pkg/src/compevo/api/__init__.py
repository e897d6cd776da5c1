"""FastAPI service exposing validation, hypervolume and experiment jobs."""
