"""Shipped scenario fixtures for the classic interleavings."""

from importlib import resources


def shipped_names():
    return sorted(
        r.name[:-4]
        for r in resources.files(__name__).iterdir()
        if r.name.endswith(".scn")
    )


def load(name: str) -> str:
    return resources.files(__name__).joinpath(f"{name}.scn").read_text()
