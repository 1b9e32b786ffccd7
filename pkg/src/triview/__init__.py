from importlib.metadata import PackageNotFoundError, metadata, version

# Safe fallback when running from a source checkout that is not installed
try:
    __version__ = version("triview")
    __project__ = metadata("triview")["Name"]
except PackageNotFoundError:  # pragma: no cover - fallback
    __version__ = "unknown"
    __project__ = "TriView"
