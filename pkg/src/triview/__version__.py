from . import __version__, __project__


def version_line() -> str:
    return f"{__project__} : {__version__}"


if __name__ == "__main__":
    print(version_line())
