"""Allow ``python -m schinzel_lab``."""

from .cli import main

if __name__ == "__main__":
    raise SystemExit(main())
