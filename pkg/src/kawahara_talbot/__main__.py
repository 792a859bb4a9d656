"""Entry point for the kawahara-talbot CLI."""

import sys

try:
    from kawahara_talbot.main import main
except ImportError:
    from src.kawahara_talbot.main import main

if __name__ == "__main__":
    sys.exit(main())
