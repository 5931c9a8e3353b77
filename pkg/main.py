"""Entry point for running the AMD-DBSCAN command line interface."""

import sys

from dotenv import load_dotenv

load_dotenv()

from amd_dbscan.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
