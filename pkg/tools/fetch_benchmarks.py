#!/usr/bin/env python3
"""Download the public clustering benchmark files into ``data/benchmarks``.

Files already present are skipped unless ``--force`` is given, so the script
can be rerun after a partial failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path
from typing import Iterable

import requests
from dotenv import load_dotenv


def _ensure_project_path() -> None:
    project_root = Path(__file__).resolve().parents[1]
    if str(project_root) not in sys.path:
        sys.path.insert(0, str(project_root))


_ensure_project_path()
load_dotenv()

from amd_dbscan.config import get_config  # noqa: E402

LOGGER = logging.getLogger("fetch_benchmarks")

DEFAULT_BASE_URL = "https://cs.joensuu.fi/sipu/datasets/"
BENCHMARK_FILES = (
    "Aggregation.txt",
    "Compound.txt",
    "D31.txt",
    "flame.txt",
    "R15.txt",
    "unbalance.txt",
    "unbalance-gt.pa",
)


def parse_args(argv: Iterable[str] | None = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--base-url",
        default=os.getenv("BENCHMARK_BASE_URL", DEFAULT_BASE_URL),
        help="Directory URL the files are fetched from",
    )
    parser.add_argument(
        "--dest",
        default=None,
        help="Target directory (default: data/benchmarks)",
    )
    parser.add_argument(
        "--sleep",
        type=float,
        default=0.0,
        help="Seconds to sleep between downloads to throttle requests",
    )
    parser.add_argument(
        "--force",
        action="store_true",
        help="Download again even when the file already exists",
    )
    parser.add_argument(
        "--dry-run",
        action="store_true",
        help="List what would be downloaded without fetching anything",
    )
    parser.add_argument(
        "--verbose",
        action="store_true",
        help="Enable debug logging output",
    )
    return parser.parse_args(argv)


def configure_logging(verbose: bool) -> None:
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(message)s",
        force=True,
    )


def file_url(base_url: str, name: str) -> str:
    return base_url.rstrip("/") + "/" + name


def fetch_file(
    session: requests.Session,
    url: str,
    target: Path,
    *,
    timeout: float = 30.0,
) -> int:
    """Download ``url`` to ``target``; returns the number of bytes written."""
    response = session.get(url, timeout=timeout)
    response.raise_for_status()
    payload = response.content
    if not payload.strip():
        raise ValueError(f"{url} returned an empty body")

    target.parent.mkdir(parents=True, exist_ok=True)
    partial = target.with_name(target.name + ".part")
    partial.write_bytes(payload)
    partial.replace(target)
    return len(payload)


def fetch_benchmarks(
    *,
    base_url: str,
    dest: Path,
    names: Iterable[str] = BENCHMARK_FILES,
    sleep_seconds: float = 0.0,
    force: bool = False,
    dry_run: bool = False,
    session: requests.Session | None = None,
) -> tuple[int, int]:
    """Returns ``(downloaded, failed)`` counts."""
    http = session or requests.Session()
    downloaded = failed = 0

    for index, name in enumerate(names):
        target = dest / name
        if target.exists() and not force:
            LOGGER.debug("Skipping %s: already present", target)
            continue

        url = file_url(base_url, name)
        if dry_run:
            LOGGER.info("[dry-run] would download %s to %s", url, target)
            continue

        if index and sleep_seconds > 0:
            time.sleep(sleep_seconds)

        try:
            size = fetch_file(http, url, target)
        except (requests.RequestException, ValueError, OSError) as exc:
            LOGGER.error("Failed to download %s: %s", url, exc)
            failed += 1
            continue

        LOGGER.info("Downloaded %s (%s bytes)", target, size)
        downloaded += 1

    LOGGER.info("Fetch complete; %s downloaded, %s failed", downloaded, failed)
    return downloaded, failed


def main(argv: Iterable[str] | None = None) -> int:
    args = parse_args(argv)
    configure_logging(args.verbose)

    dest = Path(args.dest) if args.dest else Path(get_config(None).BENCHMARK_DIR)
    _, failed = fetch_benchmarks(
        base_url=args.base_url,
        dest=dest,
        sleep_seconds=max(args.sleep, 0.0),
        force=args.force,
        dry_run=args.dry_run,
    )
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
