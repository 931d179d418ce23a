import io
import logging
import sys
from pathlib import Path
from typing import Iterable, Optional, Union

import pandas as pd

from tollsub import __version__

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12g"

GRID_SUBSTITUTION_NOTE = (
    "suprema over infinite game families are replaced by finite-grid and restart "
    "lower bounds; every empirical PoA below is a lower bound"
)


def render_csv(frame: pd.DataFrame, header: Iterable[str] = ()) -> str:
    """CSV text with `# ` comment lines on top; byte-identical for identical input."""
    buf = io.StringIO()
    for line in header:
        buf.write(f"# {line}\n")
    frame.to_csv(buf, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return buf.getvalue()


def write_csv(frame: pd.DataFrame, path: Optional[Union[str, Path]], header: Iterable[str] = ()) -> None:
    """Write to `path`, or to standard output when path is None or '-'."""
    text = render_csv(frame, header)
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    logger.info("wrote %d rows to %s", len(frame), path)


def csv_header(kind: str, *details: str) -> list:
    return [f"tollsub {__version__} {kind}", GRID_SUBSTITUTION_NOTE, *details]
