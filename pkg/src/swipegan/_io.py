import os
import tempfile
from pathlib import Path


def atomic_write_bytes(dest, data: bytes) -> None:
    """Write ``data`` to ``dest`` through a temp file in the same directory + rename."""
    dest = Path(dest)
    dest.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=dest.parent, prefix=f".{dest.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, dest)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(dest, text: str) -> None:
    atomic_write_bytes(dest, text.encode("utf-8"))
