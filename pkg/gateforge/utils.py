import re
import sys
import uuid
from pathlib import Path
from typing import List, Optional

from loguru import logger

from .settings import settings


SAFE_CHARS = re.compile(r"[^\w\-\.]+", re.UNICODE)


def configure_logging(verbosity: int = 0):
    """Route loguru to stderr; each -v lowers the level one notch, each -q raises it."""
    levels = ["TRACE", "DEBUG", "INFO", "WARNING", "ERROR"]
    base = settings.LOG_LEVEL.upper()
    index = levels.index(base) if base in levels else levels.index("INFO")
    level = levels[min(max(index - verbosity, 0), len(levels) - 1)]
    logger.remove()
    logger.add(sys.stderr, level=level, format="<green>{time:HH:mm:ss}</green> | <level>{level: <7}</level> | {message}")
    return level


def ensure_output_dir(path: Optional[str] = None) -> Path:
    out = Path(path or settings.OUTPUT_DIR)
    out.mkdir(parents=True, exist_ok=True)
    return out


def safe_filename(name: str) -> str:
    name = SAFE_CHARS.sub("_", name)
    if not name:
        name = "run"
    return name[:150]


def generate_run_id() -> str:
    return uuid.uuid4().hex


def _ledger_session():
    from . import records  # noqa: F401  registers the table before create_all
    from .db import open_session

    return open_session()


def start_run(command: str, model_path: Optional[str], out_dir: Optional[str]) -> Optional[str]:
    if not settings.LEDGER_ENABLED:
        return None
    from .records import Run

    run_id = generate_run_id()
    try:
        session = _ledger_session()
        try:
            session.add(Run(id=run_id, command=command, model_path=model_path, out_dir=out_dir, status="running"))
            session.commit()
        finally:
            session.close()
    except Exception as exc:  # pragma: no cover - ledger is best effort
        logger.warning(f"Run ledger unavailable: {exc}")
        return None
    return run_id


def finish_run(run_id: Optional[str], status: str, **fields):
    if run_id is None:
        return
    from .records import Run

    try:
        session = _ledger_session()
        try:
            run = session.get(Run, run_id)
            if run is None:
                logger.error(f"Run {run_id} not found in ledger")
                return
            run.status = status
            for key, value in fields.items():
                setattr(run, key, value)
            session.commit()
        finally:
            session.close()
    except Exception as exc:  # pragma: no cover
        logger.warning(f"Failed to update run {run_id}: {exc}")


def recent_runs(limit: int = 10) -> List[dict]:
    from .records import Run

    limit = min(max(limit, 1), 20)
    session = _ledger_session()
    try:
        runs = session.query(Run).order_by(Run.created_at.desc()).limit(limit).all()
        return [r.to_dict() for r in runs]
    finally:
        session.close()
