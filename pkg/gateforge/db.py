from datetime import datetime, timezone
from functools import lru_cache
from pathlib import Path

from sqlalchemy import create_engine, event
from sqlalchemy.orm import declarative_base, sessionmaker

from .settings import settings

Base = declarative_base()
SessionLocal = sessionmaker(autoflush=False, autocommit=False, future=True)


@lru_cache(maxsize=4)
def get_engine(storage_dir: str):
    storage_path = Path(storage_dir)
    storage_path.mkdir(parents=True, exist_ok=True)
    engine = create_engine(f"sqlite:///{storage_path / 'runs.sqlite'}", echo=False, future=True)
    Base.metadata.create_all(bind=engine)
    return engine


def open_session(storage_dir: str = None):
    return SessionLocal(bind=get_engine(str(storage_dir or settings.STORAGE_DIR)))


@event.listens_for(SessionLocal, "before_flush")
def update_timestamps(session, flush_context, instances):
    now = datetime.now(timezone.utc)
    for instance in session.new.union(session.dirty):
        if hasattr(instance, "updated_at"):
            instance.updated_at = now
        if hasattr(instance, "created_at") and getattr(instance, "created_at", None) is None:
            instance.created_at = now
