from datetime import datetime, timezone

from sqlalchemy import Column, DateTime, Float, Integer, String, Text

from .db import Base


class Run(Base):
    __tablename__ = "runs"

    id = Column(String, primary_key=True, index=True)
    command = Column(String, nullable=False)
    model_path = Column(String, nullable=True)
    status = Column(String, nullable=False, default="running")
    error_message = Column(Text, nullable=True)
    fidelity = Column(Float, nullable=True)
    re_tau = Column(Float, nullable=True)
    iterations = Column(Integer, nullable=True)
    stop_reason = Column(String, nullable=True)
    out_dir = Column(String, nullable=True)
    created_at = Column(DateTime(timezone=True), default=lambda: datetime.now(timezone.utc), nullable=False)
    updated_at = Column(DateTime(timezone=True), default=lambda: datetime.now(timezone.utc), nullable=False)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "command": self.command,
            "model_path": self.model_path,
            "status": self.status,
            "error_message": self.error_message,
            "fidelity": float(self.fidelity) if self.fidelity is not None else None,
            "re_tau": float(self.re_tau) if self.re_tau is not None else None,
            "iterations": self.iterations,
            "stop_reason": self.stop_reason,
            "out_dir": self.out_dir,
            "created_at": self.created_at.isoformat() if self.created_at else None,
            "updated_at": self.updated_at.isoformat() if self.updated_at else None,
        }
