"""Timing parameters shared by every transactor."""

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.runtime.tag import Duration, Tag, parse_duration


class UntaggedPolicy(str, Enum):
    """What a receiving transactor does with a message that carries no tag."""

    FAIL = "fail"
    PHYSICAL_TIME = "physical-time"


class TransactorConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    deadline: Duration = Field(gt=0)
    max_latency: Duration = Field(default=0, ge=0)
    max_skew: Duration = Field(default=0, ge=0)
    untagged_policy: UntaggedPolicy = UntaggedPolicy.FAIL

    @field_validator("deadline", "max_latency", "max_skew", mode="before")
    @classmethod
    def _parse(cls, value):
        return parse_duration(value) if isinstance(value, str) else value

    @property
    def slack(self) -> Duration:
        """Receiver-side increment L + E."""
        return self.max_latency + self.max_skew


def safe_tag(t: Tag, deadline: Duration, max_latency: Duration, max_skew: Duration) -> Tag:
    """Earliest tag at which a message sent at ``t`` is safe to process on the receiver."""
    return t.delay(deadline + max_latency + max_skew)
