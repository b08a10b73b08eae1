from typing import List

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class Coupling(BaseModel):
    """Dependence of AU `child` on AU `parent`, strength in [-1, 1]."""

    parent: int = Field(..., ge=0)
    child: int = Field(..., ge=0)
    strength: float = Field(..., ge=-1.0, le=1.0)


class CorrelationSpec(BaseModel):
    """
    Joint label sampler: per-AU base rates plus parent -> child couplings.

    Labels are drawn in index order. A child with a parent is drawn from a
    conditional Bernoulli whose two branches are chosen so the child's
    marginal stays at its base rate; strength 0 means independence, +1 the
    strongest feasible positive association, -1 the strongest negative one.
    """

    model_config = ConfigDict(extra="forbid")

    base_rates: List[float]
    couplings: List[Coupling] = Field(default_factory=list)
    signal: float = Field(1.5, gt=0)
    noise: float = Field(1.0, gt=0)

    @field_validator("base_rates")
    @classmethod
    def check_rates(cls, rates: List[float]) -> List[float]:
        if len(rates) < 2:
            raise ValueError("need at least two AUs")
        bad = [i for i, r in enumerate(rates) if not 0.0 < r < 1.0]
        if bad:
            raise ValueError(f"base rates must lie strictly inside (0, 1); offending AUs: {bad}")
        return rates

    @model_validator(mode="after")
    def check_couplings(self) -> "CorrelationSpec":
        seen = set()
        for c in self.couplings:
            if not c.parent < c.child < len(self.base_rates):
                raise ValueError(f"coupling {c.parent}->{c.child} must satisfy parent < child < n_aus")
            if c.child in seen:
                raise ValueError(f"AU {c.child} has more than one parent")
            seen.add(c.child)
        return self

    @property
    def n_aus(self) -> int:
        return len(self.base_rates)
