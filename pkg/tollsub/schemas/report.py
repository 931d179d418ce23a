from typing import Optional

from pydantic import BaseModel, ConfigDict, Field


class PoAReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    instance_id: str
    nash_latency: float = Field(ge=0)
    opt_latency: float = Field(gt=0)
    poa: float
    mechanism: str
    s_lower: float
    s_upper: float
    nash_gap: float = Field(ge=0)
    opt_gap: float = Field(ge=0)
    restarts: int = 0
    seed: int = 0
    # worst-case Nash values come from finitely many starts
    lower_bound: bool = True
    fully_utilized: bool = True
    certified: bool = True
    negative_cost: bool = False
    family_size: int = 1
    excluded: int = 0
    grid_poa: Optional[float] = None
    note: str = ""

    @property
    def vi_gap(self) -> float:
        return max(self.nash_gap, self.opt_gap)

    def row(self) -> dict:
        """Flat CSV row."""
        return {
            "instance": self.instance_id,
            "mechanism": self.mechanism,
            "s_lower": self.s_lower,
            "s_upper": self.s_upper,
            "nash_latency": self.nash_latency,
            "opt_latency": self.opt_latency,
            "poa": self.poa,
            "vi_gap": self.vi_gap,
            "restarts": self.restarts,
            "seed": self.seed,
            "fully_utilized": self.fully_utilized,
            "uncertified": not self.certified,
        }
