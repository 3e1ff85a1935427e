from pydantic import BaseModel, Field, model_validator


class ClassicalStrategy(BaseModel):
    """Deterministic classical strategy.

    Alice and Bob each forward a message (one bit by default) that depends on
    their preparation index; Charlie outputs c = charlie_out[b_A][b_B][z].
    """

    alice_msg: list[int] = Field(description="Message b_A sent for each x")
    bob_msg: list[int] = Field(description="Message b_B sent for each y")
    charlie_out: list[list[list[int]]] = Field(description="1-based outcome indexed [b_A][b_B][z]")

    @model_validator(mode="after")
    def _check_tables(self) -> "ClassicalStrategy":
        levels_a = len(self.charlie_out)
        if levels_a == 0 or any(len(row) == 0 for row in self.charlie_out):
            raise ValueError("charlie_out must be a non-empty table")
        levels_b = len(self.charlie_out[0])
        n_z = len(self.charlie_out[0][0])
        for row in self.charlie_out:
            if len(row) != levels_b or any(len(cell) != n_z for cell in row):
                raise ValueError("charlie_out must be a rectangular [b_A][b_B][z] table")
        if any(not 0 <= m < levels_a for m in self.alice_msg):
            raise ValueError(f"alice_msg values must lie in 0..{levels_a - 1}")
        if any(not 0 <= m < levels_b for m in self.bob_msg):
            raise ValueError(f"bob_msg values must lie in 0..{levels_b - 1}")
        if any(c < 1 for row in self.charlie_out for cell in row for c in cell):
            raise ValueError("charlie_out outcomes are 1-based")
        return self

    @property
    def n_settings(self) -> int:
        return len(self.charlie_out[0][0])


class BoundResult(BaseModel):
    """Exact classical maximum of a witness and the strategy attaining it."""

    witness: str
    max_value: float
    argmax: ClassicalStrategy
    n_enumerated: int = Field(description="Number of deterministic strategies covered by the search")
    message_levels: int = Field(default=2, description="Alphabet size of each forwarded message")
