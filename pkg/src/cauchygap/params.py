from dataclasses import dataclass

from .errors import DomainError


@dataclass(frozen=True)
class EnsembleParams:
    """Matrix size ``N`` and charge ``a`` of the weight (1+x^2)^(-N-a)."""

    N: int
    a: float = 0.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise DomainError(f"N must be a positive integer, got {self.N}")
        if not self.a >= 0:
            raise DomainError(f"a must be non-negative, got {self.a}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "a", float(self.a))

    @property
    def exponent(self) -> float:
        return self.N + self.a

    @property
    def kappa(self) -> float:
        """sqrt(N(N+2a)), the common value of the rescaled off-diagonal coefficients."""
        return (self.N * (self.N + 2 * self.a)) ** 0.5
