"""Built-in family corpus with the facts each member is known to satisfy."""

from __future__ import annotations

from dataclasses import dataclass

from .geom import Family


@dataclass(frozen=True)
class BuiltinFamily:
    name: str
    text: str
    nvars: int
    K0: tuple[float, ...]
    Kinf: tuple[float, ...]
    notes: str

    def family(self) -> Family:
        return Family.from_text(self.text, self.nvars, name=self.name)

    @property
    def degree(self) -> int:
        return self.family().F.degree


BUILTINS: dict[str, BuiltinFamily] = {
    b.name: b
    for b in [
        BuiltinFamily("sphere2", "x1^2 + x2^2 - t", 2, (0.0,), (),
                      "circles of radius sqrt(t); compact pencil, |K| = 2*pi for t > 0"),
        BuiltinFamily("sphere3", "x1^2 + x2^2 + x3^2 - t", 3, (0.0,), (),
                      "round spheres; compact pencil, |K| = 4*pi for t > 0"),
        BuiltinFamily("linear", "x1 - t", 2, (), (),
                      "parallel lines; Malgrange everywhere, K = |K| = 0"),
        BuiltinFamily("broughton", "x1 + x1^2*x2 - t", 2, (), (0.0,),
                      "no critical points; asymptotic critical value at 0, |K| jumps there"),
        BuiltinFamily("plane3", "x1 - t", 3, (), (),
                      "parallel planes; Gauss map constant e1"),
    ]
}


def builtin(name: str) -> Family:
    try:
        return BUILTINS[name].family()
    except KeyError:
        raise KeyError(f"unknown built-in family {name!r}; known: {', '.join(BUILTINS)}") from None


def list_builtin() -> list[BuiltinFamily]:
    return list(BUILTINS.values())
