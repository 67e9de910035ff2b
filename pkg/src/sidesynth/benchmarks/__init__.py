"""Registry of the bundled benchmark programs.

Each entry names a DSL file shipped next to this module, the domain it is
analysed over by default and, where published, the reference number of
path constraints and observation classes (``None`` where no figure exists).
"""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from typing import Optional

from ..constraints import DIGITS, LOWER, StringDomain
from ..dsl import Program, parse_program

__all__ = ["BenchmarkEntry", "BENCHMARKS", "SUITE", "get_benchmark", "load_program"]


@dataclass(frozen=True)
class BenchmarkEntry:
    id: str
    name: str
    filename: str
    alphabet: str = LOWER
    high_len: int = 4
    low_len: int = 4
    published_paths: Optional[int] = None
    published_classes: Optional[int] = None
    description: str = ""

    @property
    def domain(self) -> StringDomain:
        return StringDomain(self.alphabet, self.high_len, self.low_len)

    def source(self) -> str:
        return resources.files(__package__).joinpath(self.filename).read_text()

    def program(self) -> Program:
        return parse_program(self.source(), self.high_len, self.low_len)


_ENTRIES = [
    BenchmarkEntry("PCI", "passCheckInsec", "pci.ss", published_paths=5, published_classes=5,
                   description="password check with early exit"),
    BenchmarkEntry("PCS", "passCheckSec", "pcs.ss", published_paths=5, published_classes=1,
                   description="password check padded to constant cost"),
    BenchmarkEntry("SE", "stringEquals", "se.ss", published_paths=9, published_classes=9,
                   description="library-style string equality"),
    BenchmarkEntry("SI", "stringInequality", "si.ss", published_paths=2, published_classes=2,
                   description="whole-string lexicographic comparison"),
    # this transliteration has 81 feasible paths against a reference 80
    BenchmarkEntry("SCI", "stringCharInequality", "sci.ss", published_paths=80, published_classes=2,
                   description="lexicographic comparison character by character"),
    BenchmarkEntry("IO", "indexOf", "io.ss", high_len=8, low_len=1, published_paths=9, published_classes=9,
                   description="first index of a character"),
    BenchmarkEntry("CO", "compress", "co.ss", published_paths=5, published_classes=5,
                   description="longest shared prefix via begins/substring"),
    BenchmarkEntry("ED", "editDistance", "ed.ss", published_paths=2170, published_classes=22,
                   description="Wagner-Fischer edit distance"),
    BenchmarkEntry("ED3", "editDistance", "ed.ss", high_len=3, low_len=3,
                   description="edit distance at length 3, for quick runs"),
    BenchmarkEntry("PIN", "checkPIN", "pci.ss", alphabet=DIGITS, published_paths=5, published_classes=5,
                   description="the PIN checker over decimal digits"),
]

BENCHMARKS = {e.id: e for e in _ENTRIES}
#: the eight programs of the published suite, in table order
SUITE = ("PCI", "PCS", "SE", "SI", "SCI", "IO", "CO", "ED")


def get_benchmark(benchmark_id: str) -> BenchmarkEntry:
    try:
        return BENCHMARKS[benchmark_id.upper()]
    except KeyError:
        raise KeyError(f"unknown benchmark {benchmark_id!r}; "
                       f"choose from {', '.join(BENCHMARKS)}") from None


def load_program(benchmark_id: str) -> Program:
    return get_benchmark(benchmark_id).program()
