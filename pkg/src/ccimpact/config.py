"""Pipeline configuration: INI-style key=value file with flag overrides."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .bugfix import DEFAULT_KEYWORDS, KeywordRuleset
from .errors import InvalidParameter
from .records import DEFAULT_DOC_EXTENSIONS, DEFAULT_DOC_TEST_DIR_NAMES
from .szz import SzzFilters


@dataclass
class ClassifierSettings:
    kind: str = "heuristic"  # heuristic | llm | mock
    base_url: str = ""
    model: str = ""
    credential_env: str = "CCIMPACT_API_KEY"
    temperature: float = 0.0
    top_p: float = 1.0
    prompt: str = "zero_shot"
    few_shot_k: int = 4
    concurrency: int = 4
    mock_verdicts: str = ""
    strict_outdated: bool = False
    include_uncategorized_as_exposed: bool = False


@dataclass
class PipelineConfig:
    repos: list[tuple[str, str]] = field(default_factory=list)  # (label, path)
    windows: list[tuple[float, float]] = field(default_factory=lambda: [(0.0, 7.0), (7.0, 14.0)])
    confidence: float = 0.90
    margin: float = 0.10
    seed: int = 0
    clock: str = "author"
    ruleset: KeywordRuleset = field(default_factory=KeywordRuleset)
    exclude_merges: bool = False
    szz_filters: SzzFilters = field(default_factory=SzzFilters)
    classifier: ClassifierSettings = field(default_factory=ClassifierSettings)
    doc_test_dirs: frozenset[str] = DEFAULT_DOC_TEST_DIR_NAMES
    doc_extensions: tuple[str, ...] = DEFAULT_DOC_EXTENSIONS
    output_dir: Path = Path("out")

    def __post_init__(self):
        _check_windows(self.windows)

    def validate_for_run(self):
        if not self.repos:
            raise InvalidParameter("config names no repositories")


def _check_windows(windows):
    for lo, hi in windows:
        if not lo < hi:
            raise InvalidParameter(f"window ({lo},{hi}] must satisfy lo < hi")
    ordered = sorted(windows)
    for (_, hi1), (lo2, _) in zip(ordered, ordered[1:]):
        if lo2 < hi1:
            raise InvalidParameter("windows within a set must not overlap")


def _split_list(raw: str) -> list[str]:
    return [item.strip() for item in raw.split(",") if item.strip()]


def load_config(path) -> PipelineConfig:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise InvalidParameter(f"config file not found: {path}")
    cfg = PipelineConfig()

    if parser.has_section("repos"):
        cfg.repos = [(label, value) for label, value in parser.items("repos")]

    if parser.has_option("windows", "sets"):
        windows = []
        for item in _split_list(parser.get("windows", "sets")):
            lo, hi = item.split(":")
            windows.append((float(lo), float(hi)))
        _check_windows(windows)
        cfg.windows = windows

    if parser.has_section("sampling"):
        s = parser["sampling"]
        cfg.confidence = s.getfloat("confidence", cfg.confidence)
        cfg.margin = s.getfloat("margin", cfg.margin)
        cfg.seed = s.getint("seed", cfg.seed)

    if parser.has_section("gitcore"):
        cfg.clock = parser.get("gitcore", "clock", fallback=cfg.clock)

    if parser.has_section("bugfix"):
        s = parser["bugfix"]
        keywords = frozenset(_split_list(s.get("keywords", ""))) or DEFAULT_KEYWORDS
        cfg.ruleset = KeywordRuleset(
            keywords=keywords,
            require_word_boundary=s.getboolean("require_word_boundary", True),
            exclusions=frozenset(_split_list(s.get("exclusions", ""))),
        )
        cfg.exclude_merges = s.getboolean("exclude_merges", False)

    if parser.has_section("szz"):
        s = parser["szz"]
        cfg.szz_filters = SzzFilters(
            skip_blank=s.getboolean("skip_blank", True),
            skip_comment_lines=s.getboolean("skip_comment_lines", True),
            source_only=s.getboolean("source_only", True),
        )

    if parser.has_section("classifier"):
        s = parser["classifier"]
        cfg.classifier = ClassifierSettings(
            kind=s.get("kind", "heuristic"),
            base_url=s.get("base_url", ""),
            model=s.get("model", ""),
            credential_env=s.get("credential_env", "CCIMPACT_API_KEY"),
            temperature=s.getfloat("temperature", 0.0),
            top_p=s.getfloat("top_p", 1.0),
            prompt=s.get("prompt", "zero_shot"),
            few_shot_k=s.getint("few_shot_k", 4),
            concurrency=s.getint("concurrency", 4),
            mock_verdicts=s.get("mock_verdicts", ""),
            strict_outdated=s.getboolean("strict_outdated", False),
            include_uncategorized_as_exposed=s.getboolean(
                "include_uncategorized_as_exposed", False),
        )

    if parser.has_section("paths"):
        s = parser["paths"]
        if s.get("doc_test_dirs", ""):
            cfg.doc_test_dirs = frozenset(_split_list(s["doc_test_dirs"]))
        if s.get("doc_extensions", ""):
            cfg.doc_extensions = tuple(_split_list(s["doc_extensions"]))
        cfg.output_dir = Path(s.get("output_dir", "out"))

    return cfg


def window_label(window: tuple[float, float]) -> str:
    lo, hi = window

    def fmt(x: float) -> str:
        return str(int(x)) if x == int(x) else str(x)

    return f"{fmt(lo)}-{fmt(hi)}"
