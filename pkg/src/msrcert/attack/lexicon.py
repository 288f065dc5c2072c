"""Part-of-speech lexicon used to keep substitutions syntactically plausible.

File format: ``token<TAB>tag`` per line. Header lines ``#compat A B`` declare that a
word tagged ``A`` may be replaced by one tagged ``B``; other ``#`` lines are comments.
Every tag is compatible with itself.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Optional, Tuple, Union

from ..exceptions import InputFileError, ParseError


logger = logging.getLogger(__name__)

COMPAT_PREFIX = "#compat"


@dataclass(frozen=True)
class PosLexicon:
    tags: Dict[str, str]
    compatible_pairs: FrozenSet[Tuple[str, str]] = field(default_factory=frozenset)

    def __len__(self) -> int:
        return len(self.tags)

    def tag(self, token: str) -> Optional[str]:
        return self.tags.get(token)

    def compatible(self, original_tag: str, candidate_tag: str) -> bool:
        return original_tag == candidate_tag or (original_tag, candidate_tag) in self.compatible_pairs


def filter_substitution(original: str, candidate: str, lexicon: Optional[PosLexicon]) -> bool:
    """True iff both tokens are tagged and the candidate's tag may replace the original's.

    Without a lexicon every substitution is admitted.
    """
    if lexicon is None:
        return True
    original_tag = lexicon.tag(original)
    candidate_tag = lexicon.tag(candidate)
    if original_tag is None or candidate_tag is None:
        return False
    return lexicon.compatible(original_tag, candidate_tag)


def load_lexicon(path: Union[str, Path]) -> PosLexicon:
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise InputFileError(f"Lexicon file not found: {path}", path=str(path)) from None
    except UnicodeDecodeError as e:
        raise ParseError.from_decode_error(path, e) from None
    except OSError as e:
        raise InputFileError(f"Cannot read lexicon file {path}: {e}", path=str(path)) from None

    tags: Dict[str, str] = {}
    pairs = set()
    for lineno, line in enumerate(raw.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith(COMPAT_PREFIX):
            parts = stripped.split()
            if parts[0] != COMPAT_PREFIX or len(parts) != 3:
                raise ParseError("compatibility lines read '#compat TAG_A TAG_B'", path=str(path), line=lineno)
            pairs.add((parts[1], parts[2]))
            continue
        if stripped.startswith("#"):
            continue
        parts = line.rstrip("\r\n").split("\t")
        if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
            raise ParseError("expected 'token<TAB>tag'", path=str(path), line=lineno)
        token, tag = parts[0].strip(), parts[1].strip()
        if token in tags and tags[token] != tag:
            raise ParseError(f"token {token!r} tagged both {tags[token]!r} and {tag!r}", path=str(path), line=lineno)
        tags[token] = tag

    logger.info(f"Loaded {len(tags)} lexicon entries and {len(pairs)} compatibility pairs from {path}")
    return PosLexicon(tags=tags, compatible_pairs=frozenset(pairs))
