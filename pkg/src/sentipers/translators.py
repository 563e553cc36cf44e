"""Translation/synonym backends used by the augmentation methods.

Two backends ship:

``DictTranslator``
    Deterministic, offline. Reads a UTF-8 table of ``word<TAB>t1,t2,...``
    lines. Lines before any section header, or under ``[synonyms]``, give
    synonym lists. Lines under a ``[src>dst]`` header (e.g. ``[fa>en]``)
    give word translations for that direction; the first listed target is
    used. Words missing from a table pass through unchanged.

``HttpTranslator``
    A small JSON-over-HTTP client. ``POST {url}/translate`` with
    ``{"q", "source", "target"}`` answers ``{"translatedText"}``;
    ``POST {url}/synonyms`` with ``{"word", "source"}`` answers
    ``{"synonyms": [...]}``. The endpoint and key come from
    ``TRANSLATOR_URL`` / ``TRANSLATOR_KEY`` unless passed explicitly.
"""

from __future__ import annotations

import json
import os
import threading
import time
import urllib.error
import urllib.request

from .errors import ConfigError, DataError


class TranslatorError(RuntimeError):
    pass


class Translator:
    """Interface: ``translate(text, src, dst)`` and ``synonyms(word, src)``."""

    deterministic = False

    def translate(self, text: str, src: str, dst: str) -> str:
        raise NotImplementedError

    def synonyms(self, word: str, src: str) -> list[str]:
        raise NotImplementedError


class DictTranslator(Translator):
    deterministic = True

    def __init__(self, synonyms=None, translations=None):
        self.synonym_table = {k: list(v) for k, v in (synonyms or {}).items()}
        self.translation_tables = {
            tuple(pair): dict(table) for pair, table in (translations or {}).items()
        }

    @classmethod
    def load(cls, path) -> "DictTranslator":
        synonyms: dict[str, list[str]] = {}
        translations: dict[tuple[str, str], dict[str, str]] = {}
        section = None
        with open(os.fspath(path), encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\r\n")
                if not line.strip() or line.startswith("#"):
                    continue
                stripped = line.strip()
                if stripped.startswith("[") and stripped.endswith("]"):
                    name = stripped[1:-1].strip()
                    if name == "synonyms":
                        section = None
                    elif ">" in name:
                        src, dst = (p.strip() for p in name.split(">", 1))
                        section = (src, dst)
                        translations.setdefault(section, {})
                    else:
                        raise DataError(f"{path}:{lineno}: unknown section {stripped!r}")
                    continue
                word, tab, rest = line.partition("\t")
                if not tab or not word.strip():
                    raise DataError(f"{path}:{lineno}: expected 'word<TAB>syn1,syn2,...'")
                targets = [t.strip() for t in rest.split(",") if t.strip()]
                if section is None:
                    synonyms[word.strip()] = targets
                elif targets:
                    translations[section][word.strip()] = targets[0]
        return cls(synonyms, translations)

    def translate(self, text, src, dst):
        table = self.translation_tables.get((src, dst), {})
        return " ".join(table.get(w, w) for w in text.split())

    def synonyms(self, word, src):
        return list(self.synonym_table.get(word, []))


class HttpTranslator(Translator):
    """REST client with a minimum interval between requests (rate cap)."""

    def __init__(self, url=None, key=None, max_requests_per_second: float = 5.0, timeout: float = 10.0):
        self.url = (url or os.environ.get("TRANSLATOR_URL") or "").rstrip("/")
        if not self.url:
            raise ConfigError("http translator needs TRANSLATOR_URL or an explicit url")
        self.key = key if key is not None else os.environ.get("TRANSLATOR_KEY")
        if max_requests_per_second <= 0:
            raise ConfigError("max_requests_per_second must be positive")
        self.min_interval = 1.0 / max_requests_per_second
        self.timeout = timeout
        self._lock = threading.Lock()
        self._last = 0.0

    def _wait_turn(self):
        with self._lock:
            now = time.monotonic()
            delay = self._last + self.min_interval - now
            if delay > 0:
                time.sleep(delay)
            self._last = time.monotonic()

    def _post(self, route: str, payload: dict) -> dict:
        self._wait_turn()
        headers = {"Content-Type": "application/json"}
        if self.key:
            headers["Authorization"] = f"Bearer {self.key}"
        req = urllib.request.Request(
            f"{self.url}/{route}", data=json.dumps(payload).encode("utf-8"), headers=headers, method="POST"
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                return json.loads(resp.read().decode("utf-8"))
        except (urllib.error.URLError, OSError, ValueError) as exc:
            raise TranslatorError(f"{route} request failed: {exc}") from exc

    def translate(self, text, src, dst):
        body = self._post("translate", {"q": text, "source": src, "target": dst})
        if "translatedText" not in body:
            raise TranslatorError("response missing 'translatedText'")
        return str(body["translatedText"])

    def synonyms(self, word, src):
        body = self._post("synonyms", {"word": word, "source": src})
        return [str(w) for w in body.get("synonyms", [])]


def make_translator(backend: str, table=None, **kwargs) -> Translator:
    if backend == "dict":
        if table is None:
            raise ConfigError("dict backend needs --table")
        return DictTranslator.load(table)
    if backend == "http":
        return HttpTranslator(**kwargs)
    raise ConfigError(f"unknown translator backend {backend!r}")
