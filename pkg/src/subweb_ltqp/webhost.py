"""A small virtual Web: manifest-backed document store, fetchers and an HTTP host.

Manifest format, one entry per line, ``#`` starts a comment::

    <iri> TAB <path relative to the manifest> TAB <format>

``format`` is ``turtle`` (or ``ttl``), ``ntriples`` (or ``nt``), or a media type
for non-RDF resources such as images.

The HTTP server exposes a stored IRI ``scheme://host/path`` at
``/scheme/host/path``, so documents keep their original IRIs without DNS.
"""
from __future__ import annotations

import logging
import threading
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Iterable, Mapping, Optional
from urllib.parse import quote, unquote, urlsplit

from .turtle import parse_turtle
from .wold import Wold, doc_iri_of
from .terms import IRI

log = logging.getLogger(__name__)

RDF_FORMATS = {"turtle": "text/turtle", "ttl": "text/turtle",
               "ntriples": "application/n-triples", "nt": "application/n-triples"}
DEREFERENCEABLE_SCHEMES = ("http", "https")


class ManifestError(ValueError):
    def __init__(self, entry: str, cause: object):
        super().__init__(f"manifest entry {entry!r}: {cause}")
        self.entry = entry
        self.cause = cause


class BindError(OSError):
    pass


@dataclass(frozen=True)
class StoredResource:
    iri: str
    body: bytes
    media: str
    graph: Optional[frozenset] = None
    prefixes: Mapping[str, str] = field(default_factory=dict)

    @property
    def is_rdf(self) -> bool:
        return self.graph is not None


class DocumentStore:
    """Immutable map from fragmentless IRIs to stored resources."""

    def __init__(self, resources: Iterable[StoredResource] = ()):
        self._by_iri: dict = {}
        for r in resources:
            if r.iri in self._by_iri:
                raise ManifestError(r.iri, "duplicate IRI")
            self._by_iri[r.iri] = r

    @classmethod
    def from_texts(cls, docs: Mapping[str, str]) -> "DocumentStore":
        """Store of Turtle documents given as ``{iri: text}``."""
        out = []
        for iri, text in docs.items():
            parsed = parse_turtle(text, base=iri)
            out.append(StoredResource(iri, text.encode("utf-8"), "text/turtle",
                                      parsed.graph, parsed.prefixes))
        return cls(out)

    def get(self, iri: str) -> Optional[StoredResource]:
        return self._by_iri.get(iri)

    def __contains__(self, iri: str) -> bool:
        return iri in self._by_iri

    def __len__(self) -> int:
        return len(self._by_iri)

    def iris(self) -> list:
        return sorted(self._by_iri)

    def rdf_iris(self) -> list:
        return [i for i in self.iris() if self._by_iri[i].is_rdf]

    def to_wold(self) -> Wold:
        """The whole store as an eagerly built web (RDF resources only)."""
        graphs = {i: self._by_iri[i].graph for i in self.rdf_iris()}
        prefixes = {i: self._by_iri[i].prefixes for i in self.rdf_iris()}
        return Wold.hosted(graphs, prefixes)


def load_manifest(path) -> DocumentStore:
    """Read a manifest and parse every RDF resource it lists."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ManifestError(str(path), exc) from None
    resources = []
    seen = set()
    for raw in lines:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        cols = [c.strip() for c in line.split("\t") if c.strip()]
        if len(cols) != 3:
            raise ManifestError(line, "expected three tab-separated columns")
        iri, rel, fmt = cols
        if not urlsplit(iri).scheme:
            raise ManifestError(line, "IRI is not absolute")
        key = doc_iri_of(IRI(iri)).value
        if key in seen:
            raise ManifestError(line, "duplicate IRI")
        seen.add(key)
        try:
            body = (path.parent / rel).read_bytes()
        except OSError as exc:
            raise ManifestError(line, exc) from None
        fmt_l = fmt.lower()
        if fmt_l in RDF_FORMATS:
            try:
                parsed = parse_turtle(body.decode("utf-8"), base=key)
            except (SyntaxError, ValueError) as exc:
                raise ManifestError(line, exc) from None
            resources.append(StoredResource(key, body, RDF_FORMATS[fmt_l], parsed.graph,
                                            parsed.prefixes))
        else:
            resources.append(StoredResource(key, body, fmt))
    return DocumentStore(resources)


def fixture_path(name: str = "usecase.manifest") -> Path:
    """Path of a bundled fixture file."""
    return Path(__file__).parent / "fixtures" / name


def load_usecase() -> DocumentStore:
    return load_manifest(fixture_path("usecase.manifest"))


# --------------------------------------------------------------------------
# fetchers

OK, NOT_FOUND, NOT_RDF, SKIPPED = "ok", "not_found", "not_rdf", "skipped"


@dataclass(frozen=True)
class FetchResult:
    status: str
    iri: str
    graph: frozenset = frozenset()
    prefixes: Mapping[str, str] = field(default_factory=dict)
    cause: str = ""

    @property
    def ok(self) -> bool:
        return self.status == OK


def is_dereferenceable(u: IRI | str) -> bool:
    value = u.value if isinstance(u, IRI) else u
    return urlsplit(value).scheme.lower() in DEREFERENCEABLE_SCHEMES


class Fetcher:
    """Dereferences IRIs. ``fetch`` takes a fragmentless IRI string."""

    def fetch(self, iri: str) -> FetchResult:
        raise NotImplementedError

    @property
    def transport_attempts(self) -> int:
        return 0


class StoreFetcher(Fetcher):
    """In-process fetcher reading straight from a store."""

    def __init__(self, store: DocumentStore):
        self.store = store
        self._attempts = 0
        self._lock = threading.Lock()

    def fetch(self, iri: str) -> FetchResult:
        if not is_dereferenceable(iri):
            return FetchResult(SKIPPED, iri)
        with self._lock:
            self._attempts += 1
        r = self.store.get(iri)
        if r is None:
            return FetchResult(NOT_FOUND, iri)
        if not r.is_rdf:
            return FetchResult(NOT_RDF, iri)
        return FetchResult(OK, iri, r.graph, r.prefixes)

    @property
    def transport_attempts(self) -> int:
        return self._attempts


class CachingFetcher(Fetcher):
    """Wraps a fetcher so each IRI reaches the transport at most once.

    Concurrent callers asking for the same IRI wait for the first request
    instead of issuing their own.
    """

    def __init__(self, inner: Fetcher):
        self.inner = inner
        self._lock = threading.Lock()
        self._results: dict = {}
        self._pending: dict = {}

    def fetch(self, iri: str) -> FetchResult:
        with self._lock:
            if iri in self._results:
                return self._results[iri]
            event = self._pending.get(iri)
            owner = event is None
            if owner:
                event = self._pending[iri] = threading.Event()
        if not owner:
            event.wait()
            return self._results[iri]
        try:
            result = self.inner.fetch(iri)
        except Exception as exc:  # transport failures become NotFound
            result = FetchResult(NOT_FOUND, iri, cause=str(exc))
        with self._lock:
            self._results[iri] = result
            del self._pending[iri]
        event.set()
        return result

    @property
    def transport_attempts(self) -> int:
        return self.inner.transport_attempts


class HttpFetcher(Fetcher):
    """Fetcher talking to :func:`serve`; every host is remapped to ``base_url``."""

    def __init__(self, base_url: str, timeout: float = 10.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._attempts = 0
        self._lock = threading.Lock()

    def url_for(self, iri: str) -> str:
        parts = urlsplit(iri)
        path = parts.path or "/"
        url = f"{self.base_url}/{parts.scheme}/{parts.netloc}{quote(path, safe='/%:@!$&()*+,;=~-._')}"
        if parts.query:
            url += "?" + parts.query
        return url

    def fetch(self, iri: str) -> FetchResult:
        if not is_dereferenceable(iri):
            return FetchResult(SKIPPED, iri)
        with self._lock:
            self._attempts += 1
        try:
            with urllib.request.urlopen(self.url_for(iri), timeout=self.timeout) as resp:
                media = resp.headers.get_content_type()
                body = resp.read()
        except urllib.error.HTTPError as exc:
            return FetchResult(NOT_FOUND, iri, cause=f"HTTP {exc.code}")
        except (urllib.error.URLError, OSError) as exc:
            log.warning("fetch of %s failed: %s", iri, exc)
            return FetchResult(NOT_FOUND, iri, cause=str(exc))
        if media not in RDF_FORMATS.values():
            return FetchResult(NOT_RDF, iri)
        try:
            parsed = parse_turtle(body.decode("utf-8"), base=iri)
        except (SyntaxError, ValueError) as exc:
            log.warning("unparseable document at %s: %s", iri, exc)
            return FetchResult(NOT_RDF, iri, cause=str(exc))
        return FetchResult(OK, iri, parsed.graph, parsed.prefixes)

    @property
    def transport_attempts(self) -> int:
        return self._attempts


# --------------------------------------------------------------------------
# server

class ServerHandle:
    def __init__(self, server: ThreadingHTTPServer, thread: threading.Thread):
        self.server = server
        self.thread = thread
        host, port = server.server_address[:2]
        self.port = port
        self.url = f"http://{host}:{port}"

    def close(self) -> None:
        self.server.shutdown()
        self.server.server_close()
        self.thread.join(timeout=5)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _iri_for_path(path: str) -> Optional[str]:
    path, _, query = path.partition("?")
    bits = path.lstrip("/").split("/", 2)
    if len(bits) < 2 or bits[0] not in DEREFERENCEABLE_SCHEMES:
        return None
    rest = "/" + bits[2] if len(bits) == 3 else "/"
    iri = f"{bits[0]}://{bits[1]}{unquote(rest)}"
    if query:
        iri += "?" + query
    return iri


def _handler_for(store: DocumentStore):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def do_GET(self):
            iri = _iri_for_path(self.path)
            r = store.get(iri) if iri else None
            if r is None:
                body = b"not found\n"
                self.send_response(404)
                self.send_header("Content-Type", "text/plain")
            else:
                body = r.body
                self.send_response(200)
                self.send_header("Content-Type", r.media)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def log_message(self, fmt, *args):
            log.debug("http: " + fmt, *args)

    return Handler


def serve(store: DocumentStore, host: str = "127.0.0.1", port: int = 0) -> ServerHandle:
    """Serve ``store`` over HTTP in a background thread; ``port=0`` picks a free port."""
    try:
        server = ThreadingHTTPServer((host, port), _handler_for(store))
    except OSError as exc:
        raise BindError(f"cannot bind {host}:{port}: {exc}") from None
    server.daemon_threads = True
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return ServerHandle(server, thread)
