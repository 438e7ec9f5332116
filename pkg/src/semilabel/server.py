"""HTTP facade over a ReviewStore: JSON API for annotators plus static UI files.

All mutations go through ReviewStore.submit, so concurrent annotators are safe.
Every response body is JSON except static files.
"""

from __future__ import annotations

import json
import mimetypes
import sys
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Any
from urllib.parse import parse_qs, urlsplit

from .errors import DataError
from .review import Annotation, NotAssignedError, ReviewItem, ReviewStore, UnknownItemError


def _item_view(store: ReviewStore, item: ReviewItem) -> dict[str, Any]:
    return {
        "id": item.post.id,
        "text": item.post.text,
        "label": item.consensus.label,
        "label_name": store.schema.name_of(item.consensus.label),
        "votes": list(item.votes),
        "confidences": list(item.confidences),
        "unanimity": item.consensus.unanimity,
        "tie_broken": item.consensus.tie_broken,
        "assignees": list(item.assignees),
        "status": store.status_of(item.post.id),
    }


def _annotation_view(ann: Annotation) -> dict[str, Any]:
    view: dict[str, Any] = {"verdict": ann.verdict, "ts": ann.ts}
    if ann.corrected_label is not None:
        view["corrected_label"] = ann.corrected_label
    return view


class ReviewHandler(BaseHTTPRequestHandler):
    store: ReviewStore
    static_dir: Path | None
    quiet: bool = True

    def log_message(self, fmt: str, *args: Any) -> None:
        if not self.quiet:
            sys.stderr.write("%s - %s\n" % (self.address_string(), fmt % args))

    def _send_json(self, code: int, payload: dict[str, Any]) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _error(self, code: int, message: str) -> None:
        self._send_json(code, {"error": message})

    def do_GET(self) -> None:  # noqa: N802 (http.server API)
        url = urlsplit(self.path)
        try:
            if url.path == "/api/queue":
                self._get_queue(parse_qs(url.query))
            elif url.path.startswith("/api/items/"):
                self._get_item(url.path.removeprefix("/api/items/"))
            elif url.path == "/api/stats":
                stats = self.store.stats()
                stats["schema"] = list(self.store.schema.names)
                self._send_json(200, stats)
            elif url.path == "/api/conflicts":
                items = [
                    dict(
                        _item_view(self.store, item),
                        annotations={
                            a: _annotation_view(ann)
                            for a, ann in self.store.annotations_for(item.post.id).items()
                        },
                    )
                    for item in self.store.conflicts()
                ]
                self._send_json(200, {"items": items})
            elif url.path.startswith("/api/"):
                self._error(404, f"no such endpoint: {url.path}")
            else:
                self._get_static(url.path)
        except UnknownItemError as exc:
            self._error(404, str(exc))
        except DataError as exc:
            self._error(400, str(exc))

    def _get_queue(self, query: dict[str, list[str]]) -> None:
        annotator = query.get("annotator", [None])[0]
        if annotator is None:
            items = list(self.store.items)
        else:
            items = self.store.pending_for(annotator)
        self._send_json(
            200,
            {
                "schema": list(self.store.schema.names),
                "num_runs": self.store.num_runs,
                "items": [_item_view(self.store, item) for item in items],
            },
        )

    def _get_item(self, item_id: str) -> None:
        item = self.store.item(item_id)
        view = _item_view(self.store, item)
        view["annotations"] = {
            a: _annotation_view(ann) for a, ann in self.store.annotations_for(item_id).items()
        }
        self._send_json(200, view)

    def _get_static(self, path: str) -> None:
        if self.static_dir is None:
            self._error(404, "no static files configured")
            return
        rel = path.lstrip("/") or "index.html"
        root = self.static_dir.resolve()
        target = (root / rel).resolve()
        if not target.is_relative_to(root) or not target.is_file():
            self._error(404, f"not found: {path}")
            return
        ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        body = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self) -> None:  # noqa: N802 (http.server API)
        url = urlsplit(self.path)
        if url.path != "/api/annotations":
            self._error(404, f"no such endpoint: {url.path}")
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            payload = json.loads(self.rfile.read(length) or b"{}")
            if not isinstance(payload, dict):
                raise DataError("request body must be a JSON object")
            corrected = payload.get("corrected_label")
            status = self.store.submit(
                item_id=str(payload.get("item_id", "")),
                annotator=str(payload.get("annotator", "")),
                verdict=str(payload.get("verdict", "")),
                corrected_label=None if corrected is None else int(corrected),
            )
        except json.JSONDecodeError as exc:
            self._error(400, f"invalid JSON body: {exc}")
        except UnknownItemError as exc:
            self._error(404, str(exc))
        except NotAssignedError as exc:
            self._error(403, str(exc))
        except (DataError, TypeError, ValueError) as exc:
            self._error(400, str(exc))
        else:
            self._send_json(
                200,
                {
                    "item_id": payload["item_id"],
                    "status": status,
                    "stats": self.store.stats(),
                },
            )


def serve(
    store: ReviewStore,
    port: int = 8000,
    host: str = "127.0.0.1",
    static_dir: str | Path | None = None,
    quiet: bool = True,
) -> ThreadingHTTPServer:
    """Bind and return the server; callers drive serve_forever()/shutdown()."""
    handler = type(
        "BoundReviewHandler",
        (ReviewHandler,),
        {
            "store": store,
            "static_dir": Path(static_dir) if static_dir is not None else None,
            "quiet": quiet,
        },
    )
    return ThreadingHTTPServer((host, port), handler)
