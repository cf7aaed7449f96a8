"""Tiny chat-completions stand-in for wire-level tests.

Serves canned JSON replies in FIFO order and records every raw request
body, so tests can compare the bytes on the wire against goldens.
"""

from __future__ import annotations

import json
import threading
from contextlib import contextmanager
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


class StubChatServer:
    def __init__(self):
        self.requests: list[bytes] = []
        self.replies: list[dict] = []
        self._lock = threading.Lock()

        stub = self

        class Handler(BaseHTTPRequestHandler):
            def do_HEAD(self):
                self.send_response(200)
                self.end_headers()

            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                body = self.rfile.read(length)
                with stub._lock:
                    stub.requests.append(body)
                    reply = stub.replies.pop(0) if stub.replies else {"choices": []}
                payload = json.dumps(reply).encode("utf-8")
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            def log_message(self, *args):
                pass

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.endpoint = f"http://127.0.0.1:{self._server.server_port}/v1/chat/completions"

    def queue(self, *replies: dict) -> None:
        self.replies.extend(replies)

    def start(self) -> None:
        thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        thread.start()

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()


@contextmanager
def stub_chat_server():
    server = StubChatServer()
    server.start()
    try:
        yield server
    finally:
        server.stop()
