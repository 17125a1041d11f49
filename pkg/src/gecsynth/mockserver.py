"""Local OpenAI-compatible chat endpoint for offline tests and demos.

The default responder corrupts the sentence in the prompt's final input slot
deterministically (it swaps two letters of the longest word), so runs are
reproducible without any network access.

    python -m gecsynth.mockserver --port 8765
"""
from __future__ import annotations

import argparse
import hashlib
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable, Union

Reply = Union[str, int, None]  # content, HTTP status, or None for an empty completion


def prompt_input(prompt: str) -> str:
    """The sentence in the final ``Label: ...`` input line of a rendered prompt."""
    lines = [ln for ln in prompt.splitlines() if ln.strip()]
    if len(lines) >= 2:
        _, _, value = lines[-2].partition(": ")
        return value
    return prompt


def swap_letters(sentence: str) -> str:
    words = sentence.split(" ")
    if not words:
        return sentence
    i = max(range(len(words)), key=lambda k: (len(words[k]), -k))
    w = words[i]
    for j in range(len(w) - 1):
        if w[j] != w[j + 1] and w[j].isalpha() and w[j + 1].isalpha():
            words[i] = w[:j] + w[j + 1] + w[j] + w[j + 2:]
            break
    return " ".join(words)


def default_responder(sentence: str, request: dict) -> Reply:
    return swap_letters(sentence)


def stable_fraction(text: str) -> float:
    return int(hashlib.sha256(text.encode("utf-8")).hexdigest()[:8], 16) / 0x1_0000_0000


class MockChatServer:
    """Threaded HTTP server on 127.0.0.1; use as a context manager.

    ``responder(sentence, request_json)`` returns the completion text, an
    HTTP status code to fail with, or None for an empty completion.
    """

    def __init__(self, responder: Callable[[str, dict], Reply] = default_responder, port: int = 0):
        self.responder = responder
        self.requests: list[dict] = []
        self._lock = threading.Lock()
        server = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def do_POST(self):
                if not self.path.rstrip("/").endswith("/chat/completions"):
                    self._send(404, {"error": {"message": "not found"}})
                    return
                length = int(self.headers.get("Content-Length", 0))
                try:
                    req = json.loads(self.rfile.read(length) or b"{}")
                    prompt = req["messages"][-1]["content"]
                except (ValueError, KeyError, IndexError):
                    self._send(400, {"error": {"message": "bad request"}})
                    return
                with server._lock:
                    server.requests.append(req)
                reply = server.responder(prompt_input(prompt), req)
                if isinstance(reply, int):
                    self._send(reply, {"error": {"message": f"injected status {reply}"}})
                    return
                self._send(200, {
                    "id": "mock-" + hashlib.sha1(prompt.encode()).hexdigest()[:12],
                    "object": "chat.completion",
                    "model": req.get("model", "mock"),
                    "choices": [{"index": 0, "finish_reason": "stop",
                                 "message": {"role": "assistant", "content": reply}}],
                })

            def _send(self, status, payload):
                body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

        self._httpd = ThreadingHTTPServer(("127.0.0.1", port), Handler)
        self._httpd.daemon_threads = True
        self._thread = None

    @property
    def url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}/v1"

    def start(self):
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self):
        self._httpd.shutdown()
        self._httpd.server_close()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()


def main(argv=None):
    ap = argparse.ArgumentParser(description="Serve a deterministic mock chat-completions endpoint.")
    ap.add_argument("--port", type=int, default=8765)
    args = ap.parse_args(argv)
    srv = MockChatServer(port=args.port)
    print(f"mock endpoint at {srv.url}", flush=True)
    try:
        srv._httpd.serve_forever()
    except KeyboardInterrupt:
        pass


if __name__ == "__main__":
    main()
